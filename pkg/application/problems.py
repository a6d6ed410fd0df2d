"""
Manufactured problems on the unit cube.

poisson-sin:     -lap u = f,  u = sin(pi x) sin(pi y) sin(pi z),  f = 3 pi^2 u
elasticity-sin:  -div sigma(u) = f,  u_x = u_y = u_z = sin(2 pi x) sin(2 pi y) sin(2 pi z)

Both use homogeneous Dirichlet conditions on the whole boundary.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from engine.assembly import FormKind, WeakForm

Field = Callable[[np.ndarray], np.ndarray]


class ProblemKind(Enum):
    POISSON_SIN = "poisson-sin"
    ELASTICITY_SIN = "elasticity-sin"

    @staticmethod
    def parse(name: str) -> "ProblemKind":
        try:
            return ProblemKind(name.strip().lower())
        except ValueError:
            valid = ", ".join(k.value for k in ProblemKind)
            raise ValueError(f"unknown problem '{name}' (valid: {valid})") from None


@dataclass(frozen=True)
class ManufacturedProblem:
    kind: ProblemKind
    form: WeakForm
    exact: Field
    exact_energy: Optional[float] = None  # a(u, u) of the exact solution

    @property
    def n_components(self) -> int:
        return self.form.n_components


def poisson_exact(x: np.ndarray) -> np.ndarray:
    return np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1]) * np.sin(np.pi * x[:, 2])


def poisson_source(x: np.ndarray) -> np.ndarray:
    return 3.0 * np.pi ** 2 * poisson_exact(x)


ELASTICITY_WAVENUMBER = 2.0 * np.pi


def elasticity_exact(x: np.ndarray) -> np.ndarray:
    k = ELASTICITY_WAVENUMBER
    s = np.sin(k * x[:, 0]) * np.sin(k * x[:, 1]) * np.sin(k * x[:, 2])
    return np.repeat(s[:, None], 3, axis=1)


def _second_derivatives(x: np.ndarray) -> np.ndarray:
    """Hessian (n, 3, 3) of s = sin(kx) sin(ky) sin(kz)."""
    k = ELASTICITY_WAVENUMBER
    sn = np.sin(k * x)
    cs = np.cos(k * x)
    s = sn[:, 0] * sn[:, 1] * sn[:, 2]
    H = np.empty((x.shape[0], 3, 3))
    for a in range(3):
        H[:, a, a] = -k * k * s
        for b in range(a + 1, 3):
            c = 3 - a - b
            H[:, a, b] = H[:, b, a] = k * k * cs[:, a] * cs[:, b] * sn[:, c]
    return H


def elasticity_source(lam: float, mu: float) -> Field:
    """f = -(lam + mu) grad(div u) - mu lap u for the field above."""
    k = ELASTICITY_WAVENUMBER

    def source(x: np.ndarray) -> np.ndarray:
        H = _second_derivatives(x)
        s = np.sin(k * x[:, 0]) * np.sin(k * x[:, 1]) * np.sin(k * x[:, 2])
        grad_div = H.sum(axis=2)  # d_i (s_x + s_y + s_z)
        return -(lam + mu) * grad_div + (3.0 * mu * k * k * s)[:, None]

    return source


def manufactured_problem(kind: ProblemKind, lam: float = 1.0, mu: float = 1.0) -> ManufacturedProblem:
    if kind is ProblemKind.POISSON_SIN:
        form = WeakForm(FormKind.POISSON, poisson_source)
        return ManufacturedProblem(kind, form, poisson_exact, exact_energy=3.0 * np.pi ** 2 / 8.0)
    form = WeakForm(FormKind.ELASTICITY, elasticity_source(lam, mu), lam=lam, mu=mu)
    return ManufacturedProblem(kind, form, elasticity_exact)
