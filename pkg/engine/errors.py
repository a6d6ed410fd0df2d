"""
Exception hierarchy for the finite element library.

Every error raised on purpose by the domain layer derives from
HybridFemError, so callers (CLI, convergence runner) can map library
failures to exit codes without catching unrelated exceptions.
"""
from __future__ import annotations

from typing import Optional


class HybridFemError(Exception):
    """Base class for all library errors."""


class OutOfCell(HybridFemError):
    """Reference point lies outside the closed reference cell."""


class UnsupportedDegree(HybridFemError):
    """No quadrature rule of the requested exactness is available."""


class AmbiguousJunction(HybridFemError):
    """A hex quad face is covered by tet faces in a way that is not one diagonal split."""


class InvertedElement(HybridFemError):
    """A cell mapping has det J <= 0 somewhere on its sampling set."""


class ConflictingDiagonal(InvertedElement):
    """A tet edge is the diagonal of two distinct hex faces (or also a hex edge)."""


class UnsupportedSpace(HybridFemError):
    """The requested function space cannot be built on this mesh."""


class NotInSupport(HybridFemError):
    """The global basis function is identically zero on the requested cell."""


class QuadratureTooWeak(HybridFemError):
    """Requested quadrature degree is below the documented minimum."""


class GenerationFailed(HybridFemError):
    """Mesh generation could not produce a valid mesh within the retry bound."""


class NoConvergence(HybridFemError):
    """Iterative solver stopped before reaching the residual target."""

    def __init__(self, iterations: int, residual: float, target: float):
        super().__init__(
            f"CG did not converge after {iterations} iterations "
            f"(relative residual {residual:.3e} > target {target:.1e})"
        )
        self.iterations = iterations
        self.residual = residual
        self.target = target


class MeshFormatError(HybridFemError):
    """Malformed mesh text file."""

    def __init__(self, message: str, line: Optional[int] = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line
