"""
Domain layer - hybrid hex-tet finite elements.
Pure numerics, zero dependencies on UI/infrastructure.
"""
from .errors import HybridFemError
from .mesh import HybridMesh, InterfaceKind, InterfaceRecord, build_interfaces, validate_spec
from .reference_elements import CellKind, quadrature_for
from .geometry import MappingSet, build_mappings, check_geometric_continuity
from .function_spaces import DofSystem, SpaceKind, build_space, continuity_audit
from .assembly import FormKind, SparseSystem, WeakForm, apply_dirichlet, assemble
from .solver import CgResult, solve_cg

__all__ = [
    'HybridFemError',
    'HybridMesh',
    'InterfaceKind',
    'InterfaceRecord',
    'build_interfaces',
    'validate_spec',
    'CellKind',
    'quadrature_for',
    'MappingSet',
    'build_mappings',
    'check_geometric_continuity',
    'DofSystem',
    'SpaceKind',
    'build_space',
    'continuity_audit',
    'FormKind',
    'SparseSystem',
    'WeakForm',
    'apply_dirichlet',
    'assemble',
    'CgResult',
    'solve_cg',
]
