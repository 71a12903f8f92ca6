"""Construction and certification of optimal balanced {4,5} difference packings
over Z_{4u} x Z_{8v} (u, v odd), with export to optical orthogonal signature
pattern codes."""
from .abelian import Group, Relabel
from .diffmat import DiffMatrix, dm_get, dm_search, verify_dm
from .engine import Plan, construct_optimal, execute, plan
from .kernels import BACKEND
from .oospc import PatternSet, to_patterns, verify_oospc
from .packing import Certificate, Packing, certify, verify_dp, verify_optimal_bdp, verify_regular

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Certificate", "DiffMatrix", "Group", "Packing", "PatternSet", "Plan", "Relabel",
    "certify", "construct_optimal", "dm_get", "dm_search", "execute", "plan", "to_patterns",
    "verify_dm", "verify_dp", "verify_oospc", "verify_optimal_bdp", "verify_regular",
]
