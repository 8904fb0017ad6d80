"""Higher-order topological states of modulated lattices built from 1D edge states."""

__version__ = "0.1.0"

from .assembly import ProductState, StateRole, construct_states, product_state, verify_eigenpair
from .dynamics import axis_propagator, corner_metric, edge_metric, evolve
from .errors import HotLatticeError
from .lattice import (
    GOLDEN,
    AxisModulation,
    KroneckerOperator,
    LatticeSpec,
    Open,
    Twisted,
    bond_strength,
    build_axis_hamiltonian,
    kron_sum,
)
from .spectral import (
    EdgeKind,
    EigenSolution,
    band_subsets,
    classify_edge_states,
    dos,
    eigensolve,
    solve_axis,
    spectrum_sweep,
)
from .topology import abelian_chern, nonabelian_chern, vector_chern

__all__ = [
    "GOLDEN", "AxisModulation", "EdgeKind", "EigenSolution", "HotLatticeError",
    "KroneckerOperator", "LatticeSpec", "Open", "ProductState", "StateRole", "Twisted",
    "abelian_chern", "axis_propagator", "band_subsets", "bond_strength",
    "build_axis_hamiltonian", "classify_edge_states", "construct_states", "corner_metric",
    "dos", "edge_metric", "eigensolve", "evolve", "kron_sum", "nonabelian_chern",
    "product_state", "solve_axis", "spectrum_sweep", "vector_chern", "verify_eigenpair",
]
