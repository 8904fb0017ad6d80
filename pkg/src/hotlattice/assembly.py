"""Higher-dimensional corner, hinge and surface states as products of 1D eigenstates.

A state grid is a plain complex ``numpy`` array whose shape equals the
lattice dimensions, axis 0 being x.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError, DomainError, StateNotFoundError
from .lattice import KroneckerOperator, LatticeSpec
from .spectral import (
    EdgeKind,
    EigenSolution,
    StateClassification,
    classify_edge_states,
    gap_index,
    solve_axis,
)

# selectors accepted per axis by construct_states
EDGE_SELECTORS = ("left", "right", "both", "symmetric", "antisymmetric", "edge")
SELECTORS = EDGE_SELECTORS + ("extended",)

ROLE_NAMES = {
    1: {0: "bulk", 1: "edge"},
    2: {0: "bulk", 1: "edge", 2: "corner"},
    3: {0: "bulk", 1: "surface", 2: "hinge", 3: "corner"},
}


@dataclass(frozen=True)
class AxisState:
    """One 1D eigenstate used as a factor of a product state."""

    vector: np.ndarray
    energy: float
    kind: EdgeKind | None = None
    index: int | None = None
    parity: int = 0

    @property
    def label(self) -> str:
        if self.kind is None:
            return "?"
        if self.kind is EdgeKind.BOTH and self.parity:
            return "S" if self.parity > 0 else "A"
        return {"bulk": "E", "left": "L", "right": "R", "both": "B"}[self.kind.value]


@dataclass(frozen=True)
class StateRole:
    """Per-axis tags and the derived geometric role."""

    tags: tuple[str, ...]  # "left" | "right" | "both" | "extended" (or "?" if unknown)

    @property
    def n_edge_axes(self) -> int:
        return sum(t in ("left", "right", "both") for t in self.tags)

    @property
    def name(self) -> str:
        if "?" in self.tags:
            return "unknown"
        return ROLE_NAMES[len(self.tags)][self.n_edge_axes]


@dataclass(frozen=True)
class ProductState:
    components: tuple[AxisState, ...]
    amplitudes: np.ndarray
    energy: float
    role: StateRole

    @property
    def label(self) -> str:
        return "".join(c.label for c in self.components)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def ipr(self) -> float:
        return float(np.sum(self.probabilities**2))


def _tag(kind: EdgeKind | None) -> str:
    if kind is None:
        return "?"
    return "extended" if kind is EdgeKind.BULK else kind.value


def product_state(components: Sequence) -> ProductState:
    """Outer product of per-axis eigenstates with summed energy.

    ``components`` holds :class:`AxisState` values or ``(vector, energy)`` pairs.
    """
    comps = tuple(c if isinstance(c, AxisState) else AxisState(np.asarray(c[0]), float(c[1]))
                  for c in components)
    if not 1 <= len(comps) <= 3:
        raise DomainError(f"expected 1 to 3 components, got {len(comps)}")
    for c in comps:
        if np.ndim(c.vector) != 1:
            raise DimensionMismatchError("each component must be a 1D vector")
    amps = comps[0].vector
    for c in comps[1:]:
        amps = np.multiply.outer(amps, c.vector)
    energy = float(sum(c.energy for c in comps))
    return ProductState(comps, amps, energy, StateRole(tuple(_tag(c.kind) for c in comps)))


def verify_eigenpair(op: KroneckerOperator, state, energy: float) -> float:
    """Residual ``||H psi - E psi||_2`` evaluated matrix-free."""
    psi = state.amplitudes if isinstance(state, ProductState) else np.asarray(state)
    if psi.shape != op.dims and psi.shape != (op.size,):
        raise DimensionMismatchError(f"state of shape {psi.shape} does not match {op.dims}")
    return float(np.linalg.norm(op.matvec(psi) - energy * psi))


@dataclass
class AxisSpectrum:
    """Symmetrized eigensolution of one axis with its classifications."""

    solution: EigenSolution
    classes: list[StateClassification]

    @classmethod
    def of(cls, axis, edge_width: int = 2, weight_threshold: float = 0.5, symmetrize: bool = True):
        sol = solve_axis(axis, symmetrize=symmetrize, edge_width=edge_width)
        return cls(sol, classify_edge_states(sol, edge_width, weight_threshold))

    def axis_state(self, index: int) -> AxisState:
        parity = 0 if self.solution.parity is None else int(self.solution.parity[index])
        return AxisState(self.solution.vectors[:, index], float(self.solution.values[index]),
                         self.classes[index].kind, index, parity)

    def summary(self) -> list[str]:
        return [f"{n}:{c.kind.value}@{self.solution.values[n]:.4f}"
                for n, c in enumerate(self.classes) if c.kind.is_edge]

    def edge_indices(self, selector: str, gap: int | None = 0) -> list[int]:
        """Edge states matching ``selector``, restricted to the ``gap``-th gap that hosts edge states."""
        kinds = [c.kind for c in self.classes]
        parity = self.solution.parity if self.solution.parity is not None else np.zeros(len(kinds), int)
        if selector == "edge":
            hits = [n for n, k in enumerate(kinds) if k.is_edge]
        elif selector in ("left", "right", "both"):
            hits = [n for n, k in enumerate(kinds) if k.value == selector]
        elif selector in ("symmetric", "antisymmetric"):
            want = 1 if selector == "symmetric" else -1
            hits = [n for n, k in enumerate(kinds) if k is EdgeKind.BOTH and parity[n] == want]
        else:
            raise DomainError(f"unknown edge selector {selector!r}")
        if gap is None or not hits:
            return hits
        gaps = gap_index(self.solution.values, self.classes)
        occupied = sorted({int(gaps[n]) for n, k in enumerate(kinds) if k.is_edge})
        if gap >= len(occupied):
            return []
        return [n for n in hits if gaps[n] == occupied[gap]]

    def extended_index(self) -> int:
        """Highest-energy state of the lowest run of bulk states (top of the first band)."""
        kinds = [c.kind for c in self.classes]
        if kinds[0] is not EdgeKind.BULK:
            raise StateNotFoundError("lowest state is not extended; no first band to pick from")
        n = 0
        while n + 1 < len(kinds) and kinds[n + 1] is EdgeKind.BULK:
            n += 1
        return n


def construct_states(
    spec: LatticeSpec,
    pattern: Sequence[str],
    gap: int | None = 0,
    extended_index: int | Sequence[int | None] | None = None,
    edge_width: int = 2,
    weight_threshold: float = 0.5,
    spectra: Sequence[AxisSpectrum] | None = None,
) -> list[ProductState]:
    """All product states whose per-axis factors match ``pattern``.

    Each pattern entry is one of ``left``, ``right``, ``both``,
    ``symmetric``, ``antisymmetric``, ``edge`` (any edge kind) or
    ``extended``. Edge factors come from the ``gap``-th edge-hosting gap of
    each axis (``None`` for all gaps). Extended factors default to the top
    of the first band.
    """
    pattern = tuple(pattern)
    if len(pattern) != spec.ndim:
        raise DomainError(f"pattern {pattern} has {len(pattern)} entries for a {spec.ndim}D lattice")
    for p in pattern:
        if p not in SELECTORS:
            raise DomainError(f"unknown selector {p!r}; choose from {SELECTORS}")
    if spectra is None:
        spectra = [AxisSpectrum.of(ax, edge_width, weight_threshold) for ax in spec.axes]
    if not isinstance(extended_index, (list, tuple)):
        extended_index = [extended_index] * spec.ndim
    choices = []
    for s, (sel, spectrum) in enumerate(zip(pattern, spectra)):
        if sel == "extended":
            idx = extended_index[s]
            choices.append([spectrum.extended_index() if idx is None else int(idx)])
            continue
        hits = spectrum.edge_indices(sel, gap)
        if not hits:
            raise StateNotFoundError(
                f"axis {'xyz'[s]} has no {sel!r} edge state (gap={gap}) at phi={spec.axes[s].phi:.6g}; "
                f"available: {', '.join(spectrum.summary()) or 'none'}"
            )
        choices.append(hits)
    grids = np.meshgrid(*[np.arange(len(c)) for c in choices], indexing="ij")
    out = []
    for combo in zip(*(g.ravel() for g in grids)):
        idxs = [choices[s][i] for s, i in enumerate(combo)]
        out.append(product_state([spectra[s].axis_state(n) for s, n in enumerate(idxs)]))
    return out
