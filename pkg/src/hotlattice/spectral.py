"""Eigendecomposition, edge-state classification, density of states and phase sweeps."""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, GapClosingError
from .lattice import AxisModulation, build_axis_hamiltonian

HERMITIAN_TOL = 1e-8


@dataclass(frozen=True)
class EigenSolution:
    """Ascending eigenvalues with orthonormal eigenvectors as columns.

    ``parity`` holds mirror labels (+1 symmetric, -1 antisymmetric, 0 none)
    once :func:`symmetrize_degenerate` has been applied.
    """

    values: np.ndarray
    vectors: np.ndarray
    parity: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __len__(self):
        return self.n

    def state(self, index: int) -> np.ndarray:
        return self.vectors[:, index]

    def residuals(self, h: np.ndarray) -> np.ndarray:
        """``||H v_n - E_n v_n||`` for every pair."""
        return np.linalg.norm(h @ self.vectors - self.vectors * self.values, axis=0)


class EdgeKind(str, enum.Enum):
    BULK = "bulk"
    LEFT = "left"
    RIGHT = "right"
    BOTH = "both"

    @property
    def is_edge(self) -> bool:
        return self is not EdgeKind.BULK


@dataclass(frozen=True)
class StateClassification:
    kind: EdgeKind
    left_weight: float
    right_weight: float
    ipr: float


@dataclass(frozen=True)
class DosCurve:
    energies: np.ndarray
    density: np.ndarray
    eta: float
    kernel: str = "lorentzian"

    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.energies))


def _phase_fix(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its first non-negligible component is real positive."""
    v = np.array(vectors, copy=True)
    mags = np.abs(v)
    thresh = 1e-12 * mags.max(axis=0, keepdims=True)
    first = np.argmax(mags > thresh, axis=0)
    cols = np.arange(v.shape[1])
    pivot = v[first, cols]
    if np.iscomplexobj(v):
        v *= np.conj(pivot / np.abs(pivot))
    else:
        v *= np.sign(pivot)
    return v


def _order_ties(values: np.ndarray, vectors: np.ndarray, tol: float) -> np.ndarray:
    # ties resolved by lexicographic order of the phase-fixed vector components
    order = np.arange(values.size)
    start = 0
    while start < values.size:
        stop = start + 1
        while stop < values.size and values[stop] - values[stop - 1] <= tol:
            stop += 1
        if stop - start > 1:
            block = vectors[:, start:stop]
            keys = np.round(np.concatenate([block.real, block.imag]), 10)[::-1]
            order[start:stop] = start + np.lexsort(keys)
        start = stop
    return vectors[:, order]


def eigensolve(h: np.ndarray) -> EigenSolution:
    """Full decomposition of a dense Hermitian matrix.

    Outputs are deterministic: eigenvector phases are fixed and exact ties
    are ordered lexicographically.
    """
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {h.shape}")
    asym = np.max(np.abs(h - h.conj().T)) if h.size else 0.0
    if asym > HERMITIAN_TOL:
        raise DomainError(f"matrix is not Hermitian (max asymmetry {asym:.3g})")
    values, vectors = np.linalg.eigh(h)
    vectors = _phase_fix(vectors)
    scale = max(1.0, float(np.max(np.abs(values)))) if values.size else 1.0
    vectors = _order_ties(values, vectors, 1e-13 * scale)
    return EigenSolution(values, vectors)


def degenerate_groups(values: np.ndarray, tol: float) -> list[range]:
    groups = []
    start = 0
    for i in range(1, values.size + 1):
        if i == values.size or values[i] - values[i - 1] > tol:
            groups.append(range(start, i))
            start = i
    return groups


def _mirror(vectors: np.ndarray) -> np.ndarray:
    return vectors[::-1]


def symmetrize_degenerate(
    sol: EigenSolution, edge_width: int = 2, tol: float = 1e-10
) -> EigenSolution:
    """Re-basis degenerate eigenspaces into mirror-symmetric/antisymmetric states.

    When a degenerate subspace is not closed under the site reflection
    ``j -> N + 1 - j``, it is instead rotated to maximize the left/right
    edge-weight imbalance. Every state receives a parity label.
    """
    values = sol.values
    vectors = np.array(sol.vectors, copy=True)
    n = sol.n
    scale = max(1.0, float(np.max(np.abs(values))))
    edge = np.zeros(n)
    edge[:edge_width] = 1.0
    edge[n - edge_width :] = -1.0
    for group in degenerate_groups(values, tol * scale):
        if len(group) < 2:
            continue
        block = vectors[:, group.start : group.stop]
        reflected = _mirror(block)
        p_sub = block.conj().T @ reflected
        p_sub = 0.5 * (p_sub + p_sub.conj().T)
        if np.max(np.abs(reflected - block @ p_sub)) < 1e-8:
            _, rot = np.linalg.eigh(p_sub)
        else:
            d_sub = block.conj().T @ (edge[:, None] * block)
            _, rot = np.linalg.eigh(0.5 * (d_sub + d_sub.conj().T))
        vectors[:, group.start : group.stop] = block @ rot
    vectors = _phase_fix(vectors)
    overlaps = np.real(np.sum(vectors.conj() * _mirror(vectors), axis=0))
    parity = np.where(np.abs(np.abs(overlaps) - 1.0) < 1e-6, np.sign(overlaps), 0.0)
    return EigenSolution(values, vectors, parity.astype(int))


def solve_axis(axis: AxisModulation, symmetrize: bool = True, edge_width: int = 2) -> EigenSolution:
    """Eigensolve the hopping matrix of one axis, symmetrizing degenerate pairs."""
    sol = eigensolve(build_axis_hamiltonian(axis))
    return symmetrize_degenerate(sol, edge_width) if symmetrize else sol


def classify_edge_states(
    sol: EigenSolution,
    edge_width: int = 2,
    weight_threshold: float = 0.5,
    ipr_factor: float = 3.0,
) -> list[StateClassification]:
    """Label each eigenstate as bulk, left-, right- or both-edge localized.

    A state is ``BOTH`` when each edge window holds at least half the
    threshold and its inverse participation ratio exceeds ``ipr_factor / N``.
    """
    n = sol.vectors.shape[0]
    if not 0 < edge_width < n / 2:
        raise DomainError(f"edge_width must be in (0, {n / 2}), got {edge_width}")
    probs = np.abs(sol.vectors) ** 2
    probs = probs / probs.sum(axis=0)
    left = probs[:edge_width].sum(axis=0)
    right = probs[n - edge_width :].sum(axis=0)
    ipr = (probs**2).sum(axis=0)
    out = []
    for lw, rw, p in zip(left, right, ipr):
        if lw >= weight_threshold and rw < weight_threshold:
            kind = EdgeKind.LEFT
        elif rw >= weight_threshold and lw < weight_threshold:
            kind = EdgeKind.RIGHT
        elif min(lw, rw) >= weight_threshold / 2 and p > ipr_factor / n:
            kind = EdgeKind.BOTH
        else:
            kind = EdgeKind.BULK
        out.append(StateClassification(kind, float(lw), float(rw), float(p)))
    return out


def gap_index(values: np.ndarray, classes: Sequence[StateClassification]) -> np.ndarray:
    """Number of bulk states below each state.

    Edge states sharing a value sit in the same spectral gap.
    """
    bulk = np.sort(values[[c.kind is EdgeKind.BULK for c in classes]])
    return np.searchsorted(bulk, values, side="left")


def principal_gap(values: np.ndarray, classes: Sequence[StateClassification]) -> tuple[float, float]:
    """Lowest of the widest spacings between bulk states."""
    bulk = np.sort(values[[c.kind is EdgeKind.BULK for c in classes]])
    if bulk.size < 2:
        raise DomainError("need at least two bulk states to locate a gap")
    widths = np.diff(bulk)
    best = int(np.flatnonzero(widths >= widths.max() - 1e-9)[0])
    return float(bulk[best]), float(bulk[best + 1])


def _lorentzian(x, eta):
    return eta / np.pi / (x**2 + eta**2)


def _gaussian(x, eta):
    return np.exp(-0.5 * (x / eta) ** 2) / (eta * np.sqrt(2 * np.pi))


_KERNELS = {"lorentzian": _lorentzian, "gaussian": _gaussian}


def dos(
    values,
    eta: float,
    grid: np.ndarray | None = None,
    kernel: str = "lorentzian",
    num: int = 2001,
    margin: float = 100.0,
) -> DosCurve:
    """Broadened density of states.

    The default grid extends ``margin * eta`` beyond the spectrum so that
    the Lorentzian tails lost outside it stay below 1% of the state count.
    """
    if isinstance(values, EigenSolution):
        values = values.values
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise DomainError("cannot build a density of states from no eigenvalues")
    if not eta > 0:
        raise DomainError(f"broadening must be positive, got {eta}")
    if kernel not in _KERNELS:
        raise DomainError(f"unknown kernel {kernel!r}; choose from {sorted(_KERNELS)}")
    if grid is None:
        grid = np.linspace(values.min() - margin * eta, values.max() + margin * eta, num)
    grid = np.asarray(grid, dtype=float)
    f = _KERNELS[kernel]
    density = np.zeros_like(grid)
    # accumulate in chunks to bound memory for large spectra
    for chunk in np.array_split(values, max(1, values.size // 2048)):
        density += f(grid[:, None] - chunk[None, :], eta).sum(axis=1)
    return DosCurve(grid, density, float(eta), kernel)


@dataclass
class SweepResult:
    phis: np.ndarray
    energies: np.ndarray  # (N, n_phi): one column per phase
    classifications: list[list[StateClassification]] = field(repr=False)
    solutions: list[EigenSolution] = field(repr=False)

    def rows(self) -> Iterable[tuple]:
        """``(phi, index, energy, kind, left_weight, right_weight, ipr)`` per state."""
        for col, phi in enumerate(self.phis):
            for n, c in enumerate(self.classifications[col]):
                yield (float(phi), n, float(self.energies[n, col]), c.kind.value,
                       c.left_weight, c.right_weight, c.ipr)


def _map(fn, items, workers):
    if workers is None or workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def spectrum_sweep(
    axis: AxisModulation,
    phis: Sequence[float],
    edge_width: int = 2,
    weight_threshold: float = 0.5,
    symmetrize: bool = True,
    workers: int | None = None,
) -> SweepResult:
    """Open- or twisted-chain spectra over a list of modulation phases."""
    phis = np.asarray(phis, dtype=float).ravel()
    if phis.size == 0:
        raise DomainError("phase list is empty")

    def one(phi):
        sol = solve_axis(axis.with_phase(phi), symmetrize=symmetrize, edge_width=edge_width)
        return sol, classify_edge_states(sol, edge_width, weight_threshold)

    results = _map(one, phis, workers)
    sols = [r[0] for r in results]
    energies = np.stack([s.values for s in sols], axis=1)
    return SweepResult(phis, energies, [r[1] for r in results], sols)


def band_subsets(spectra, n_subsets: int = 3, gap_tol: float = 1e-9) -> list[range]:
    """Partition band indices into contiguous subsets separated by persistent gaps.

    ``spectra`` has shape ``(..., N)`` (one sorted spectrum per parameter
    point) or is a :class:`SweepResult`. The ``n_subsets - 1`` boundaries
    with the widest minimum gap over all points are chosen.
    """
    if isinstance(spectra, SweepResult):
        spectra = spectra.energies.T
    e = np.asarray(spectra, dtype=float)
    n = e.shape[-1]
    if not 1 <= n_subsets <= n:
        raise DomainError(f"cannot split {n} bands into {n_subsets} subsets")
    if n_subsets == 1:
        return [range(0, n)]
    gaps = np.diff(e, axis=-1).reshape(-1, n - 1)
    min_gaps = gaps.min(axis=0)
    order = np.argsort(-min_gaps, kind="stable")[: n_subsets - 1]
    if min_gaps[order[-1]] <= gap_tol:
        worst = int(order[-1])
        point = np.unravel_index(int(np.argmin(gaps[:, worst])), e.shape[:-1] or (1,))
        raise GapClosingError(
            f"only {int(np.sum(min_gaps > gap_tol)) + 1} subsets are separated by open gaps; "
            f"the gap above band {worst} closes at grid point {tuple(int(i) for i in point)}",
            location=tuple(int(i) for i in point),
        )
    cuts = sorted(int(i) + 1 for i in order)
    bounds = [0, *cuts, n]
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
