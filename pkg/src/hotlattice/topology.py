"""Chern numbers over synthetic two-parameter tori by the link-variable method.

Two routes are provided:

* :func:`abelian_chern` for rational ``b = mu/nu``: single Bloch bands over
  ``(k, phi)`` with ``k`` in ``[0, 2*pi/nu)``.
* :func:`nonabelian_chern` for any ``b``: a subset of bands of the finite
  twisted chain over ``(theta, phi)``, using determinants of the overlap
  matrices as link variables.

Plaquette fluxes are oriented with the momentum-like parameter (``k`` or
``theta``) as the first grid axis and ``phi`` as the second.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateLinkError,
    DomainError,
    GapClosingError,
    QuantizationError,
    RefinementError,
)
from .lattice import TWO_PI, AxisModulation, LatticeSpec, bond_values
from .spectral import band_subsets

LINK_TOL = 1e-12
QUANTIZATION_TOL = 1e-6
DEFAULT_GRID = (40, 40)
MAX_GRID = 320


@dataclass(frozen=True)
class ChernResult:
    raw_sum: float
    integer: int
    max_plaquette_flux: float
    grid: tuple[int, int]
    bands: tuple[int, int] = (0, 0)  # [start, stop) band indices

    def to_dict(self) -> dict:
        return {
            "bands": list(self.bands),
            "integer": self.integer,
            "raw_sum": self.raw_sum,
            "grid": list(self.grid),
            "max_plaquette_flux": self.max_plaquette_flux,
        }


@dataclass(frozen=True)
class VectorChern:
    components: tuple[tuple[ChernResult, ...], ...]
    auto_partition: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def integers(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(r.integer for r in axis) for axis in self.components)

    def to_dict(self) -> dict:
        names = "xyz"
        return {
            "auto_partition": self.auto_partition,
            "axes": {
                names[i]: [r.to_dict() for r in comps]
                for i, comps in enumerate(self.components)
            },
            **self.meta,
        }


def build_bloch_hamiltonian(axis: AxisModulation, k, phi=None) -> np.ndarray:
    """Unit-cell Hamiltonian of a rational modulation at quasi-momentum ``k``.

    The intercell bond (the last bond of the cell) carries ``exp(i*k*nu)`` on
    the 1-based entry ``(nu, 1)``, the same gauge as a twisted chain. ``k``
    and ``phi`` may be broadcastable arrays, producing a stack of matrices.
    """
    if not axis.is_rational:
        raise DomainError(
            "Bloch bands need a rational b = Fraction(mu, nu); "
            "use nonabelian_chern for irrational modulation"
        )
    nu = axis.period
    phi = axis.phi if phi is None else phi
    k, phi = np.broadcast_arrays(np.asarray(k, float), np.asarray(phi, float))
    js = np.arange(axis.bond_origin, axis.bond_origin + nu)
    couplings = bond_values(axis.t, axis.lam, axis.b, phi[..., None], js)
    h = np.zeros(k.shape + (nu, nu), dtype=complex)
    if nu == 1:
        h[..., 0, 0] = 2 * couplings[..., 0] * np.cos(k)
        return h
    idx = np.arange(nu - 1)
    h[..., idx + 1, idx] = couplings[..., :-1]
    h[..., idx, idx + 1] = couplings[..., :-1]
    wrap = couplings[..., -1] * np.exp(1j * k * nu)
    h[..., nu - 1, 0] += wrap
    h[..., 0, nu - 1] += np.conj(wrap)
    return h


def twisted_hamiltonian(axis: AxisModulation, theta, phi) -> np.ndarray:
    """Stack of twisted-chain Hamiltonians over broadcast ``(theta, phi)`` arrays."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    n = axis.n_sites
    js = np.arange(axis.bond_origin, axis.bond_origin + n)
    couplings = bond_values(axis.t, axis.lam, axis.b, phi[..., None], js)
    h = np.zeros(theta.shape + (n, n), dtype=complex)
    idx = np.arange(n - 1)
    h[..., idx + 1, idx] = couplings[..., :-1]
    h[..., idx, idx + 1] = couplings[..., :-1]
    wrap = couplings[..., -1] * np.exp(1j * theta)
    h[..., n - 1, 0] += wrap
    h[..., 0, n - 1] += np.conj(wrap)
    return h


def _eigh_grid(builder: Callable[[np.ndarray], np.ndarray], n1: int, workers: int | None):
    """Eigendecompose ``builder(rows)`` for all grid rows, optionally in threads."""
    rows = np.arange(n1)
    if workers is None or workers <= 1:
        return np.linalg.eigh(builder(rows))
    chunks = np.array_split(rows, min(workers, n1))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda r: np.linalg.eigh(builder(r)), chunks))
    return (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def link_variables(vectors: np.ndarray, band_slice: slice) -> tuple[np.ndarray, np.ndarray]:
    """Normalized link variables along both grid directions.

    ``vectors`` has shape ``(n1, n2, dim, n_states)``; the grid is periodic
    in both directions. Returns ``(U1, U2)`` of shape ``(n1, n2)``.
    """
    v = vectors[..., band_slice]
    links = []
    for ax in (0, 1):
        nxt = np.roll(v, -1, axis=ax)
        m = np.conj(np.swapaxes(v, -1, -2)) @ nxt
        det = np.linalg.det(m) if m.shape[-1] > 1 else m[..., 0, 0]
        mag = np.abs(det)
        if mag.min() < LINK_TOL:
            loc = np.unravel_index(int(np.argmin(mag)), mag.shape)
            raise DegenerateLinkError(
                f"overlap determinant {mag.min():.3g} at grid point {tuple(map(int, loc))} "
                f"(direction {ax}); refine the grid or enlarge the band subset",
                location=tuple(map(int, loc)),
            )
        links.append(det / mag)
    return links[0], links[1]


def plaquette_flux(vectors: np.ndarray, band_slice: slice) -> np.ndarray:
    """Principal-branch Berry flux through every plaquette of the grid."""
    u1, u2 = link_variables(vectors, band_slice)
    loop = u1 * np.roll(u2, -1, axis=0) * np.conj(np.roll(u1, -1, axis=1)) * np.conj(u2)
    return np.angle(loop)


def _check_gaps(energies: np.ndarray, bands: range, params: tuple[np.ndarray, np.ndarray], tol: float):
    n = energies.shape[-1]
    for lo, hi in ((bands.start - 1, bands.start), (bands.stop - 1, bands.stop)):
        if lo < 0 or hi >= n:
            continue
        gap = energies[..., hi] - energies[..., lo]
        if gap.min() <= tol:
            i, j = np.unravel_index(int(np.argmin(gap)), gap.shape)
            raise GapClosingError(
                f"gap between bands {lo} and {hi} closes (min {gap.min():.3g}) "
                f"at parameters ({params[0][i]:.6g}, {params[1][j]:.6g})",
                location=(float(params[0][i]), float(params[1][j])),
            )


def _chern_from_grid(vectors, bands: range, grid) -> ChernResult:
    flux = plaquette_flux(vectors, slice(bands.start, bands.stop))
    # exactly rounded sum: independent of summation order and worker count
    raw = math.fsum(flux.ravel()) / TWO_PI
    return ChernResult(
        raw_sum=raw,
        integer=int(round(raw)),
        max_plaquette_flux=float(np.abs(flux).max()),
        grid=tuple(grid),
        bands=(bands.start, bands.stop),
    )


def _validated(result: ChernResult) -> ChernResult:
    if abs(result.raw_sum - result.integer) > QUANTIZATION_TOL:
        raise QuantizationError(
            f"Chern sum {result.raw_sum!r} is not an integer within {QUANTIZATION_TOL} "
            f"on grid {result.grid}"
        )
    return result


def _refining(compute, grid, refine: bool, max_grid: int, flux_bound: float):
    grid = tuple(int(g) for g in grid)
    if min(grid) < 2:
        raise DomainError(f"grid must be at least 2x2, got {grid}")
    while True:
        results = compute(grid)
        worst = max(r.max_plaquette_flux for r in results)
        if worst < flux_bound:
            return [_validated(r) for r in results]
        doubled = (2 * grid[0], 2 * grid[1])
        if not refine or max(doubled) > max_grid:
            raise RefinementError(
                f"plaquette flux {worst:.3g} >= {flux_bound:.3g} on grid {grid}; "
                "the discretization is not admissible"
            )
        grid = doubled


def _as_ranges(bands, n: int) -> list[range]:
    out = []
    for b in bands:
        if isinstance(b, range):
            r = b
        elif isinstance(b, (int, np.integer)):
            r = range(int(b), int(b) + 1)
        else:
            r = range(int(b[0]), int(b[1]))
        if not (0 <= r.start < r.stop <= n):
            raise DomainError(f"band range {r} outside 0..{n}")
        out.append(r)
    return out


def abelian_chern_all(
    axis: AxisModulation,
    bands: Sequence | None = None,
    grid=DEFAULT_GRID,
    refine: bool = True,
    max_grid: int = MAX_GRID,
    flux_bound: float = math.pi / 2,
    gap_tol: float = 1e-9,
    workers: int | None = None,
) -> list[ChernResult]:
    """Abelian Chern numbers of several Bloch bands sharing one eigensolve per grid."""
    nu = axis.period
    bands = _as_ranges(range(nu) if bands is None else bands, nu)

    def compute(g):
        ks = TWO_PI / nu * np.arange(g[0]) / g[0]
        phis = TWO_PI * np.arange(g[1]) / g[1]
        energies, vectors = _eigh_grid(
            lambda rows: build_bloch_hamiltonian(axis, ks[rows, None], phis[None, :]),
            g[0], workers,
        )
        for b in bands:
            _check_gaps(energies, b, (ks, phis), gap_tol)
        return [_chern_from_grid(vectors, b, g) for b in bands]

    return _refining(compute, grid, refine, max_grid, flux_bound)


def abelian_chern(axis: AxisModulation, band: int, grid=DEFAULT_GRID, **kwargs) -> ChernResult:
    """Chern number of Bloch band ``band`` (0-based, ascending) over ``(k, phi)``."""
    return abelian_chern_all(axis, [band], grid, **kwargs)[0]


def twisted_spectra(axis: AxisModulation, grid=DEFAULT_GRID, workers: int | None = None):
    """Eigenpairs of the twisted chain on the periodic ``(theta, phi)`` grid."""
    thetas = TWO_PI * np.arange(grid[0]) / grid[0]
    phis = TWO_PI * np.arange(grid[1]) / grid[1]
    energies, vectors = _eigh_grid(
        lambda rows: twisted_hamiltonian(axis, thetas[rows, None], phis[None, :]),
        grid[0], workers,
    )
    return thetas, phis, energies, vectors


def nonabelian_chern_all(
    axis: AxisModulation,
    subsets: Sequence,
    grid=DEFAULT_GRID,
    refine: bool = True,
    max_grid: int = MAX_GRID,
    flux_bound: float = math.pi / 2,
    gap_tol: float = 1e-9,
    workers: int | None = None,
) -> list[ChernResult]:
    """Non-Abelian Chern numbers of band subsets of the twisted finite chain.

    The chain's own boundary and phase are ignored: ``theta`` and ``phi``
    both sweep the full circle.
    """
    subsets = _as_ranges(subsets, axis.n_sites)

    def compute(g):
        thetas, phis, energies, vectors = twisted_spectra(axis, g, workers)
        for s in subsets:
            _check_gaps(energies, s, (thetas, phis), gap_tol)
        return [_chern_from_grid(vectors, s, g) for s in subsets]

    return _refining(compute, grid, refine, max_grid, flux_bound)


def nonabelian_chern(axis: AxisModulation, subset, grid=DEFAULT_GRID, **kwargs) -> ChernResult:
    """Chern number of one band subset (``range`` or ``(start, stop)``) over ``(theta, phi)``."""
    return nonabelian_chern_all(axis, [subset], grid, **kwargs)[0]


def auto_subsets(axis: AxisModulation, n_subsets: int = 3, grid=DEFAULT_GRID, workers=None) -> list[range]:
    """Contiguous band subsets separated by gaps that stay open over the ``(theta, phi)`` torus."""
    _, _, energies, _ = twisted_spectra(axis, grid, workers)
    return band_subsets(energies, n_subsets)


def vector_chern(
    spec: LatticeSpec,
    subsets: Sequence | None = None,
    grid=DEFAULT_GRID,
    n_subsets: int = 3,
    workers: int | None = None,
    **kwargs,
) -> VectorChern:
    """Per-axis non-Abelian Chern numbers; axes are computed independently.

    ``subsets`` lists band ranges per axis. When omitted, each axis is
    partitioned automatically into ``n_subsets`` gap-separated subsets.
    """
    auto = subsets is None
    if auto:
        subsets = [auto_subsets(ax, n_subsets, grid, workers) for ax in spec.axes]
    if len(subsets) != spec.ndim:
        raise DomainError(f"need band subsets for {spec.ndim} axes, got {len(subsets)}")
    comps = tuple(
        tuple(nonabelian_chern_all(ax, subs, grid, workers=workers, **kwargs))
        for ax, subs in zip(spec.axes, subsets)
    )
    meta = {"subsets": [[[r.start, r.stop] for r in _as_ranges(s, ax.n_sites)]
                        for s, ax in zip(subsets, spec.axes)]}
    return VectorChern(comps, auto_partition=auto, meta=meta)


__all__ = [
    "ChernResult",
    "VectorChern",
    "abelian_chern",
    "abelian_chern_all",
    "auto_subsets",
    "build_bloch_hamiltonian",
    "link_variables",
    "nonabelian_chern",
    "nonabelian_chern_all",
    "plaquette_flux",
    "twisted_hamiltonian",
    "twisted_spectra",
    "vector_chern",
]
