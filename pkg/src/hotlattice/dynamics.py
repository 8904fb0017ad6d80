"""Waveguide-style propagation and localization metrics.

Because the Kronecker-sum terms commute, ``exp(-i H z)`` factorizes into
per-axis propagators applied along lattice fibers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError, DomainError
from .lattice import AxisModulation, LatticeSpec, build_axis_hamiltonian
from .spectral import eigensolve

SIDES = ("left", "right", "bottom", "top", "front", "back")
# boundary side -> (axis, at upper end)
_SIDE_AXIS = {
    "left": (0, False), "right": (0, True),
    "bottom": (1, False), "top": (1, True),
    "front": (2, False), "back": (2, True),
}


class AxisPropagator:
    """``exp(-i H_s z)`` for one axis, diagonalized once and reused for every ``z``."""

    def __init__(self, axis_or_matrix):
        h = (build_axis_hamiltonian(axis_or_matrix)
             if isinstance(axis_or_matrix, AxisModulation) else np.asarray(axis_or_matrix))
        sol = eigensolve(h)
        self.energies = sol.values
        self.vectors = sol.vectors

    def __call__(self, z: float) -> np.ndarray:
        if z < 0:
            raise DomainError(f"propagation distance must be >= 0, got {z}")
        phases = np.exp(-1j * self.energies * z)
        return (self.vectors * phases) @ self.vectors.conj().T


def axis_propagator(axis_or_matrix, z: float) -> np.ndarray:
    """Unitary ``exp(-i H_s z)`` of one axis."""
    return AxisPropagator(axis_or_matrix)(z)


def apply_propagators(unitaries: Sequence[np.ndarray], psi: np.ndarray) -> np.ndarray:
    """Apply one unitary per lattice axis to a state grid."""
    if psi.ndim != len(unitaries):
        raise DimensionMismatchError(f"state has {psi.ndim} axes, got {len(unitaries)} propagators")
    out = psi
    for axis, u in enumerate(unitaries):
        out = np.moveaxis(np.tensordot(u, out, axes=([1], [axis])), 0, axis)
    return out


@dataclass
class EvolutionResult:
    initial_site: tuple[int, ...]
    z: np.ndarray
    amplitudes: list[np.ndarray] = field(repr=False)

    @property
    def probabilities(self) -> list[np.ndarray]:
        return [np.abs(a) ** 2 for a in self.amplitudes]


def _check_site(spec: LatticeSpec, site) -> tuple[int, ...]:
    site = tuple(int(i) for i in site)
    if len(site) != spec.ndim or any(not 0 <= i < n for i, n in zip(site, spec.dims)):
        raise DomainError(f"site {site} outside lattice {spec.dims}")
    return site


def evolve(
    spec: LatticeSpec,
    initial_site: Sequence[int],
    z_list: Sequence[float],
    workers: int | None = None,
) -> EvolutionResult:
    """Propagate a unit excitation injected at ``initial_site`` (0-based).

    For a single-site input the evolved state is the outer product of the
    propagator columns, so nothing larger than one axis matrix is formed.
    """
    site = _check_site(spec, initial_site)
    zs = np.asarray(z_list, dtype=float).ravel()
    props = [AxisPropagator(ax) for ax in spec.axes]

    def at(z):
        amps = None
        for p, i in zip(props, site):
            col = p(z)[:, i]
            amps = col if amps is None else np.multiply.outer(amps, col)
        return amps

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            amps = list(pool.map(at, zs))
    else:
        amps = [at(z) for z in zs]
    return EvolutionResult(site, zs, amps)


def evolve_state(spec: LatticeSpec, psi: np.ndarray, z: float) -> np.ndarray:
    """Propagate an arbitrary state grid by distance ``z``."""
    psi = np.asarray(psi)
    if psi.shape != spec.dims:
        raise DimensionMismatchError(f"state of shape {psi.shape} does not match {spec.dims}")
    return apply_propagators([axis_propagator(ax, z) for ax in spec.axes], psi)


@dataclass(frozen=True)
class LocalizationReport:
    value: float
    center: tuple[int, ...]
    half_width: int
    shape: str = "square"


def _window_sum(probs: np.ndarray, lo: Sequence[int], hi: Sequence[int]) -> float:
    region = tuple(slice(max(0, a), min(n, b + 1)) for a, b, n in zip(lo, hi, probs.shape))
    if any(s.start >= s.stop for s in region):
        raise DomainError("window does not intersect the lattice")
    total = probs.sum()
    return float(probs[region].sum() / total) if total > 0 else 0.0


def corner_metric(probs: np.ndarray, center: Sequence[int], l: int = 3) -> LocalizationReport:
    """Fraction of probability within Chebyshev distance ``l`` of ``center``."""
    probs = np.asarray(probs, dtype=float)
    center = tuple(int(c) for c in center)
    if len(center) != probs.ndim:
        raise DimensionMismatchError(f"center {center} does not match a {probs.ndim}D grid")
    value = _window_sum(probs, [c - l for c in center], [c + l for c in center])
    return LocalizationReport(value, center, int(l), "square")


def edge_metric(
    probs: np.ndarray, side: str, center: Sequence[int], l: int = 3, window: str = "square"
) -> LocalizationReport:
    """Localization near a boundary site.

    ``window="square"`` is the same clipped square as :func:`corner_metric`,
    centered on the injection site which must lie on ``side``.
    ``window="strip"`` takes every site within ``l`` of that boundary.
    """
    probs = np.asarray(probs, dtype=float)
    if side not in _SIDE_AXIS or _SIDE_AXIS[side][0] >= probs.ndim:
        raise DomainError(f"invalid side {side!r} for a {probs.ndim}D lattice")
    axis, upper = _SIDE_AXIS[side]
    center = tuple(int(c) for c in center)
    boundary = probs.shape[axis] - 1 if upper else 0
    if center[axis] != boundary:
        raise DomainError(f"site {center} is not on the {side} boundary")
    if window == "square":
        report = corner_metric(probs, center, l)
        return report
    if window != "strip":
        raise DomainError(f"unknown window {window!r}")
    lo = [0] * probs.ndim
    hi = [n - 1 for n in probs.shape]
    if upper:
        lo[axis] = boundary - l
    else:
        hi[axis] = l
    return LocalizationReport(_window_sum(probs, lo, hi), center, int(l), "strip")


def injection_site(dims: Sequence[int], label: str) -> tuple[int, ...]:
    """Named 2D injection sites (0-based).

    Corners ``C1..C4`` run counterclockwise from bottom-left ``(0, 0)``:
    C2 = (max, 0), C3 = (max, max), C4 = (0, max). Boundary midpoints
    ``B1..B4`` follow the same order (bottom, right, top, left) and ``T`` is
    the center.
    """
    if len(dims) != 2:
        raise DomainError("named injection sites are defined for 2D lattices")
    nx, ny = dims
    mx, my = nx // 2, ny // 2
    table = {
        "C1": (0, 0), "C2": (nx - 1, 0), "C3": (nx - 1, ny - 1), "C4": (0, ny - 1),
        "B1": (mx, 0), "B2": (nx - 1, my), "B3": (mx, ny - 1), "B4": (0, my),
        "T": (mx, my),
    }
    if label not in table:
        raise DomainError(f"unknown site label {label!r}; choose from {sorted(table)}")
    return table[label]


def site_kind(dims: Sequence[int], site: Sequence[int]) -> tuple[str, str | None]:
    """Classify a site as ``corner``, ``edge`` (with its side) or ``bulk``."""
    sides = []
    for axis, (i, n) in enumerate(zip(site, dims)):
        if i == 0:
            sides.append(SIDES[2 * axis])
        elif i == n - 1:
            sides.append(SIDES[2 * axis + 1])
    if len(sides) == len(dims) and len(dims) > 1:
        return "corner", None
    if sides:
        return "edge", sides[0]
    return "bulk", None


def localization(probs: np.ndarray, site: Sequence[int], l: int = 3) -> tuple[str, LocalizationReport]:
    """ξ around an injection site, using the metric matching its position."""
    kind, side = site_kind(probs.shape, site)
    if kind == "edge":
        return kind, edge_metric(probs, side, site, l)
    return kind, corner_metric(probs, site, l)
