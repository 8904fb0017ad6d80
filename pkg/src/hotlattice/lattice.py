"""Modulated hopping chains and their Kronecker-sum lattices.

A d-dimensional lattice is described by one :class:`AxisModulation` per
direction. Each axis yields an ``N x N`` single-particle hopping matrix with
couplings ``t * (1 + lam * cos(2*pi*b*j + phi))`` on the bond between sites
``j`` and ``j + 1``. The full Hamiltonian is the Kronecker sum of the axis
matrices, with x the slowest-varying (leftmost) index.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence, Union

import numpy as np
from scipy.sparse.linalg import LinearOperator

from .errors import DimensionMismatchError, DomainError, ResourceLimitError

TWO_PI = 2.0 * math.pi
GOLDEN = (math.sqrt(5.0) + 1.0) / 2.0

DEFAULT_MATERIALIZE_CAP = 4096

Frequency = Union[float, Fraction]


@dataclass(frozen=True)
class Open:
    """Open boundary: the chain ends at sites 1 and N."""

    def __str__(self):
        return "open"


@dataclass(frozen=True)
class Twisted:
    """Periodic closure whose wrap bond (N -> 1) carries the phase ``exp(i*theta)``."""

    theta: float = 0.0

    def __str__(self):
        return f"twisted({self.theta!r})"


Boundary = Union[Open, Twisted]


@dataclass(frozen=True)
class AxisModulation:
    """Modulation parameters of one lattice direction.

    ``b`` may be a :class:`fractions.Fraction` to declare a rational
    frequency ``mu/nu``; a plain float is treated as irrational (or
    unspecified). ``bond_origin`` is the modulation index of the bond
    between the first two sites.
    """

    t: float
    lam: float
    b: Frequency
    phi: float
    n_sites: int
    bond_origin: int = 1
    boundary: Boundary = field(default_factory=Open)

    def __post_init__(self):
        if isinstance(self.n_sites, bool) or int(self.n_sites) != self.n_sites:
            raise DomainError(f"n_sites must be an integer, got {self.n_sites!r}")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        if self.n_sites < 2:
            raise DomainError(f"n_sites must be >= 2, got {self.n_sites}")
        if not (np.isfinite(self.t) and self.t > 0):
            raise DomainError(f"mean coupling t must be positive, got {self.t!r}")
        for name in ("lam", "phi"):
            if not np.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if not isinstance(self.b, Fraction) and not np.isfinite(self.b):
            raise DomainError("b must be finite")
        if not isinstance(self.boundary, (Open, Twisted)):
            raise DomainError(f"unknown boundary {self.boundary!r}")
        if abs(self.lam) > 1:
            warnings.warn(
                f"|lambda| = {abs(self.lam)} > 1: some couplings may be negative",
                RuntimeWarning,
                stacklevel=3,
            )

    @property
    def is_rational(self) -> bool:
        return isinstance(self.b, Fraction)

    @property
    def period(self) -> int:
        """Unit-cell size ``nu`` of a rational modulation."""
        if not self.is_rational:
            raise DomainError("b is not declared rational; use Fraction(mu, nu)")
        return self.b.denominator

    @property
    def phi_reduced(self) -> float:
        return self.phi % TWO_PI

    @property
    def theta(self) -> float | None:
        return self.boundary.theta if isinstance(self.boundary, Twisted) else None

    @property
    def bond_range(self) -> range:
        """Valid bond indices, including the wrap bond when twisted."""
        n_bonds = self.n_sites - 1 + isinstance(self.boundary, Twisted)
        return range(self.bond_origin, self.bond_origin + n_bonds)

    def with_phase(self, phi: float) -> "AxisModulation":
        return replace(self, phi=float(phi))

    def with_boundary(self, boundary: Boundary) -> "AxisModulation":
        return replace(self, boundary=boundary)

    def twisted(self, theta: float) -> "AxisModulation":
        return replace(self, boundary=Twisted(float(theta)))


def _modulation_angles(b: Frequency, j: np.ndarray, phi: float) -> np.ndarray:
    j = np.asarray(j)
    if isinstance(b, Fraction):
        # exact reduction of b*j modulo 1 keeps large indices accurate
        frac = np.mod(b.numerator * j, b.denominator) / b.denominator
        return TWO_PI * frac + phi
    return TWO_PI * float(b) * j + phi


def bond_values(t, lam, b: Frequency, phi, j) -> np.ndarray:
    """Vectorized ``t * (1 + lam * cos(2*pi*b*j + phi))`` without range checks.

    ``phi`` may be an array broadcastable against ``j``.
    """
    return t * (1.0 + lam * np.cos(_modulation_angles(b, j, phi)))


def bond_strength(axis: AxisModulation, j: int) -> float:
    """Coupling on bond ``j`` of ``axis``.

    >>> from fractions import Fraction
    >>> bond_strength(AxisModulation(1.0, 0.5, Fraction(1, 3), 0.0, 4), 3)
    1.5
    """
    if j not in axis.bond_range:
        raise DomainError(
            f"bond index {j} outside [{axis.bond_range.start}, {axis.bond_range.stop - 1}]"
        )
    return float(bond_values(axis.t, axis.lam, axis.b, axis.phi, j))


def axis_couplings(axis: AxisModulation) -> tuple[np.ndarray, float | None]:
    """Open-chain bond couplings and the wrap-bond coupling (``None`` if open)."""
    js = np.arange(axis.bond_origin, axis.bond_origin + axis.n_sites - 1)
    inner = bond_values(axis.t, axis.lam, axis.b, axis.phi, js)
    if isinstance(axis.boundary, Twisted):
        wrap = float(bond_values(axis.t, axis.lam, axis.b, axis.phi, js[-1] + 1))
        return inner, wrap
    return inner, None


def build_axis_hamiltonian(axis: AxisModulation) -> np.ndarray:
    """Single-particle hopping matrix of one axis.

    Real symmetric and tridiagonal for an open chain. A twisted chain is
    complex with ``H[N-1, 0] = J_wrap * exp(i*theta)`` (1-based entry (N, 1)).
    """
    n = axis.n_sites
    inner, wrap = axis_couplings(axis)
    idx = np.arange(n - 1)
    if wrap is None:
        h = np.zeros((n, n))
        h[idx + 1, idx] = inner
        h[idx, idx + 1] = inner
        return h
    h = np.zeros((n, n), dtype=complex)
    h[idx + 1, idx] = inner
    h[idx, idx + 1] = inner
    phase = np.exp(1j * axis.boundary.theta)
    h[n - 1, 0] += wrap * phase
    h[0, n - 1] += wrap * np.conj(phase)
    return h


@dataclass(frozen=True)
class LatticeSpec:
    """Ordered axes (x, y, z) of a 1-3 dimensional lattice."""

    axes: tuple[AxisModulation, ...]

    def __post_init__(self):
        axes = tuple(self.axes)
        if not 1 <= len(axes) <= 3:
            raise DomainError(f"a lattice has 1 to 3 axes, got {len(axes)}")
        for ax in axes:
            if not isinstance(ax, AxisModulation):
                raise DomainError(f"expected AxisModulation, got {type(ax).__name__}")
        object.__setattr__(self, "axes", axes)

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(ax.n_sites for ax in self.axes)

    def with_phase(self, phi: float) -> "LatticeSpec":
        """Same lattice with every axis set to phase ``phi``."""
        return LatticeSpec(tuple(ax.with_phase(phi) for ax in self.axes))


class KroneckerOperator:
    """Kronecker sum ``sum_s I (x) ... (x) H_s (x) ... (x) I`` held factor by factor.

    Vectors are laid out in C order over ``dims`` so axis 0 (x) varies
    slowest. Products are computed along lattice fibers; the full matrix is
    only formed by :meth:`materialize`.
    """

    def __init__(self, factors: Sequence[np.ndarray]):
        factors = tuple(np.asarray(h) for h in factors)
        if not 1 <= len(factors) <= 3:
            raise DomainError(f"expected 1 to 3 factors, got {len(factors)}")
        for h in factors:
            if h.ndim != 2 or h.shape[0] != h.shape[1]:
                raise DomainError(f"factor of shape {h.shape} is not square")
        self.factors = factors
        self.dims = tuple(h.shape[0] for h in factors)
        self.size = int(np.prod(self.dims))
        self.shape = (self.size, self.size)
        self.dtype = np.result_type(*factors)

    def __repr__(self):
        return f"KroneckerOperator(dims={self.dims}, dtype={self.dtype})"

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """Apply the operator to a flat vector or a grid of shape ``dims``."""
        v = np.asarray(v)
        if v.shape == self.dims:
            grid = v
        elif v.shape == (self.size,):
            grid = v.reshape(self.dims)
        else:
            raise DimensionMismatchError(
                f"vector of shape {v.shape} does not match lattice {self.dims}"
            )
        out = np.zeros(self.dims, dtype=np.result_type(self.dtype, grid.dtype))
        for axis, h in enumerate(self.factors):
            out += np.moveaxis(np.tensordot(h, grid, axes=([1], [axis])), 0, axis)
        return out.reshape(v.shape)

    __matmul__ = matvec

    def term(self, axis: int, max_dim: int = DEFAULT_MATERIALIZE_CAP) -> np.ndarray:
        """Dense ``I (x) H_axis (x) I`` for one axis (small lattices only)."""
        self._check_cap(max_dim)
        mats = [np.eye(d) for d in self.dims]
        mats[axis] = self.factors[axis]
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return out

    def materialize(self, max_dim: int = DEFAULT_MATERIALIZE_CAP) -> np.ndarray:
        self._check_cap(max_dim)
        return sum(self.term(s, max_dim) for s in range(len(self.factors)))

    def norm_bound(self) -> float:
        """Upper bound on the spectral norm: sum of per-axis 2-norms."""
        return float(sum(np.linalg.norm(h, 2) for h in self.factors))

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator(
            self.shape, matvec=lambda x: self.matvec(np.ravel(x)), dtype=self.dtype
        )

    def _check_cap(self, max_dim):
        if self.size > max_dim:
            raise ResourceLimitError(
                f"total dimension {self.size} exceeds the dense cap {max_dim}; "
                "use matvec instead of materializing"
            )


def kron_sum(spec: LatticeSpec) -> KroneckerOperator:
    return KroneckerOperator([build_axis_hamiltonian(ax) for ax in spec.axes])
