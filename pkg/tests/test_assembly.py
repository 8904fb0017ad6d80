import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hotlattice.assembly import AxisSpectrum, AxisState, construct_states, product_state, verify_eigenpair
from hotlattice.errors import DimensionMismatchError, DomainError, StateNotFoundError
from hotlattice.lattice import GOLDEN, AxisModulation, LatticeSpec, kron_sum
from hotlattice.spectral import EdgeKind, solve_axis

from conftest import PI, chain


@pytest.fixture(scope="module")
def corner_spec():
    return LatticeSpec((chain(lam=0.4), chain(lam=0.5)))


def test_delta_product():
    ex, ey = np.eye(4), np.eye(5)
    s = product_state([(ex[1], 0.5), (ey[3], -0.25)])
    expected = np.zeros((4, 5))
    expected[1, 3] = 1.0
    np.testing.assert_array_equal(s.amplitudes, expected)
    assert s.energy == 0.25
    assert s.role.name == "unknown"


def test_ipr_factorizes(rng):
    vs = [rng.normal(size=n) for n in (6, 7, 3)]
    vs = [v / np.linalg.norm(v) for v in vs]
    s = product_state([(v, 0.0) for v in vs])
    assert s.ipr() == pytest.approx(np.prod([np.sum(v**4) for v in vs]), rel=1e-12)


def test_products_form_orthonormal_basis():
    spec = LatticeSpec((chain(n=6, phi=0.2), chain(n=5, b=GOLDEN)))
    sx, sy = (solve_axis(ax) for ax in spec.axes)
    basis = np.column_stack([
        product_state([(sx.vectors[:, i], sx.values[i]), (sy.vectors[:, j], sy.values[j])]).amplitudes.ravel()
        for i in range(6) for j in range(5)
    ])
    np.testing.assert_allclose(basis.conj().T @ basis, np.eye(30), atol=1e-12)
    h = kron_sum(spec).materialize()
    energies = np.add.outer(sx.values, sy.values).ravel()
    np.testing.assert_allclose(basis.conj().T @ h @ basis, np.diag(energies), atol=1e-12)


@given(seed=st.integers(0, 2**31))
@settings(max_examples=20, deadline=None)
def test_residual_of_random_state_is_energy_spread(seed):
    # ||H psi - <H> psi||^2 = <H^2> - <H>^2 for normalized psi
    rng = np.random.default_rng(seed)
    spec = LatticeSpec((chain(n=5, phi=rng.uniform(0, 6)), chain(n=4, lam=0.3)))
    op = kron_sum(spec)
    dense = op.materialize()
    psi = rng.normal(size=op.dims) + 1j * rng.normal(size=op.dims)
    psi /= np.linalg.norm(psi)
    v = psi.ravel()
    mean = np.vdot(v, dense @ v).real
    var = np.vdot(v, dense @ dense @ v).real - mean**2
    assert verify_eigenpair(op, psi, mean) == pytest.approx(np.sqrt(max(var, 0.0)), rel=1e-9, abs=1e-12)


@given(lam=st.floats(0.0, 0.9), phi=st.floats(0, 2 * np.pi))
@settings(max_examples=20, deadline=None)
def test_additive_spectrum_matches_dense(lam, phi):
    spec = LatticeSpec((chain(n=8, lam=lam, phi=phi), chain(n=7, b=GOLDEN, phi=phi).twisted(0.4)))
    dense = np.linalg.eigvalsh(kron_sum(spec).materialize())
    sums = np.sort(np.add.outer(*(solve_axis(ax).values for ax in spec.axes)).ravel())
    np.testing.assert_allclose(sums, dense, atol=1e-9)


class TestCornerProducts:
    def test_four_sym_antisym_corners(self, corner_spec):
        states = construct_states(corner_spec, ["both", "both"])
        assert sorted(s.label for s in states) == ["AA", "AS", "SA", "SS"]
        op = kron_sum(corner_spec)
        for s in states:
            assert s.role.name == "corner"
            assert verify_eigenpair(op, s, s.energy) < 1e-12

    def test_symmetric_pair_split(self, corner_spec):
        spec = AxisSpectrum.of(corner_spec.axes[0])
        s_idx, a_idx = spec.edge_indices("symmetric"), spec.edge_indices("antisymmetric")
        assert len(s_idx) == len(a_idx) == 1
        assert 0 < abs(spec.solution.values[s_idx[0]] - spec.solution.values[a_idx[0]]) < 1e-2

    def test_edge_times_extended_is_edge_role(self, corner_spec):
        (s,) = construct_states(corner_spec, ["symmetric", "extended"])
        assert s.role.name == "edge"
        assert s.label == "SE"

    def test_right_only_corner(self):
        ax = AxisModulation(0.3, 0.5, GOLDEN, 1.25 * PI, 15)
        spec = LatticeSpec((ax, ax))
        (s,) = construct_states(spec, ["right", "right"])
        assert s.label == "RR"
        assert np.unravel_index(np.argmax(s.probabilities), s.amplitudes.shape) == (14, 14)
        with pytest.raises(StateNotFoundError, match="right"):
            construct_states(spec, ["left", "left"])

    def test_explicit_extended_index(self, corner_spec):
        (s,) = construct_states(corner_spec, ["extended", "extended"], extended_index=[0, 1])
        assert [c.index for c in s.components] == [0, 1]
        assert s.role.name == "bulk"


class TestRoles3D:
    @pytest.mark.parametrize(
        "pattern, role",
        [
            (["symmetric"] * 3, "corner"),
            (["symmetric", "symmetric", "extended"], "hinge"),
            (["extended", "symmetric", "extended"], "surface"),
        ],
    )
    def test_role_names(self, pattern, role):
        ax = chain()
        spec = LatticeSpec((ax, ax, ax))
        (s,) = construct_states(spec, pattern)
        assert s.role.name == role
        assert verify_eigenpair(kron_sum(spec), s, s.energy) < 1e-12


def test_axis_state_labels():
    v = np.ones(2)
    assert AxisState(v, 0.0, EdgeKind.BOTH, 0, 1).label == "S"
    assert AxisState(v, 0.0, EdgeKind.BOTH, 0, -1).label == "A"
    assert AxisState(v, 0.0, EdgeKind.BOTH, 0, 0).label == "B"
    assert AxisState(v, 0.0, EdgeKind.BULK).label == "E"
    assert AxisState(v, 0.0).label == "?"


def test_bad_pattern(corner_spec):
    with pytest.raises(DomainError):
        construct_states(corner_spec, ["both"])
    with pytest.raises(DomainError):
        construct_states(corner_spec, ["both", "middle"])


def test_shape_checks(corner_spec):
    op = kron_sum(corner_spec)
    with pytest.raises(DimensionMismatchError):
        verify_eigenpair(op, np.zeros((30, 29)), 0.0)
    with pytest.raises(DomainError):
        product_state([])
