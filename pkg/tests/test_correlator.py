import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qxcorr import correlator as corr
from qxcorr.errors import BadDimension, ImpossiblePostselection, OracleScaleExceeded
from qxcorr.noise import collective_phase_flip, identity_noise, single_operator
from qxcorr.qstate import (
    DensityMatrix,
    PureState,
    basis_state,
    density_from_pure,
    make_pure,
    random_density,
    random_state,
    random_unitary,
    uniform_state,
)


def brute_C(phi0, psi):
    """Double sum over lags and labels with explicit modular indexing."""
    N = phi0.dim
    a, b = phi0.amplitudes, psi.amplitudes
    total = 0.0
    for j in range(N):
        s = sum(np.conj(a[(k - j) % N]) * b[k] for k in range(N))
        total += abs(s) ** 2
    return total / N


def test_cyclic_shift_direction():
    e0 = basis_state(4, 0)
    assert np.allclose(corr.cyclic_shift(e0, 1).amplitudes, [0, 1, 0, 0])
    assert np.allclose(corr.cyclic_shift(e0, -1).amplitudes, [0, 0, 0, 1])
    v = make_pure([1, 2, 3, 4])
    assert np.allclose(corr.cyclic_shift(v, 4).amplitudes, v.amplitudes)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(-20, 20), st.integers(-20, 20), st.integers(0, 2**32 - 1))
def test_shift_composition(n, i, j, seed):
    phi = random_state(2**n, np.random.default_rng(seed))
    lhs = corr.cyclic_shift(corr.cyclic_shift(phi, i), j).amplitudes
    assert np.array_equal(lhs, corr.cyclic_shift(phi, i + j).amplitudes)


def test_correlation_examples():
    e0, e1 = basis_state(2, 0), basis_state(2, 1)
    assert corr.correlation_coefficient(e0, e1) == pytest.approx(0.5, abs=1e-15)
    assert corr.correlation_coefficient(e0, e0) == pytest.approx(0.5, abs=1e-15)
    u = uniform_state(8)
    assert corr.correlation_coefficient(u, u) == pytest.approx(1.0, abs=1e-14)
    X = np.array([[0, 1], [1, 0]])
    assert corr.correlation_coefficient_general(e0, X, e0) == pytest.approx(0.5, abs=1e-15)
    assert corr.correlation_coefficient_general(u, np.zeros((8, 8)), u) == 0.0


def test_correlation_matches_brute_force(rng):
    for d in (2, 3, 4, 5, 8):
        for _ in range(30):
            a, b = random_state(d, rng), random_state(d, rng)
            assert abs(corr.correlation_coefficient(a, b) - brute_C(a, b)) < 1e-13


def test_correlation_general_scaling(rng):
    for _ in range(30):
        d = 4
        phi0, phi = random_state(d, rng), random_state(d, rng)
        E = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        v = E @ phi.amplitudes
        expected = corr.correlation_coefficient(phi0, make_pure(v)) * np.linalg.norm(v) ** 2
        assert abs(corr.correlation_coefficient_general(phi0, E, phi) - expected) < 1e-12


def test_dimension_mismatch():
    with pytest.raises(BadDimension):
        corr.correlation_coefficient(uniform_state(2), uniform_state(4))
    with pytest.raises(BadDimension):
        corr.postselect_filter(DensityMatrix(np.eye(3) / 3), uniform_state(2))


def test_shift_entangle_examples():
    joint = corr.shift_entangle(basis_state(2, 0))
    amp = joint.amplitudes
    assert np.allclose(np.abs(amp), np.array([1, 0, 0, 1]) / np.sqrt(2))
    # |k>|j> -> |k-j>|j>: index (k-j mod N)*N + j
    joint = corr.shift_entangle(basis_state(4, 1))
    nonzero = set(np.flatnonzero(np.abs(joint.amplitudes) > 0))
    assert nonzero == {((1 - j) % 4) * 4 + j for j in range(4)}


def test_shift_entangle_matches_unitary(rng):
    for N in (2, 3, 4, 8):
        phi = random_state(N, rng)
        u = np.full(N, 1 / np.sqrt(N))
        full = corr.build_full_unitary(N) @ np.kron(phi.amplitudes, u)
        assert np.abs(full - corr.shift_entangle(phi).amplitudes).max() < 1e-14


def test_full_unitary_examples():
    U = corr.build_full_unitary(2)
    expected = np.zeros((4, 4))
    expected[0, 0] = expected[3, 1] = expected[2, 2] = expected[1, 3] = 1
    assert np.array_equal(U, expected)
    for N in (2, 4, 8):
        U = corr.build_full_unitary(N)
        assert np.abs(U.conj().T @ U - np.eye(N * N)).max() == 0.0
    with pytest.raises(OracleScaleExceeded):
        corr.build_full_unitary(17)
    with pytest.raises(BadDimension):
        corr.build_full_unitary(1)


def test_filter_examples():
    u = uniform_state(4)
    out = corr.postselect_filter_pure(u, u)
    assert out.postselect_prob == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(out.normalized.entries, np.full((4, 4), 0.25))
    e0 = basis_state(2, 0)
    out = corr.postselect_filter_pure(e0, e0)
    assert np.allclose(out.raw.entries, [[0.5, 0], [0, 0]])
    comb = make_pure([1, -1, 1, -1])
    out = corr.postselect_filter_pure(comb, u)
    assert out.postselect_prob < 1e-15 and not out.succeeded


def test_filter_requires_unit_trace():
    with pytest.raises(ValueError):
        corr.postselect_filter(DensityMatrix(np.eye(2) / 4), uniform_state(2))


def test_filter_matches_oracle(rng):
    for N in (2, 3, 4, 8):
        for _ in range(5):
            rho, phi0 = random_density(N, rng), random_state(N, rng)
            fast = corr.postselect_filter(rho, phi0).raw.entries
            slow = corr.postselect_filter_oracle(rho, phi0).raw.entries
            assert np.abs(fast - slow).max() <= 1e-12


def test_trace_formula(rng):
    for N in (2, 4, 8, 16):
        for _ in range(25):
            phi0, phi = random_state(N, rng), random_state(N, rng)
            out = corr.postselect_filter_pure(phi, phi0)
            assert abs(out.raw.trace - corr.correlation_coefficient(phi0, phi)) <= 1e-12


def test_pure_output_is_outer_product_of_lags(rng):
    phi0, phi = random_state(8, rng), random_state(8, rng)
    c = corr.lag_overlaps(phi0, phi)
    out = corr.postselect_filter_pure(phi, phi0)
    assert np.abs(out.raw.entries - np.outer(c, c.conj()) / 8).max() < 1e-14


def test_decomposition_phase_flip():
    u = uniform_state(4)
    dec = corr.filter_decomposition(0.3, u, collective_phase_flip(2), u)
    assert dec.signal_weight == pytest.approx(1.0, abs=1e-14)
    assert dec.noise_weight == pytest.approx(0.0, abs=1e-14)
    assert dec.noise_raw_trace == pytest.approx(0.5)
    assert np.abs(dec.reconstruct() - dec.mixture.normalized.entries).max() < 1e-14


def test_decomposition_reconstructs(rng):
    for _ in range(30):
        d = 4
        phi, phi0 = random_state(d, rng), random_state(d, rng)
        noise = single_operator(random_unitary(d, rng))
        p = rng.uniform(0.1, 0.9)
        dec = corr.filter_decomposition(p, phi, noise, phi0)
        assert abs(dec.signal_weight + dec.noise_weight - 1) < 1e-12
        assert np.abs(dec.reconstruct() - dec.mixture.normalized.entries).max() < 1e-12


def test_decomposition_impossible():
    u = uniform_state(4)
    comb = make_pure([1, -1, 1, -1])
    with pytest.raises(ImpossiblePostselection):
        corr.filter_decomposition(1.0, comb, identity_noise(4), u)


def test_joint_state_validation():
    with pytest.raises(BadDimension):
        corr.JointState(2, 3, np.ones(6) / np.sqrt(6))
    with pytest.raises(ValueError):
        corr.JointState(2, 2, np.ones(4))
