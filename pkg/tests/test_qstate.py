import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qxcorr.errors import BadDimension, DegenerateState, InvalidDensity
from qxcorr.noise import collective_phase_flip, mix_signal_noise
from qxcorr.qstate import (
    DensityMatrix,
    PureState,
    apply_operator,
    basis_state,
    density_from_pure,
    fidelity,
    load_state,
    make_pure,
    random_density,
    random_state,
    save_state,
    state_from_dict,
    uniform_state,
)

Z = np.diag([1.0, -1.0])


def test_make_pure_examples():
    s = make_pure([1, 0])
    assert np.allclose(s.amplitudes, [1, 0]) and not s.renormalized
    s = make_pure([1, 1, 1, 1])
    assert np.allclose(s.amplitudes, 0.5)
    s = make_pure([2, 0])
    assert np.allclose(s.amplitudes, [1, 0]) and s.renormalized


def test_make_pure_errors():
    with pytest.raises(DegenerateState):
        make_pure([0, 0, 0])
    with pytest.raises(BadDimension):
        make_pure([1.0])


def test_pure_state_rejects_unnormalized():
    with pytest.raises(DegenerateState):
        PureState(np.array([1.0, 1.0]))


def test_values_are_immutable():
    s = uniform_state(4)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False),
                min_size=2, max_size=16))
def test_make_pure_normalizes(vals):
    if not any(vals):
        with pytest.raises(DegenerateState):
            make_pure(vals)
        return
    assert abs(np.linalg.norm(make_pure(vals).amplitudes) - 1) < 1e-10


def test_density_from_pure_examples():
    assert np.allclose(density_from_pure(basis_state(2, 0)).entries, [[1, 0], [0, 0]])
    assert np.allclose(density_from_pure(uniform_state(2)).entries, 0.5)
    phi = make_pure([1 / np.sqrt(2), 1j / np.sqrt(2)])
    # outer product v_i conj(v_j), worked by hand
    expected = np.array([[0.5, -0.5j], [0.5j, 0.5]])
    assert np.abs(density_from_pure(phi).entries - expected).max() < 1e-12


def test_density_from_pure_invariants(rng):
    for _ in range(200):
        d = int(rng.choice([2, 4, 8, 16]))
        rho = density_from_pure(random_state(d, rng))
        ev = np.linalg.eigvalsh(rho.entries)
        assert np.abs(rho.entries - rho.entries.conj().T).max() <= 1e-10
        assert ev[0] >= -1e-10
        assert abs(rho.trace - 1) <= 1e-10 and rho.normalized
        assert abs(ev[-2]) <= 1e-10


def test_density_validation():
    with pytest.raises(InvalidDensity):
        DensityMatrix(np.array([[0.5, 0.1], [0.0, 0.5]]))
    with pytest.raises(InvalidDensity):
        DensityMatrix(np.diag([1.5, -0.5]))
    with pytest.raises(InvalidDensity):
        DensityMatrix(np.diag([1.0, 0.5]))
    with pytest.raises(BadDimension):
        DensityMatrix(np.ones((2, 3)) / 2)
    sub = DensityMatrix(np.diag([0.25, 0.25]))
    assert not sub.normalized and sub.trace == pytest.approx(0.5)


def test_apply_operator_examples():
    rho = random_density(3, np.random.default_rng(0))
    assert np.abs(apply_operator(np.eye(3), rho).entries - rho.entries).max() < 1e-14
    plus = density_from_pure(uniform_state(2))
    minus = density_from_pure(make_pure([1, -1]))
    assert np.abs(apply_operator(Z, plus).entries - minus.entries).max() < 1e-14
    out = apply_operator(np.diag([1.0, 0.0]), DensityMatrix(np.eye(2) / 2))
    # P rho P^dagger by hand: [[1/2, 0], [0, 0]]
    assert np.abs(out.entries - np.array([[0.5, 0], [0, 0]])).max() < 1e-14
    assert out.trace == pytest.approx(0.5)
    with pytest.raises(BadDimension):
        apply_operator(np.eye(3), plus)


def test_apply_operator_linear(rng):
    for _ in range(50):
        d = 4
        A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        A /= np.linalg.norm(A, 2)
        r1, r2 = random_density(d, rng), random_density(d, rng)
        a, b = 0.3, 0.7
        lhs = apply_operator(A, DensityMatrix(a * r1.entries + b * r2.entries)).entries
        rhs = a * apply_operator(A, r1).entries + b * apply_operator(A, r2).entries
        assert np.abs(lhs - rhs).max() <= 1e-10


def test_fidelity_examples():
    rho = random_density(4, np.random.default_rng(3))
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)
    assert fidelity(density_from_pure(basis_state(2, 0)), density_from_pure(basis_state(2, 1))) == 0.0
    S = density_from_pure(uniform_state(4))
    rho = mix_signal_noise(0.5, S, collective_phase_flip(2))
    assert abs(fidelity(rho, S) - 0.7071067812) < 1e-10


def test_fidelity_symmetry_and_pure_shortcut(rng):
    for _ in range(200):
        d = int(rng.choice([2, 3, 4, 8]))
        a, b = random_density(d, rng), random_density(d, rng)
        assert abs(fidelity(a, b) - fidelity(b, a)) <= 1e-9
        phi = random_state(d, rng)
        v = phi.amplitudes
        assert abs(fidelity(a, density_from_pure(phi))
                   - np.sqrt(np.real(v.conj() @ a.entries @ v))) <= 1e-9


def test_fidelity_general_path_matches_mixed_commuting_case(rng):
    # commuting diagonal states: F = sum sqrt(p_i q_i)
    for _ in range(20):
        p, q = rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(5))
        f = fidelity(DensityMatrix(np.diag(p)), DensityMatrix(np.diag(q)))
        assert abs(f - np.sum(np.sqrt(p * q))) < 1e-12


def test_fidelity_low_rank_is_accurate():
    # rank-2 mixture vs rank-2 state: eigenvalue round-off must not leak in as sqrt(1e-17)
    S = density_from_pure(uniform_state(8))
    rho = mix_signal_noise(0.3, S, collective_phase_flip(3))
    sigma = DensityMatrix(0.5 * rho.entries + 0.5 * S.entries)
    # both commute with the projector onto span{S, N}: closed form in that 2-d block
    expected = np.sqrt(0.3 * 0.65) + np.sqrt(0.7 * 0.35)
    assert abs(fidelity(rho, sigma) - expected) < 1e-12


def test_fidelity_errors():
    a = DensityMatrix(np.eye(2) / 2)
    with pytest.raises(BadDimension):
        fidelity(a, DensityMatrix(np.eye(3) / 3))
    with pytest.raises(InvalidDensity):
        fidelity(a, DensityMatrix(np.eye(2) / 4))


def test_state_file_roundtrip(tmp_path):
    phi = make_pure([1, 1j, -1, 0.5])
    path = tmp_path / "s.json"
    save_state(phi, path)
    back = load_state(path)
    assert np.abs(back.amplitudes - phi.amplitudes).max() < 1e-15
    with pytest.raises(BadDimension):
        state_from_dict({"dim": 3, "amplitudes": [[1, 0], [0, 0]]})
    with pytest.raises(ValueError):
        state_from_dict({"amplitudes": [[1, 0]]})
