"""Cyclic shifts, correlation coefficients and the post-selection filter.

Conventions used throughout:

* ``cyclic_shift(phi, j)`` maps ``|k> -> |k + j mod N>``, so
  ``(S_j phi)(m) = phi(m - j)``.
* The joint signal/pointer register is ordered ``|k> (x) |j>`` (signal
  first), flattened to index ``k * N + j``.
* The coupling sends ``|k>|j> -> |k - j mod N>|j>``; after projecting the
  signal onto the reference ``phi0`` the pointer amplitude for lag ``j`` is
  ``c_j / sqrt(N)`` with ``c_j = <S_j phi0 | phi>``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadDimension, ImpossiblePostselection, OracleScaleExceeded
from .noise import NoiseModel, apply_noise_detailed
from .qstate import (
    ATOL,
    INPUT_TOL,
    DensityMatrix,
    PureState,
    density_from_pure,
)

POSTSELECT_THRESHOLD = 1e-12
ORACLE_MAX_DIM = 16


@dataclass(frozen=True)
class JointState:
    """Pure state of the signal (x) pointer register, both of dimension ``N``."""

    signal_dim: int
    pointer_dim: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=np.complex128, copy=True)
        if self.signal_dim != self.pointer_dim:
            raise BadDimension("pointer register must have one label per signal label")
        if amp.shape != (self.signal_dim * self.pointer_dim,):
            raise BadDimension(f"joint amplitudes must have length N^2, got {amp.shape}")
        if abs(np.linalg.norm(amp) - 1.0) > ATOL:
            raise ValueError("joint state not normalized")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    def as_matrix(self) -> np.ndarray:
        """Amplitudes reshaped to ``[signal_label, pointer_label]``."""
        return self.amplitudes.reshape(self.signal_dim, self.pointer_dim)


@dataclass(frozen=True)
class FilterOutput:
    """Result of the post-selected correlator on the pointer register.

    ``raw`` is the unnormalized output, ``postselect_prob`` its trace and
    ``normalized`` is ``raw / postselect_prob`` or ``None`` when the
    probability is below ``1e-12``.
    """

    raw: DensityMatrix
    postselect_prob: float
    normalized: DensityMatrix | None

    @property
    def succeeded(self) -> bool:
        return self.normalized is not None


def _check_dims(a: int, b: int) -> None:
    if a != b:
        raise BadDimension(f"dimension mismatch: {a} vs {b}")


def cyclic_shift(phi: PureState, lag: int) -> PureState:
    """Relabel ``|k> -> |k + lag mod N>``."""
    return PureState(np.roll(phi.amplitudes, lag % phi.dim))


def shifted_references(phi0: PureState) -> np.ndarray:
    """Matrix whose column ``j`` is ``S_j phi0``."""
    return np.column_stack([cyclic_shift(phi0, j).amplitudes for j in range(phi0.dim)])


def lag_overlaps(phi0: PureState, vec) -> np.ndarray:
    """``c_j = <S_j phi0 | vec>`` for every lag ``j``; ``vec`` may be unnormalized."""
    v = np.asarray(vec.amplitudes if isinstance(vec, PureState) else vec, dtype=np.complex128)
    _check_dims(phi0.dim, v.size)
    return shifted_references(phi0).conj().T @ v


def correlation_coefficient(phi0: PureState, psi: PureState) -> float:
    """Lag-averaged squared overlap ``(1/N) sum_j |<S_j phi0|psi>|^2``; lies in ``[0, 1]``."""
    _check_dims(phi0.dim, psi.dim)
    c = lag_overlaps(phi0, psi)
    return float(np.sum(np.abs(c) ** 2) / phi0.dim)


def correlation_coefficient_general(phi0: PureState, E, phi: PureState) -> float:
    """Correlation of ``phi0`` with the unnormalized vector ``E phi``.

    Equals ``correlation_coefficient(phi0, normalize(E phi)) * ||E phi||^2``
    and is 0 when ``E phi`` vanishes.
    """
    op = np.asarray(E, dtype=np.complex128)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise BadDimension(f"operator must be square, got {op.shape}")
    _check_dims(op.shape[0], phi.dim)
    _check_dims(phi0.dim, phi.dim)
    v = op @ phi.amplitudes
    if np.linalg.norm(v) == 0.0:
        return 0.0
    c = lag_overlaps(phi0, v)
    return float(np.sum(np.abs(c) ** 2) / phi0.dim)


def shift_entangle(phi: PureState) -> JointState:
    """Couple ``phi`` to a uniform pointer: ``(1/sqrt N) sum_{j,k} phi(k) |k-j>|j>``."""
    n = phi.dim
    # column j holds S_{-j} phi
    mat = np.column_stack([cyclic_shift(phi, -j).amplitudes for j in range(n)]) / np.sqrt(n)
    return JointState(n, n, mat.ravel())


def build_full_unitary(N: int) -> np.ndarray:
    """Explicit controlled shift ``U = sum_j S_{-j} (x) |j><j|`` of size ``N^2``.

    Built by enumerating the basis map ``|k>|j> -> |k-j mod N>|j>``; it does
    not reuse :func:`cyclic_shift` so it can serve as an oracle.
    """
    if N > ORACLE_MAX_DIM:
        raise OracleScaleExceeded(f"oracle unitary limited to N <= {ORACLE_MAX_DIM}, got {N}")
    if N < 2:
        raise BadDimension(f"N must be >= 2, got {N}")
    U = np.zeros((N * N, N * N), dtype=np.complex128)
    for k in range(N):
        for j in range(N):
            U[((k - j) % N) * N + j, k * N + j] = 1.0
    return U


def _output_from_raw(raw: np.ndarray) -> FilterOutput:
    raw = 0.5 * (raw + raw.conj().T)
    prob = float(np.trace(raw).real)
    raw_dm = DensityMatrix(raw)
    if prob >= POSTSELECT_THRESHOLD:
        normalized = DensityMatrix(raw / prob)
    else:
        normalized = None
    return FilterOutput(raw_dm, prob, normalized)


def postselect_filter(rho_signal: DensityMatrix, phi0: PureState) -> FilterOutput:
    """Apply the cross-correlation filter defined by the reference ``phi0``.

    The signal is coupled to a uniform pointer by the controlled shift, the
    signal register is projected onto ``|phi0><phi0|`` and the pointer state
    is returned. Entry ``(i, j)`` of the raw output is
    ``(1/N) <S_i phi0| rho |S_j phi0>``, which for a pure input reduces to
    ``(1/N) c_i conj(c_j)``; its trace is the correlation coefficient.
    """
    _check_dims(rho_signal.dim, phi0.dim)
    if abs(rho_signal.trace - 1.0) > INPUT_TOL:
        raise ValueError(f"input state must have unit trace, got {rho_signal.trace!r}")
    B = shifted_references(phi0)
    raw = B.conj().T @ rho_signal.entries @ B / phi0.dim
    return _output_from_raw(raw)


def postselect_filter_pure(phi: PureState, phi0: PureState) -> FilterOutput:
    return postselect_filter(density_from_pure(phi), phi0)


def postselect_filter_oracle(rho_signal: DensityMatrix, phi0: PureState) -> FilterOutput:
    """Same channel computed the long way, for cross-checking.

    Builds ``U (rho (x) |u><u|) U^dagger`` on the full ``N^2`` register,
    applies ``|phi0><phi0| (x) 1`` and traces out the signal.
    """
    N = rho_signal.dim
    _check_dims(N, phi0.dim)
    U = build_full_unitary(N)
    pointer = np.full((N, N), 1.0 / N, dtype=np.complex128)
    joint = U @ np.kron(rho_signal.entries, pointer) @ U.conj().T
    proj = np.kron(np.outer(phi0.amplitudes, phi0.amplitudes.conj()), np.eye(N))
    post = proj @ joint @ proj
    raw = np.einsum("kikj->ij", post.reshape(N, N, N, N))
    return _output_from_raw(raw)


@dataclass(frozen=True)
class FilterDecomposition:
    """Split of the normalized filter output into signal and noise parts.

    ``signal_weight`` is the mixing weight ``q`` in front of the normalized
    filtered signal; ``noise_weight = 1 - q`` up to rounding.
    """

    signal_weight: float
    noise_weight: float
    mixture: FilterOutput
    signal: FilterOutput
    noise: FilterOutput
    noise_raw_trace: float
    rho: DensityMatrix
    signal_state: DensityMatrix

    def reconstruct(self) -> np.ndarray:
        out = np.zeros_like(self.mixture.raw.entries)
        if self.signal.normalized is not None:
            out = out + self.signal_weight * self.signal.normalized.entries
        if self.noise.normalized is not None:
            out = out + self.noise_weight * self.noise.normalized.entries
        return out


def filter_decomposition(p: float, phi: PureState, noise: NoiseModel,
                         phi0: PureState) -> FilterDecomposition:
    """Weights ``p C(phi0, phi) / P`` and ``(1-p) C(phi0, N) / P`` with ``P = tr E(rho)``.

    The noise branch is the unit-trace ``N`` from :func:`apply_noise`, so its
    correlation is the trace of the filtered ``N``.

    Raises:
        ImpossiblePostselection: if ``tr E(rho) < 1e-12``.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    S = density_from_pure(phi)
    branch = apply_noise_detailed(noise, S)
    rho = DensityMatrix(p * S.entries + (1.0 - p) * branch.state.entries)
    mixed = postselect_filter(rho, phi0)
    if mixed.postselect_prob < POSTSELECT_THRESHOLD:
        raise ImpossiblePostselection(
            f"post-selection probability {mixed.postselect_prob:.3g} is below {POSTSELECT_THRESHOLD}")
    sig = postselect_filter(S, phi0)
    noi = postselect_filter(branch.state, phi0)
    w_s = p * sig.postselect_prob / mixed.postselect_prob
    w_n = (1.0 - p) * noi.postselect_prob / mixed.postselect_prob
    return FilterDecomposition(w_s, w_n, mixed, sig, noi, branch.raw_trace, rho, S)

