"""Pure states, density matrices, operator application and fidelity.

Amplitudes are always stored as complex128 even when the inputs are real.
Fidelity uses the square-root convention::

    F(rho, sigma) = tr sqrt( sqrt(rho) sigma sqrt(rho) )

so that for a pure target ``F(rho, |phi><phi|) = sqrt(<phi|rho|phi>)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadDimension, DegenerateState, InvalidDensity

ATOL = 1e-10
INPUT_TOL = 1e-8
EIG_CLIP = 1e-12


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PureState:
    """Normalized amplitude vector over basis labels ``0..dim-1``."""

    amplitudes: np.ndarray
    renormalized: bool = False

    def __post_init__(self):
        amp = _frozen(self.amplitudes)
        if amp.ndim != 1 or amp.size < 2:
            raise BadDimension(f"pure state needs a 1-d vector of length >= 2, got shape {amp.shape}")
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > ATOL:
            raise DegenerateState(f"amplitudes not normalized (norm={norm!r}); use make_pure")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def __len__(self):
        return self.dim


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian PSD matrix with trace in ``[0, 1]``.

    Channel outputs are allowed a trace below one; ``normalized`` tells the
    two cases apart.
    """

    entries: np.ndarray
    _eigvals: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rho = _frozen(self.entries)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] < 2:
            raise BadDimension(f"density matrix must be square with dim >= 2, got {rho.shape}")
        herm_err = np.abs(rho - rho.conj().T).max()
        if herm_err > ATOL:
            raise InvalidDensity(f"matrix not Hermitian (max |M - M^H| = {herm_err:.3g})")
        evals = np.linalg.eigvalsh(rho)
        if evals[0] < -ATOL:
            raise InvalidDensity(f"matrix not PSD (min eigenvalue {evals[0]:.3g})")
        tr = np.trace(rho).real
        if tr > 1.0 + ATOL:
            raise InvalidDensity(f"trace {tr!r} exceeds 1")
        object.__setattr__(self, "entries", rho)
        object.__setattr__(self, "_eigvals", evals)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    @property
    def normalized(self) -> bool:
        return abs(self.trace - 1.0) <= ATOL

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._eigvals

    def scaled(self, factor: float) -> "DensityMatrix":
        return DensityMatrix(self.entries * factor)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def make_pure(raw_amplitudes) -> PureState:
    """Normalize ``raw_amplitudes`` into a :class:`PureState`.

    The ``renormalized`` flag is set when the input norm was off by more
    than ``1e-8``.
    """
    vec = np.asarray(raw_amplitudes, dtype=np.complex128).ravel()
    if vec.size < 2:
        raise BadDimension(f"state dimension must be >= 2, got {vec.size}")
    if not np.all(np.isfinite(vec)):
        raise DegenerateState("cannot normalize a non-finite vector")
    scale = np.abs(vec).max()
    if scale == 0.0:
        raise DegenerateState("cannot normalize a zero vector")
    # rescale first so tiny or huge entries do not under/overflow the norm
    unit = vec / scale
    unit = unit / np.linalg.norm(unit)
    return PureState(unit, renormalized=abs(np.linalg.norm(vec) - 1.0) > INPUT_TOL)


def uniform_state(dim: int) -> PureState:
    return make_pure(np.ones(dim))


def basis_state(dim: int, index: int = 0) -> PureState:
    if not 0 <= index < dim:
        raise BadDimension(f"basis index {index} out of range for dim {dim}")
    vec = np.zeros(dim)
    vec[index] = 1.0
    return make_pure(vec)


def random_state(dim: int, rng: np.random.Generator) -> PureState:
    """Haar-random pure state."""
    vec = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return make_pure(vec)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix with phase fix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.trace(rho).real)


def density_from_pure(phi: PureState) -> DensityMatrix:
    """Return ``|phi><phi|``."""
    v = phi.amplitudes
    return DensityMatrix(np.outer(v, v.conj()))


def apply_operator(op, rho: DensityMatrix) -> DensityMatrix:
    """Return ``A rho A^dagger``. ``A`` need not be unitary, so the trace may drop."""
    a = np.asarray(op, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise BadDimension(f"operator must be square, got {a.shape}")
    if a.shape[0] != rho.dim:
        raise BadDimension(f"operator dim {a.shape[0]} does not match state dim {rho.dim}")
    out = a @ rho.entries @ a.conj().T
    return DensityMatrix(0.5 * (out + out.conj().T))


def _rank_cutoff(evals: np.ndarray) -> float:
    # eigenvalues below this are round-off; their square roots would be ~1e-8
    return evals.size * np.finfo(float).eps * max(float(evals[-1]), 0.0)


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(mat)
    if evals[0] < -EIG_CLIP:
        raise InvalidDensity(f"matrix not PSD (min eigenvalue {evals[0]:.3g})")
    evals = np.where(evals > _rank_cutoff(evals), evals, 0.0)
    return (evecs * np.sqrt(evals)) @ evecs.conj().T


def _pure_vector(state: DensityMatrix) -> np.ndarray | None:
    evals, evecs = np.linalg.eigh(state.entries)
    if evals[-1] >= 1.0 - ATOL:
        return evecs[:, -1]
    return None


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Square-root (Uhlmann) fidelity between two unit-trace states.

    If either state is pure (top eigenvalue within ``1e-10`` of one) this is
    ``sqrt(<v|other|v>)``, which avoids the ``sqrt(round-off)`` error the
    general formula suffers on rank-deficient inputs. Otherwise it is
    ``tr sqrt(sqrt(rho) sigma sqrt(rho))`` from Hermitian
    eigendecompositions, with eigenvalues in ``[-1e-12, 0)`` and below the
    numerical-rank cutoff set to zero. The result is clamped to ``[0, 1]``.

    Raises:
        BadDimension: if the dimensions differ.
        InvalidDensity: if either state is not unit trace within ``1e-8`` or
            has an eigenvalue below ``-1e-12``.
    """
    if rho.dim != sigma.dim:
        raise BadDimension(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    for name, s in (("rho", rho), ("sigma", sigma)):
        if abs(s.trace - 1.0) > INPUT_TOL:
            raise InvalidDensity(f"{name} must have unit trace, got {s.trace!r}")
        if s.eigenvalues[0] < -EIG_CLIP:
            raise InvalidDensity(f"{name} not PSD (min eigenvalue {s.eigenvalues[0]:.3g})")
    for target, other in ((sigma, rho), (rho, sigma)):
        v = _pure_vector(target)
        if v is not None:
            val = float(np.real(v.conj() @ other.entries @ v))
            return min(float(np.sqrt(max(val, 0.0))), 1.0)
    sqrt_rho = _psd_sqrt(rho.entries)
    inner = sqrt_rho @ sigma.entries @ sqrt_rho
    inner = 0.5 * (inner + inner.conj().T)
    evals = np.linalg.eigvalsh(inner)
    evals = np.where(evals > _rank_cutoff(evals), evals, 0.0)
    f = float(np.sum(np.sqrt(evals)))
    return min(max(f, 0.0), 1.0)


def pure_fidelity(rho: DensityMatrix, phi: PureState) -> float:
    """``sqrt(<phi|rho|phi>)``, the fidelity against a pure target."""
    v = phi.amplitudes
    val = float(np.real(v.conj() @ rho.entries @ v))
    return min(float(np.sqrt(max(val, 0.0))), 1.0)


# -- state files -------------------------------------------------------------

def state_to_dict(phi: PureState) -> dict:
    return {
        "dim": phi.dim,
        "amplitudes": [[float(a.real), float(a.imag)] for a in phi.amplitudes],
    }


def state_from_dict(doc: dict) -> PureState:
    """Parse ``{"dim": N, "amplitudes": [[re, im], ...]}``."""
    try:
        dim = int(doc["dim"])
        pairs = doc["amplitudes"]
        vec = np.array([complex(float(re), float(im)) for re, im in pairs])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed state document: {exc}") from exc
    if vec.size != dim:
        raise BadDimension(f"state file declares dim {dim} but has {vec.size} amplitudes")
    return make_pure(vec)


def save_state(phi: PureState, path) -> None:
    Path(path).write_text(json.dumps(state_to_dict(phi), indent=2) + "\n")


def load_state(path) -> PureState:
    return state_from_dict(json.loads(Path(path).read_text()))
