"""Noise models: single operators, Kraus sets, and the collective phase flip.

The collective phase flip ``E = (1/n) sum_i Z_i`` is not an isometry for
``n >= 2`` (``E^dagger E != 1``), so :func:`apply_noise` renormalizes the
noise branch to unit trace and keeps the raw trace around for inspection.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadDimension, ConfigError, NoiseAnnihilatesState
from .qstate import ATOL, INPUT_TOL, DensityMatrix

SINGLE = "single-operator"
KRAUS = "kraus-set"


@dataclass(frozen=True)
class NoiseModel:
    """One operator ``E`` or a Kraus set ``{E_i}`` acting as ``sum_i E_i S E_i^dagger``.

    With ``strict=True`` a Kraus set flagged ``trace_preserving`` that fails
    ``sum E_i^dagger E_i = 1`` raises instead of warning.
    """

    kind: str
    operators: tuple
    label: str = ""
    trace_preserving: bool = False
    strict: bool = False

    def __post_init__(self):
        if self.kind not in (SINGLE, KRAUS):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        ops = []
        for op in self.operators:
            a = np.array(op, dtype=np.complex128, copy=True)
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise BadDimension(f"noise operator must be square, got {a.shape}")
            a.setflags(write=False)
            ops.append(a)
        if not ops:
            raise ValueError("noise model needs at least one operator")
        if len({a.shape for a in ops}) != 1:
            raise BadDimension("noise operators have mismatched dimensions")
        if self.kind == SINGLE and len(ops) != 1:
            raise ValueError("single-operator model takes exactly one operator")
        object.__setattr__(self, "operators", tuple(ops))
        if self.kind == KRAUS and self.trace_preserving:
            err = completeness_error(ops)
            if err > INPUT_TOL:
                msg = f"Kraus set {self.label!r} is not trace preserving (error {err:.3g})"
                if self.strict:
                    raise ValueError(msg)
                warnings.warn(msg, stacklevel=2)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    @property
    def operator(self) -> np.ndarray:
        """The single noise operator; only defined for single-operator models."""
        if self.kind != SINGLE:
            raise AttributeError("Kraus-set models have no single operator")
        return self.operators[0]


def completeness_error(ops) -> float:
    ops = list(ops)
    total = sum(a.conj().T @ a for a in ops)
    return float(np.abs(total - np.eye(total.shape[0])).max())


def single_operator(op, label: str = "E") -> NoiseModel:
    return NoiseModel(SINGLE, (op,), label=label)


def kraus_set(ops, label: str = "kraus", trace_preserving: bool = True,
              strict: bool = False) -> NoiseModel:
    return NoiseModel(KRAUS, tuple(ops), label=label,
                      trace_preserving=trace_preserving, strict=strict)


def identity_noise(dim: int) -> NoiseModel:
    return single_operator(np.eye(dim), label="identity")


def collective_phase_flip(n: int) -> NoiseModel:
    """``E = (1/n) sum_{i=1}^n Z^{(i)}`` on ``2**n`` labels.

    The diagonal entry for label ``b`` is ``(n - 2*popcount(b)) / n``.
    """
    if n < 1:
        raise BadDimension(f"need at least one qubit, got n={n}")
    labels = np.arange(2**n)
    popcount = np.array([bin(b).count("1") for b in labels])
    return single_operator(np.diag((n - 2 * popcount) / n), label=f"collective-phase-flip(n={n})")


@dataclass(frozen=True)
class NoisyBranch:
    state: DensityMatrix
    raw_trace: float

    @property
    def renormalized(self) -> bool:
        return abs(self.raw_trace - 1.0) > ATOL


def apply_noise_detailed(model: NoiseModel, S: DensityMatrix) -> NoisyBranch:
    if model.dim != S.dim:
        raise BadDimension(f"noise dim {model.dim} does not match state dim {S.dim}")
    out = sum(a @ S.entries @ a.conj().T for a in model.operators)
    out = 0.5 * (out + out.conj().T)
    raw = float(np.trace(out).real)
    if raw < 1e-12:
        raise NoiseAnnihilatesState(f"noise {model.label!r} maps the state to trace {raw:.3g}")
    return NoisyBranch(DensityMatrix(out / raw), raw)


def apply_noise(model: NoiseModel, S: DensityMatrix) -> DensityMatrix:
    """Return ``sum_i E_i S E_i^dagger`` rescaled to unit trace."""
    return apply_noise_detailed(model, S).state


def mix_signal_noise(p: float, S: DensityMatrix, model: NoiseModel) -> DensityMatrix:
    """``rho = p S + (1 - p) N`` with ``N`` the (unit-trace) noise branch."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if abs(S.trace - 1.0) > INPUT_TOL:
        raise ValueError("signal density must have unit trace")
    N = apply_noise(model, S)
    return DensityMatrix(p * S.entries + (1.0 - p) * N.entries)


# -- config documents ----------------------------------------------------------

def _matrix_from_pairs(grid) -> np.ndarray:
    try:
        return np.array([[complex(float(re), float(im)) for re, im in row] for row in grid])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed matrix (expected rows of [re, im] pairs): {exc}") from exc


def _matrix_to_pairs(mat) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(mat)]


def noise_from_dict(doc: dict, dim: int | None = None) -> NoiseModel:
    """Build a model from a config document.

    Accepted kinds: ``collective-phase-flip`` (``n``), ``kraus``
    (``operators``), ``operator`` (``matrix``) and ``identity``.
    """
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ConfigError("noise spec must be an object with a 'kind' key")
    kind = doc["kind"]
    if kind == "collective-phase-flip":
        if "n" in doc:
            n = int(doc["n"])
        elif dim is not None and dim > 1 and dim & (dim - 1) == 0:
            n = dim.bit_length() - 1
        else:
            raise BadDimension(f"collective-phase-flip needs 'n' or a power-of-two dim, got {dim}")
        model = collective_phase_flip(n)
    elif kind == "kraus":
        ops = [_matrix_from_pairs(m) for m in doc.get("operators", [])]
        if not ops:
            raise ConfigError("kraus noise needs a nonempty 'operators' list")
        model = kraus_set(ops, label=doc.get("label", "kraus"),
                          trace_preserving=bool(doc.get("trace_preserving", True)),
                          strict=bool(doc.get("strict", False)))
    elif kind == "operator":
        if "matrix" not in doc:
            raise ConfigError("operator noise needs 'matrix'")
        model = single_operator(_matrix_from_pairs(doc["matrix"]), label=doc.get("label", "E"))
    elif kind == "identity":
        if dim is None:
            raise ConfigError("identity noise needs a dimension")
        model = identity_noise(dim)
    else:
        raise ConfigError(f"unknown noise kind {kind!r}")
    if dim is not None and model.dim != dim:
        raise BadDimension(f"noise acts on dim {model.dim}, signal has dim {dim}")
    return model


def noise_to_dict(model: NoiseModel) -> dict:
    if model.kind == SINGLE:
        return {"kind": "operator", "label": model.label, "matrix": _matrix_to_pairs(model.operator)}
    return {
        "kind": "kraus",
        "label": model.label,
        "trace_preserving": model.trace_preserving,
        "operators": [_matrix_to_pairs(a) for a in model.operators],
    }


def parse_noise_spec(spec: str, dim: int | None = None) -> NoiseModel:
    """Parse a CLI noise argument: shorthand name, inline JSON, or a file path."""
    text = spec.strip()
    if text in ("none", "identity"):
        return noise_from_dict({"kind": "identity"}, dim)
    if text in ("collective-phase-flip", "phase-flip"):
        return noise_from_dict({"kind": "collective-phase-flip"}, dim)
    if text.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"noise spec is not valid JSON: {exc}") from exc
        return noise_from_dict(doc, dim)
    path = Path(text)
    if not path.is_file():
        raise ConfigError(f"noise spec {spec!r} is neither a known name, JSON, nor a file")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"noise file {path} is not valid JSON: {exc}") from exc
    return noise_from_dict(doc, dim)
