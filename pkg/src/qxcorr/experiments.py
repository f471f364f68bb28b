"""Experiment pipelines: configuration, single runs, sweeps."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .analysis import REPORT_FIELDS, ExperimentReport, build_report
from .correlator import correlation_coefficient, lag_overlaps
from .errors import BadDimension, ConfigError, QXCorrError
from .noise import NoiseModel, collective_phase_flip, parse_noise_spec
from .pointer import verify_discrete_coupling
from .qstate import PureState, basis_state, load_state, random_state, uniform_state

BUILTIN_SIGNALS = ("uniform", "basis", "random")
SWEEP_AXES = ("p", "n", "epsilon")
COUPLING_FIELDS = ("deviation", "component_deviation", "lag_deviation",
                   "max_cross_overlap", "passed")


@dataclass(frozen=True)
class ExperimentConfig:
    """Inputs for one filter run.

    ``signal`` and ``reference`` are builtin names (``uniform``, ``basis``
    or ``basis:K``, ``random``) or paths to state files; ``reference=None``
    reuses the signal. ``noise`` is a shorthand name, inline JSON or a file.
    """

    signal: str = "uniform"
    reference: str | None = None
    noise: str = "collective-phase-flip"
    p: float = 0.5
    dim: int | None = None
    n_qubits: int | None = None
    seed: int = 0
    tolerance: float = 1e-9
    output: str = "table"

    def validate(self) -> None:
        if not 0.0 <= self.p <= 1.0 or math.isnan(self.p):
            raise ConfigError(f"p must lie in [0, 1], got {self.p}")
        if not self.tolerance > 0:
            raise ConfigError(f"tolerance must be positive, got {self.tolerance}")
        if self.output not in ("table", "json", "csv"):
            raise ConfigError(f"unknown output format {self.output!r}")
        if self.dim is not None and self.n_qubits is not None and self.dim != 2**self.n_qubits:
            raise ConfigError(f"--dim {self.dim} conflicts with --n-qubits {self.n_qubits}")
        for src in (self.signal, self.reference):
            if src is not None and not _is_builtin(src) and not Path(src).is_file():
                raise ConfigError(f"state source {src!r} is neither a builtin nor an existing file")


@dataclass(frozen=True)
class ResolvedExperiment:
    p: float
    signal: PureState
    reference: PureState
    noise: NoiseModel


def _is_builtin(src: str) -> bool:
    return src.split(":", 1)[0] in BUILTIN_SIGNALS


def _builtin_state(src: str, dim: int, rng: np.random.Generator) -> PureState:
    name, _, arg = src.partition(":")
    if name == "uniform":
        return uniform_state(dim)
    if name == "basis":
        try:
            index = int(arg) if arg else 0
        except ValueError as exc:
            raise ConfigError(f"bad basis index in {src!r}") from exc
        return basis_state(dim, index)
    return random_state(dim, rng)


def _load_state_file(path: str) -> PureState:
    try:
        return load_state(path)
    except QXCorrError:
        raise
    except (ValueError, OSError) as exc:
        raise ConfigError(f"cannot read state file {path}: {exc}") from exc


def _config_dim(config: ExperimentConfig) -> int | None:
    if config.n_qubits is not None:
        return 2**config.n_qubits
    return config.dim


def resolve(config: ExperimentConfig) -> ResolvedExperiment:
    """Materialize the states and noise model named by ``config``."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    dim = _config_dim(config)
    files = {}
    for src in (config.signal, config.reference):
        if src is not None and not _is_builtin(src):
            files[src] = _load_state_file(src)
    if config.signal in files:
        file_dim = files[config.signal].dim
        if dim is not None and dim != file_dim:
            raise BadDimension(f"signal file has dim {file_dim}, config asks for {dim}")
        dim = file_dim
    if dim is None:
        dim = 4
    if dim < 2:
        raise BadDimension(f"dimension must be >= 2, got {dim}")

    def load(src: str) -> PureState:
        return files[src] if src in files else _builtin_state(src, dim, rng)

    signal = load(config.signal)
    reference = signal if config.reference is None else load(config.reference)
    if reference.dim != signal.dim:
        raise BadDimension(f"reference dim {reference.dim} != signal dim {signal.dim}")
    noise = parse_noise_spec(config.noise, dim)
    return ResolvedExperiment(config.p, signal, reference, noise)


def run_filter(config: ExperimentConfig) -> ExperimentReport:
    """Filter ``p S + (1-p) N`` against the configured reference; deterministic in ``seed``."""
    exp = resolve(config)
    return build_report(exp.p, exp.signal, exp.noise, exp.reference)


def run_phase_flip_demo(n: int, p: float) -> ExperimentReport:
    """Uniform signal and reference on ``2**n`` labels under the collective phase flip.

    Expected outcome: ``C_signal = 1``, ``C_noise = 0``, ``postselect_prob =
    p``, ``F_before = sqrt(p)``, ``F_after = 1``, gain ``1/sqrt(p)``.
    """
    if not 1 <= n <= 8:
        raise ConfigError(f"phase-flip demo supports 1 <= n <= 8, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"p must lie in [0, 1], got {p}")
    phi = uniform_state(2**n)
    return build_report(p, phi, collective_phase_flip(n), phi)


def run_correlate(config: ExperimentConfig) -> dict:
    """Correlation coefficient of reference and signal with the per-lag overlaps."""
    exp = resolve(config)
    c = lag_overlaps(exp.reference, exp.signal)
    return {
        "dim": exp.signal.dim,
        "C": correlation_coefficient(exp.reference, exp.signal),
        "lags": [
            {"lag": j, "re": float(z.real), "im": float(z.imag), "weight": float(abs(z) ** 2)}
            for j, z in enumerate(c)
        ],
    }


def sweep_columns(axis: str) -> tuple:
    if axis == "epsilon":
        return ("epsilon",) + COUPLING_FIELDS + ("error",)
    return (axis,) + REPORT_FIELDS + ("error",)


def _sweep_row(config: ExperimentConfig, axis: str, value) -> dict:
    row = {name: None for name in sweep_columns(axis)}
    row[axis] = value
    try:
        if axis == "p":
            row.update(run_filter(replace(config, p=float(value))).to_dict())
        elif axis == "n":
            n = int(value)
            row.update(run_filter(replace(config, n_qubits=n, dim=None)).to_dict())
        else:
            exp = resolve(config)
            n = exp.signal.dim.bit_length() - 1
            if 2**n != exp.signal.dim:
                raise BadDimension("epsilon sweep needs a power-of-two signal dimension")
            summary = verify_discrete_coupling(n, exp.signal, epsilon=float(value),
                                               reference=exp.reference).summary()
            row.update({k: summary[k] for k in COUPLING_FIELDS})
    except (QXCorrError, ValueError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def run_sweep(config: ExperimentConfig, axis: str, values) -> list[dict]:
    """One row per value, in input order; failures are recorded in the ``error`` column."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    config.validate()
    return [_sweep_row(config, axis, v) for v in values]
