"""Fidelity bookkeeping for the filter: before/after fidelities, bounds, cost."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .correlator import filter_decomposition
from .errors import ImpossiblePostselection
from .noise import NoiseModel
from .qstate import PureState, fidelity


@dataclass(frozen=True)
class ExperimentReport:
    """Outcome of filtering ``rho = p S + (1-p) N`` with reference ``phi0``.

    Field order is the serialization order and must not change.
    """

    C_signal: float
    C_noise: float
    postselect_prob: float
    F_before: float
    F_after: float
    fidelity_gain: float
    bound_rhs: float
    expected_trials: float

    def to_dict(self, digits: int = 12) -> dict:
        return {k: float(f"{v:.{digits}g}") for k, v in asdict(self).items()}

    def bound_holds(self, tolerance: float) -> bool:
        return self.F_after >= self.bound_rhs - tolerance


REPORT_FIELDS = tuple(f.name for f in fields(ExperimentReport))


def concavity_bound(p: float, c_signal: float, postselect_prob: float) -> float:
    """Lower bound ``sqrt(p C(phi0, phi) / tr E(rho))`` on the filtered fidelity."""
    if postselect_prob <= 0:
        raise ImpossiblePostselection("bound undefined for zero post-selection probability")
    return math.sqrt(max(p * c_signal / postselect_prob, 0.0))


def matched_gain(postselect_prob: float) -> float:
    """Fidelity gain ``1 / sqrt(tr E(rho))`` expected when the reference matches the signal."""
    if postselect_prob <= 0:
        raise ImpossiblePostselection("gain undefined for zero post-selection probability")
    return 1.0 / math.sqrt(postselect_prob)


def direct_fidelity(p: float, phi: PureState, noise: NoiseModel) -> float:
    """Closed form of ``F(rho, S)`` for ``rho = p S + (1-p) N``.

    ``F^2 = p + (1-p) <phi|N|phi>`` where for the unit-trace noise branch
    ``<phi|N|phi> = sum_i |<phi|E_i|phi>|^2 / sum_i ||E_i phi||^2``.
    """
    v = phi.amplitudes
    num = sum(abs(np.vdot(v, a @ v)) ** 2 for a in noise.operators)
    den = sum(np.linalg.norm(a @ v) ** 2 for a in noise.operators)
    return math.sqrt(p + (1.0 - p) * num / den)


def build_report(p: float, phi: PureState, noise: NoiseModel, phi0: PureState) -> ExperimentReport:
    """Run the filter on the signal/noise mixture and collect the figures of merit.

    Raises:
        ImpossiblePostselection: if the mixture cannot be post-selected, or
            the reference has no overlap with the signal (no filtered
            signal to compare against).
    """
    if p == 0:
        raise ImpossiblePostselection("signal absent (p = 0)")
    dec = filter_decomposition(p, phi, noise, phi0)
    if dec.signal.normalized is None:
        raise ImpossiblePostselection("reference is uncorrelated with the signal in every lag")
    f_before = fidelity(dec.rho, dec.signal_state)
    f_after = fidelity(dec.mixture.normalized, dec.signal.normalized)
    prob = dec.mixture.postselect_prob
    c_signal = dec.signal.postselect_prob
    return ExperimentReport(
        C_signal=c_signal,
        C_noise=dec.noise.postselect_prob,
        postselect_prob=prob,
        F_before=f_before,
        F_after=f_after,
        fidelity_gain=f_after / f_before,
        bound_rhs=concavity_bound(p, c_signal, prob),
        expected_trials=1.0 / prob,
    )
