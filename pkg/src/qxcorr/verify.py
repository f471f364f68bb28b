"""Named invariant checks over random ensembles, used by ``qxcorr verify``.

Each check returns the largest deviation it observed next to the tolerance
it was held to. ``quick`` runs reduced ensembles in a few seconds;
``full`` runs the acceptance-sized ones.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import correlator as corr
from .analysis import concavity_bound
from .experiments import run_phase_flip_demo
from .noise import collective_phase_flip, mix_signal_noise, single_operator
from .pointer import (
    SharpKet,
    binary_decomposition_operator,
    sharp_overlap,
    sharp_overlap_lattice,
    verify_discrete_coupling,
)
from .qstate import (
    DensityMatrix,
    apply_operator,
    density_from_pure,
    fidelity,
    random_density,
    random_state,
    random_unitary,
    uniform_state,
)

DIMS = (2, 4, 8, 16)


@dataclass
class PropertyResult:
    name: str
    max_deviation: float
    tolerance: float
    passed: bool
    cases: int
    seconds: float = 0.0
    detail: str = ""


@dataclass
class VerifySummary:
    scale: str
    results: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def rows(self) -> list[dict]:
        return [
            {
                "property": r.name,
                "passed": r.passed,
                "max_deviation": float(f"{r.max_deviation:.12g}"),
                "tolerance": r.tolerance,
                "cases": r.cases,
                "detail": r.detail,
            }
            for r in self.results
        ]


def _within(name, devs, tol) -> PropertyResult:
    devs = list(devs)
    worst = max(devs) if devs else 0.0
    return PropertyResult(name, worst, tol, bool(worst <= tol), len(devs))


def check_density_from_pure(rng, cases):
    devs = []
    for _ in range(cases):
        d = rng.choice(DIMS)
        rho = density_from_pure(random_state(d, rng))
        ev = np.linalg.eigvalsh(rho.entries)
        devs.append(max(np.abs(rho.entries - rho.entries.conj().T).max(),
                        abs(rho.trace - 1), max(-ev[0], 0.0), abs(ev[-2])))
    return _within("density_from_pure: Hermitian, PSD, trace 1, rank 1", devs, 1e-10)


def check_fidelity_symmetry(rng, cases):
    devs = []
    for _ in range(cases):
        d = rng.choice(DIMS[:3])
        a, b = random_density(d, rng), random_density(d, rng)
        devs.append(abs(fidelity(a, b) - fidelity(b, a)))
    return _within("fidelity symmetry", devs, 1e-9)


def check_pure_target(rng, cases):
    devs = []
    for _ in range(cases):
        d = rng.choice(DIMS[:3])
        rho, phi = random_density(d, rng), random_state(d, rng)
        v = phi.amplitudes
        direct = np.sqrt(np.real(v.conj() @ rho.entries @ v))
        devs.append(abs(fidelity(rho, density_from_pure(phi)) - direct))
    return _within("fidelity pure-target shortcut", devs, 1e-9)


def check_apply_linearity(rng, cases):
    devs = []
    for _ in range(cases):
        d = rng.choice(DIMS[:3])
        A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        A /= np.linalg.norm(A, 2)
        r1, r2 = random_density(d, rng), random_density(d, rng)
        a = rng.uniform()
        lhs = apply_operator(A, DensityMatrix(a * r1.entries + (1 - a) * r2.entries)).entries
        rhs = a * apply_operator(A, r1).entries + (1 - a) * apply_operator(A, r2).entries
        devs.append(np.abs(lhs - rhs).max())
    return _within("apply_operator linearity", devs, 1e-10)


def _pairs(rng, per_dim):
    for d in DIMS:
        for _ in range(per_dim):
            yield random_state(d, rng), random_state(d, rng)


def check_correlation_bounds(rng, per_dim):
    devs = []
    for phi0, psi in _pairs(rng, per_dim):
        c = corr.correlation_coefficient(phi0, psi)
        devs.append(max(-c, c - 1.0, 0.0))
    return _within("correlation bounds 0 <= C <= 1", devs, 0.0)


def check_trace_formula(rng, per_dim):
    devs = []
    for phi0, phi in _pairs(rng, per_dim):
        out = corr.postselect_filter(density_from_pure(phi), phi0)
        devs.append(abs(out.raw.trace - corr.correlation_coefficient(phi0, phi)))
    return _within("trace formula tr E(|phi><phi|) = C(phi0, phi)", devs, 1e-10)


def check_phase_invariance(rng, per_dim):
    devs = []
    for phi0, psi in _pairs(rng, per_dim):
        t, c = rng.uniform(0, 2 * np.pi, 2)
        a = corr.correlation_coefficient(phi0, psi)
        b = corr.correlation_coefficient(type(phi0)(np.exp(1j * t) * phi0.amplitudes),
                                         type(psi)(np.exp(1j * c) * psi.amplitudes))
        devs.append(abs(a - b))
    return _within("global-phase invariance of C", devs, 1e-12)


def check_oracle_equivalence(rng, dims, cases):
    devs = []
    for d in dims:
        for _ in range(cases):
            rho = random_density(d, rng)
            phi0 = random_state(d, rng)
            fast = corr.postselect_filter(rho, phi0).raw.entries
            slow = corr.postselect_filter_oracle(rho, phi0).raw.entries
            devs.append(np.abs(fast - slow).max())
    res = _within(f"oracle equivalence (N in {tuple(dims)})", devs, 1e-10)
    return res


def check_channel_linearity(rng, cases):
    devs = []
    for _ in range(cases):
        d = rng.choice(DIMS[:3])
        r1, r2, phi0 = random_density(d, rng), random_density(d, rng), random_state(d, rng)
        a = rng.uniform()
        mix = DensityMatrix(a * r1.entries + (1 - a) * r2.entries)
        lhs = corr.postselect_filter(mix, phi0).raw.entries
        rhs = (a * corr.postselect_filter(r1, phi0).raw.entries
               + (1 - a) * corr.postselect_filter(r2, phi0).raw.entries)
        devs.append(np.abs(lhs - rhs).max())
    return _within("filter channel linearity", devs, 1e-10)


def check_output_positivity(rng, cases):
    devs = []
    for _ in range(cases):
        d = rng.choice(DIMS)
        out = corr.postselect_filter(random_density(d, rng), random_state(d, rng))
        devs.append(max(-out.raw.eigenvalues[0], out.raw.trace - 1.0, 0.0))
    return _within("filter output PSD with trace <= 1", devs, 1e-10)


def random_mixture(rng, d):
    """Random signal, reference, unitary noise and ``p`` in ``[0.05, 0.95]``."""
    phi, phi0 = random_state(d, rng), random_state(d, rng)
    noise = single_operator(random_unitary(d, rng), label="haar-unitary")
    p = rng.uniform(0.05, 0.95)
    return p, phi, noise, phi0


def concavity_margin(p, phi, noise, phi0):
    """``F(E~(rho), E~(S)) - bound`` or ``None`` when post-selection is below ``1e-6``."""
    S = density_from_pure(phi)
    rho = mix_signal_noise(p, S, noise)
    out_rho = corr.postselect_filter(rho, phi0)
    out_s = corr.postselect_filter(S, phi0)
    if out_rho.postselect_prob < 1e-6 or out_s.normalized is None:
        return None
    f = fidelity(out_rho.normalized, out_s.normalized)
    return f - concavity_bound(p, out_s.postselect_prob, out_rho.postselect_prob)


def check_concavity_bound(rng, cases):
    devs = []
    while len(devs) < cases:
        d = int(rng.choice(DIMS))
        margin = concavity_margin(*random_mixture(rng, d))
        if margin is not None:
            devs.append(max(-margin, 0.0))
    return _within("strong-concavity bound F(E~rho, E~S) >= sqrt(pC/trE(rho))", devs, 1e-9)


def check_phase_flip_example():
    devs = []
    for n in (1, 2, 3):
        for p in np.round(np.arange(0.1, 1.0, 0.1), 10):
            r = run_phase_flip_demo(n, float(p))
            devs.append(max(abs(r.F_before - np.sqrt(p)), abs(r.F_after - 1.0),
                            abs(r.postselect_prob - p), abs(r.fidelity_gain - 1 / np.sqrt(p)),
                            abs(r.expected_trials - 1 / p)))
    return _within("phase-flip example: gain = 1/sqrt(p)", devs, 1e-9)


def check_correlation_example():
    devs = []
    for n in range(1, 7):
        u = uniform_state(2**n)
        E = collective_phase_flip(n).operator
        devs.append(abs(corr.correlation_coefficient(u, u) - 1.0))
        devs.append(abs(corr.correlation_coefficient_general(u, E, u)))
    return _within("C(S,S) = 1 and C(S,N) = 0 for uniform signal", devs, 1e-12)


def check_binary_spectrum(max_n):
    devs = []
    for n in range(1, max_n + 1):
        spectrum = np.sort(binary_decomposition_operator(n))
        devs.append(float(np.abs(spectrum - np.arange(2**n)).max()))
    return _within(f"binary-decomposition spectrum (n <= {max_n})", devs, 0.0)


def check_sharp_overlap():
    devs = []
    for eps in (0.02, 0.05, 0.1):
        for d in (0.0, 0.5, 1.0, 2.0):
            a, b = SharpKet(0.0, eps), SharpKet(d, eps)
            devs.append(abs(sharp_overlap_lattice(a, b) - sharp_overlap(a, b)))
    return _within("sharp-ket overlap lattice vs closed form", devs, 1e-6)


def check_discrete_coupling(rng, max_n):
    devs, monotone = [], True
    for n in range(1, max_n + 1):
        phi = random_state(2**n, rng)
        trail = [verify_discrete_coupling(n, phi, eps).deviation for eps in (0.1, 0.05, 0.02)]
        monotone &= trail[0] > trail[1] > trail[2]
        devs.append(trail[-1])
    res = _within(f"lattice coupling deviation at eps=0.02 (N <= {2**max_n})", devs, 1e-6)
    res.passed = res.passed and monotone
    res.detail = "monotone in eps" if monotone else "NOT monotone in eps"
    return res


def run_verify(scale: str = "quick", seed: int = 20240101) -> VerifySummary:
    """Run every named invariant; ``scale`` is ``quick`` or ``full``."""
    if scale not in ("quick", "full"):
        raise ValueError(f"scale must be 'quick' or 'full', got {scale!r}")
    full = scale == "full"
    rng = np.random.default_rng(seed)
    per_dim = 250 if full else 40
    cases = 500 if full else 60
    checks = [
        lambda: check_density_from_pure(rng, cases),
        lambda: check_fidelity_symmetry(rng, cases),
        lambda: check_pure_target(rng, cases),
        lambda: check_apply_linearity(rng, cases),
        lambda: check_correlation_bounds(rng, per_dim),
        lambda: check_trace_formula(rng, per_dim),
        lambda: check_phase_invariance(rng, per_dim),
        lambda: check_oracle_equivalence(rng, (2, 4, 8) if full else (2, 4), 10 if full else 3),
        lambda: check_channel_linearity(rng, cases),
        lambda: check_output_positivity(rng, cases),
        lambda: check_concavity_bound(rng, cases),
        check_phase_flip_example,
        check_correlation_example,
        lambda: check_binary_spectrum(10 if full else 6),
        check_sharp_overlap,
        lambda: check_discrete_coupling(rng, 3 if full else 2),
    ]
    summary = VerifySummary(scale)
    for check in checks:
        t0 = time.perf_counter()
        res = check()
        res.seconds = time.perf_counter() - t0
        summary.results.append(res)
    return summary
