"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear in the live
output) or directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import below, gap_histograms  # noqa: E402
from prosparse.asymptotics import (  # noqa: E402
    beta_critical,
    frame_coherence_lower_bound,
    mutual_coherence,
    phase_grid,
)
from prosparse.dictionary import (  # noqa: E402
    build_fourier_frame,
    random_banded,
    sample_signal,
    synthesize,
)
from prosparse.gaps import empirical_cdf, gap_profile, sample_max_gaps  # noqa: E402
from prosparse.probability import deterministic_bound, h_altsum, h_circular, h_dft, h_exact  # noqa: E402
from prosparse.prony import prony_solve  # noqa: E402
from prosparse.recovery import RecoveryOptions, recover  # noqa: E402

# Prony on a 2P-sample window loses float64 accuracy as P grows; the
# guarantee check draws P up to this cap (see the slow diagnostic below).
GUARANTEE_MAX_P = 8


def _line(number: int, ok: bool, title: str, detail: str, seconds: float) -> str:
    return f"[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail} ({seconds:.1f}s)"


# -- criteria ---------------------------------------------------------------

def crit_exact_oracles():
    bad, count = 0, 0
    for N in range(1, 21):
        lin, _ = gap_histograms(N)
        for K in range(1, N + 1):
            total = int(lin[K].sum())
            for s in range(1, N + 1):
                want = Fraction(below(lin[K], s), total)
                a, b = h_exact(N, K, s).fraction, h_altsum(N, K, s).fraction
                count += 1
                bad += not (a == b == want)
    return bad == 0, f"{bad} mismatches over {count} (N, K, s) with N <= 20"


def crit_circular():
    bad, count = 0, 0
    for N in range(1, 15):
        _, circ = gap_histograms(N)
        for K in range(1, N + 1):
            total = int(circ[K].sum())
            for s in range(0, N + 1):
                want = Fraction(below(circ[K], s), total)
                count += 1
                bad += h_circular(N, K, s, method="exact").fraction != want
    return bad == 0, f"{bad} mismatches over {count} (N, K, s) with N <= 14"


def crit_dft():
    worst = 0.0
    for N in range(1, 65):
        for K in range(0, N + 1):
            for s in range(1, N + 1):
                ex = h_exact(N, K, s)
                ap = h_dft(N, K, s).float_value
                if ex.numerator == 0:
                    rel = 0.0 if ap == 0 else math.inf
                else:
                    rel = abs(ap - ex.float_value) / ex.float_value
                worst = max(worst, rel)
    spot = 0.0
    for K, s in [(1000, 8), (2458, 12), (2458, 15), (3500, 40), (500, 30)]:
        ex = h_exact(4096, K, s).float_value
        ap = h_dft(4096, K, s).float_value
        spot = max(spot, abs(ap - ex) / ex)
    ok = worst <= 1e-9 and spot <= 1e-6
    return ok, f"max rel err {worst:.2e} (N <= 64), {spot:.2e} (N = 4096 spots)"


def guarantee_instance(tau: int, b: int, rng, max_p: int = GUARANTEE_MAX_P):
    """Random (N, P, K) satisfying the worst-case bound and a planted signal."""
    N = int(rng.integers(16, 257))
    pairs = [(P, K) for P in range(1, min(N // 2, max_p) + 1) for K in range(0, N + 1)
             if deterministic_bound(P, K, N, b, tau) and (K >= 1 or tau == 1)]
    P, K = pairs[rng.integers(len(pairs))]
    config = build_fourier_frame(N, N) if tau == 0 else build_fourier_frame(N, 2 * N)
    if b:
        config = config.with_phi(random_banded(N, b, rng), b)
    return config, sample_signal(config, P, K, rng)


def guarantee_failures(tau: int, b: int, trials: int, max_p: int = GUARANTEE_MAX_P, seed: int = 0):
    rng = np.random.default_rng([seed, tau, b])
    fails = []
    for _ in range(trials):
        config, x = guarantee_instance(tau, b, rng, max_p)
        y = synthesize(config, x)
        # Orders above P cannot yield the planted signal, so stop there.
        res = recover(y, config, RecoveryOptions(early_exit=True, max_order=x.P))
        if not res.contains(x, rtol=1e-6):
            fails.append((config.N, x.P, x.K))
    return fails


def crit_guarantee():
    parts, total = [], 0
    for tau in (0, 1):
        for b in (0, 1, 2):
            fails = guarantee_failures(tau, b, 200)
            total += len(fails)
            parts.append(f"tau={tau},b={b}:{200 - len(fails)}/200")
    return total == 0, " ".join(parts)


def crit_gap_iff():
    rng = np.random.default_rng(2024)
    config = build_fourier_frame(128, 128)
    mismatches, successes = 0, 0
    for _ in range(1000):
        P = int(rng.integers(1, 11))
        K = int(rng.integers(1, 121))
        x = sample_signal(config, P, K, rng)
        res = recover(synthesize(config, x), config, RecoveryOptions(early_exit=True, max_order=P))
        got = res.contains(x)
        successes += got
        mismatches += got != (gap_profile(x.support2, 128).circular >= 2 * P)
    return mismatches == 0, f"{mismatches} mismatches over 1000 instances ({successes} recovered)"


def crit_monte_carlo():
    parts, ok = [], True
    for N, K in [(128, 76), (1024, 614)]:
        delta, _ = sample_max_gaps(N, K, 5000, np.random.default_rng(0))
        bad = 0
        for s in range(0, N - K + 2):
            p = h_exact(N, K, s).float_value
            e = empirical_cdf(delta, [s])[0]
            bad += abs(e - p) > 3 * math.sqrt(p * (1 - p) / 5000)
        ok &= bad == 0
        parts.append(f"N={N}: {bad} values of s outside 3 sigma")
    return ok, ", ".join(parts)


def crit_phase():
    bc = beta_critical(0.5, 1.0)
    lo, hi = phase_grid(1.0, [0.5], [bc / 4, 4 * bc], 10 ** 5, 100, seed=7)
    ok = lo.rate >= 0.95 and hi.rate <= 0.05 and abs(bc - 1 / (2 * math.log(2))) < 1e-15
    return ok, f"beta_c={bc:.4f}, rate {lo.rate:.2f} at beta_c/4 (P={lo.P}), {hi.rate:.2f} at 4 beta_c (P={hi.P})"


def half_crossing(samples: np.ndarray) -> float:
    """Linearly interpolated ``s`` where the empirical ``P(X < s)`` reaches 1/2."""
    s = np.arange(0, samples.max() + 2)
    F = empirical_cdf(samples, s)
    i = int(np.argmax(F >= 0.5))
    return float(s[i - 1] + (0.5 - F[i - 1]) / (F[i] - F[i - 1]))


def crit_rescaled():
    values = []
    for N in (128, 1024, 10 ** 4):
        K = math.floor(0.6 * N)
        delta, _ = sample_max_gaps(N, K, 5000, np.random.default_rng(1))
        values.append(half_crossing(delta) / math.log(N))
    spread = (max(values) - min(values)) / min(values)
    return spread < 0.2, "s/ln N at 1/2: " + ", ".join(f"{v:.3f}" for v in values) + f", spread {spread:.1%}"


def crit_coherence():
    worst = 0.0
    for N in (16, 64, 256):
        D = np.hstack([np.eye(N), build_fourier_frame(N, N).psi_matrix()])
        worst = max(worst, abs(mutual_coherence(D) - 1 / math.sqrt(N)))
    frame_ok, parts = True, []
    for d in (4, 8, 16):
        mu = mutual_coherence(build_fourier_frame(128, 128 * d).psi_matrix())
        bound = frame_coherence_lower_bound(128, 128 * d)
        # The bound is attained by adjacent atoms, so allow rounding.
        frame_ok &= mu >= bound - 1e-12
        parts.append(f"d={d}: {mu:.4f} >= {bound:.4f}")
    return worst <= 1e-12 and frame_ok, f"max |mu - 1/sqrt(N)| = {worst:.1e}; " + ", ".join(parts)


def prony_instance(rng):
    P = int(rng.integers(1, 9))
    # Distinct unit-circle nodes with wrap-around separation >= 2 pi / (2P).
    while True:
        theta = np.sort(rng.uniform(0, 2 * np.pi, P))
        gaps = np.diff(np.concatenate([theta, [theta[0] + 2 * np.pi]]))
        if P == 1 or gaps.min() >= np.pi / P:
            break
    nodes = np.exp(1j * theta)
    amps = (rng.standard_normal(P) + 1j * rng.standard_normal(P)) * rng.uniform(0.5, 2.0, P)
    start = int(rng.integers(0, 50))
    n = start + np.arange(2 * P)
    window = (amps[None, :] * nodes[None, :] ** n[:, None]).sum(axis=1)
    return nodes, amps, start, window


def prony_error(nodes, amps, est) -> float:
    if est.order != len(nodes):
        return math.inf
    err = 0.0
    for xi, a in zip(nodes, amps):
        j = int(np.argmin(np.abs(est.nodes - xi)))
        err = max(err, abs(est.nodes[j] - xi) / abs(xi), abs(est.amplitudes[j] - a) / abs(a))
    return err


def crit_prony():
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(500):
        nodes, amps, start, window = prony_instance(rng)
        worst = max(worst, prony_error(nodes, amps, prony_solve(window, len(nodes), start_index=start)))
    return worst <= 1e-8, f"max relative parameter error {worst:.2e} over 500 instances"


CRITERIA = [
    (1, "exact-probability oracle equivalence", crit_exact_oracles),
    (2, "circular corollary", crit_circular),
    (3, "DFT-method fidelity", crit_dft),
    (4, "deterministic guarantee", crit_guarantee),
    (5, "gap iff success (Fourier + identity)", crit_gap_iff),
    (6, "Monte Carlo vs exact CDF", crit_monte_carlo),
    (7, "phase transition at N=1e5", crit_phase),
    (8, "rescaled collapse", crit_rescaled),
    (9, "mutual coherence", crit_coherence),
    (10, "Prony exactness", crit_prony),
]


def run(number: int):
    _, title, fn = CRITERIA[number - 1]
    t0 = time.perf_counter()
    ok, detail = fn()
    return ok, _line(number, ok, title, detail, time.perf_counter() - t0)


@pytest.mark.parametrize("number", [c[0] for c in CRITERIA], ids=[f"criterion_{c[0]:02d}" for c in CRITERIA])
def test_criterion(number, capsys):
    ok, line = run(number)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


@pytest.mark.slow
def test_guarantee_diagnostic_up_to_p16(capsys):
    """Failure rate of the guarantee check when P may reach 16."""
    fails, total = [], 0
    for tau in (0, 1):
        for b in (0, 1, 2):
            fails += guarantee_failures(tau, b, 200, max_p=16, seed=1)
            total += 200
    with capsys.disabled():
        print(f"\n[diagnostic] guarantee with P <= 16: {len(fails)}/{total} not recovered {fails}")
    assert len(fails) <= 0.01 * total


if __name__ == "__main__":
    results = [run(number) for number, _, _ in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
