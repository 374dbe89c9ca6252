from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from prosparse.dictionary import (
    DictionaryConfig,
    SparseSignal,
    build_fourier_frame,
    fourier_nodes,
    random_banded,
    sample_signal,
    synthesize,
)
from prosparse.errors import InvalidInputError
from prosparse.gaps import gap_profile
from prosparse.recovery import (
    RecoveryOptions,
    acceptance_rule,
    dual_measurements,
    recover,
    residual_sparsify,
    solution_rank,
)


def _pairs(result):
    return [(s.P, s.K) for s in result.solutions]


def test_single_spike():
    config = DictionaryConfig(4, 4, fourier_nodes(4))
    res = recover(np.array([0, 0, 5, 0]), config)
    best = res.best
    assert res.status == "recovered"
    assert (best.P, best.K) == (0, 1)
    assert best.signal.support2 == (2,) and np.isclose(best.signal.coeffs2[0], 5)


def test_dc_plus_spike():
    config = build_fourier_frame(8, 8)
    y = np.array([2, 1, 1, 1, 1, 1, 1, 1], dtype=complex)
    res = recover(y, config)
    truth = SparseSignal((0,), [np.sqrt(8)], (0,), [1.0])
    assert res.contains(truth)
    assert _pairs(res)[0] == (1, 1)


def test_every_solution_reproduces_y():
    config = build_fourier_frame(32, 32)
    x = sample_signal(config, 2, 5, 3)
    y = synthesize(config, x)
    res = recover(y, config)
    assert res.contains(x)
    for sol in res.solutions:
        fit = np.linalg.norm(synthesize(config, sol.signal) - y)
        assert fit <= 1e-8 * np.linalg.norm(y)
    ranks = [solution_rank(s.P, s.K) for s in res.solutions]
    assert ranks == sorted(ranks)
    for i, a in enumerate(res.solutions):
        assert not any(a.signal.same_as(b.signal) for b in res.solutions[i + 1:])


def test_early_exit_agrees_with_exhaustive():
    config = build_fourier_frame(48, 96)
    x = sample_signal(config, 3, 4, 8)
    y = synthesize(config, x)
    fast = recover(y, config, RecoveryOptions(early_exit=True))
    full = recover(y, config)
    assert fast.contains(x) and full.contains(x)
    assert fast.windows_tested < full.windows_tested


def test_banded_phi():
    rng = np.random.default_rng(5)
    config = build_fourier_frame(64, 128).with_phi(random_banded(64, 2, rng), 2)
    x = sample_signal(config, 2, 3, rng)
    res = recover(synthesize(config, x), config, RecoveryOptions(early_exit=True))
    assert res.contains(x)


def test_general_vandermonde_nodes():
    rng = np.random.default_rng(6)
    nodes = np.exp(2j * np.pi * np.sort(rng.random(40))) * rng.uniform(0.95, 1.05, 40)
    config = DictionaryConfig(20, 40, nodes)
    x = sample_signal(config, 2, 3, rng)
    res = recover(synthesize(config, x), config, RecoveryOptions(early_exit=True))
    assert res.contains(x)


def test_gap_sufficiency_random():
    rng = np.random.default_rng(9)
    config = build_fourier_frame(64, 64)
    for _ in range(60):
        P = int(rng.integers(1, 5))
        K = int(rng.integers(1, 30))
        x = sample_signal(config, P, K, rng)
        res = recover(synthesize(config, x), config, RecoveryOptions(early_exit=True, max_order=P))
        assert res.contains(x) == (gap_profile(x.support2, 64).circular >= 2 * P)


def test_picket_fence_has_no_clean_window():
    N, P = 24, 2
    support2 = tuple(range(0, N, 3))
    K = len(support2)
    assert 2 * P * K > N - K
    assert gap_profile(support2, N).circular < 2 * P
    config = build_fourier_frame(N, N)
    x = SparseSignal((1, 7), [1.0, 2.0], support2, np.ones(K))
    res = recover(synthesize(config, x), config, RecoveryOptions(strict=True))
    assert not res.contains(x)


def test_dual_pass_swaps_roles():
    # Many Fourier atoms, few spikes: only the dual view has a clean window.
    N = 32
    config = build_fourier_frame(N, N)
    rng = np.random.default_rng(4)
    support1 = tuple(sorted(rng.choice(N, 20, replace=False).tolist()))
    x = SparseSignal(support1, rng.standard_normal(20) + 1j * rng.standard_normal(20), (5,), [3.0])
    y = synthesize(config, x)
    plain = recover(y, config, RecoveryOptions(max_order=2))
    assert not plain.contains(x)
    dual = recover(y, config, RecoveryOptions(dual=True, max_order=2))
    assert dual.contains(x)
    assert any(s.dual for s in dual.solutions)
    with pytest.raises(InvalidInputError):
        dual_measurements(y, build_fourier_frame(N, 2 * N))


def test_budget_flag():
    config = build_fourier_frame(64, 64)
    x = sample_signal(config, 4, 6, 1)
    res = recover(synthesize(config, x), config, RecoveryOptions(window_budget=30))
    assert res.budget_exceeded and res.windows_tested <= 30


def test_parallel_orders_are_deterministic():
    config = build_fourier_frame(32, 32)
    x = sample_signal(config, 2, 4, 2)
    y = synthesize(config, x)
    serial = recover(y, config)
    with ThreadPoolExecutor(3) as ex:
        parallel = recover(y, config, executor=ex)
    assert _pairs(serial) == _pairs(parallel)
    assert serial.windows_tested == parallel.windows_tested
    assert all(a.signal.same_as(b.signal) for a, b in zip(serial.solutions, parallel.solutions))


def test_length_mismatch():
    with pytest.raises(InvalidInputError):
        recover(np.ones(5), build_fourier_frame(4, 4))


def test_residual_sparsify_identity():
    config = build_fourier_frame(3, 3)
    part = residual_sparsify(np.array([0, 5, 0]), config, 1e-8)
    assert part.support2 == (1,) and part.coeffs2[0] == 5
    assert residual_sparsify(np.ones(3), config, 1e-8, k_max=1) is None
    with pytest.raises(InvalidInputError):
        residual_sparsify(np.ones(4), config, 1e-8)


def test_residual_sparsify_banded():
    rng = np.random.default_rng(3)
    config = build_fourier_frame(20, 20).with_phi(random_banded(20, 2, rng), 2)
    x = SparseSignal((), [], (4, 15), [1 + 1j, -2.0])
    part = residual_sparsify(synthesize(config, x), config, 1e-10)
    assert part.support2 == (4, 15) and np.allclose(part.coeffs2, x.coeffs2)
    dense = rng.standard_normal(20)
    assert residual_sparsify(dense, config, 1e-10, k_max=1) is None


def test_acceptance_rule():
    config = build_fourier_frame(25, 25)
    assert solution_rank(1, 1) < solution_rank(2, 3)
    assert acceptance_rule(3, 20, 25, config)
    assert acceptance_rule(3, 4, 25, config, strict=True)
    assert not acceptance_rule(3, 5, 25, config, strict=True)
    assert not acceptance_rule(0, 26, 25, config)


def test_two_pass_rate_matches_formula():
    # Random Fourier and spike supports; primal + dual recovery rate vs the product formula.
    from prosparse.probability import success_prob

    N, P, K, trials = 24, 5, 7, 400
    rng = np.random.default_rng(21)
    config = build_fourier_frame(N, N)
    wins = 0
    for _ in range(trials):
        x = sample_signal(config, P, K, rng)
        res = recover(synthesize(config, x), config, RecoveryOptions(dual=True, early_exit=True, max_order=K))
        wins += res.contains(x)
    p = float(success_prob("fourier-identity", N, N, P, K).lower)
    assert abs(wins / trials - p) <= 4 * np.sqrt(p * (1 - p) / trials)
