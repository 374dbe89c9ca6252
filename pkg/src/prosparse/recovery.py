"""ProSparse: recover a (P, K)-sparse ``x`` from ``y = Psi x1 + Phi x2``.

For each order ``P`` and each window of ``2P`` consecutive samples, Prony's
method fits ``P`` exponentials. Recovered nodes must coincide with dictionary
nodes; the fitted component is subtracted and the residual must be explained
by a sparse combination of ``Phi`` columns. A window free of ``Phi`` atoms
yields the true Vandermonde part exactly, which is what makes the search work.
"""

from __future__ import annotations

from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg

from .dictionary import (
    DictionaryConfig,
    SparseSignal,
    node_powers,
    synthesize,
    synthesize_phi,
    synthesize_psi,
)
from .errors import InvalidInputError
from .probability import deterministic_bound
from .prony import prony_solve, select_nodes, snap_nodes
from .tolerances import DEFAULT_TOLERANCES, ToleranceConfig


@dataclass(frozen=True)
class RecoveryOptions:
    """Knobs for :func:`recover`.

    ``early_exit`` stops at the first *decisive* solution, i.e. one whose
    residual vanishes somewhere outside the fitted window (``N - K > 2P``).
    A generic ``P``-term fit always zeroes its own ``2P`` samples, so
    non-decisive candidates do not stop the sweep.
    """

    tolerances: ToleranceConfig = DEFAULT_TOLERANCES
    strict: bool = False
    early_exit: bool = False
    dual: bool = False
    min_order: int = 0
    max_order: Optional[int] = None
    window_budget: Optional[int] = None


@dataclass(frozen=True, eq=False)
class Solution:
    signal: SparseSignal
    window_start: Optional[int]
    fit_residual: float
    decisive: bool
    dual: bool = False

    @property
    def P(self) -> int:
        return self.signal.P

    @property
    def K(self) -> int:
        return self.signal.K


@dataclass
class RecoveryResult:
    solutions: List[Solution] = field(default_factory=list)
    windows_tested: int = 0
    budget_exceeded: bool = False

    @property
    def status(self) -> str:
        return "recovered" if self.solutions else "no-solution"

    @property
    def best(self) -> Optional[Solution]:
        return self.solutions[0] if self.solutions else None

    def contains(self, signal: SparseSignal, rtol: float = 1e-6) -> bool:
        return any(s.signal.same_as(signal, rtol) for s in self.solutions)


def solution_rank(P: int, K: int):
    """Sort key: total sparsity first, then fewer Vandermonde atoms."""
    return (P + K, P)


def acceptance_rule(P: int, K: int, N: int, config: DictionaryConfig, strict: bool = False) -> bool:
    """Default: any ``K <= N`` is acceptable (candidates are ranked later).
    Strict: only pairs covered by the worst-case guarantee."""
    if K > N or P < 0 or K < 0:
        return False
    if not strict:
        return True
    return deterministic_bound(P, K, N, config.bandwidth, config.tau)


def residual_sparsify(r, config: DictionaryConfig, tol: float,
                      k_max: Optional[int] = None) -> Optional[SparseSignal]:
    """Express ``r`` as ``Phi x2`` with sparse ``x2``, or return ``None``.

    Identity ``Phi``: threshold ``r`` directly. Banded ``Phi``: solve the
    banded system, threshold, and require the thresholded ``x2`` to reproduce
    ``r`` to within ``tol``.
    """
    r = np.asarray(r, dtype=complex)
    if r.size != config.N:
        raise InvalidInputError(f"residual length {r.size} != N={config.N}")
    if config.is_identity:
        support = np.flatnonzero(np.abs(r) > tol)
        coeffs = r[support]
    else:
        b = config.bandwidth
        try:
            x2 = scipy.linalg.solve_banded((b, b), config.phi_bands, r)
        except (np.linalg.LinAlgError, ValueError):
            return None
        if not np.all(np.isfinite(x2)):
            return None
        support = np.flatnonzero(np.abs(x2) > tol)
        coeffs = x2[support]
        if np.max(np.abs(synthesize_phi(config, support, coeffs) - r), initial=0.0) > tol:
            return None
    if k_max is not None and support.size > k_max:
        return None
    return SparseSignal((), [], tuple(support.tolist()), coeffs)


def _phi_columns(config: DictionaryConfig, support2) -> np.ndarray:
    cols = np.zeros((config.N, len(support2)), dtype=complex)
    for c, j in enumerate(support2):
        rows, vals = config.phi_column(int(j))
        cols[rows, c] = vals
    return cols


def _projection_residual(V: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``||w - proj_{range V} w||`` for stacks ``V`` (B, L, P) and ``w`` (B, L)."""
    with np.errstate(all="ignore"):
        Q, _ = np.linalg.qr(V)
        proj = np.einsum("blp,bp->bl", Q, np.einsum("blp,bl->bp", Q.conj(), w))
        res = np.linalg.norm(w - proj, axis=1)
    return np.where(np.isfinite(res), res, np.inf)


def _polish(y, config: DictionaryConfig, support1, support2):
    """Joint least squares on the identified atoms; returns (c1, c2, rel_fit)."""
    psi = config.scale * node_powers(config.nodes[list(support1)], np.arange(config.N))
    A = np.hstack([psi, _phi_columns(config, support2)])
    if A.shape[1] == 0:
        return np.zeros(0, complex), np.zeros(0, complex), 0.0
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    fit = float(np.linalg.norm(A @ coef - y))
    return coef[:len(support1)], coef[len(support1):], fit


class _Scanner:
    """Everything needed to test windows of one measurement vector."""

    def __init__(self, y, config: DictionaryConfig, options: RecoveryOptions):
        self.y = y
        self.config = config
        self.options = options
        self.tol = options.tolerances
        self.ynorm = float(np.linalg.norm(y))
        self.abs_tol = self.tol.residual * float(np.max(np.abs(y), initial=0.0))

    def finish(self, support1, window_start) -> Optional[Solution]:
        """Validate a candidate Vandermonde support and build the solution."""
        cfg, y, tol = self.config, self.y, self.tol
        N = cfg.N
        c1 = None
        if len(support1):
            # Amplitudes on the window with the snapped nodes, then the residual.
            n = window_start + np.arange(2 * len(support1))
            V = cfg.scale * node_powers(cfg.nodes[list(support1)], n)
            idx = n % N if cfg.circulant else n
            c1, *_ = np.linalg.lstsq(V, y[idx], rcond=None)
            r = y - synthesize_psi(cfg, support1, c1)
        else:
            r = y
        part2 = residual_sparsify(r, cfg, self.abs_tol)
        if part2 is None:
            return None
        support2 = part2.support2
        P, K = len(support1), len(support2)
        if not acceptance_rule(P, K, N, cfg, self.options.strict):
            return None
        c1, c2, fit = _polish(y, cfg, support1, support2)
        if fit > tol.fit * max(self.ynorm, np.finfo(float).tiny):
            return None
        floor = tol.zero * self.ynorm
        if np.any(np.abs(c1) <= floor) or np.any(np.abs(c2) <= floor):
            return None
        signal = SparseSignal(tuple(int(m) for m in support1), c1, support2, c2)
        decisive = (N - K > 2 * P) if P else K < N
        return Solution(signal, window_start if P else None, fit / max(self.ynorm, np.finfo(float).tiny),
                        decisive)

    def windows(self, P: int):
        N = self.config.N
        return range(N) if self.config.circulant else range(N - 2 * P + 1)

    def _window(self, P: int, start: int) -> np.ndarray:
        idx = start + np.arange(2 * P)
        if self.config.circulant:
            idx %= self.config.N
        return self.y[idx]

    def test_window(self, P: int, start: int) -> Optional[Solution]:
        """Try one window: rooted-and-snapped nodes first, then the nodes where
        the filter is smallest. A candidate must reproduce the window before
        the residual is examined."""
        cfg = self.config
        w = self._window(P, start)
        wnorm = float(np.linalg.norm(w))
        if wnorm == 0.0:
            return None
        candidates = []
        est = prony_solve(w, P, start_index=start, tol=self.tol)
        if est.order == P and not est.condition_flag:
            snapped = snap_nodes(est, cfg.nodes, self.tol.snap)
            if snapped is not None:
                candidates.append(tuple(sorted(snapped.tolist())))
        grid = tuple(select_nodes(w, P, cfg.nodes).tolist())
        if grid not in candidates:
            candidates.append(grid)
        for support1 in candidates:
            V = node_powers(cfg.nodes[list(support1)], np.arange(2 * P))
            if _projection_residual(V[None], w[None])[0] > self.tol.fit * wnorm:
                continue
            sol = self.finish(np.array(support1), start)
            if sol is not None:
                return sol
        return None

    def candidates(self, P: int, starts: np.ndarray, block: int = 128) -> np.ndarray:
        """Cheap batched screen of which windows can possibly pass
        :meth:`test_window`; the thresholds are 100x looser, so the screen
        only skips windows that would be rejected anyway."""
        return np.concatenate([self._screen(P, starts[i:i + block]) for i in range(0, starts.size, block)])

    def _screen(self, P: int, starts: np.ndarray) -> np.ndarray:
        cfg = self.config
        idx = starts[:, None] + np.arange(2 * P)[None, :]
        if cfg.circulant:
            idx %= cfg.N
        w = self.y[idx]
        W = len(starts)
        # Row k of each Toeplitz block: w[k], w[k-1], ..., w[k-P], k = P..2P-1.
        lag = P + np.arange(P)[:, None] - np.arange(P + 1)[None, :]
        _, _, vh = np.linalg.svd(w[:, lag])
        h = np.conj(vh[:, -1, :])

        # Rooted nodes, loosely near dictionary nodes.
        h0 = h[:, 0]
        rooted = np.abs(h0) > self.tol.rank * np.max(np.abs(h), axis=1)
        comp = np.zeros((W, P, P), dtype=complex)
        comp[:, 0, :] = -h[:, 1:] / np.where(rooted, h0, 1.0)[:, None]
        if P > 1:
            comp[:, np.arange(1, P), np.arange(P - 1)] = 1.0
        with np.errstate(all="ignore"):
            roots = np.linalg.eigvals(comp)
        loose = 100 * self.tol.snap
        near = np.zeros(roots.shape, dtype=bool)
        for j in range(0, cfg.M, 512):
            d = np.abs(roots[..., None] - cfg.nodes[None, None, j:j + 512])
            near |= np.any(d <= loose, axis=-1)
        rooted &= np.all(near, axis=1)

        # Filter minima on the node set, checked by a window fit.
        powers = node_powers(cfg.nodes, np.arange(P, -1, -1))
        with np.errstate(over="ignore", invalid="ignore"):
            resp = np.abs(h @ powers) / (np.abs(h) @ np.abs(powers))
        resp = np.where(np.isfinite(resp), resp, 1.0)
        pick = np.sort(np.argsort(resp, axis=1, kind="stable")[:, :P], axis=1)
        V = node_powers(cfg.nodes, np.arange(2 * P))[:, pick].transpose(1, 0, 2)
        wnorm = np.linalg.norm(w, axis=1)
        fits = _projection_residual(V, w) <= 100 * self.tol.fit * wnorm
        return (rooted | fits) & (wnorm > 0)

    def scan(self, P: int, budget: Optional[int] = None):
        """All solutions of order ``P`` in window order; (solutions, tested, truncated)."""
        if P == 0:
            sol = self.finish((), None)
            return ([sol] if sol else []), 1, False
        starts = np.fromiter(self.windows(P), dtype=np.int64)
        truncated = budget is not None and starts.size > budget
        if truncated:
            starts = starts[:max(budget, 0)]
        if starts.size == 0:
            return [], 0, truncated
        keep = self.candidates(P, starts)
        found, tested = [], 0
        for start, flag in zip(starts.tolist(), keep.tolist()):
            tested += 1
            if not flag:
                continue
            sol = self.test_window(P, start)
            if sol is None:
                continue
            if not any(s.signal.same_as(sol.signal, 1e-6) for s in found):
                found.append(sol)
            if self.options.early_exit and sol.decisive:
                return found, tested, False
        return found, tested, truncated


def _scan_order(args):
    y, config, options, P = args
    return _Scanner(y, config, options).scan(P)


def _orders(N: int, options: RecoveryOptions):
    top = N // 2 if options.max_order is None else min(options.max_order, N // 2)
    return range(max(0, options.min_order), top + 1)


def _sweep(y, config: DictionaryConfig, options: RecoveryOptions, executor: Optional[Executor]):
    result = RecoveryResult()
    orders = _orders(config.N, options)
    if executor is None:
        scanner = _Scanner(y, config, options)
        for P in orders:
            budget = None
            if options.window_budget is not None:
                budget = options.window_budget - result.windows_tested
            found, tested, truncated = scanner.scan(P, budget)
            result.windows_tested += tested
            result.solutions.extend(found)
            if truncated:
                result.budget_exceeded = True
                break
            if options.early_exit and any(s.decisive for s in found):
                break
        return result
    # Orders are independent; merging in P order keeps the output deterministic.
    outputs = executor.map(_scan_order, [(y, config, options, P) for P in orders])
    for found, tested, _ in outputs:
        if options.window_budget is not None and result.windows_tested + tested > options.window_budget:
            result.budget_exceeded = True
            break
        result.windows_tested += tested
        result.solutions.extend(found)
        if options.early_exit and any(s.decisive for s in found):
            break
    return result


def dual_measurements(y, config: DictionaryConfig) -> np.ndarray:
    """``conj(F^H y)`` for the unitary Fourier basis; swaps the roles of spikes
    and Fourier atoms."""
    if not (config.circulant and config.is_identity and np.isclose(config.scale, 1 / np.sqrt(config.N))):
        raise InvalidInputError("the dual pass needs the unitary Fourier basis with Phi = I")
    return np.conj(np.fft.ifft(y) * np.sqrt(config.N))


def _from_dual(sol: Solution) -> SparseSignal:
    s = sol.signal
    return SparseSignal(s.support2, np.conj(s.coeffs2), s.support1, np.conj(s.coeffs1))


def recover(y, config: DictionaryConfig, options: Optional[RecoveryOptions] = None,
            executor: Optional[Executor] = None) -> RecoveryResult:
    """Run the ProSparse sweep on ``y``.

    Orders run from ``P = 0`` up to ``N // 2`` (or ``options.max_order``) and
    windows in increasing start index; on a circulant dictionary windows wrap
    around. Solutions are de-duplicated and ranked by :func:`solution_rank`.
    Pass an ``executor`` to scan orders in parallel; the result is the same.
    """
    options = options or RecoveryOptions()
    y = np.asarray(y, dtype=complex).ravel()
    if y.size != config.N:
        raise InvalidInputError(f"measurement length {y.size} does not match N={config.N}")
    result = _sweep(y, config, options, executor)

    if options.dual and not (options.early_exit and any(s.decisive for s in result.solutions)):
        dual = _sweep(dual_measurements(y, config), config, options, executor)
        result.windows_tested += dual.windows_tested
        result.budget_exceeded |= dual.budget_exceeded
        scanner = _Scanner(y, config, options)
        for sol in dual.solutions:
            signal = _from_dual(sol)
            fit = float(np.linalg.norm(synthesize(config, signal) - y))
            if fit > options.tolerances.fit * max(scanner.ynorm, np.finfo(float).tiny):
                continue
            if not acceptance_rule(signal.P, signal.K, config.N, config, options.strict):
                continue
            decisive = (config.N - signal.P > 2 * signal.K) if signal.K else signal.P < config.N
            result.solutions.append(Solution(signal, sol.window_start, fit / max(scanner.ynorm, 1e-300),
                                             decisive, dual=True))

    unique: List[Solution] = []
    for sol in result.solutions:
        if not any(u.signal.same_as(sol.signal, 1e-6) for u in unique):
            unique.append(sol)
    unique.sort(key=lambda s: solution_rank(s.P, s.K))
    result.solutions = unique
    return result
