"""Phase-transition thresholds, phase-diagram grids and mutual coherence.

With ``K = floor(alpha * N**delta)`` spikes and
``P = floor(beta * N**(1 - delta) * log N)`` Fourier atoms, the success
probability of the gap criterion tends to 1 below ``beta_c(alpha, delta)``
and to 0 above it. Logarithms are natural throughout.
"""

from __future__ import annotations

import math
from concurrent.futures import Executor
from dataclasses import asdict, dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .gaps import max_gaps, sample_supports


def beta_critical(alpha: float, delta: float) -> float:
    """Critical ``beta``: ``delta / (2 alpha)`` for ``delta < 1`` and
    ``-1 / (2 log(1 - alpha))`` for ``delta == 1``."""
    if not 0 < delta <= 1:
        raise InvalidParameterError(f"delta must lie in (0, 1], got {delta}")
    if alpha <= 0:
        raise InvalidParameterError(f"alpha must be positive, got {alpha}")
    if delta < 1:
        return delta / (2 * alpha)
    if alpha >= 1:
        raise InvalidParameterError("delta = 1 needs alpha < 1")
    return -1.0 / (2 * math.log1p(-alpha))


def sparsity_levels(alpha: float, beta: float, delta: float, N: int):
    """``(K, P)`` for one grid point."""
    K = math.floor(alpha * N ** delta)
    P = math.floor(beta * N ** (1 - delta) * math.log(N))
    return K, P


@dataclass(frozen=True)
class PhasePoint:
    alpha: float
    beta: float
    delta: float
    N: int
    K: int
    P: int
    trials: int
    successes: int
    beta_c: float
    degenerate: bool = False

    @property
    def rate(self) -> float:
        return self.successes / self.trials if self.trials else float("nan")

    def as_row(self) -> dict:
        return asdict(self)


PHASE_COLUMNS = ("alpha", "beta", "delta", "N", "K", "P", "trials", "successes", "beta_c", "degenerate")
CRITERIA = ("circular", "linear")


def gap_successes(N: int, K: int, P: int, trials: int, rng, criterion: str = "circular",
                  bandwidth: int = 0, chunk: int = 64) -> int:
    """How many of ``trials`` random ``K``-supports leave a clean window.

    ``circular``: ``Gamma >= 2P`` (ring of a circulant dictionary).
    ``linear``: ``Delta >= 2P + 2b``.
    """
    if criterion not in CRITERIA:
        raise InvalidInputError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")
    rng = np.random.default_rng(rng)
    chunk = max(1, min(chunk, 4_000_000 // max(K, 1)))
    need = 2 * P + (2 * bandwidth if criterion == "linear" else 0)
    wins, done = 0, 0
    while done < trials:
        n = min(chunk, trials - done)
        delta, gamma = max_gaps(sample_supports(N, K, n, rng), N)
        stat = gamma if criterion == "circular" else delta
        wins += int(np.count_nonzero(stat >= need))
        done += n
    return wins


def _grid_point(task) -> PhasePoint:
    alpha, beta, delta, N, trials, seed, ia, ib, criterion, bandwidth = task
    K, P = sparsity_levels(alpha, beta, delta, N)
    try:
        bc = beta_critical(alpha, delta)
    except InvalidParameterError:
        bc = float("nan")
    degenerate = K < 1 or P < 1 or K >= N
    if degenerate or trials == 0:
        return PhasePoint(alpha, beta, delta, N, K, P, trials if not degenerate else 0, 0, bc, degenerate)
    rng = np.random.default_rng(np.random.SeedSequence([seed, ia, ib]))
    wins = gap_successes(N, K, P, trials, rng, criterion, bandwidth)
    return PhasePoint(alpha, beta, delta, N, K, P, trials, wins, bc, False)


def phase_grid(delta: float, alpha_range: Sequence[float], beta_range: Sequence[float], N: int,
               trials: int, seed: int = 0, criterion: str = "circular", bandwidth: int = 0,
               executor: Optional[Executor] = None) -> List[PhasePoint]:
    """Monte Carlo success counts of the gap criterion on an ``alpha x beta`` grid.

    Each point draws from its own stream ``SeedSequence([seed, ia, ib])`` so
    the output does not depend on how points are scheduled. Points with
    ``P = 0``, ``K = 0`` or ``K >= N`` are returned with ``degenerate=True``
    and no trials.
    """
    if trials < 0:
        raise InvalidInputError("trials must be non-negative")
    if criterion not in CRITERIA:
        raise InvalidInputError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")
    if not 0 < delta <= 1:
        raise InvalidParameterError(f"delta must lie in (0, 1], got {delta}")
    tasks = [(float(a), float(b), float(delta), int(N), int(trials), int(seed), ia, ib, criterion, bandwidth)
             for ia, a in enumerate(alpha_range) for ib, b in enumerate(beta_range)]
    if executor is None:
        return [_grid_point(t) for t in tasks]
    return list(executor.map(_grid_point, tasks))


FIGURE_PRESETS = {
    # delta, alpha grid, beta grid
    "1a": (1.0, np.round(np.linspace(0.05, 0.95, 19), 4), np.round(np.linspace(0.1, 3.0, 30), 4)),
    "1b": (0.6, np.round(np.linspace(0.1, 1.0, 19), 4), np.round(np.linspace(0.1, 3.0, 30), 4)),
}


def _as_matrix(columns) -> np.ndarray:
    if isinstance(columns, np.ndarray) and columns.ndim == 2:
        A = columns.astype(complex)
    else:
        cols = [np.asarray(c, dtype=complex).ravel() for c in columns]
        if not cols:
            raise InvalidInputError("need at least two columns")
        if len({c.size for c in cols}) != 1:
            raise InvalidInputError("columns have different lengths")
        A = np.stack(cols, axis=1)
    return A


def mutual_coherence(columns, split: Optional[int] = None) -> float:
    """``max |<d_k, d_l>| / (||d_k|| ||d_l||)`` over distinct columns.

    ``columns`` is a 2-D array (columns are atoms) or a list of vectors.
    With ``split`` only pairs with one column before and one at or after
    ``split`` count (cross-coherence of two blocks).
    """
    A = _as_matrix(columns)
    if A.shape[1] < 2:
        raise InvalidInputError("need at least two columns")
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise InvalidInputError("zero column")
    A = A / norms
    if split is not None:
        if not 0 < split < A.shape[1]:
            raise InvalidInputError(f"split must lie in (0, {A.shape[1]})")
        return float(np.max(np.abs(A[:, :split].conj().T @ A[:, split:])))
    G = np.abs(A.conj().T @ A)
    np.fill_diagonal(G, 0.0)
    return float(G.max())


def frame_coherence_lower_bound(N: int, M: int) -> float:
    """``|sum_{n<N} exp(2j pi n / M)| / N``: coherence of two adjacent frame atoms."""
    return float(abs(np.exp(2j * np.pi * np.arange(N) / M).sum()) / N)


def frame_coherence_limit(d: float) -> float:
    """Large-``N`` limit of the bound above for redundancy ``d = M / N``."""
    return d * math.sqrt(1 - math.cos(2 * math.pi / d)) / (math.sqrt(2) * math.pi)


def success_curve(points: Iterable[PhasePoint], alpha: float) -> List[tuple]:
    """``(beta, rate)`` pairs for one ``alpha`` row, sorted by ``beta``."""
    rows = [(p.beta, p.rate) for p in points if p.alpha == alpha and not p.degenerate]
    return sorted(rows)
