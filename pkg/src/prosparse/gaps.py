"""Gap statistics of a support set on ``{0, ..., N-1}``.

Gaps are the runs of unoccupied positions between consecutive support points,
with sentinels at ``-1`` and ``N``. The largest gap decides whether a clean
window of a given length exists; on a ring the two boundary gaps join.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import InvalidSupportError, UndefinedCircularError


@dataclass(frozen=True, eq=False)
class GapProfile:
    N: int
    K: int
    sorted_support: tuple
    gaps: tuple
    max_gap: int
    circular_max_gap: Optional[int]

    @property
    def circular(self) -> int:
        if self.circular_max_gap is None:
            raise UndefinedCircularError("circular maximum gap is undefined for an empty support")
        return self.circular_max_gap


def gaps_of(sorted_support: np.ndarray, N: int) -> np.ndarray:
    """``d_k = n[k+1] - n[k] - 1`` with ``n[0] = -1`` and ``n[K+1] = N``."""
    return np.diff(np.concatenate(([-1], sorted_support, [N]))) - 1


def circular_max(gaps: np.ndarray) -> int:
    """Largest gap once the first and last gaps are joined around the ring."""
    if gaps.size < 2:
        raise UndefinedCircularError("circular maximum gap needs at least one support point")
    inner = gaps[1:-1].max() if gaps.size > 2 else 0
    return int(max(gaps[0] + gaps[-1], inner))


def gap_profile(support: Iterable[int], N: int, circular: bool = False) -> GapProfile:
    """Gaps, maximum gap and circular maximum gap of ``support``.

    An empty support has a single gap of length ``N``. Its circular maximum is
    left as ``None``; asking for it with ``circular=True`` raises
    :class:`UndefinedCircularError`.
    """
    s = np.unique(np.fromiter((int(i) for i in support), dtype=np.int64))
    if len(s) and (s[0] < 0 or s[-1] >= N):
        raise InvalidSupportError(f"support must lie in [0, {N})")
    d = gaps_of(s, N)
    if s.size == 0 and circular:
        raise UndefinedCircularError("circular maximum gap is undefined for K = 0")
    gamma = circular_max(d) if s.size else None
    return GapProfile(int(N), int(s.size), tuple(s.tolist()), tuple(d.tolist()), int(d.max()), gamma)


def max_gaps(sorted_supports: np.ndarray, N: int):
    """Row-wise ``(Delta, Gamma)`` for a ``(trials, K)`` array of sorted supports."""
    s = np.asarray(sorted_supports)
    trials, K = s.shape
    left = np.full((trials, 1), -1)
    right = np.full((trials, 1), N)
    d = np.diff(np.hstack([left, s, right]), axis=1) - 1
    delta = d.max(axis=1)
    if K == 0:
        return delta, None
    wrap = d[:, 0] + d[:, -1]
    gamma = np.maximum(wrap, d[:, 1:-1].max(axis=1)) if K > 1 else wrap
    return delta, gamma


def sample_supports(N: int, K: int, trials: int, rng) -> np.ndarray:
    """``trials`` sorted uniform ``K``-subsets of ``{0..N-1}``, one per row."""
    rng = np.random.default_rng(rng)
    out = np.empty((trials, K), dtype=np.int64)
    for t in range(trials):
        out[t] = np.sort(rng.choice(N, size=K, replace=False))
    return out


def sample_max_gaps(N: int, K: int, trials: int, rng, chunk: int = 256):
    """Monte Carlo draws of ``(Delta_{N,K}, Gamma_{N,K})``.

    Supports are sampled in chunks to bound memory at large ``N``. ``Gamma``
    is ``None`` when ``K == 0``.
    """
    rng = np.random.default_rng(rng)
    chunk = max(1, min(chunk, 4_000_000 // max(K, 1)))
    deltas, gammas = [], []
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        d, g = max_gaps(sample_supports(N, K, n, rng), N)
        deltas.append(d)
        if g is not None:
            gammas.append(g)
        done += n
    delta = np.concatenate(deltas) if deltas else np.zeros(0, dtype=np.int64)
    gamma = np.concatenate(gammas) if gammas else (None if K == 0 else np.zeros(0, dtype=np.int64))
    return delta, gamma


def empirical_cdf(samples: np.ndarray, s_values) -> np.ndarray:
    """``P(X < s)`` estimated from ``samples`` for each ``s``."""
    samples = np.sort(np.asarray(samples))
    s_values = np.asarray(s_values)
    if samples.size == 0:
        return np.full(s_values.shape, np.nan)
    return np.searchsorted(samples, s_values, side="left") / samples.size
