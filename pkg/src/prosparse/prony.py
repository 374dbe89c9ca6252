"""Prony's method for a sum of exponentials observed on a short window.

Given ``w[i] = sum_p a_p * xi_p**(start + i)`` for ``i = 0..2P-1``, the
annihilating filter ``h`` (``sum_i h_i w[k - i] = 0``) is the null vector of a
``P x (P+1)`` Toeplitz matrix built from the window; its roots are the nodes
and a Vandermonde least-squares fit gives the amplitudes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .dictionary import node_powers, weighted_exponential_sum
from .errors import InvalidWindowError
from .tolerances import DEFAULT_TOLERANCES, ToleranceConfig


@dataclass(frozen=True, eq=False)
class PronyEstimate:
    order: int
    nodes: np.ndarray
    amplitudes: np.ndarray
    residual_norm: float
    condition_flag: bool
    filter: np.ndarray
    start_index: int = 0

    @property
    def valid(self) -> bool:
        return not self.condition_flag and self.order > 0


def _empty(window_norm: float, start_index: int) -> PronyEstimate:
    return PronyEstimate(0, np.zeros(0, complex), np.zeros(0, complex), window_norm, True,
                         np.ones(1, complex), start_index)


def _annihilating_filter(window: np.ndarray, order: int) -> np.ndarray:
    """Null vector of the ``(L - order) x (order + 1)`` Toeplitz system."""
    # Row k (k = order..L-1) holds window[k], window[k-1], ..., window[k-order].
    T = scipy.linalg.toeplitz(window[order:], window[order::-1])
    _, _, vh = np.linalg.svd(T)
    return np.conj(vh[-1])


def _merge_roots(roots: np.ndarray, tol: float):
    """Collapse roots closer than ``tol``; returns (roots, merged_any)."""
    kept = []
    for r in roots:
        if all(abs(r - q) >= tol for q in kept):
            kept.append(r)
    return np.array(kept, dtype=complex), len(kept) < len(roots)


def prony_solve(window, P: int, start_index: int = 0,
                tol: ToleranceConfig = DEFAULT_TOLERANCES) -> PronyEstimate:
    """Fit ``P`` exponentials to a window of exactly ``2P`` samples.

    If the window holds fewer than ``P`` exponentials the Hankel rank drops;
    the estimate is then computed at the reduced order and flagged.
    """
    window = np.asarray(window, dtype=complex).ravel()
    if P < 1:
        raise InvalidWindowError("order P must be >= 1")
    if window.size != 2 * P:
        raise InvalidWindowError(f"window must have length 2P={2 * P}, got {window.size}")
    wnorm = float(np.linalg.norm(window))
    if wnorm == 0.0:
        return _empty(0.0, start_index)

    T = scipy.linalg.toeplitz(window[P:], window[P::-1])
    _, sv, vh = np.linalg.svd(T)
    rank = int(np.sum(sv > tol.rank * sv[0]))
    flagged = rank < P
    if rank == 0:
        return _empty(wnorm, start_index)
    h = np.conj(vh[-1]) if rank == P else _annihilating_filter(window, rank)

    # Leading/trailing (near-)zero taps mean roots at infinity or at zero.
    hscale = np.max(np.abs(h))
    nz = np.flatnonzero(np.abs(h) > tol.rank * hscale)
    if nz[0] > 0 or nz[-1] < h.size - 1:
        flagged = True
    poly = h[nz[0]:nz[-1] + 1]
    if poly.size < 2:
        return _empty(wnorm, start_index)
    roots = np.linalg.eigvals(scipy.linalg.companion(poly))
    roots, merged = _merge_roots(roots, tol.root_merge)
    flagged |= merged

    if np.any(roots == 0):
        return _empty(wnorm, start_index)
    local = node_powers(roots, np.arange(2 * P))
    if not np.all(np.isfinite(local)):
        # Roots far off the unit circle; nothing in the window supports them.
        return PronyEstimate(roots.size, roots, np.full(roots.size, np.nan + 0j), np.inf, True, h,
                             start_index)
    coef, *_ = np.linalg.lstsq(local, window, rcond=None)
    residual = float(np.linalg.norm(local @ coef - window))
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        amplitudes = coef * np.exp(-start_index * np.log(roots))
    if not np.all(np.isfinite(amplitudes)) or np.any(np.abs(amplitudes) <= tol.zero * wnorm):
        flagged = True
    return PronyEstimate(roots.size, roots, amplitudes, residual, bool(flagged), h, start_index)


def evaluate_model(est: PronyEstimate, n_range) -> np.ndarray:
    """``sum_p a_p * xi_p**n`` for each ``n`` in ``n_range`` (a range, a
    ``(start, stop)`` pair or an array of indices)."""
    if isinstance(n_range, tuple) and len(n_range) == 2:
        n = np.arange(*n_range)
    else:
        n = np.asarray(list(n_range) if isinstance(n_range, range) else n_range)
    return weighted_exponential_sum(est.amplitudes, est.nodes, n)


def annihilation_error(h, window) -> float:
    """``max_k |sum_i h_i window[k - i]|`` over all fully overlapping ``k``."""
    h = np.asarray(h, dtype=complex)
    window = np.asarray(window, dtype=complex)
    full = np.convolve(window, h, mode="valid")
    return float(np.max(np.abs(full))) if full.size else 0.0


def filter_response(h, nodes) -> np.ndarray:
    """``|H(xi)|`` for the filter polynomial ``H(z) = sum_i h_i z**(P - i)``,
    normalised by ``sum_i |h_i| |xi|**(P - i)`` so that it lies in ``[0, 1]``."""
    h = np.asarray(h, dtype=complex).ravel()
    P = h.size - 1
    powers = node_powers(nodes, np.arange(P, -1, -1))
    with np.errstate(over="ignore", invalid="ignore"):
        num = np.abs(h @ powers)
        den = np.abs(h) @ np.abs(powers)
        out = num / den
    return np.where(np.isfinite(out), out, 1.0)


def select_nodes(window, P: int, nodes) -> np.ndarray:
    """Indices of the ``P`` dictionary nodes where the order-``P`` filter of
    ``window`` is smallest.

    Evaluating the filter on a known node set avoids polynomial rooting,
    whose error grows quickly with ``P``; the caller must still verify that
    the chosen atoms reproduce the window.
    """
    window = np.asarray(window, dtype=complex).ravel()
    if window.size != 2 * P or P < 1:
        raise InvalidWindowError(f"window must have length 2P={2 * P}")
    if P > len(nodes):
        raise InvalidWindowError("more exponentials than dictionary nodes")
    h = _annihilating_filter(window, P)
    resp = filter_response(h, nodes)
    return np.sort(np.argsort(resp, kind="stable")[:P])


def snap_nodes(est: PronyEstimate, nodes: np.ndarray, tol: float) -> Optional[np.ndarray]:
    """Indices of the dictionary nodes nearest to the recovered ones.

    ``None`` if some recovered node is farther than ``tol`` from every
    dictionary node, or two recovered nodes land on the same index.
    """
    if est.order == 0:
        return np.zeros(0, dtype=int)
    dist = np.abs(est.nodes[:, None] - np.asarray(nodes)[None, :])
    idx = np.argmin(dist, axis=1)
    if np.any(dist[np.arange(idx.size), idx] > tol) or np.unique(idx).size != idx.size:
        return None
    return idx
