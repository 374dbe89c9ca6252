"""Exact and floating-point evaluation of ``h_{N,K}(s) = P(Delta_{N,K} < s)``.

``Delta_{N,K}`` is the largest gap left by a uniformly random ``K``-subset of
``{0..N-1}``. Counting gap vectors ``(d_0..d_K)`` with entries below ``s`` and
sum ``N - K`` gives

    h_{N,K}(s) = coef{ (1 + x + ... + x^{s-1})^{K+1}, x^{N-K} } / C(N, K).

Three routes are provided: exact big-integer powering of the generating
function, a tilted-FFT evaluation in floating point for large ``N``, and the
inclusion-exclusion sum, which serves as an independent exact oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import gmpy2
import numpy as np
import scipy.fft
from scipy.optimize import brentq

from .errors import InvalidInputError, InvalidParameterError, ResourceError, UndefinedCircularError

EXACT_MAX_N = 4096
DFT_MAX_LENGTH = 2 ** 25
METHODS = ("exact", "dft", "altsum")


@dataclass(frozen=True)
class ExactProbability:
    numerator: Optional[int]
    denominator: Optional[int]
    float_value: float
    method: str
    error_estimate: float = 0.0

    @property
    def fraction(self) -> Fraction:
        if self.numerator is None:
            raise ValueError(f"{self.method} result has no exact rational form")
        return Fraction(self.numerator, self.denominator)

    def as_dict(self) -> dict:
        out = {"float": self.float_value, "method": self.method}
        if self.numerator is not None:
            out["numerator"] = self.numerator
            out["denominator"] = self.denominator
        else:
            out["error_estimate"] = self.error_estimate
        return out


def _check(N: int, K: int, s: int) -> None:
    # N = 0 only arises from the circular reduction with N = K = 1.
    if N < 0 or not 0 <= K <= N:
        raise InvalidInputError(f"need 0 <= K <= N, got N={N}, K={K}")
    if s < 0:
        raise InvalidInputError(f"s must be non-negative, got {s}")


def _rational(num: int, den: int, method: str) -> ExactProbability:
    return ExactProbability(int(num), int(den), int(num) / int(den), method)


def genfunc_coefficient(s: int, power: int, degree: int, slot_bits: Optional[int] = None) -> int:
    """``coef{(1 + ... + x^{s-1})^power, x^degree}`` exactly.

    Kronecker substitution: a polynomial with coefficients below ``2**bits``
    is the integer ``sum c_i 2**(bits*i)``. Products are then big-integer
    products, and truncating at ``degree`` is a bit mask, since carries only
    travel upward. Powering is by repeated squaring.
    """
    if degree < 0 or s <= 0:
        return 0
    if power == 0:
        return 1 if degree == 0 else 0
    if slot_bits is None:
        # coef{f^e, x^j} <= #compositions of j into e parts <= C(degree+power-1, power-1)
        slot_bits = math.comb(degree + power - 1, power - 1).bit_length() + 1
    bits = slot_bits
    keep = degree + 1
    mask = (gmpy2.mpz(1) << (bits * keep)) - 1
    terms = min(s, keep)
    # f_s truncated: sum_{i<terms} 2^(bits*i)
    base = ((gmpy2.mpz(1) << (bits * terms)) - 1) // ((gmpy2.mpz(1) << bits) - 1)
    result = gmpy2.mpz(1)
    e = power
    while e:
        if e & 1:
            result = (result * base) & mask
        e >>= 1
        if e:
            base = (base * base) & mask
    return int((result >> (bits * degree)) & ((gmpy2.mpz(1) << bits) - 1))


def h_exact(N: int, K: int, s: int) -> ExactProbability:
    """Exact ``h_{N,K}(s)`` by big-integer generating-function powering."""
    _check(N, K, s)
    num = genfunc_coefficient(s, K + 1, N - K)
    return _rational(num, math.comb(N, K), "bigint-genfunc")


def _comb(n: int, k: int) -> int:
    return math.comb(n, k) if 0 <= k <= n else 0


def h_altsum(N: int, K: int, s: int) -> ExactProbability:
    """Exact ``h_{N,K}(s)`` from the inclusion-exclusion sum

        sum_l (-1)^l C(K+1, l) C(N - l*s, K) / C(N, K).
    """
    _check(N, K, s)
    if s == 0:
        return _rational(0, math.comb(N, K), "altsum")
    total = 0
    for l in range(K + 2):
        if N - l * s < K:
            break
        total += (-1) ** l * math.comb(K + 1, l) * _comb(N - l * s, K)
    return _rational(total, math.comb(N, K), "altsum")


def _log_comb(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _tilt(s: int, power: int, degree: int) -> float:
    """Log-radius ``t`` putting the mean of the tilted ``f_s^power`` at ``degree``."""
    i = np.arange(s, dtype=float)
    target = degree / power

    def mean(t):
        w = t * i
        w = np.exp(w - w.max())
        return float(np.dot(i, w) / w.sum()) - target

    lo, hi = -60.0, 60.0
    if mean(lo) >= 0:
        return lo
    if mean(hi) <= 0:
        return hi
    return brentq(mean, lo, hi, xtol=1e-12)


def h_dft(N: int, K: int, s: int, max_length: int = DFT_MAX_LENGTH) -> ExactProbability:
    """Floating-point ``h_{N,K}(s)`` via one forward and one inverse FFT.

    The coefficients of ``f_s`` are tilted by ``exp(t*i)`` (saddle point at
    ``x^{N-K}``) so that the wanted coefficient sits at the bulk of the tilted
    distribution; powers are taken in the log domain and the binomial comes
    from ``lgamma``. The transform length covers the full degree
    ``(s-1)(K+1)``, so there is no aliasing.
    """
    _check(N, K, s)
    m = N - K
    deg = (s - 1) * (K + 1) if s > 0 else -1
    if s == 0 or deg < m:
        return ExactProbability(None, None, 0.0, "dft-genfunc", 0.0)
    if s >= m + 1:
        return ExactProbability(None, None, 1.0, "dft-genfunc", 0.0)
    L = scipy.fft.next_fast_len(deg + 1, real=True)
    if L > max_length:
        raise ResourceError(f"transform length {L} exceeds the budget of {max_length}")

    t = _tilt(s, K + 1, m)
    tmax = max(0.0, t * (s - 1))
    coeffs = np.zeros(L)
    coeffs[:s] = np.exp(t * np.arange(s) - tmax)
    spectrum = scipy.fft.rfft(coeffs)
    del coeffs
    # With t == 0 the spectrum of f_s has exact zeros; those terms vanish.
    live = spectrum != 0
    log_pow = np.full(spectrum.shape, -np.inf + 0j)
    log_pow[live] = (K + 1) * np.log(spectrum[live])
    phase_err = np.finfo(float).eps * (K + 1) * (float(np.max(np.abs(np.log(np.abs(spectrum[live]))))) + np.pi)
    del spectrum
    gmax = float(np.max(log_pow.real))
    terms = np.zeros(log_pow.shape, dtype=complex)
    terms[live] = np.exp(log_pow[live] - gmax)
    del log_pow
    mag = float(np.abs(terms).sum())
    tilted = scipy.fft.irfft(terms, n=L)[m]
    del terms
    if tilted <= 0:
        return ExactProbability(None, None, 0.0, "dft-genfunc", 1.0)
    log_h = math.log(tilted) + gmax - t * m + tmax * (K + 1) - _log_comb(N, K)
    value = min(1.0, math.exp(log_h))
    err = phase_err + np.finfo(float).eps * (2 * mag / L) / tilted * math.log2(L)
    return ExactProbability(None, None, value, "dft-genfunc", float(err))


def h(N: int, K: int, s: int, method: str = "auto") -> ExactProbability:
    """``h_{N,K}(s)`` by the named method; ``auto`` is exact up to N=4096."""
    if method == "auto":
        method = "exact" if N <= EXACT_MAX_N else "dft"
    if method == "exact":
        return h_exact(N, K, s)
    if method == "dft":
        return h_dft(N, K, s)
    if method == "altsum":
        return h_altsum(N, K, s)
    raise InvalidInputError(f"unknown method {method!r}; expected one of {METHODS}")


def h_circular(N: int, K: int, s: int, method: str = "auto") -> ExactProbability:
    """``P(Gamma_{N,K} < s)``, which equals ``h_{N-1,K-1}(s)``."""
    if K == 0:
        raise UndefinedCircularError("circular maximum gap is undefined for K = 0")
    _check(N, K, s)
    return h(N - 1, K - 1, s, method)


Probability = Union[Fraction, float]


@dataclass(frozen=True)
class SuccessProbability:
    """Success probability, or an interval ``[lower, upper]`` bracketing it."""

    scenario: str
    lower: Probability
    upper: Probability

    @property
    def exact(self) -> bool:
        return isinstance(self.lower, Fraction) and isinstance(self.upper, Fraction)

    @property
    def is_point(self) -> bool:
        return self.lower == self.upper

    def as_dict(self) -> dict:
        return {"scenario": self.scenario, "lower": float(self.lower), "upper": float(self.upper),
                "exact": self.exact}


SCENARIOS = ("vandermonde-identity", "vandermonde-banded", "fourier-identity")


def _value(p: ExactProbability) -> Probability:
    return p.fraction if p.numerator is not None else p.float_value


def success_prob(scenario: str, N: int, M: int, P: int, K: int, bandwidth: int = 0,
                 method: str = "auto") -> SuccessProbability:
    """Probability that ProSparse recovers a signal with random spike support.

    * ``vandermonde-identity``: ``1 - h_{N,K}(2P)``.
    * ``vandermonde-banded``: bracketed by ``1 - h_{N,K}(2P + 2b)`` and
      ``1 - h_{N,K}(2P)``.
    * ``fourier-identity`` (``M == N``, primal and dual passes):
      ``1 - h_{N-1,K-1}(2P) * h_{N-1,P-1}(2K)``; equal to 1 if ``P`` or ``K``
      is zero.
    """
    if scenario not in SCENARIOS:
        raise InvalidInputError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    if N < 1 or M < N or not 0 <= P <= M or not 0 <= K <= N or bandwidth < 0:
        raise InvalidInputError(f"invalid parameters N={N}, M={M}, P={P}, K={K}, b={bandwidth}")
    if scenario != "vandermonde-banded" and bandwidth != 0:
        raise InvalidInputError(f"{scenario} requires bandwidth 0")
    if scenario == "vandermonde-identity":
        p = 1 - _value(h(N, K, 2 * P, method))
        return SuccessProbability(scenario, p, p)
    if scenario == "vandermonde-banded":
        lower = 1 - _value(h(N, K, 2 * P + 2 * bandwidth, method))
        upper = 1 - _value(h(N, K, 2 * P, method))
        return SuccessProbability(scenario, lower, upper)
    if M != N:
        raise InvalidInputError("fourier-identity requires the Fourier basis (M == N)")
    if P == 0 or K == 0:
        return SuccessProbability(scenario, Fraction(1), Fraction(1))
    primal = _value(h_circular(N, K, 2 * P, method))
    dual = _value(h_circular(N, P, 2 * K, method))
    p = 1 - primal * dual
    return SuccessProbability(scenario, p, p)


def deterministic_bound(P: int, K: int, N: int, bandwidth: int = 0, tau: int = 1) -> bool:
    """Worst-case guarantee ``2(P + b)(K + tau) < N + tau(2b + 1)``."""
    if tau not in (0, 1):
        raise InvalidParameterError(f"tau must be 0 or 1, got {tau}")
    return 2 * (P + bandwidth) * (K + tau) < N + tau * (2 * bandwidth + 1)
