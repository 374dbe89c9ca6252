"""Sub-dictionaries, measurement synthesis and random sparse signals.

The dictionary is ``D = [Psi, Phi]`` where ``Psi[n, m] = scale * xi_m**n`` is a
Vandermonde matrix (``N x M``) and ``Phi`` is an ``N x N`` banded matrix. ``Phi``
is kept in the band layout used by :func:`scipy.linalg.solve_banded`::

    bands[b + i - j, j] == Phi[i, j]

so synthesis and inversion cost ``O(N * b)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    InvalidDimensionError,
    InvalidInputError,
    InvalidSparsityError,
    InvalidSupportError,
)

ZERO_THRESHOLD = 1e-12

AmplitudeLaw = Callable[[np.random.Generator, int], np.ndarray]


def fourier_nodes(M: int) -> np.ndarray:
    """The ``M`` nodes ``exp(-2j*pi*m/M)``, ``m = 0..M-1``."""
    return np.exp(-2j * np.pi * np.arange(M) / M)


def node_powers(nodes, n) -> np.ndarray:
    """``nodes[p] ** n[i]`` as an array of shape ``(len(n), len(nodes))``.

    Powers are formed as ``exp(n * log(xi))`` so that unit-circle nodes keep
    unit modulus and off-circle nodes never go through repeated products.
    Zero nodes are handled separately (``0**0 == 1``).
    """
    nodes = np.asarray(nodes, dtype=complex).ravel()
    n = np.asarray(n, dtype=float).ravel()
    out = np.empty((n.size, nodes.size), dtype=complex)
    nz = nodes != 0
    if nz.any():
        logs = np.log(nodes[nz])
        with np.errstate(over="ignore", invalid="ignore"):
            out[:, nz] = np.exp(np.outer(n, logs))
    if (~nz).any():
        out[:, ~nz] = (n == 0)[:, None].astype(complex)
    return out


def weighted_exponential_sum(amplitudes, nodes, n) -> np.ndarray:
    """``sum_p a_p * xi_p**n`` for each ``n``.

    Amplitude and power are combined in the log domain, so a tiny amplitude on
    a large node (or the reverse) does not overflow before it is scaled back.
    """
    amplitudes = np.asarray(amplitudes, dtype=complex).ravel()
    nodes = np.asarray(nodes, dtype=complex).ravel()
    n = np.asarray(n, dtype=float).ravel()
    if amplitudes.size == 0:
        return np.zeros(n.size, dtype=complex)
    keep = amplitudes != 0
    amplitudes, nodes = amplitudes[keep], nodes[keep]
    nz = nodes != 0
    total = np.zeros(n.size, dtype=complex)
    if nz.any():
        expo = np.log(amplitudes[nz])[None, :] + np.outer(n, np.log(nodes[nz]))
        with np.errstate(over="ignore", invalid="ignore"):
            total += np.exp(expo).sum(axis=1)
    if (~nz).any():
        total += (n == 0) * amplitudes[~nz].sum()
    return total


@dataclass(frozen=True, eq=False)
class DictionaryConfig:
    """Vandermonde sub-dictionary plus banded sub-dictionary.

    ``phi_bands=None`` means ``Phi = I_N`` (requires ``bandwidth == 0``).
    ``circulant`` is true exactly when ``Psi`` is the ``N``-point Fourier
    matrix, in which case windows may wrap around the end of ``y``.
    """

    N: int
    M: int
    nodes: np.ndarray
    bandwidth: int = 0
    circulant: bool = False
    phi_bands: Optional[np.ndarray] = None
    scale: float = 1.0
    fourier: bool = field(default=False)

    def __post_init__(self):
        N, M, b = int(self.N), int(self.M), int(self.bandwidth)
        if N < 1 or M < N:
            raise InvalidDimensionError(f"need M >= N >= 1, got N={N}, M={M}")
        if b < 0:
            raise InvalidDimensionError("bandwidth must be non-negative")
        nodes = np.array(self.nodes, dtype=complex).ravel()
        if nodes.size != M:
            raise InvalidDimensionError(f"expected {M} nodes, got {nodes.size}")
        if len(set(nodes.tolist())) != M:
            raise InvalidInputError("Vandermonde nodes must be pairwise distinct")
        if self.circulant:
            if M != N or not np.allclose(nodes, fourier_nodes(N), rtol=0, atol=1e-12):
                raise InvalidInputError("circulant requires M == N and nodes exp(-2j*pi*m/N)")
        nodes.setflags(write=False)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "bandwidth", b)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "scale", float(self.scale))
        if self.phi_bands is None:
            if b != 0:
                raise InvalidInputError("banded Phi needs explicit band entries")
            return
        bands = np.array(self.phi_bands, dtype=complex)
        if bands.shape != (2 * b + 1, N):
            raise InvalidDimensionError(f"phi_bands must have shape {(2 * b + 1, N)}, got {bands.shape}")
        # Band-storage slots that fall outside the N x N matrix must be empty.
        rows = np.arange(N)[None, :] + np.arange(2 * b + 1)[:, None] - b
        if np.any(bands[(rows < 0) | (rows >= N)] != 0):
            raise InvalidInputError("band storage has entries outside the matrix")
        if np.any(bands[b] == 0):
            raise InvalidInputError("banded Phi must have a nonzero diagonal")
        bands.setflags(write=False)
        object.__setattr__(self, "phi_bands", bands)

    @property
    def is_identity(self) -> bool:
        return self.phi_bands is None

    @property
    def tau(self) -> int:
        """0 for the circulant (Fourier basis) case, 1 otherwise."""
        return 0 if self.circulant else 1

    def psi_matrix(self) -> np.ndarray:
        return self.scale * node_powers(self.nodes, np.arange(self.N))

    def phi_matrix(self) -> np.ndarray:
        N, b = self.N, self.bandwidth
        if self.phi_bands is None:
            return np.eye(N, dtype=complex)
        phi = np.zeros((N, N), dtype=complex)
        for r in range(2 * b + 1):
            for j in range(N):
                i = j + r - b
                if 0 <= i < N:
                    phi[i, j] = self.phi_bands[r, j]
        return phi

    def matrix(self) -> np.ndarray:
        """Dense ``[Psi, Phi]``."""
        return np.hstack([self.psi_matrix(), self.phi_matrix()])

    def phi_column(self, j: int):
        """Row indices and values of the nonzero band of column ``j`` of ``Phi``."""
        if self.phi_bands is None:
            return np.array([j]), np.array([1.0 + 0j])
        b = self.bandwidth
        rows = np.arange(j - b, j + b + 1)
        vals = self.phi_bands[:, j]
        ok = (rows >= 0) & (rows < self.N)
        return rows[ok], vals[ok]

    def with_phi(self, phi_bands: Optional[np.ndarray], bandwidth: int) -> "DictionaryConfig":
        return DictionaryConfig(self.N, self.M, self.nodes, bandwidth, self.circulant,
                                phi_bands, self.scale, self.fourier)


def vandermonde(nodes: Sequence[complex], N: int, scale: float = 1.0) -> DictionaryConfig:
    """General Vandermonde ``Psi`` with identity ``Phi``."""
    nodes = np.asarray(nodes, dtype=complex)
    return DictionaryConfig(N=N, M=nodes.size, nodes=nodes, scale=scale)


def build_fourier_frame(N: int, M: int, normalized: bool = True) -> DictionaryConfig:
    """Fourier frame ``Psi[n, m] = exp(-2j*pi*m*n/M) / sqrt(N)`` with ``Phi = I``.

    With ``normalized=False`` the ``1/sqrt(N)`` factor is dropped, giving the
    plain Vandermonde ``xi_m**n`` view.
    """
    if N < 1 or M < N:
        raise InvalidDimensionError(f"need M >= N >= 1, got N={N}, M={M}")
    scale = 1.0 / np.sqrt(N) if normalized else 1.0
    return DictionaryConfig(N=N, M=M, nodes=fourier_nodes(M), circulant=(M == N),
                            scale=scale, fourier=True)


def bands_from_dense(phi: np.ndarray, bandwidth: int) -> np.ndarray:
    """Band storage of a dense matrix; raises if ``phi`` leaks outside the band."""
    phi = np.asarray(phi, dtype=complex)
    N = phi.shape[0]
    if phi.shape != (N, N):
        raise InvalidDimensionError("Phi must be square")
    i, j = np.indices((N, N))
    if np.any(phi[np.abs(i - j) > bandwidth] != 0):
        raise InvalidInputError(f"Phi has entries outside bandwidth {bandwidth}")
    bands = np.zeros((2 * bandwidth + 1, N), dtype=complex)
    for r in range(2 * bandwidth + 1):
        for col in range(N):
            row = col + r - bandwidth
            if 0 <= row < N:
                bands[r, col] = phi[row, col]
    return bands


def random_banded(N: int, bandwidth: int, rng=None, off_scale: float = 0.3) -> np.ndarray:
    """Random diagonally dominant banded ``Phi`` in band storage."""
    rng = np.random.default_rng(rng)
    b = bandwidth
    bands = off_scale * (rng.standard_normal((2 * b + 1, N)) + 1j * rng.standard_normal((2 * b + 1, N))) / np.sqrt(2)
    bands[b] = np.exp(2j * np.pi * rng.random(N)) * (1.0 + 2 * b * off_scale)
    rows = np.arange(N)[None, :] + np.arange(2 * b + 1)[:, None] - b
    bands[(rows < 0) | (rows >= N)] = 0
    return bands


@dataclass(frozen=True, eq=False)
class SparseSignal:
    """``x = [x1; x2]`` stored by supports and coefficients, sorted by index."""

    support1: tuple
    coeffs1: np.ndarray
    support2: tuple
    coeffs2: np.ndarray
    zero_threshold: float = ZERO_THRESHOLD

    def __post_init__(self):
        for which in (1, 2):
            support = [int(i) for i in getattr(self, f"support{which}")]
            coeffs = np.array(getattr(self, f"coeffs{which}"), dtype=complex).ravel()
            if len(support) != coeffs.size:
                raise InvalidSupportError(f"support{which} and coeffs{which} lengths differ")
            if len(set(support)) != len(support):
                raise InvalidSupportError(f"duplicate index in support{which}")
            if np.any(np.abs(coeffs) <= self.zero_threshold):
                raise InvalidInputError(f"coeffs{which} contains a zero coefficient")
            order = np.argsort(support, kind="stable")
            coeffs = coeffs[order]
            coeffs.setflags(write=False)
            object.__setattr__(self, f"support{which}", tuple(support[i] for i in order))
            object.__setattr__(self, f"coeffs{which}", coeffs)

    @property
    def P(self) -> int:
        return len(self.support1)

    @property
    def K(self) -> int:
        return len(self.support2)

    def x1(self, M: int) -> np.ndarray:
        out = np.zeros(M, dtype=complex)
        out[list(self.support1)] = self.coeffs1
        return out

    def x2(self, N: int) -> np.ndarray:
        out = np.zeros(N, dtype=complex)
        out[list(self.support2)] = self.coeffs2
        return out

    def same_as(self, other: "SparseSignal", rtol: float = 1e-6) -> bool:
        """Equal supports and coefficients within ``rtol`` (relative, per entry)."""
        if self.support1 != other.support1 or self.support2 != other.support2:
            return False
        for a, b in ((self.coeffs1, other.coeffs1), (self.coeffs2, other.coeffs2)):
            if np.any(np.abs(a - b) > rtol * np.abs(b)):
                return False
        return True


def empty_signal() -> SparseSignal:
    return SparseSignal((), [], (), [])


def _check_support(config: DictionaryConfig, x: SparseSignal) -> None:
    if any(not 0 <= m < config.M for m in x.support1):
        raise InvalidSupportError(f"support1 index outside [0, {config.M})")
    if any(not 0 <= n < config.N for n in x.support2):
        raise InvalidSupportError(f"support2 index outside [0, {config.N})")


def synthesize_psi(config: DictionaryConfig, support1, coeffs1) -> np.ndarray:
    """``Psi x1`` restricted to the given atoms."""
    nodes = config.nodes[list(support1)]
    return weighted_exponential_sum(config.scale * np.asarray(coeffs1, dtype=complex),
                                    nodes, np.arange(config.N))


def synthesize_phi(config: DictionaryConfig, support2, coeffs2) -> np.ndarray:
    """``Phi x2`` restricted to the given atoms, in ``O(K * b)``."""
    y = np.zeros(config.N, dtype=complex)
    for n_k, b_k in zip(support2, coeffs2):
        rows, vals = config.phi_column(int(n_k))
        y[rows] += b_k * vals
    return y


def synthesize(config: DictionaryConfig, x: SparseSignal) -> np.ndarray:
    """Measurements ``y = Psi x1 + Phi x2``."""
    _check_support(config, x)
    return synthesize_psi(config, x.support1, x.coeffs1) + synthesize_phi(config, x.support2, x.coeffs2)


def complex_normal(rng: np.random.Generator, size: int) -> np.ndarray:
    """Real and imaginary parts i.i.d. ``N(0, 1)``."""
    return rng.standard_normal(size) + 1j * rng.standard_normal(size)


def sample_signal(config: DictionaryConfig, P: int, K: int, rng_seed=None,
                  amplitude_law: Optional[AmplitudeLaw] = None) -> SparseSignal:
    """Uniformly random supports (drawn independently, without replacement)
    with amplitudes from ``amplitude_law`` (complex normal by default)."""
    if P < 0 or K < 0 or P > config.M or K > config.N:
        raise InvalidSparsityError(f"need 0 <= P <= M={config.M} and 0 <= K <= N={config.N}")
    rng = np.random.default_rng(rng_seed)
    law = amplitude_law or complex_normal
    support2 = rng.choice(config.N, size=K, replace=False)
    support1 = rng.choice(config.M, size=P, replace=False)
    coeffs = []
    for size in (P, K):
        c = np.asarray(law(rng, size), dtype=complex)
        while np.any(np.abs(c) <= ZERO_THRESHOLD):
            bad = np.abs(c) <= ZERO_THRESHOLD
            c[bad] = law(rng, int(bad.sum()))
        coeffs.append(c)
    return SparseSignal(tuple(support1.tolist()), coeffs[0], tuple(support2.tolist()), coeffs[1])
