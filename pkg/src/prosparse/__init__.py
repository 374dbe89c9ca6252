"""Sparse recovery in a union of a Vandermonde and a banded dictionary, with
exact success probabilities from the gap statistics of random supports."""

__version__ = "0.1.0"

from .asymptotics import (
    PhasePoint,
    beta_critical,
    frame_coherence_limit,
    frame_coherence_lower_bound,
    mutual_coherence,
    phase_grid,
)
from .dictionary import (
    DictionaryConfig,
    SparseSignal,
    build_fourier_frame,
    random_banded,
    sample_signal,
    synthesize,
    vandermonde,
)
from .errors import *  # noqa: F401,F403
from .gaps import GapProfile, gap_profile, sample_max_gaps
from .probability import (
    ExactProbability,
    SuccessProbability,
    deterministic_bound,
    h,
    h_altsum,
    h_circular,
    h_dft,
    h_exact,
    success_prob,
)
from .prony import PronyEstimate, prony_solve, snap_nodes
from .recovery import RecoveryOptions, RecoveryResult, acceptance_rule, recover, residual_sparsify
from .tolerances import DEFAULT_TOLERANCES, ToleranceConfig
