"""Numerical tolerances shared by the Prony solver and the recovery sweep."""

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class ToleranceConfig:
    """All floating-point thresholds in one place.

    Attributes:
        zero: magnitude below which a coefficient counts as zero.
        rank: relative singular-value cutoff used to decide the numerical
            rank of a Prony Hankel matrix.
        root_merge: roots closer than this are merged (and flagged).
        snap: maximum distance between a recovered node and the dictionary
            node it is snapped to.
        residual: a residual entry is a spike if its magnitude exceeds
            ``residual * max|y|``.
        fit: a solution is kept only if ``||D x - y|| <= fit * ||y||``.
    """

    zero: float = 1e-12
    rank: float = 1e-13
    root_merge: float = 1e-8
    snap: float = 1e-6
    residual: float = 1e-8
    fit: float = 1e-8

    def override(self, **kwargs) -> "ToleranceConfig":
        """Copy with the given fields replaced; ``None`` values are ignored."""
        known = {f.name for f in fields(self)}
        unknown = set(kwargs) - known
        if unknown:
            raise ValueError(f"unknown tolerance(s): {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in kwargs.items() if v is not None})


DEFAULT_TOLERANCES = ToleranceConfig()
