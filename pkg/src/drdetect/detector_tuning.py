"""Threshold selection for a quadratic residual detector.

Three knowledge models are supported: exact chi-squared statistics
(Gaussian noise), closed-form thresholds from one or two moments, and
bisection against the tight k-moment SDP bound.  All methods take a
target false-alarm rate and return the smallest defensible threshold
whose worst-case alarm probability does not exceed it.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import scipy.special

from .bound_engine import build_sdp, solve_sdp
from .ipm import Status
from .moment_core import MomentSequence, is_feasible

__all__ = [
    "Method",
    "ThresholdResult",
    "TuningError",
    "chi_squared_threshold",
    "dr_threshold_two_moments",
    "closed_form_threshold",
    "tune_threshold_sdp",
]


class Method(enum.Enum):
    CHI_SQUARED = "chi_squared"
    DR_CHEBYSHEV_MULTIVARIATE = "dr_chebyshev_multivariate"
    CLOSED_FORM_K1 = "closed_form_k1"
    CLOSED_FORM_K2 = "closed_form_k2"
    SDP_BISECTION = "sdp_bisection"


@dataclass(frozen=True)
class ThresholdResult:
    """A tuned detector threshold with its worst-case guarantee."""

    alpha: float
    method: Method
    k: int
    target_rate: float
    achieved_worst_case: float
    epsilon: float = 0.0
    bracket_degenerate: bool = False

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError("threshold must be positive")
        if not 0 < self.target_rate < 1:
            raise ValueError("target rate must be in (0, 1)")
        if self.epsilon < 0:
            raise ValueError("bisection tolerance must be nonnegative")

    def to_csv_row(self) -> str:
        """Serialize as ``method, k, target_rate, alpha, achieved, epsilon``."""
        fields = [
            self.method.value,
            str(self.k),
            format(self.target_rate, ".17g"),
            format(self.alpha, ".17g"),
            format(self.achieved_worst_case, ".17g"),
            format(self.epsilon, ".17g"),
        ]
        return ",".join(fields)

    @classmethod
    def from_csv_row(cls, row: str) -> "ThresholdResult":
        parts = [p.strip() for p in row.split(",")]
        if len(parts) != 6:
            raise ValueError(f"malformed threshold row: {row!r}")
        return cls(
            alpha=float(parts[3]),
            method=Method(parts[0]),
            k=int(parts[1]),
            target_rate=float(parts[2]),
            achieved_worst_case=float(parts[4]),
            epsilon=float(parts[5]),
        )


class TuningError(RuntimeError):
    """Bisection failure, carrying the surviving bracket."""

    def __init__(self, message: str, alpha_lower: float, alpha_upper: float):
        super().__init__(
            f"{message} (surviving bracket [{alpha_lower:.6g}, {alpha_upper:.6g}])"
        )
        self.alpha_lower = alpha_lower
        self.alpha_upper = alpha_upper


def chi_squared_threshold(p: int, rate: float) -> float:
    """(1 - rate) quantile of the chi-squared law with p degrees of
    freedom, via the inverse regularized lower incomplete gamma function."""
    if p < 1:
        raise ValueError("degrees of freedom must be at least 1")
    if not 0 < rate < 1:
        raise ValueError("rate must be in (0, 1)")
    return float(2.0 * scipy.special.gammaincinv(0.5 * p, 1.0 - rate))


def dr_threshold_two_moments(p: int, rate: float) -> float:
    """Distributionally robust threshold p/rate for a p-dimensional
    residual with known mean and covariance (multivariate Chebyshev)."""
    if p < 1:
        raise ValueError("dimension must be at least 1")
    if not 0 < rate < 1:
        raise ValueError("rate must be in (0, 1)")
    return p / rate


def closed_form_threshold(
    moments: MomentSequence, rate: float, k: int
) -> ThresholdResult:
    """Closed-form thresholds for one or two moments.

    k=1: M1/rate (Markov inversion).  k=2: (1 + sqrt((1-rate)/rate) C) M1
    with C^2 = (M2 - M1^2)/M1^2.  For k >= 3 use
    :func:`tune_threshold_sdp`.
    """
    if k not in (1, 2):
        raise ValueError("closed forms exist for k in {1, 2} only")
    if not 0 < rate < 1:
        raise ValueError("rate must be in (0, 1)")
    if moments.order < k:
        raise ValueError(f"moment sequence of order >= {k} required")
    if not is_feasible(moments):
        raise ValueError("infeasible moment sequence")
    m1 = moments.moments[1]
    if not m1 > 0:
        raise ValueError("the mean must be positive to place a threshold")
    if k == 1:
        return ThresholdResult(
            alpha=m1 / rate,
            method=Method.CLOSED_FORM_K1,
            k=1,
            target_rate=rate,
            achieved_worst_case=rate,
        )
    c2 = max(0.0, (moments.moments[2] - m1 * m1) / (m1 * m1))
    c = math.sqrt(c2)
    alpha = (1.0 + math.sqrt((1.0 - rate) / rate) * c) * m1
    achieved = rate if c > 0 else 0.0
    return ThresholdResult(
        alpha=alpha,
        method=Method.CLOSED_FORM_K2,
        k=2,
        target_rate=rate,
        achieved_worst_case=achieved,
    )


def _bound_at(
    moments: MomentSequence,
    alpha: float,
    tol: float,
    bracket: tuple[float, float],
) -> float:
    """SDP bound with one perturbation retry for boundary sequences."""
    sol = solve_sdp(build_sdp(moments, alpha), tol=tol)
    if sol.status is not Status.NUMERICAL_TROUBLE:
        return sol.objective
    sol = solve_sdp(build_sdp(moments.perturbed(), alpha), tol=tol)
    if sol.status is Status.NUMERICAL_TROUBLE:
        raise TuningError(
            f"SDP solver failed at alpha={alpha:.6g}", bracket[0], bracket[1]
        )
    return sol.objective


_AUTO_CACHE: dict[tuple, "ThresholdResult"] = {}


def tune_threshold_sdp(
    moments: MomentSequence,
    rate: float,
    epsilon: float = 1e-4,
    alpha_lower: float | None = None,
    alpha_upper: float | None = None,
    solver_tol: float = 1e-9,
) -> ThresholdResult:
    """Bisection on the tight k-moment SDP bound.

    Halves [alpha_lower, alpha_upper] until the bracket is narrower than
    epsilon: a midpoint whose worst-case probability exceeds the target
    raises the lower end, otherwise the upper end comes down.  The
    returned threshold is the certified upper end of the final bracket.

    Default brackets: the lower end is the mean (no threshold below the
    mean meets a target rate <= 1/2); the upper end is the (k-1)-moment
    threshold, computed recursively down to the closed forms, which
    brackets from above because the bound shrinks as moments are added.
    Results for the default brackets are memoized per moment sequence.
    If the bound at the lower end already meets the target, that end is
    returned with `bracket_degenerate` set.
    """
    k = moments.order
    if k < 2:
        raise ValueError("bisection needs a sequence of order >= 2")
    if not 0 < rate <= 0.5:
        raise ValueError("target rate must be in (0, 0.5]")
    if epsilon <= 0:
        raise ValueError("bisection tolerance must be positive")
    if not is_feasible(moments):
        raise ValueError("infeasible moment sequence")
    m1 = moments.moments[1]
    if not m1 > 0:
        raise ValueError("the mean must be positive to place a threshold")

    auto = alpha_lower is None and alpha_upper is None
    cache_key = (moments, rate, epsilon, solver_tol)
    if auto and cache_key in _AUTO_CACHE:
        return _AUTO_CACHE[cache_key]

    a_l = m1 if alpha_lower is None else float(alpha_lower)
    if alpha_upper is None:
        if k - 1 == 1:
            a_u = m1 / rate
        elif k - 1 == 2:
            a_u = closed_form_threshold(moments.truncated(2), rate, 2).alpha
        else:
            a_u = tune_threshold_sdp(
                moments.truncated(k - 1), rate, epsilon, solver_tol=solver_tol
            ).alpha
        # the Markov threshold is always a valid upper end; the two-moment
        # closed form can sit above it for very dispersed sequences
        a_u = min(a_u, m1 / rate)
    else:
        a_u = float(alpha_upper)
    if not a_u >= a_l:
        raise ValueError("upper bracket must not be below the lower bracket")

    p_low = _bound_at(moments, a_l, solver_tol, (a_l, a_u))
    if p_low <= rate:
        result = ThresholdResult(
            alpha=a_l,
            method=Method.SDP_BISECTION,
            k=k,
            target_rate=rate,
            achieved_worst_case=p_low,
            epsilon=epsilon,
            bracket_degenerate=True,
        )
        if auto:
            _AUTO_CACHE[cache_key] = result
        return result

    achieved = _bound_at(moments, a_u, solver_tol, (a_l, a_u))
    if achieved > rate + 1e-7:
        raise ValueError(
            f"bound at the upper bracket is {achieved:.6g} > rate {rate:.6g}"
        )
    while a_u - a_l > epsilon:
        mid = 0.5 * (a_l + a_u)
        p_mid = _bound_at(moments, mid, solver_tol, (a_l, a_u))
        if p_mid > rate:
            a_l = mid
        else:
            a_u = mid
            achieved = p_mid
    result = ThresholdResult(
        alpha=a_u,
        method=Method.SDP_BISECTION,
        k=k,
        target_rate=rate,
        achieved_worst_case=achieved,
        epsilon=epsilon,
    )
    if auto:
        _AUTO_CACHE[cache_key] = result
    return result
