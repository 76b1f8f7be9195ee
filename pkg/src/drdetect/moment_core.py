"""Truncated moment sequences of a scalar nonnegative random variable.

A detector that only knows the first k raw moments of its detection
measure works with the vector (M^0, M^1, ..., M^k).  This module
provides the container for such vectors, the Hankel-matrix test for
realizability by a distribution on the nonnegative axis, empirical
estimation from samples, and the analytic chi-squared family that
serves as ground truth when the residuals are Gaussian.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "Support",
    "MomentSequence",
    "HankelPair",
    "hankel_pair",
    "is_feasible",
    "estimate_moments",
    "chi_squared_moments",
]


class Support(enum.Enum):
    """Support set on which a moment sequence must be realizable."""

    NONNEGATIVE_REALS = "nonnegative_reals"


@dataclass(frozen=True)
class MomentSequence:
    """Raw moments (M^0, M^1, ..., M^k) of a scalar random variable.

    M^0 must be exactly 1 and every entry finite.  Raw moments are
    stored; central quantities such as the variance are derived views.
    The order k is ``len(moments) - 1`` and must be at least 1.
    """

    moments: tuple[float, ...]
    support: Support = Support.NONNEGATIVE_REALS

    def __post_init__(self) -> None:
        moments = tuple(float(m) for m in self.moments)
        object.__setattr__(self, "moments", moments)
        if len(moments) < 2:
            raise ValueError("a moment sequence needs at least M^0 and M^1")
        if moments[0] != 1.0:
            raise ValueError(f"M^0 must be exactly 1, got {moments[0]!r}")
        if not all(math.isfinite(m) for m in moments):
            raise ValueError("all moments must be finite")
        if not isinstance(self.support, Support):
            raise ValueError(f"unknown support {self.support!r}")

    @property
    def order(self) -> int:
        return len(self.moments) - 1

    @property
    def mean(self) -> float:
        return self.moments[1]

    @property
    def variance(self) -> float:
        if self.order < 2:
            raise ValueError("variance needs moments up to order 2")
        return self.moments[2] - self.moments[1] ** 2

    def truncated(self, order: int) -> "MomentSequence":
        """Drop moments above `order`; feasibility is preserved."""
        if not 1 <= order <= self.order:
            raise ValueError(f"order must be in [1, {self.order}], got {order}")
        return MomentSequence(self.moments[: order + 1], self.support)

    def scaled(self, c: float) -> "MomentSequence":
        """Moments of c*X for c > 0: M^r picks up a factor c^r."""
        if not c > 0:
            raise ValueError("scale factor must be positive")
        return MomentSequence(
            tuple(m * c**r for r, m in enumerate(self.moments)), self.support
        )

    def perturbed(self, theta: float = 1e-8) -> "MomentSequence":
        """Mix with an exponential law of the same mean.

        The exponential has strictly positive-definite Hankel matrices, so
        the mixture sits strictly inside the feasible cone.  Used to nudge
        boundary sequences (e.g. point masses) before numerical solves.
        """
        if not 0 < theta < 1:
            raise ValueError("mixture weight must be in (0, 1)")
        mean = self.moments[1]
        mixed = tuple(
            (1.0 - theta) * m + theta * math.factorial(r) * mean**r
            for r, m in enumerate(self.moments)
        )
        return MomentSequence(mixed, self.support)

    def to_csv_row(self) -> str:
        """Serialize as ``k, M0, M1, ..., Mk``."""
        fields = [str(self.order)] + [format(m, ".17g") for m in self.moments]
        return ",".join(fields)

    @classmethod
    def from_csv_row(cls, row: str) -> "MomentSequence":
        parts = [p.strip() for p in row.split(",")]
        if len(parts) < 3:
            raise ValueError(f"malformed moment row: {row!r}")
        k = int(parts[0])
        values = tuple(float(p) for p in parts[1:])
        if len(values) != k + 1:
            raise ValueError(
                f"row claims order {k} but carries {len(values)} moments"
            )
        return cls(values)


@dataclass(frozen=True)
class HankelPair:
    """The two Hankel matrices whose joint positive semidefiniteness
    characterizes feasibility of a truncated moment sequence on the
    nonnegative axis.

    `r_even` is the even-indexed matrix with entry (i, j) = M_{i+j};
    `r_odd` is the odd-indexed matrix with entry (i, j) = M_{i+j+1}.
    """

    r_even: np.ndarray
    r_odd: np.ndarray
    tolerance: float = 0.0

    def __post_init__(self) -> None:
        r_even = np.array(self.r_even, dtype=float)
        r_odd = np.array(self.r_odd, dtype=float)
        for mat in (r_even, r_odd):
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise ValueError("Hankel blocks must be square matrices")
            if not np.array_equal(mat, mat.T):
                raise ValueError("Hankel blocks must be exactly symmetric")
            mat.flags.writeable = False
        if self.tolerance < 0:
            raise ValueError("tolerance must be nonnegative")
        object.__setattr__(self, "r_even", r_even)
        object.__setattr__(self, "r_odd", r_odd)


def _hankel_matrix(moments: tuple[float, ...], index: int) -> np.ndarray:
    """Hankel matrix R_index: entry (i, j) = M_{i+j} for even index,
    M_{i+j+1} for odd, with i, j = 0..floor(index/2)."""
    m = np.asarray(moments, dtype=float)
    if index % 2 == 0:
        half = index // 2
        return scipy.linalg.hankel(m[: half + 1], m[half : 2 * half + 1])
    half = (index - 1) // 2
    return scipy.linalg.hankel(m[1 : half + 2], m[half + 1 : 2 * half + 2])


def hankel_pair(seq: MomentSequence, tolerance: float = 0.0) -> HankelPair:
    """Build the pair (R_k, R_{k-1}) for a sequence of order k."""
    k = seq.order
    r_k = _hankel_matrix(seq.moments, k)
    r_km1 = _hankel_matrix(seq.moments, k - 1)
    if k % 2 == 0:
        return HankelPair(r_k, r_km1, tolerance)
    return HankelPair(r_km1, r_k, tolerance)


def is_feasible(seq: MomentSequence, tol: float = 1e-9) -> bool:
    """True when the sequence is realizable by a distribution on R+.

    Both Hankel matrices must have smallest eigenvalue >= -tol * scale,
    where scale is the largest absolute entry of the matrix (at least 1).
    Eigendecomposition rather than Cholesky, so boundary sequences with
    rank-deficient Hankel matrices (e.g. point masses) pass.
    """
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    pair = hankel_pair(seq, tolerance=tol)
    for mat in (pair.r_even, pair.r_odd):
        scale = max(1.0, float(np.abs(mat).max()))
        if np.linalg.eigvalsh(mat)[0] < -tol * scale:
            return False
    return True


def estimate_moments(samples, k: int) -> MomentSequence:
    """Empirical raw moments M^r = mean(x^r) for r = 0..k.

    Sums are accumulated with compensated summation: fourth moments of
    heavy-tailed samples lose digits under naive left-to-right addition.
    """
    if k < 1:
        raise ValueError("moment order must be at least 1")
    x = np.atleast_1d(np.asarray(samples, dtype=float))
    if x.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    if x.size == 0:
        raise ValueError("empty sample set")
    if np.any(x < 0):
        raise ValueError("negative sample: the detection measure is nonnegative")
    moments = [1.0]
    power = np.ones_like(x)
    for _ in range(k):
        power = power * x
        moments.append(math.fsum(power) / x.size)
    return MomentSequence(tuple(moments))


def chi_squared_moments(p: int, k: int) -> MomentSequence:
    """Analytic raw moments of a chi-squared law with p degrees of
    freedom: M^r = prod_{j=0}^{r-1} (p + 2j)."""
    if p < 1:
        raise ValueError("degrees of freedom must be at least 1")
    if k < 1:
        raise ValueError("moment order must be at least 1")
    moments = [1.0]
    for r in range(1, k + 1):
        moments.append(moments[-1] * (p + 2 * (r - 1)))
    return MomentSequence(tuple(moments))
