"""Worst-case tail probabilities from finite moment information.

Given the first k raw moments of a nonnegative scalar random variable q
and a threshold alpha, the tight bound

    sup { P(q >= alpha) : all laws on R+ matching the moments }

is the optimal value of a small semidefinite program whose dual
variables y_0..y_k are the coefficients of a polynomial certificate
p(q) = sum_r y_r q^r with p >= 1 above the threshold and p >= 0 on the
nonnegative axis.  For k = 1 and k = 2 the bound has closed forms
(Markov; a one-sided Chebyshev form valid at thresholds above M2/M1).
An independent linear-programming oracle over gridded discrete
distributions provides a primal lower bound for cross-checking.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.optimize

from . import ipm
from .ipm import Status, svec, svec_dim
from .moment_core import MomentSequence, is_feasible

__all__ = [
    "PolyBound",
    "SdpProblem",
    "SdpSolution",
    "markov_bound",
    "chebyshev_bound",
    "build_sdp",
    "solve_sdp",
    "oracle_worst_case",
]


def markov_bound(moments: MomentSequence, alpha: float) -> float:
    """min(1, M1/alpha): the tight one-moment bound on P(q >= alpha)."""
    if alpha <= 0:
        raise ValueError("threshold must be positive")
    return min(1.0, moments.moments[1] / alpha)


def chebyshev_bound(moments: MomentSequence, alpha: float) -> float:
    """One-sided two-moment tail bound.

    For alpha = (1 + delta) M1 with delta > 0 this is
    C2 / (C2 + delta^2) with C2 = (M2 - M1^2) / M1^2; it returns 1 for
    alpha <= M1.  The expression is the tight two-moment bound whenever
    alpha >= M2/M1; below that the tight value is M1/alpha instead, and
    this function intentionally keeps the Chebyshev form.
    """
    if alpha <= 0:
        raise ValueError("threshold must be positive")
    if moments.order < 2:
        raise ValueError("two moments are needed")
    if not is_feasible(moments):
        raise ValueError("infeasible moment sequence")
    m1, m2 = moments.moments[1], moments.moments[2]
    if m1 == 0.0:
        # all mass at zero, nothing above a positive threshold
        return 0.0
    if alpha <= m1:
        return 1.0
    c2 = max(0.0, (m2 - m1 * m1) / (m1 * m1))
    if c2 == 0.0:
        return 0.0
    delta = (alpha - m1) / m1
    return c2 / (c2 + delta * delta)


@dataclass(frozen=True)
class PolyBound:
    """Polynomial certificate p(q) = sum_r coeffs[r] q^r for a tail bound
    at `threshold`: p >= 1 above the threshold and p >= 0 on R+."""

    coeffs: tuple[float, ...]
    threshold: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")

    def __call__(self, q) -> np.ndarray:
        return np.polynomial.polynomial.polyval(q, self.coeffs)

    def min_over(self, lo: float, hi: float, n_grid: int = 10_000) -> float:
        """Minimum of p on [lo, hi] via a dense grid refined with the real
        critical points of p (root isolation on the derivative)."""
        grid = np.linspace(lo, hi, n_grid)
        candidates = [self(grid).min()]
        deriv = np.polynomial.polynomial.polyder(self.coeffs)
        if len(deriv) > 1 or (len(deriv) == 1 and deriv[0] != 0.0):
            roots = np.polynomial.polynomial.polyroots(deriv)
            real = roots[np.abs(roots.imag) < 1e-9].real
            inside = real[(real >= lo) & (real <= hi)]
            if inside.size:
                candidates.append(self(inside).min())
        return float(min(candidates))

    def is_valid(self, span: float = 100.0, tol: float = 1e-6) -> bool:
        """Certificate check: p >= 1 on (threshold, span*threshold] and
        p >= 0 on [0, threshold], within -tol."""
        a = self.threshold
        above = self.min_over(a, span * a)
        below = self.min_over(0.0, a)
        return above >= 1.0 - tol and below >= -tol


@dataclass(frozen=True)
class SdpProblem:
    """Equality-form encoding of the dual moment-bound program.

    Rows couple the free coefficients y to antidiagonal sums of the two
    (k+1) x (k+1) PSD blocks X and Z: odd antidiagonals of each block
    vanish; even antidiagonals equal binomial combinations of the y_r
    times powers of alpha (the X block certifies p - 1 >= 0 above the
    threshold via the Taylor shift q = alpha(1 + u^2); the Z block
    certifies p >= 0 on [0, alpha] via q = alpha t^2/(1 + t^2), stated
    in an equivalent diagonally rescaled form).  Constraint matrices are
    laid out for :mod:`drdetect.ipm`: `a_y` acts on y, `a_x` and `a_z`
    act on svec(X) and svec(Z), with right-hand side `b`.
    """

    moments: MomentSequence
    alpha: float
    a_y: np.ndarray
    a_x: np.ndarray
    a_z: np.ndarray
    b: np.ndarray
    labels: tuple[tuple[str, str, int], ...]

    def __post_init__(self) -> None:
        for arr in (self.a_y, self.a_x, self.a_z, self.b):
            np.asarray(arr).flags.writeable = False

    @property
    def order(self) -> int:
        return self.moments.order

    @property
    def block_size(self) -> int:
        return self.order + 1


def _antidiagonal_row(size: int, total: int) -> np.ndarray:
    """svec coefficients of the functional X -> sum_{i+j=total} X_ij."""
    e = np.zeros((size, size))
    for i in range(size):
        j = total - i
        if 0 <= j < size:
            e[i, j] = 1.0
    return svec(e)


def build_sdp(moments: MomentSequence, alpha: float) -> SdpProblem:
    """Assemble the dual moment-bound program for sup P(q >= alpha).

    Objective: minimize sum_r y_r M^r.  The constraint rows are, for
    blocks X and Z of size (k+1):

      X odd,  l = 1..k:   sum_{i+j=2l-1} X_ij = 0
      X even, l = 0:      X_00 = (y_0 - 1) + sum_{r>=1} y_r alpha^r
      X even, l = 1..k:   sum_{i+j=2l} X_ij = sum_{r=l..k} C(r,l) alpha^(r-l) y_r
      Z odd,  l = 1..k:   sum_{i+j=2l-1} Z_ij = 0
      Z even, l = 0..k:   sum_{i+j=2l} Z_ij = sum_{r=0..l} C(k-r,l-r) alpha^(r-l) y_r
    """
    if alpha <= 0:
        raise ValueError("threshold must be positive")
    if not is_feasible(moments):
        raise ValueError("infeasible moment sequence")
    k = moments.order
    size = k + 1
    d = svec_dim(size)
    rows_y: list[np.ndarray] = []
    rows_x: list[np.ndarray] = []
    rows_z: list[np.ndarray] = []
    rhs: list[float] = []
    labels: list[tuple[str, str, int]] = []
    zero_x = np.zeros(d)
    zero_y = np.zeros(size)

    for l in range(1, k + 1):
        rows_y.append(zero_y)
        rows_x.append(_antidiagonal_row(size, 2 * l - 1))
        rows_z.append(zero_x)
        rhs.append(0.0)
        labels.append(("X", "odd", l))

    y_row = np.array([-(alpha**r) for r in range(size)])
    rows_y.append(y_row)
    rows_x.append(_antidiagonal_row(size, 0))
    rows_z.append(zero_x)
    rhs.append(-1.0)
    labels.append(("X", "even", 0))
    for l in range(1, k + 1):
        y_row = np.zeros(size)
        for r in range(l, k + 1):
            y_row[r] = -comb(r, l) * alpha ** (r - l)
        rows_y.append(y_row)
        rows_x.append(_antidiagonal_row(size, 2 * l))
        rows_z.append(zero_x)
        rhs.append(0.0)
        labels.append(("X", "even", l))

    for l in range(1, k + 1):
        rows_y.append(zero_y)
        rows_x.append(zero_x)
        rows_z.append(_antidiagonal_row(size, 2 * l - 1))
        rhs.append(0.0)
        labels.append(("Z", "odd", l))
    for l in range(0, k + 1):
        y_row = np.zeros(size)
        for r in range(0, l + 1):
            y_row[r] = -comb(k - r, l - r) * float(alpha) ** (r - l)
        rows_y.append(y_row)
        rows_x.append(zero_x)
        rows_z.append(_antidiagonal_row(size, 2 * l))
        rhs.append(0.0)
        labels.append(("Z", "even", l))

    return SdpProblem(
        moments=moments,
        alpha=float(alpha),
        a_y=np.vstack(rows_y),
        a_x=np.vstack(rows_x),
        a_z=np.vstack(rows_z),
        b=np.array(rhs),
        labels=tuple(labels),
    )


@dataclass(frozen=True)
class SdpSolution:
    """Solver output: the worst-case probability and its certificate."""

    objective: float
    y: PolyBound
    duality_gap: float
    iterations: int
    status: Status

    def to_csv_row(self) -> str:
        """Serialize as ``k, alpha, objective, gap, iterations, status, y0..yk``."""
        k = len(self.y.coeffs) - 1
        fields = [
            str(k),
            format(self.y.threshold, ".17g"),
            format(self.objective, ".17g"),
            format(self.duality_gap, ".17g"),
            str(self.iterations),
            self.status.value,
        ] + [format(c, ".17g") for c in self.y.coeffs]
        return ",".join(fields)


def solve_sdp(prob: SdpProblem, tol: float = 1e-9) -> SdpSolution:
    """Solve the moment-bound program; returns the worst-case probability
    clamped to [0, 1] together with the polynomial certificate.

    The program is solved in units of the threshold (q -> q/alpha maps
    the bound onto the same program at threshold 1), which keeps all
    constraint coefficients order one.  Any residual infeasibility of
    the returned certificate is absorbed into the constant coefficient,
    so the reported objective is always a certified upper bound.
    """
    alpha = prob.alpha
    k = prob.order
    scaled_moments = prob.moments.scaled(1.0 / alpha)
    scaled = build_sdp(scaled_moments, 1.0)
    c_vec = np.array(scaled_moments.moments)
    size = k + 1
    conic = ipm.ConicProblem(
        c_free=c_vec,
        c_blocks=(np.zeros((size, size)), np.zeros((size, size))),
        a_free=scaled.a_y,
        a_blocks=(scaled.a_x, scaled.a_z),
        b=scaled.b,
    )
    init_free = np.zeros(size)
    init_free[0] = 1.0
    init_scale = 1.0 + float(np.sum(np.abs(c_vec)))
    result = ipm.solve(
        conic, tol=tol, init_scale=init_scale, init_free=init_free
    )

    y_scaled = result.x_free
    status = result.status
    # certificate polish: absorb solver residual into the constant term
    cert_scaled = PolyBound(tuple(y_scaled), 1.0)
    slack = min(
        cert_scaled.min_over(1.0, 100.0) - 1.0,
        cert_scaled.min_over(0.0, 1.0),
    )
    shift = max(0.0, -slack)
    if shift > 1e-5:
        status = Status.NUMERICAL_TROUBLE
    y_scaled = y_scaled.copy()
    y_scaled[0] += shift

    objective = float(np.clip(np.dot(y_scaled, c_vec), 0.0, 1.0))
    coeffs = tuple(y_scaled[r] / alpha**r for r in range(size))
    return SdpSolution(
        objective=objective,
        y=PolyBound(coeffs, alpha),
        duality_gap=result.gap,
        iterations=result.iterations,
        status=status,
    )


def oracle_worst_case(
    moments: MomentSequence, alpha: float, grid: int = 2000
) -> float:
    """Primal lower bound on sup P(q >= alpha) by linear programming.

    Maximizes the mass at or above the threshold over discrete
    distributions supported on a fixed grid, subject to exact moment
    matching.  Atom locations are a uniform grid on [0, 10 alpha] plus a
    geometric refinement near zero, with 0 and alpha always included
    (extremal measures place mass exactly at the threshold).  A basic
    optimal solution uses at most k+1 atoms.  Converges to the tight
    bound from below as the grid is refined.
    """
    if alpha <= 0:
        raise ValueError("threshold must be positive")
    k = moments.order
    if k > 4:
        raise ValueError("oracle supports k <= 4 only")
    if grid < 100:
        raise ValueError("grid must have at least 100 points")
    hi = 10.0 * alpha
    n_geo = grid // 4
    # 0, the threshold, and the mean are always candidate atoms: extremal
    # measures touch the threshold, and point masses sit at the mean
    pts = np.unique(
        np.concatenate(
            [
                np.linspace(0.0, hi, grid - n_geo),
                alpha * np.geomspace(1e-4, 10.0, n_geo),
                [0.0, alpha, moments.moments[1]],
            ]
        )
    )
    # rows scaled by hi^r so all coefficients are order one
    a_eq = np.vstack([(pts / hi) ** r for r in range(k + 1)])
    b_eq = np.array([m / hi**r for r, m in enumerate(moments.moments)])
    objective = -(pts >= alpha * (1.0 - 1e-12)).astype(float)

    def moment_feasible(res, tol: float) -> bool:
        if not res.success or res.x is None:
            return False
        return float(np.abs(a_eq @ res.x - b_eq).max()) <= tol

    # the simplex can stall, or even report an infeasible basis as optimal,
    # on the badly scaled near-duplicate columns of the geometric
    # refinement; every candidate measure is therefore verified against the
    # moment constraints before it is trusted, with the interior-point
    # variant as the fallback
    res = scipy.optimize.linprog(
        objective, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs"
    )
    if not moment_feasible(res, 1e-7):
        res = scipy.optimize.linprog(
            objective, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs-ipm"
        )
    if not moment_feasible(res, 1e-7):
        # boundary sequences may need a whisker of slack on the equalities
        eps = 1e-9 * (1.0 + np.abs(b_eq))
        res = scipy.optimize.linprog(
            objective,
            A_ub=np.vstack([a_eq, -a_eq]),
            b_ub=np.concatenate([b_eq + eps, -(b_eq - eps)]),
            bounds=(0, None),
            method="highs",
        )
        if not moment_feasible(res, float(eps.max()) + 1e-7):
            raise ValueError(
                "moment sequence is not representable on the oracle grid"
            )
    return float(min(1.0, -res.fun))
