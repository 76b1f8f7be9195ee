"""Dense primal-dual interior-point solver for small conic programs.

Handles problems in the standard form

    minimize    c_f . u  +  sum_j <C_j, X_j>
    subject to  A_f u    +  sum_j A_j svec(X_j)  =  b
                X_j positive semidefinite,  u free,

with a handful of free variables and dense positive-semidefinite blocks
of single-digit size.  The scheme is the usual infeasible-start Mehrotra
predictor-corrector with Nesterov-Todd scaling; per iteration one
factorization of the (m + f) x (m + f) augmented KKT system.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "Status",
    "ConicProblem",
    "ConicSolution",
    "svec",
    "smat",
    "svec_dim",
    "solve",
]

_SQRT2 = math.sqrt(2.0)


class Status(enum.Enum):
    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    NUMERICAL_TROUBLE = "numerical_trouble"


def svec_dim(n: int) -> int:
    return n * (n + 1) // 2


def svec(mat: np.ndarray) -> np.ndarray:
    """Stack the upper triangle column by column, off-diagonal entries
    scaled by sqrt(2), so that svec(M) . svec(N) = <M, N>."""
    n = mat.shape[0]
    out = np.empty(svec_dim(n))
    idx = 0
    for j in range(n):
        for i in range(j + 1):
            out[idx] = mat[i, j] if i == j else _SQRT2 * mat[i, j]
            idx += 1
    return out


def smat(vec: np.ndarray) -> np.ndarray:
    """Inverse of :func:`svec`."""
    d = vec.shape[0]
    n = int(round((math.sqrt(8 * d + 1) - 1) / 2))
    if svec_dim(n) != d:
        raise ValueError(f"length {d} is not a triangular number")
    out = np.empty((n, n))
    idx = 0
    for j in range(n):
        for i in range(j + 1):
            val = vec[idx] if i == j else vec[idx] / _SQRT2
            out[i, j] = val
            out[j, i] = val
            idx += 1
    return out


def _sym_kron(w: np.ndarray) -> np.ndarray:
    """Matrix of the congruence map M -> W M W in svec coordinates."""
    n = w.shape[0]
    d = svec_dim(n)
    cols = np.empty((d, d))
    basis = np.zeros(d)
    for i in range(d):
        basis[i] = 1.0
        cols[:, i] = svec(w @ smat(basis) @ w)
        basis[i] = 0.0
    return cols


def _sym(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.T)


def _psd_sqrt_pair(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(M^{1/2}, M^{-1/2}) of a symmetric positive-definite matrix."""
    vals, vecs = np.linalg.eigh(mat)
    if vals[0] <= 0:
        raise np.linalg.LinAlgError("matrix not positive definite")
    root = np.sqrt(vals)
    return (vecs * root) @ vecs.T, (vecs / root) @ vecs.T


@dataclass(frozen=True)
class ConicProblem:
    """Conic program data; see the module docstring for the layout."""

    c_free: np.ndarray
    c_blocks: tuple[np.ndarray, ...]
    a_free: np.ndarray
    a_blocks: tuple[np.ndarray, ...]
    b: np.ndarray

    def __post_init__(self) -> None:
        c_free = np.atleast_1d(np.asarray(self.c_free, dtype=float))
        a_free = np.asarray(self.a_free, dtype=float)
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        c_blocks = tuple(_sym(np.asarray(c, dtype=float)) for c in self.c_blocks)
        a_blocks = tuple(np.asarray(a, dtype=float) for a in self.a_blocks)
        m = b.shape[0]
        if a_free.shape != (m, c_free.shape[0]):
            raise ValueError("free-variable constraint matrix has wrong shape")
        if len(c_blocks) != len(a_blocks):
            raise ValueError("one constraint matrix is needed per PSD block")
        for c_mat, a_mat in zip(c_blocks, a_blocks):
            if a_mat.shape != (m, svec_dim(c_mat.shape[0])):
                raise ValueError("PSD-block constraint matrix has wrong shape")
        for arr in (c_free, a_free, b) + c_blocks + a_blocks:
            arr.flags.writeable = False
        object.__setattr__(self, "c_free", c_free)
        object.__setattr__(self, "c_blocks", c_blocks)
        object.__setattr__(self, "a_free", a_free)
        object.__setattr__(self, "a_blocks", a_blocks)
        object.__setattr__(self, "b", b)

    @property
    def block_sizes(self) -> tuple[int, ...]:
        return tuple(c.shape[0] for c in self.c_blocks)


@dataclass
class ConicSolution:
    x_free: np.ndarray
    x_blocks: list[np.ndarray]
    s_blocks: list[np.ndarray]
    dual: np.ndarray
    primal_objective: float
    dual_objective: float
    gap: float
    residual_primal: float
    residual_dual: float
    iterations: int
    status: Status


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest a with X + a dX psd, for X positive definite."""
    try:
        chol = np.linalg.cholesky(x)
    except np.linalg.LinAlgError:
        return 0.0
    inner = scipy.linalg.solve_triangular(chol, dx, lower=True)
    inner = scipy.linalg.solve_triangular(chol, inner.T, lower=True)
    lo = float(np.linalg.eigvalsh(_sym(inner))[0])
    if lo >= -1e-14:
        return np.inf
    return -1.0 / lo


def _lyap_solve(q: np.ndarray, d: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve (lam Y + Y lam) / 2 = rhs for symmetric Y, lam = Q diag(d) Q'."""
    g = q.T @ rhs @ q
    denom = 0.5 * (d[:, None] + d[None, :])
    return q @ (g / denom) @ q.T


def solve(
    prob: ConicProblem,
    tol: float = 1e-9,
    max_iter: int = 100,
    init_scale: float = 1.0,
    init_free: np.ndarray | None = None,
) -> ConicSolution:
    """Run the predictor-corrector iteration until the primal/dual
    residuals and the complementarity gap all fall below `tol` (relative
    to the problem scale)."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    m = prob.b.shape[0]
    f = prob.c_free.shape[0]
    sizes = prob.block_sizes
    n_tot = sum(sizes)
    c_cone = [svec(c) for c in prob.c_blocks]
    c_norm = 1.0 + math.sqrt(
        float(np.dot(prob.c_free, prob.c_free))
        + sum(float(np.dot(cv, cv)) for cv in c_cone)
    )
    b_norm = 1.0 + float(np.linalg.norm(prob.b))

    u = (
        np.zeros(f)
        if init_free is None
        else np.array(init_free, dtype=float, copy=True)
    )
    if u.shape != (f,):
        raise ValueError("initial free variables have wrong shape")
    xs = [init_scale * np.eye(n) for n in sizes]
    ss = [np.eye(n) for n in sizes]
    lam = np.zeros(m)

    def residuals(u, xs, ss, lam):
        rp = prob.b - prob.a_free @ u
        for a_mat, x in zip(prob.a_blocks, xs):
            rp = rp - a_mat @ svec(x)
        rd_free = prob.c_free - prob.a_free.T @ lam
        rd_cone = [
            cv - a_mat.T @ lam - svec(s)
            for cv, a_mat, s in zip(c_cone, prob.a_blocks, ss)
        ]
        return rp, rd_free, rd_cone

    def metrics(u, xs, ss, lam):
        rp, rd_free, rd_cone = residuals(u, xs, ss, lam)
        gap = sum(float(np.sum(x * s)) for x, s in zip(xs, ss))
        pobj = float(np.dot(prob.c_free, u)) + sum(
            float(np.sum(c * x)) for c, x in zip(prob.c_blocks, xs)
        )
        dobj = float(np.dot(prob.b, lam))
        res_p = float(np.linalg.norm(rp)) / b_norm
        res_d = (
            math.sqrt(
                float(np.dot(rd_free, rd_free))
                + sum(float(np.dot(r, r)) for r in rd_cone)
            )
            / c_norm
        )
        rel_gap = gap / max(1.0, abs(pobj), abs(dobj))
        return rp, rd_free, rd_cone, gap, pobj, dobj, res_p, res_d, rel_gap

    best = None
    best_score = np.inf
    status = Status.MAX_ITER
    iterations = 0

    for iteration in range(max_iter + 1):
        rp, rd_free, rd_cone, gap, pobj, dobj, res_p, res_d, rel_gap = metrics(
            u, xs, ss, lam
        )
        iterations = iteration
        score = max(res_p, res_d, rel_gap)
        if score < best_score:
            best_score = score
            best = (
                u.copy(),
                [x.copy() for x in xs],
                [s.copy() for s in ss],
                lam.copy(),
            )
        if res_p <= tol and res_d <= tol and rel_gap <= tol:
            status = Status.OPTIMAL
            break
        if iteration == max_iter:
            status = Status.MAX_ITER
            break

        mu = gap / n_tot

        # Nesterov-Todd scaling per block: W S W = X.
        try:
            scal = []
            for x, s in zip(xs, ss):
                s_half, s_ihalf = _psd_sqrt_pair(s)
                t_half, _ = _psd_sqrt_pair(_sym(s_half @ x @ s_half))
                w = _sym(s_ihalf @ t_half @ s_ihalf)
                r_half, r_ihalf = _psd_sqrt_pair(w)
                lam_mat = _sym(
                    0.5 * (r_ihalf @ x @ r_ihalf + r_half @ s @ r_half)
                )
                d_l, q_l = np.linalg.eigh(lam_mat)
                if d_l[0] <= 0:
                    raise np.linalg.LinAlgError("scaled point not positive")
                scal.append((w, r_half, r_ihalf, lam_mat, d_l, q_l))
        except np.linalg.LinAlgError:
            status = Status.NUMERICAL_TROUBLE
            break

        e_mats = [_sym_kron(w) for (w, *_rest) in scal]
        schur = np.zeros((m, m))
        for a_mat, e_mat in zip(prob.a_blocks, e_mats):
            schur += a_mat @ e_mat @ a_mat.T
        kkt = np.zeros((m + f, m + f))
        kkt[:m, :m] = schur
        kkt[:m, m:] = prob.a_free
        kkt[m:, :m] = prob.a_free.T
        try:
            with warnings.catch_warnings():
                # a singular KKT system surfaces as non-finite Newton steps,
                # handled below; the factorization warning is redundant
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                lu = scipy.linalg.lu_factor(kkt)
        except (ValueError, scipy.linalg.LinAlgError):
            status = Status.NUMERICAL_TROUBLE
            break

        def newton(rp_v, rdf_v, rdc_v, rc_v):
            rhs = np.concatenate(
                [
                    rp_v
                    + sum(
                        a_mat @ (e_mat @ r - c)
                        for a_mat, e_mat, r, c in zip(
                            prob.a_blocks, e_mats, rdc_v, rc_v
                        )
                    ),
                    rdf_v,
                ]
            )
            sol = scipy.linalg.lu_solve(lu, rhs)
            if not np.all(np.isfinite(sol)):
                raise np.linalg.LinAlgError("singular KKT system")
            # one step of iterative refinement on the KKT solve
            sol += scipy.linalg.lu_solve(lu, rhs - kkt @ sol)
            dlam, du = sol[:m], sol[m:]
            dss, dxs = [], []
            for a_mat, e_mat, r, c in zip(prob.a_blocks, e_mats, rdc_v, rc_v):
                ds = r - a_mat.T @ dlam
                dx = c - e_mat @ ds
                dss.append(smat(ds))
                dxs.append(smat(dx))
            return du, dxs, dss, dlam

        # predictor: aim at the boundary (sigma = 0)
        try:
            rc_aff = [-svec(x) for x in xs]
            du_a, dxs_a, dss_a, dlam_a = newton(rp, rd_free, rd_cone, rc_aff)
        except np.linalg.LinAlgError:
            status = Status.NUMERICAL_TROUBLE
            break
        ap = min((_max_step(x, dx) for x, dx in zip(xs, dxs_a)), default=np.inf)
        ad = min((_max_step(s, ds) for s, ds in zip(ss, dss_a)), default=np.inf)
        ap = min(1.0, ap)
        ad = min(1.0, ad)
        gap_aff = sum(
            float(np.sum((x + ap * dx) * (s + ad * ds)))
            for x, dx, s, ds in zip(xs, dxs_a, ss, dss_a)
        )
        mu_aff = max(gap_aff, 0.0) / n_tot
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))

        # corrector in the scaled space, with the Mehrotra cross term
        rc = []
        for (w, r_half, r_ihalf, lam_mat, d_l, q_l), dx_a, ds_a in zip(
            scal, dxs_a, dss_a
        ):
            dxi = r_ihalf @ dx_a @ r_ihalf
            dsg = r_half @ ds_a @ r_half
            rhs_mat = (
                sigma * mu * np.eye(lam_mat.shape[0])
                - lam_mat @ lam_mat
                - 0.5 * (dxi @ dsg + dsg @ dxi)
            )
            sol_mat = _lyap_solve(q_l, d_l, _sym(rhs_mat))
            rc.append(svec(_sym(r_half @ sol_mat @ r_half)))
        try:
            du, dxs, dss, dlam = newton(rp, rd_free, rd_cone, rc)
        except np.linalg.LinAlgError:
            status = Status.NUMERICAL_TROUBLE
            break

        eta = 0.98
        ap = min((_max_step(x, dx) for x, dx in zip(xs, dxs)), default=np.inf)
        ad = min((_max_step(s, ds) for s, ds in zip(ss, dss)), default=np.inf)
        ap = min(1.0, eta * ap)
        ad = min(1.0, eta * ad)
        if ap < 1e-10 and ad < 1e-10:
            status = Status.NUMERICAL_TROUBLE
            break

        u = u + ap * du
        lam = lam + ad * dlam
        xs = [_sym(x + ap * dx) for x, dx in zip(xs, dxs)]
        ss = [_sym(s + ad * ds) for s, ds in zip(ss, dss)]
        if not all(np.all(np.isfinite(arr)) for arr in xs + ss) or not (
            np.all(np.isfinite(u)) and np.all(np.isfinite(lam))
        ):
            status = Status.NUMERICAL_TROUBLE
            break

    if status is not Status.OPTIMAL and best is not None:
        u, xs, ss, lam = best
    _, _, _, gap, pobj, dobj, res_p, res_d, _ = metrics(u, xs, ss, lam)
    return ConicSolution(
        x_free=u,
        x_blocks=list(xs),
        s_blocks=list(ss),
        dual=lam,
        primal_objective=pobj,
        dual_objective=dobj,
        gap=gap,
        residual_primal=res_p,
        residual_dual=res_d,
        iterations=iterations,
        status=status,
    )
