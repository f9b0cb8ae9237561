"""Dense convex quadratic programming.

Solves   minimize  1/2 x'Hx + g'x
         subject to  A_eq x = b_eq,   lower <= x <= upper

with a primal-dual interior-point method (Mehrotra predictor-corrector)
on dense matrices.  H may be positive semidefinite, not just definite:
a diagonal regularization of 1e-10 * trace(H)/n is added before each
factorization.  Infinite bounds are marked with +-numpy.inf (the
"unbounded" sentinel), never with large finite floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg as sla


class QpStatus(Enum):
    OPTIMAL = "optimal"
    MAX_ITERATIONS = "max_iterations"
    INFEASIBLE = "infeasible"


class QpError(ValueError):
    """Malformed problem: bad dimensions or violated invariants."""


@dataclass(frozen=True)
class QpSettings:
    tolerance: float = 1e-8
    max_iterations: int = 100


@dataclass
class QpProblem:
    """Standard-form dense convex QP.

    H : (n, n) symmetric PSD quadratic term
    g : (n,) linear term
    A_eq, b_eq : equality constraints (may be None)
    lower, upper : componentwise bounds, +-inf where absent (may be None)
    """

    H: np.ndarray
    g: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.H = np.asarray(self.H, dtype=float)
        self.g = np.asarray(self.g, dtype=float).ravel()
        n = self.g.size
        if self.H.shape != (n, n):
            raise QpError(f"H must be ({n}, {n}), got {self.H.shape}")
        if self.A_eq is not None:
            self.A_eq = np.atleast_2d(np.asarray(self.A_eq, dtype=float))
            self.b_eq = np.asarray(self.b_eq, dtype=float).ravel()
            if self.A_eq.shape[1] != n:
                raise QpError("A_eq column count does not match x dimension")
            if self.b_eq.size != self.A_eq.shape[0]:
                raise QpError("b_eq length does not match A_eq row count")
            if self.A_eq.shape[0] > n:
                raise QpError("more equality constraints than variables")
        elif self.b_eq is not None:
            raise QpError("b_eq given without A_eq")
        self.lower = self._as_bound(self.lower, n, -np.inf)
        self.upper = self._as_bound(self.upper, n, np.inf)
        if np.any(self.lower > self.upper):
            raise QpError("lower bound exceeds upper bound")

    @staticmethod
    def _as_bound(v, n: int, fill: float) -> np.ndarray:
        if v is None:
            return np.full(n, fill)
        v = np.asarray(v, dtype=float).ravel()
        if v.size != n:
            raise QpError("bound length does not match x dimension")
        return v.copy()

    @property
    def n(self) -> int:
        return self.g.size

    @property
    def m_eq(self) -> int:
        return 0 if self.A_eq is None else self.A_eq.shape[0]

    def validate(self, check_psd: bool = False) -> None:
        """Check the symmetry (and optionally PSD-ness) invariants."""
        asym = float(np.max(np.abs(self.H - self.H.T))) if self.n else 0.0
        if asym > 1e-10:
            raise QpError(f"H is not symmetric: max asymmetry {asym:.3e}")
        if check_psd and self.n:
            scale = float(np.linalg.norm(self.H, 2))
            lam_min = float(np.linalg.eigvalsh(self.H)[0])
            if lam_min < -1e-8 * max(scale, 1.0):
                raise QpError(f"H is not PSD: min eigenvalue {lam_min:.3e}")

    def objective(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float).ravel()
        return float(0.5 * x @ self.H @ x + self.g @ x)


@dataclass
class QpSolution:
    x: np.ndarray
    eq_multipliers: np.ndarray
    lower_multipliers: np.ndarray
    upper_multipliers: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    status: QpStatus


def kkt_residual(problem: QpProblem, solution: QpSolution) -> float:
    """Max violation of stationarity, feasibility and complementarity.

    Zero (to round-off) at an exact optimum.
    """
    x = np.asarray(solution.x, dtype=float).ravel()
    if x.size != problem.n:
        raise QpError("solution dimension does not match problem")
    zl = np.asarray(solution.lower_multipliers, dtype=float).ravel()
    zu = np.asarray(solution.upper_multipliers, dtype=float).ravel()
    if zl.size != problem.n or zu.size != problem.n:
        raise QpError("bound multiplier dimension does not match problem")
    y = np.asarray(solution.eq_multipliers, dtype=float).ravel()
    if y.size != problem.m_eq:
        raise QpError("equality multiplier dimension does not match problem")

    grad = problem.H @ x + problem.g - zl + zu
    if problem.m_eq:
        grad = grad + problem.A_eq.T @ y
        primal_eq = float(np.max(np.abs(problem.A_eq @ x - problem.b_eq)))
    else:
        primal_eq = 0.0

    lo, up = problem.lower, problem.upper
    has_l, has_u = np.isfinite(lo), np.isfinite(up)
    viol_l = float(np.max((lo - x)[has_l], initial=0.0))
    viol_u = float(np.max((x - up)[has_u], initial=0.0))
    comp_l = float(np.max(np.abs(zl[has_l] * (x - lo)[has_l]), initial=0.0))
    comp_u = float(np.max(np.abs(zu[has_u] * (up - x)[has_u]), initial=0.0))
    dual_feas = float(max(np.max(-zl, initial=0.0), np.max(-zu, initial=0.0)))

    return max(
        float(np.max(np.abs(grad), initial=0.0)),
        primal_eq,
        viol_l,
        viol_u,
        comp_l,
        comp_u,
        dual_feas,
    )


def _check_equality_feasibility(A, b, lo, up, tol):
    """Cheap infeasibility screens: inconsistent rows, row-interval conflicts."""
    # inconsistent equality system regardless of bounds
    x_ls, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.max(np.abs(A @ x_ls - b), initial=0.0) > tol:
        return False
    # per-row achievable interval under the box; select bounds before
    # multiplying so 0-coefficient entries never touch an infinite bound
    for row, rhs in zip(A, b):
        best_hi = np.where(row > 0, up, np.where(row < 0, lo, 0.0))
        best_lo = np.where(row > 0, lo, np.where(row < 0, up, 0.0))
        hi = float(np.sum(row * best_hi))
        lo_val = float(np.sum(row * best_lo))
        if rhs < lo_val - tol or rhs > hi + tol:
            return False
    return True


def _initial_point(lo, up, has_l, has_u):
    x = np.zeros(lo.size)
    both = has_l & has_u
    x[both] = 0.5 * (lo[both] + up[both])
    only_l = has_l & ~has_u
    x[only_l] = lo[only_l] + 1.0
    only_u = has_u & ~has_l
    x[only_u] = up[only_u] - 1.0
    return x


def _max_step(v, dv):
    """Largest alpha in (0, 1] keeping v + alpha*dv >= 0."""
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))


def solve(problem: QpProblem, settings: QpSettings = QpSettings()) -> QpSolution:
    """Solve the QP; returns the global minimizer when status is OPTIMAL."""
    problem.validate()
    n = problem.n
    H, g = problem.H, problem.g
    lo, up = problem.lower.copy(), problem.upper.copy()
    m = problem.m_eq
    A = problem.A_eq if m else np.zeros((0, n))
    b = problem.b_eq if m else np.zeros(0)

    def _make(x, y, zl, zu, iters, status):
        sol = QpSolution(
            x=x,
            eq_multipliers=y,
            lower_multipliers=zl,
            upper_multipliers=zu,
            objective=problem.objective(x),
            kkt_residual=0.0,
            iterations=iters,
            status=status,
        )
        sol.kkt_residual = kkt_residual(problem, sol)
        return sol

    feas_tol = max(settings.tolerance, 1e-9) * (1.0 + np.max(np.abs(b), initial=0.0))
    if m and not _check_equality_feasibility(A, b, lo, up, feas_tol):
        x0 = np.clip(np.zeros(n), lo, up)
        return _make(x0, np.zeros(m), np.zeros(n), np.zeros(n), 0, QpStatus.INFEASIBLE)

    # eliminate variables fixed by equal bounds
    fixed = np.isfinite(lo) & np.isfinite(up) & (up - lo <= 0)
    if np.any(fixed):
        free = ~fixed
        xf = lo[fixed]
        sub = QpProblem(
            H=H[np.ix_(free, free)],
            g=g[free] + H[np.ix_(free, fixed)] @ xf,
            A_eq=A[:, free] if m else None,
            b_eq=(b - A[:, fixed] @ xf) if m else None,
            lower=lo[free],
            upper=up[free],
        )
        inner = solve(sub, settings)
        x = np.empty(n)
        x[fixed] = xf
        x[free] = inner.x
        zl = np.zeros(n)
        zu = np.zeros(n)
        zl[free] = inner.lower_multipliers
        zu[free] = inner.upper_multipliers
        # multipliers of pinned variables absorb their stationarity residual
        grad_fixed = (H @ x + g)[fixed]
        if m:
            grad_fixed = grad_fixed + (A.T @ inner.eq_multipliers)[fixed]
        zl[fixed] = np.maximum(grad_fixed, 0.0)
        zu[fixed] = np.maximum(-grad_fixed, 0.0)
        return _make(x, inner.eq_multipliers, zl, zu, inner.iterations, inner.status)

    has_l, has_u = np.isfinite(lo), np.isfinite(up)
    iL = np.flatnonzero(has_l)
    iU = np.flatnonzero(has_u)
    n_act = iL.size + iU.size

    reg = 1e-10 * (np.trace(H) / n if n else 0.0)
    if reg <= 0:
        reg = 1e-12

    x = _initial_point(lo, up, has_l, has_u)
    y = np.zeros(m)
    zl = np.ones(iL.size)
    zu = np.ones(iU.size)

    best = None
    for it in range(settings.max_iterations):
        sl = x[iL] - lo[iL]
        su = up[iU] - x[iU]
        # keep slacks strictly positive against round-off
        sl = np.maximum(sl, 1e-300)
        su = np.maximum(su, 1e-300)

        rd = H @ x + g
        if m:
            rd = rd + A.T @ y
        rd_full = rd.copy()
        rd_full[iL] -= zl
        rd_full[iU] += zu
        rp = A @ x - b if m else np.zeros(0)

        comp = 0.0
        if n_act:
            comp = max(
                np.max(np.abs(sl * zl), initial=0.0),
                np.max(np.abs(su * zu), initial=0.0),
            )
        res = max(
            float(np.max(np.abs(rd_full), initial=0.0)),
            float(np.max(np.abs(rp), initial=0.0)),
            comp,
        )
        if best is None or res < best[0]:
            best = (res, x.copy(), y.copy(), zl.copy(), zu.copy(), it)
        if res <= settings.tolerance:
            zl_full = np.zeros(n)
            zu_full = np.zeros(n)
            zl_full[iL] = zl
            zu_full[iU] = zu
            return _make(x, y, zl_full, zu_full, it, QpStatus.OPTIMAL)

        mu = (sl @ zl + su @ zu) / n_act if n_act else 0.0

        d = np.zeros(n)
        np.add.at(d, iL, zl / sl)
        np.add.at(d, iU, zu / su)

        K = H + np.diag(d + reg)
        jitter = reg
        while True:
            try:
                chol = sla.cho_factor(K, lower=True, check_finite=False)
                break
            except np.linalg.LinAlgError:
                jitter = max(jitter * 100.0, 1e-12)
                if jitter > 1e6 * max(1.0, np.max(np.abs(H))):
                    raise QpError("factorization failed: H appears indefinite")
                K = H + np.diag(d + jitter)

        def _direction(rcl, rcu):
            r1 = -rd_full.copy()
            np.add.at(r1, iL, rcl / sl)
            np.subtract.at(r1, iU, rcu / su)
            t = sla.cho_solve(chol, r1, check_finite=False)
            if m:
                W = sla.cho_solve(chol, A.T, check_finite=False)
                S = A @ W
                dy = np.linalg.solve(S, A @ t + rp)
                dx = t - W @ dy
            else:
                dy = np.zeros(0)
                dx = t
            dzl = (rcl - zl * dx[iL]) / sl
            dzu = (rcu + zu * dx[iU]) / su
            return dx, dy, dzl, dzu

        # predictor
        rcl_aff = -sl * zl
        rcu_aff = -su * zu
        dx_a, dy_a, dzl_a, dzu_a = _direction(rcl_aff, rcu_aff)

        if n_act:
            ap = min(_max_step(sl, dx_a[iL]), _max_step(su, -dx_a[iU]))
            ad = min(_max_step(zl, dzl_a), _max_step(zu, dzu_a))
            mu_aff = (
                (sl + ap * dx_a[iL]) @ (zl + ad * dzl_a)
                + (su - ap * dx_a[iU]) @ (zu + ad * dzu_a)
            ) / n_act
            sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
            sigma = min(max(sigma, 0.0), 1.0)
            # corrector
            rcl = rcl_aff - dx_a[iL] * dzl_a + sigma * mu
            rcu = rcu_aff + dx_a[iU] * dzu_a + sigma * mu
            dx, dy, dzl, dzu = _direction(rcl, rcu)
            tau = max(0.995, 1.0 - mu)
            ap = min(1.0, tau * min(_max_step(sl, dx[iL]), _max_step(su, -dx[iU])))
            ad = min(1.0, tau * min(_max_step(zl, dzl), _max_step(zu, dzu)))
        else:
            dx, dy, dzl, dzu = dx_a, dy_a, dzl_a, dzu_a
            ap = ad = 1.0

        x = x + ap * dx
        y = y + ad * dy
        zl = zl + ad * dzl
        zu = zu + ad * dzu

    _, xb, yb, zlb, zub, _ = best
    zl_full = np.zeros(n)
    zu_full = np.zeros(n)
    zl_full[iL] = zlb
    zu_full[iU] = zub
    return _make(xb, yb, zl_full, zu_full, settings.max_iterations, QpStatus.MAX_ITERATIONS)
