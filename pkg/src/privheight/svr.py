"""Soft-margin epsilon-SVR trained through the dense QP solver.

The dual is solved in the split variables (alpha, alpha_star), each in
[0, C], with the single equality sum(alpha - alpha_star) = 0; the model
keeps the combined coefficients beta = alpha - alpha_star in [-C, C]
(recover alpha_i = max(beta_i, 0), alpha_star_i = max(-beta_i, 0)).
With epsilon = 0 the tube penalty vanishes and the dual collapses to an
n-variable QP directly in beta, halving the solve.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import qp
from .kernel import KernelParams, kernel_matrix

# coefficients at most this fraction of C count as non-support
SUPPORT_THRESHOLD = 1e-7
# free support vectors sit strictly between the box faces
FREE_MARGIN = 1e-6


class SvrError(ValueError):
    pass


class SvrTrainingError(RuntimeError):
    """QP failure during training, with solver diagnostics attached."""

    def __init__(self, message: str, solution: qp.QpSolution | None = None):
        super().__init__(message)
        self.solution = solution


@dataclass(frozen=True)
class SvrHyperparams:
    cost: float
    epsilon: float
    kernel: KernelParams

    def __post_init__(self) -> None:
        if not (self.cost > 0):
            raise SvrError(f"cost must be positive, got {self.cost}")
        if self.epsilon < 0:
            raise SvrError(f"epsilon must be nonnegative, got {self.epsilon}")


@dataclass
class SvrModel:
    support_vectors: np.ndarray        # (n_sv, d)
    dual_coefficients: np.ndarray      # (n_sv,) beta values
    bias: float
    hyperparams: SvrHyperparams
    training_diagnostics: dict = field(default_factory=dict)

    @property
    def feature_dim(self) -> int:
        return self.support_vectors.shape[1]


def _solve_dual(K, y, params, tolerance=1e-9, max_iterations=150):
    n = y.size
    C, eps = params.cost, params.epsilon
    if eps == 0.0:
        problem = qp.QpProblem(
            H=K,
            g=-y,
            A_eq=np.ones((1, n)),
            b_eq=[0.0],
            lower=np.full(n, -C),
            upper=np.full(n, C),
        )
        sol = qp.solve(problem, qp.QpSettings(tolerance, max_iterations))
        beta = sol.x
    else:
        H = np.block([[K, -K], [-K, K]])
        g = np.concatenate([eps - y, eps + y])
        a = np.concatenate([np.ones(n), -np.ones(n)])
        problem = qp.QpProblem(
            H=H,
            g=g,
            A_eq=a.reshape(1, -1),
            b_eq=[0.0],
            lower=np.zeros(2 * n),
            upper=np.full(2 * n, C),
        )
        sol = qp.solve(problem, qp.QpSettings(tolerance, max_iterations))
        beta = sol.x[:n] - sol.x[n:]
    if sol.status is qp.QpStatus.INFEASIBLE:
        raise SvrTrainingError("dual QP reported infeasible", sol)
    if sol.status is not qp.QpStatus.OPTIMAL and sol.kkt_residual > 1e-6 * (1.0 + C):
        raise SvrTrainingError(
            f"dual QP did not converge: kkt residual {sol.kkt_residual:.3e}", sol
        )
    return beta, sol


def _recover_bias(beta, y, margins, C, eps):
    """Average implied bias over free support vectors; KKT interval midpoint otherwise.

    margins[i] = sum_j beta_j k(x_j, x_i), the decision value without bias.
    """
    free = (np.abs(beta) > FREE_MARGIN * C) & (np.abs(beta) < (1 - FREE_MARGIN) * C)
    if np.any(free):
        implied = y[free] - margins[free] - eps * np.sign(beta[free])
        return float(np.mean(implied))
    # KKT interval: each point constrains b from one or both sides
    r = y - margins
    lower = [-np.inf]
    upper = [np.inf]
    for i, b_i in enumerate(beta):
        if b_i < C:                      # alpha_i < C
            lower.append(r[i] - eps)
        if b_i > 0:                      # alpha_i > 0
            upper.append(r[i] - eps)
        if b_i > -C:                     # alpha_star_i < C
            upper.append(r[i] + eps)
        if b_i < 0:                      # alpha_star_i > 0
            lower.append(r[i] + eps)
    lo, hi = max(lower), min(upper)
    if not np.isfinite(lo) and not np.isfinite(hi):
        return 0.0
    if not np.isfinite(lo):
        return hi
    if not np.isfinite(hi):
        return lo
    return 0.5 * (lo + hi)


def _snap_and_balance(beta, C):
    """Zero out sub-threshold coefficients and restore sum(beta) = 0 exactly."""
    beta = np.where(np.abs(beta) > SUPPORT_THRESHOLD * C, beta, 0.0)
    total = beta.sum()
    mass = np.abs(beta).sum()
    if mass > 0:
        beta = beta - total * np.abs(beta) / mass
        beta = np.clip(beta, -C, C)
    return beta


def svr_train(inputs, targets, params: SvrHyperparams) -> SvrModel:
    """Fit the epsilon-insensitive kernel regressor.

    Feature standardization is the caller's responsibility: the model
    operates on the vectors exactly as given.
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise SvrError(f"{X.shape[0]} inputs vs {y.size} targets")
    if X.shape[0] < 2:
        raise SvrError("need at least 2 training samples")
    if not np.all(np.isfinite(y)):
        raise SvrError("targets must be finite")
    if not np.all(np.isfinite(X)):
        raise SvrError("inputs must be finite")

    C, eps = params.cost, params.epsilon
    K = kernel_matrix(X, X, params.kernel)
    beta, sol = _solve_dual(K, y, params)
    beta = _snap_and_balance(beta, C)

    margins = K @ beta
    bias = _recover_bias(beta, y, margins, C, eps)

    keep = np.abs(beta) > SUPPORT_THRESHOLD * C
    model = SvrModel(
        support_vectors=X[keep].copy(),
        dual_coefficients=beta[keep].copy(),
        bias=bias,
        hyperparams=params,
        training_diagnostics={
            "kkt_residual": sol.kkt_residual,
            "n_support": int(keep.sum()),
            "qp_iterations": sol.iterations,
            "qp_status": sol.status.value,
        },
    )
    return model


def svr_predict(model: SvrModel, x) -> float:
    x = np.asarray(x, dtype=float).ravel()
    if x.size != model.feature_dim:
        raise SvrError(f"input dim {x.size} != model dim {model.feature_dim}")
    if model.dual_coefficients.size == 0:
        return model.bias
    k = kernel_matrix(model.support_vectors, x.reshape(1, -1), model.hyperparams.kernel)
    return float(model.dual_coefficients @ k[:, 0] + model.bias)


def svr_predict_batch(model: SvrModel, inputs) -> np.ndarray:
    X = np.asarray(inputs, dtype=float)
    if X.size == 0:
        return np.zeros(0)
    X = np.atleast_2d(X)
    if X.shape[1] != model.feature_dim:
        raise SvrError(f"input dim {X.shape[1]} != model dim {model.feature_dim}")
    if model.dual_coefficients.size == 0:
        return np.full(X.shape[0], model.bias)
    k = kernel_matrix(X, model.support_vectors, model.hyperparams.kernel)
    return k @ model.dual_coefficients + model.bias


def model_to_dict(model: SvrModel) -> dict:
    return {
        "support_vectors": model.support_vectors.tolist(),
        "dual_coefficients": model.dual_coefficients.tolist(),
        "bias": model.bias,
        "cost": model.hyperparams.cost,
        "epsilon": model.hyperparams.epsilon,
        "gamma_g": model.hyperparams.kernel.gamma_g,
        "feature_dim": model.feature_dim,
    }


def model_from_dict(d: dict) -> SvrModel:
    dim = int(d["feature_dim"])
    sv = np.asarray(d["support_vectors"], dtype=float).reshape(-1, dim)
    return SvrModel(
        support_vectors=sv,
        dual_coefficients=np.asarray(d["dual_coefficients"], dtype=float),
        bias=float(d["bias"]),
        hyperparams=SvrHyperparams(
            cost=float(d["cost"]),
            epsilon=float(d["epsilon"]),
            kernel=KernelParams(float(d["gamma_g"])),
        ),
    )


def save_model(model: SvrModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> SvrModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
