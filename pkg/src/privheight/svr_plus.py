"""Epsilon-SVR+ : SVR with privileged information at training time.

Two correcting functions over the privileged space replace the slack
variables: the tube violations above and below are modelled as
xi1(x*) = <w1, x*> + b1 and xi2(x*) = <w2, x*> + b2, both constrained
nonnegative on the training set.  Prediction uses only the decision
part, so privileged features are never needed at test time.

The solver works on the dual; see docs/method_notes.md for the full
derivation and the resulting QP blocks.  In short, with multipliers
alpha, alpha_star for the tube constraints and nu, nu_star for the
nonnegativity of the correcting functions, the dual is a QP in
v = [alpha, alpha_star, nu, nu_star] >= 0 with equalities
sum(alpha - alpha_star) = 0 and sum(alpha + nu) = sum(alpha_star +
nu_star) = l*C, and the correcting expansions are recovered from
delta = alpha + nu - C and delta_star = alpha_star + nu_star - C.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import qp
from .kernel import KernelParams, kernel_matrix
from .svr import SUPPORT_THRESHOLD, SvrError, SvrTrainingError


@dataclass(frozen=True)
class SvrPlusHyperparams:
    cost: float
    epsilon: float
    gamma_correcting: float            # weight on the correcting-space norms
    kernel_decision: KernelParams
    kernel_correcting: KernelParams

    def __post_init__(self) -> None:
        if not (self.cost > 0):
            raise SvrError(f"cost must be positive, got {self.cost}")
        if self.epsilon < 0:
            raise SvrError(f"epsilon must be nonnegative, got {self.epsilon}")
        if not (self.gamma_correcting > 0):
            raise SvrError(
                f"gamma_correcting must be positive, got {self.gamma_correcting}"
            )


@dataclass
class SvrPlusModel:
    # decision part: all that prediction needs
    support_vectors: np.ndarray
    dual_coefficients: np.ndarray
    bias: float
    # correcting part, retained for diagnostics only
    privileged_vectors: np.ndarray
    correcting_coefficients_1: np.ndarray
    correcting_coefficients_2: np.ndarray
    bias_1: float
    bias_2: float
    hyperparams: SvrPlusHyperparams
    training_diagnostics: dict = field(default_factory=dict)

    @property
    def feature_dim(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def privileged_dim(self) -> int:
        return self.privileged_vectors.shape[1]


def _build_dual(Kd, Kc, y, params):
    l = y.size
    C, eps, gam = params.cost, params.epsilon, params.gamma_correcting
    Kcg = Kc / gam
    Z = np.zeros((l, l))
    H = np.block(
        [
            [Kd + Kcg, -Kd, Kcg, Z],
            [-Kd, Kd + Kcg, Z, Kcg],
            [Kcg, Z, Kcg, Z],
            [Z, Kcg, Z, Kcg],
        ]
    )
    kap = Kcg @ np.ones(l)
    g = np.concatenate([eps - y - C * kap, eps + y - C * kap, -C * kap, -C * kap])
    ones, zeros = np.ones(l), np.zeros(l)
    A = np.vstack(
        [
            np.concatenate([ones, -ones, zeros, zeros]),
            np.concatenate([ones, zeros, ones, zeros]),
            np.concatenate([zeros, ones, zeros, ones]),
        ]
    )
    b = np.array([0.0, l * C, l * C])
    constant = C * C * float(np.ones(l) @ kap)  # dropped by the QP objective
    problem = qp.QpProblem(H=H, g=g, A_eq=A, b_eq=b, lower=np.zeros(4 * l))
    return problem, constant


def svr_plus_train(inputs, privileged, targets, params: SvrPlusHyperparams) -> SvrPlusModel:
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    Xs = np.atleast_2d(np.asarray(privileged, dtype=float))
    y = np.asarray(targets, dtype=float).ravel()
    if not (X.shape[0] == Xs.shape[0] == y.size):
        raise SvrError(
            f"misaligned training data: {X.shape[0]} inputs, "
            f"{Xs.shape[0]} privileged, {y.size} targets"
        )
    if y.size < 2:
        raise SvrError("need at least 2 training samples")
    if Xs.shape[1] == 0:
        raise SvrError("privileged vectors must be nonempty")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Xs)) and np.all(np.isfinite(y))):
        raise SvrError("training data must be finite")

    l = y.size
    C, gam = params.cost, params.gamma_correcting
    Kd = kernel_matrix(X, X, params.kernel_decision)
    Kc = kernel_matrix(Xs, Xs, params.kernel_correcting)

    problem, constant = _build_dual(Kd, Kc, y, params)
    sol = qp.solve(problem, qp.QpSettings(tolerance=1e-9, max_iterations=200))
    if sol.status is qp.QpStatus.INFEASIBLE:
        raise SvrTrainingError("dual QP reported infeasible", sol)
    if sol.status is not qp.QpStatus.OPTIMAL and sol.kkt_residual > 1e-6 * (1.0 + C):
        raise SvrTrainingError(
            f"dual QP did not converge: kkt residual {sol.kkt_residual:.3e}", sol
        )

    alpha, alpha_star = sol.x[:l], sol.x[l : 2 * l]
    nu, nu_star = sol.x[2 * l : 3 * l], sol.x[3 * l :]
    beta = alpha - alpha_star
    delta = alpha + nu - C
    delta_star = alpha_star + nu_star - C

    bias, bias_1, bias_2 = (float(m) for m in sol.eq_multipliers)
    dual_objective = -(sol.objective + constant)

    keep = np.abs(beta) > SUPPORT_THRESHOLD * C
    return SvrPlusModel(
        support_vectors=X[keep].copy(),
        dual_coefficients=beta[keep].copy(),
        bias=bias,
        privileged_vectors=Xs.copy(),
        correcting_coefficients_1=delta / gam,
        correcting_coefficients_2=delta_star / gam,
        bias_1=bias_1,
        bias_2=bias_2,
        hyperparams=params,
        training_diagnostics={
            "kkt_residual": sol.kkt_residual,
            "objective": dual_objective,
            "qp_iterations": sol.iterations,
            "qp_status": sol.status.value,
            "n_support": int(keep.sum()),
        },
    )


def svr_plus_predict(model: SvrPlusModel, x) -> float:
    """Decision-function value from the observable part only."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != model.feature_dim:
        raise SvrError(f"input dim {x.size} != model dim {model.feature_dim}")
    if model.dual_coefficients.size == 0:
        return model.bias
    k = kernel_matrix(
        model.support_vectors, x.reshape(1, -1), model.hyperparams.kernel_decision
    )
    return float(model.dual_coefficients @ k[:, 0] + model.bias)


def svr_plus_predict_batch(model: SvrPlusModel, inputs) -> np.ndarray:
    X = np.asarray(inputs, dtype=float)
    if X.size == 0:
        return np.zeros(0)
    X = np.atleast_2d(X)
    if X.shape[1] != model.feature_dim:
        raise SvrError(f"input dim {X.shape[1]} != model dim {model.feature_dim}")
    if model.dual_coefficients.size == 0:
        return np.full(X.shape[0], model.bias)
    k = kernel_matrix(X, model.support_vectors, model.hyperparams.kernel_decision)
    return k @ model.dual_coefficients + model.bias


def reconstruct_correcting_values(model: SvrPlusModel, privileged):
    """Values of the two correcting functions at the given privileged vectors."""
    Xs = np.atleast_2d(np.asarray(privileged, dtype=float))
    if Xs.shape[1] != model.privileged_dim:
        raise SvrError(
            f"privileged dim {Xs.shape[1]} != model dim {model.privileged_dim}"
        )
    k = kernel_matrix(Xs, model.privileged_vectors, model.hyperparams.kernel_correcting)
    xi1 = k @ model.correcting_coefficients_1 + model.bias_1
    xi2 = k @ model.correcting_coefficients_2 + model.bias_2
    return xi1, xi2


def model_to_dict(model: SvrPlusModel) -> dict:
    return {
        "support_vectors": model.support_vectors.tolist(),
        "dual_coefficients": model.dual_coefficients.tolist(),
        "bias": model.bias,
        "cost": model.hyperparams.cost,
        "epsilon": model.hyperparams.epsilon,
        "gamma_g": model.hyperparams.kernel_decision.gamma_g,
        "feature_dim": model.feature_dim,
        "privileged_vectors": model.privileged_vectors.tolist(),
        "correcting_coefficients_1": model.correcting_coefficients_1.tolist(),
        "correcting_coefficients_2": model.correcting_coefficients_2.tolist(),
        "bias_1": model.bias_1,
        "bias_2": model.bias_2,
        "gamma_correcting": model.hyperparams.gamma_correcting,
        "gamma_g_correcting": model.hyperparams.kernel_correcting.gamma_g,
        "privileged_dim": model.privileged_dim,
    }


def model_from_dict(d: dict) -> SvrPlusModel:
    dim = int(d["feature_dim"])
    pdim = int(d["privileged_dim"])
    return SvrPlusModel(
        support_vectors=np.asarray(d["support_vectors"], dtype=float).reshape(-1, dim),
        dual_coefficients=np.asarray(d["dual_coefficients"], dtype=float),
        bias=float(d["bias"]),
        privileged_vectors=np.asarray(d["privileged_vectors"], dtype=float).reshape(-1, pdim),
        correcting_coefficients_1=np.asarray(d["correcting_coefficients_1"], dtype=float),
        correcting_coefficients_2=np.asarray(d["correcting_coefficients_2"], dtype=float),
        bias_1=float(d["bias_1"]),
        bias_2=float(d["bias_2"]),
        hyperparams=SvrPlusHyperparams(
            cost=float(d["cost"]),
            epsilon=float(d["epsilon"]),
            gamma_correcting=float(d["gamma_correcting"]),
            kernel_decision=KernelParams(float(d["gamma_g"])),
            kernel_correcting=KernelParams(float(d["gamma_g_correcting"])),
        ),
    )


def save_model(model: SvrPlusModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> SvrPlusModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
