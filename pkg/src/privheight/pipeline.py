"""Privileged Information Prediction (PIP).

Training:
  1. pick the K most informative privileged ratios via mRMR/MID against
     the height target;
  2. fit one epsilon-SVR per selected ratio, predicting it from the
     observable ratios (all K share one hyperparameter tuple);
  3. concatenate the observables with the K in-sample predictions and
     fit a final epsilon-SVR for height on the augmented vector;
  4. record the 25/50/75% training-height quantiles as class boundaries.

Prediction needs observable ratios only: the privileged values are
re-predicted, never read.  The height model is trained on the
predictors' own outputs rather than the true privileged values so that
training matches the test-time distribution, estimation error included.

With K = 0 the pipeline reduces exactly to a plain standardized
epsilon-SVR on the observables (same standardizers, same QP), which the
tests pin down to bit equality.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .features import Standardizer, standardize_fit
from .mrmr import DiscretizationConfig, SelectionResult, select_mid
from . import svr as _svr
from .svr import SvrError, SvrHyperparams, SvrModel, svr_predict_batch, svr_train

SERIALIZATION_VERSION = 1


class PipError(ValueError):
    pass


class PipTrainingError(RuntimeError):
    """Training failure naming the stage (feature predictor i / height model)."""


@dataclass(frozen=True)
class QuartileBoundaries:
    q25: float
    q50: float
    q75: float

    def __post_init__(self) -> None:
        if not (self.q25 <= self.q50 <= self.q75):
            raise PipError(
                f"quartile boundaries out of order: {self.q25}, {self.q50}, {self.q75}"
            )


@dataclass(frozen=True)
class PipHyperparams:
    feature_stage: SvrHyperparams      # shared by all K privileged-ratio predictors
    height_stage: SvrHyperparams


@dataclass
class PipModel:
    selection: SelectionResult
    feature_predictors: list[SvrModel]
    height_model: SvrModel
    standardizer_x: Standardizer
    standardizer_concat: Standardizer
    standardizer_target: Standardizer
    quartile_boundaries: QuartileBoundaries
    hyperparams: PipHyperparams
    selection_config: DiscretizationConfig

    @property
    def k(self) -> int:
        return len(self.feature_predictors)

    @property
    def observable_dim(self) -> int:
        return self.standardizer_x.mean.size


def quartile_class(height: float, boundaries: QuartileBoundaries) -> int:
    """Classes 1-4; values on a boundary belong to the lower class."""
    if height <= boundaries.q25:
        return 1
    if height <= boundaries.q50:
        return 2
    if height <= boundaries.q75:
        return 3
    return 4


def percent_error(predicted: float, true: float) -> float:
    if not (true > 0):
        raise PipError(f"true value must be positive, got {true}")
    return 100.0 * abs(predicted - true) / true


@dataclass(frozen=True)
class QuartileClassification:
    predicted_class: int
    true_class: int
    correct: bool


def classify_quartile(
    predicted_height: float,
    true_height: float,
    boundaries: QuartileBoundaries,
    tolerance_e: float = 0.0,
) -> QuartileClassification:
    """Quartile mapping with a percent-error forgiveness margin.

    A mismatch still counts as correct when the estimate is within
    tolerance_e percent of the true height.
    """
    if not (true_height > 0):
        raise PipError(f"true height must be positive, got {true_height}")
    if not (predicted_height > 0):
        raise PipError(f"predicted height must be positive, got {predicted_height}")
    if tolerance_e < 0:
        raise PipError(f"tolerance must be nonnegative, got {tolerance_e}")
    pc = quartile_class(predicted_height, boundaries)
    tc = quartile_class(true_height, boundaries)
    correct = pc == tc or percent_error(predicted_height, true_height) <= tolerance_e
    return QuartileClassification(pc, tc, correct)


def training_boundaries(heights) -> QuartileBoundaries:
    h = np.asarray(heights, dtype=float)
    q25, q50, q75 = np.quantile(h, [0.25, 0.50, 0.75])
    return QuartileBoundaries(float(q25), float(q50), float(q75))


def pip_train(
    observable,
    privileged,
    heights,
    k: int,
    hyperparams: PipHyperparams,
    selection_config: DiscretizationConfig = DiscretizationConfig(),
) -> PipModel:
    X = np.atleast_2d(np.asarray(observable, dtype=float))
    Xs = np.atleast_2d(np.asarray(privileged, dtype=float))
    y = np.asarray(heights, dtype=float).ravel()
    n = y.size
    if X.shape[0] != n or Xs.shape[0] != n:
        raise PipError(
            f"misaligned training data: {X.shape[0]} observable, "
            f"{Xs.shape[0]} privileged, {n} heights"
        )
    if k < 0:
        raise PipError("k must be nonnegative")
    if n < max(2, 2 * k):
        raise PipError(f"need at least {max(2, 2 * k)} samples for k={k}, got {n}")

    std_x = standardize_fit(X)
    std_y = standardize_fit(y.reshape(-1, 1))
    Z = std_x.apply(X)
    zy = std_y.apply(y.reshape(-1, 1)).ravel()

    if k > 0:
        selection = select_mid(Xs, y, k, selection_config)
    else:
        selection = select_mid(Xs, y, 0, selection_config)

    predictors: list[SvrModel] = []
    predicted_cols = []
    for step, idx in enumerate(selection.selected_indices):
        try:
            model = svr_train(Z, Xs[:, idx], hyperparams.feature_stage)
        except Exception as exc:
            raise PipTrainingError(
                f"feature predictor {step} (privileged index {idx}) failed: {exc}"
            ) from exc
        predictors.append(model)
        predicted_cols.append(svr_predict_batch(model, Z))

    if predicted_cols:
        concat = np.column_stack([X] + predicted_cols)
    else:
        concat = X
    std_concat = standardize_fit(concat)
    Zc = std_concat.apply(concat)
    try:
        height_model = svr_train(Zc, zy, hyperparams.height_stage)
    except Exception as exc:
        raise PipTrainingError(f"height model failed: {exc}") from exc

    return PipModel(
        selection=selection,
        feature_predictors=predictors,
        height_model=height_model,
        standardizer_x=std_x,
        standardizer_concat=std_concat,
        standardizer_target=std_y,
        quartile_boundaries=training_boundaries(y),
        hyperparams=hyperparams,
        selection_config=selection_config,
    )


def pip_predict_batch(model: PipModel, observable) -> np.ndarray:
    """Predicted heights (mm), one per input row."""
    X = np.asarray(observable, dtype=float)
    if X.size == 0:
        return np.zeros(0)
    X = np.atleast_2d(X)
    if X.shape[1] != model.observable_dim:
        raise PipError(
            f"observable dim {X.shape[1]} != model dim {model.observable_dim}"
        )
    if model.feature_predictors:
        Z = model.standardizer_x.apply(X)
        cols = [svr_predict_batch(p, Z) for p in model.feature_predictors]
        concat = np.column_stack([X] + cols)
    else:
        concat = X
    zc = model.standardizer_concat.apply(concat)
    zh = svr_predict_batch(model.height_model, zc)
    return model.standardizer_target.invert(zh.reshape(-1, 1)).ravel()


def pip_predict(model: PipModel, observable) -> dict:
    x = np.asarray(observable, dtype=float).ravel()
    mm = float(pip_predict_batch(model, x.reshape(1, -1))[0])
    return {"height_mm": mm, "height_cm": mm / 10.0}


# --- the plain-SVR reference pipeline -----------------------------------
#
# Identical standardization wrapping around a single epsilon-SVR; the
# PIP K=0 case reduces to exactly this, and evaluation uses it as the
# baseline method.

@dataclass
class SvrPipelineModel:
    svr_model: SvrModel
    standardizer_x: Standardizer
    standardizer_target: Standardizer
    quartile_boundaries: QuartileBoundaries

    @property
    def observable_dim(self) -> int:
        return self.standardizer_x.mean.size


def svr_pipeline_train(observable, heights, params: SvrHyperparams) -> SvrPipelineModel:
    X = np.atleast_2d(np.asarray(observable, dtype=float))
    y = np.asarray(heights, dtype=float).ravel()
    std_x = standardize_fit(X)
    std_y = standardize_fit(y.reshape(-1, 1))
    model = svr_train(std_x.apply(X), std_y.apply(y.reshape(-1, 1)).ravel(), params)
    return SvrPipelineModel(
        svr_model=model,
        standardizer_x=std_x,
        standardizer_target=std_y,
        quartile_boundaries=training_boundaries(y),
    )


def svr_pipeline_predict_batch(model: SvrPipelineModel, observable) -> np.ndarray:
    X = np.asarray(observable, dtype=float)
    if X.size == 0:
        return np.zeros(0)
    X = np.atleast_2d(X)
    z = svr_predict_batch(model.svr_model, model.standardizer_x.apply(X))
    return model.standardizer_target.invert(z.reshape(-1, 1)).ravel()


# --- serialization -------------------------------------------------------

def _std_to_dict(s: Standardizer) -> dict:
    return {"mean": s.mean.tolist(), "scale": s.scale.tolist()}


def _std_from_dict(d: dict) -> Standardizer:
    return Standardizer(
        mean=np.asarray(d["mean"], dtype=float),
        scale=np.asarray(d["scale"], dtype=float),
    )


def model_to_dict(model: PipModel) -> dict:
    return {
        "version": SERIALIZATION_VERSION,
        "k": model.k,
        "selection": model.selection.to_dict(),
        "feature_predictors": [_svr.model_to_dict(p) for p in model.feature_predictors],
        "height_model": _svr.model_to_dict(model.height_model),
        "standardizer_x": _std_to_dict(model.standardizer_x),
        "standardizer_concat": _std_to_dict(model.standardizer_concat),
        "standardizer_target": _std_to_dict(model.standardizer_target),
        "quartile_boundaries": {
            "q25": model.quartile_boundaries.q25,
            "q50": model.quartile_boundaries.q50,
            "q75": model.quartile_boundaries.q75,
        },
        "selection_bins": model.selection_config.n_bins,
    }


def model_from_dict(d: dict) -> PipModel:
    version = d.get("version")
    if version != SERIALIZATION_VERSION:
        raise PipError(f"unsupported serialization version {version!r}")
    predictors = [_svr.model_from_dict(p) for p in d["feature_predictors"]]
    height_model = _svr.model_from_dict(d["height_model"])
    qb = d["quartile_boundaries"]
    feature_stage = (
        predictors[0].hyperparams if predictors else height_model.hyperparams
    )
    return PipModel(
        selection=SelectionResult.from_dict(d["selection"]),
        feature_predictors=predictors,
        height_model=height_model,
        standardizer_x=_std_from_dict(d["standardizer_x"]),
        standardizer_concat=_std_from_dict(d["standardizer_concat"]),
        standardizer_target=_std_from_dict(d["standardizer_target"]),
        quartile_boundaries=QuartileBoundaries(
            float(qb["q25"]), float(qb["q50"]), float(qb["q75"])
        ),
        hyperparams=PipHyperparams(
            feature_stage=feature_stage, height_stage=height_model.hyperparams
        ),
        selection_config=DiscretizationConfig(int(d["selection_bins"])),
    )


def save_model(model: PipModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> PipModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
