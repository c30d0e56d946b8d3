"""Trainable forecast functions behind one predict interface.

All four model kinds consume the same design-matrix columns so comparisons
across them are about the learner, not the information set. Every fit is a
pure function of (data, hyperparameters, seed): ensemble randomness derives
each tree's generator from (seed, tree index), so training is reproducible
and parallelizable across trees without changing results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..errors import InsufficientData, InvalidLag, ShapeError
from ..features import DesignMatrix
from .cart import FlatTree, TreeNode, dump_tree, grow_tree, scale_leaf_values
from .lasso import LassoFit, lasso_path


class ModelKind(str, Enum):
    NAIVE = "naive"
    LASSO = "lasso"
    FOREST = "forest"
    BOOSTING = "boosting"


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 500
    mtry: int | None = None  # None: floor(p / 3), at least 1
    min_node_size: int = 5
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1 or self.min_node_size < 1:
            raise ValueError("n_trees and min_node_size must be >= 1")
        if self.mtry is not None and self.mtry < 1:
            raise ValueError("mtry must be >= 1 when set")


@dataclass(frozen=True)
class BoostingParams:
    n_rounds: int = 100
    max_depth: int = 6
    learning_rate: float = 0.3
    min_split_gain: float = 0.0
    colsample: float = 1.0
    min_child_weight: float = 1.0
    subsample: float = 1.0

    def __post_init__(self):
        if self.n_rounds < 0:
            raise ValueError("n_rounds must be >= 0")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if not 0.0 < self.colsample <= 1.0 or not 0.0 < self.subsample <= 1.0:
            raise ValueError("colsample and subsample must be in (0, 1]")
        if self.min_split_gain < 0.0 or self.min_child_weight < 0.0:
            raise ValueError("min_split_gain and min_child_weight must be >= 0")


@dataclass(frozen=True)
class LassoParams:
    n_lambda: int = 100
    lambda_min_ratio: float = 1e-3
    tol: float = 1e-9
    max_iter: int = 10_000

    def __post_init__(self):
        if self.n_lambda < 1 or self.max_iter < 1:
            raise ValueError("n_lambda and max_iter must be >= 1")
        if not 0.0 < self.lambda_min_ratio < 1.0:
            raise ValueError("lambda_min_ratio must be in (0, 1)")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class HyperParams:
    forest: ForestParams = field(default_factory=ForestParams)
    boosting: BoostingParams = field(default_factory=BoostingParams)
    lasso: LassoParams = field(default_factory=LassoParams)


@dataclass(frozen=True)
class NaivePayload:
    lag: int
    feature_index: int
    feature_name: str


@dataclass(frozen=True)
class EnsemblePayload:
    trees: tuple[TreeNode, ...]
    flats: tuple[FlatTree, ...]
    seed: int
    base: float = 0.0  # boosting initialization; unused by the forest


@dataclass(frozen=True)
class ForecastModel:
    kind: ModelKind
    feature_names: tuple[str, ...]
    trained_at: int
    payload: NaivePayload | LassoFit | EnsemblePayload

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


def fit_naive(lag: int = 420, *, horizon: int, feature_names,
              target_stream: str, trained_at: int = 0) -> ForecastModel:
    """Seasonal-lag forecaster: predict the own-stream value lag ticks back.

    The lag must be at least the forecast horizon so the lagged value is
    already observed when the forecast is made, and the corresponding lag
    column must exist in the feature set.
    """
    if lag < horizon:
        raise InvalidLag(f"lag {lag} is below the forecast horizon {horizon}")
    name = f"lag{lag}_{target_stream}"
    names = tuple(feature_names)
    try:
        index = names.index(name)
    except ValueError:
        raise InvalidLag(f"no feature column {name!r}; configured lags do not include {lag}")
    return ForecastModel(kind=ModelKind.NAIVE, feature_names=names,
                         trained_at=trained_at,
                         payload=NaivePayload(lag=lag, feature_index=index, feature_name=name))


def fit_lasso(data: DesignMatrix, hp: HyperParams, trained_at: int = 0) -> ForecastModel:
    fit = lasso_path(data.X, data.y, n_lambda=hp.lasso.n_lambda,
                     lambda_min_ratio=hp.lasso.lambda_min_ratio,
                     tol=hp.lasso.tol, max_iter=hp.lasso.max_iter)
    return ForecastModel(kind=ModelKind.LASSO, feature_names=data.column_names,
                         trained_at=trained_at, payload=fit)


def fit_forest(data: DesignMatrix, hp: HyperParams, seed: int,
               trained_at: int = 0) -> ForecastModel:
    """Bagged CART regression trees with per-split feature sampling."""
    n, p = data.X.shape
    params = hp.forest
    if n < params.min_node_size:
        raise InsufficientData(
            f"forest needs n >= min_node_size ({params.min_node_size}), got {n}"
        )
    mtry = params.mtry if params.mtry is not None else max(1, p // 3)
    mtry = min(mtry, p)
    trees, flats = [], []
    for t in range(params.n_trees):
        rng = np.random.default_rng((seed, t))
        if params.bootstrap:
            rows = np.sort(rng.integers(0, n, size=n))  # sorted for memory locality
        else:
            rows = np.arange(n)
        root = grow_tree(data.X, data.y, rows, rng=rng, mtry=mtry,
                         min_leaf=params.min_node_size)
        trees.append(root)
        flats.append(FlatTree(root))
    return ForecastModel(kind=ModelKind.FOREST, feature_names=data.column_names,
                         trained_at=trained_at,
                         payload=EnsemblePayload(trees=tuple(trees), flats=tuple(flats),
                                                 seed=seed))


def fit_boosting(data: DesignMatrix, hp: HyperParams, seed: int,
                 trained_at: int = 0) -> ForecastModel:
    """Gradient boosting on squared error: shallow trees fit to residuals.

    The ensemble starts from the target mean; each round adds a depth-capped
    tree fit to the current residuals, its leaf values shrunk by the learning
    rate before they are stored.
    """
    n, p = data.X.shape
    params = hp.boosting
    if n < 2:
        raise InsufficientData(f"boosting needs n >= 2 rows, got {n}")
    base = float(data.y.mean())
    current = np.full(n, base)
    min_leaf = max(1, math.ceil(params.min_child_weight))
    n_cols = max(1, round(params.colsample * p))
    n_rows = max(1, math.floor(params.subsample * n))
    trees, flats = [], []
    for m in range(params.n_rounds):
        rng = np.random.default_rng((seed, m))
        rows = np.arange(n) if n_rows == n else rng.choice(n, size=n_rows, replace=False)
        pool = (np.arange(p) if n_cols == p
                else np.sort(rng.choice(p, size=n_cols, replace=False)))
        residual = data.y - current
        root = grow_tree(data.X, residual, rows, rng=rng, mtry=None,
                         min_leaf=min_leaf, max_depth=params.max_depth,
                         min_gain=params.min_split_gain, feature_pool=pool)
        scale_leaf_values(root, params.learning_rate)
        flat = FlatTree(root)
        current += flat.predict(data.X)
        trees.append(root)
        flats.append(flat)
    return ForecastModel(kind=ModelKind.BOOSTING, feature_names=data.column_names,
                         trained_at=trained_at,
                         payload=EnsemblePayload(trees=tuple(trees), flats=tuple(flats),
                                                 seed=seed, base=base))


def predict_matrix(model: ForecastModel, X: np.ndarray) -> np.ndarray:
    """Forecasts for each row of X (columns must match the training design)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ShapeError(
            f"expected (n, {model.n_features}) features, got {X.shape}"
        )
    if model.kind is ModelKind.NAIVE:
        return X[:, model.payload.feature_index].copy()
    if model.kind is ModelKind.LASSO:
        return model.payload.intercept + X @ model.payload.slopes
    out = np.zeros(X.shape[0])
    for flat in model.payload.flats:
        out += flat.predict(X)
    if model.kind is ModelKind.FOREST:
        out /= len(model.payload.flats)
    else:
        out += model.payload.base
    return out


def predict(model: ForecastModel, features) -> float:
    """Scalar forecast from a single feature vector."""
    features = np.asarray(features, dtype=float)
    if features.ndim != 1 or features.size != model.n_features:
        raise ShapeError(
            f"expected a length-{model.n_features} feature vector, got shape {features.shape}"
        )
    return float(predict_matrix(model, features[None, :])[0])


def dump_model(model: ForecastModel) -> str:
    """Human-readable text serialization of a fitted model (for debugging)."""
    lines = [f"kind={model.kind.value} trained_at={model.trained_at} p={model.n_features}"]
    if model.kind is ModelKind.NAIVE:
        lines.append(f"lag={model.payload.lag} column={model.payload.feature_name}")
    elif model.kind is ModelKind.LASSO:
        fit = model.payload
        lines.append(f"lambda={fit.lam!r} bic={fit.bic!r} intercept={fit.intercept!r}")
        for name, slope in zip(model.feature_names, fit.slopes):
            if slope != 0.0:
                lines.append(f"coef {name} = {slope!r}")
    else:
        if model.kind is ModelKind.BOOSTING:
            lines.append(f"base={model.payload.base!r}")
        for i, tree in enumerate(model.payload.trees):
            lines.append(f"tree {i}:")
            lines.append(dump_tree(tree, model.feature_names))
    return "\n".join(lines)
