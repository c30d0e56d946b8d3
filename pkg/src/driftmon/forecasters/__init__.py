"""Forecast models: seasonal-lag naive, lasso, random forest, gradient boosting."""

from .cart import FlatTree, TreeNode, dump_tree, grow_tree, scale_leaf_values
from .lasso import LassoFit, coordinate_descent, fit_at_lambda, lasso_path, soft_threshold
from .models import (
    BoostingParams,
    EnsemblePayload,
    ForecastModel,
    ForestParams,
    HyperParams,
    LassoParams,
    ModelKind,
    NaivePayload,
    dump_model,
    fit_boosting,
    fit_forest,
    fit_lasso,
    fit_naive,
    predict,
    predict_matrix,
)

__all__ = [
    "BoostingParams",
    "EnsemblePayload",
    "FlatTree",
    "ForecastModel",
    "ForestParams",
    "HyperParams",
    "LassoFit",
    "LassoParams",
    "ModelKind",
    "NaivePayload",
    "TreeNode",
    "coordinate_descent",
    "dump_model",
    "dump_tree",
    "fit_at_lambda",
    "fit_boosting",
    "fit_forest",
    "fit_lasso",
    "fit_naive",
    "grow_tree",
    "lasso_path",
    "predict",
    "predict_matrix",
    "scale_leaf_values",
    "soft_threshold",
]
