"""Prediction metrics, baselines and split evaluation."""

from .baselines import BASELINES, Ballistic, ConstantVelocity, MpmResimulate, make_baseline
from .evaluate import METRIC_KEYS, MetricsReport, ModelPredictor, evaluate
from .scores import fpe, mse, pce, pearson, pearson_r, rmse, scene_metrics, squared_error

__all__ = [
    "BASELINES", "METRIC_KEYS", "Ballistic", "ConstantVelocity", "MetricsReport", "ModelPredictor",
    "MpmResimulate", "evaluate", "fpe", "make_baseline", "mse", "pce", "pearson", "pearson_r", "rmse",
    "scene_metrics", "squared_error",
]
