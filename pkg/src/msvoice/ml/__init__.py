from .boosting import GradientBoostingClassifier
from .evaluation import (
    ALL_MODELS,
    OPTIONAL_MODELS,
    REQUIRED_MODELS,
    CVConfig,
    Dataset,
    ModelReport,
    evaluate_model,
    fit_predict,
    kfold_indices,
    make_model,
    model_seed,
    rank_reports,
    roc_auc,
    stratified_split,
    train_eval_suite,
)
from .forest import RandomForestClassifier
from .linear import L2LogisticRegression, L2LogisticRegressionCV
from .neighbors import KNeighborsClassifier
from .tree import RegressionTree

__all__ = [
    "ALL_MODELS", "OPTIONAL_MODELS", "REQUIRED_MODELS", "CVConfig", "Dataset", "GradientBoostingClassifier",
    "KNeighborsClassifier", "L2LogisticRegression", "L2LogisticRegressionCV", "ModelReport",
    "RandomForestClassifier", "RegressionTree", "evaluate_model", "fit_predict", "kfold_indices",
    "make_model", "model_seed", "rank_reports", "roc_auc", "stratified_split", "train_eval_suite",
]
