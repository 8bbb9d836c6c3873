"""Holdout + k-fold evaluation of the classifier battery."""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata
from sklearn.pipeline import Pipeline
from sklearn.preprocessing import StandardScaler

from ..exceptions import ConfigError, ContractError
from .boosting import GradientBoostingClassifier
from .forest import RandomForestClassifier
from .linear import L2LogisticRegressionCV
from .neighbors import KNeighborsClassifier

CASE = "case"
CONTROL = "control"
REQUIRED_MODELS = ("knn", "random_forest", "logistic_regularized", "gradient_boosting")
OPTIONAL_MODELS = ("svm_rbf", "mlp")
ALL_MODELS = REQUIRED_MODELS + OPTIONAL_MODELS
DEFAULT_THRESHOLD = 0.5
_SPLIT_STREAM = 0x53504C54
_FOLD_STREAM = 0x464F4C44


@dataclass(frozen=True)
class Dataset:
    """One row per speaker: id, label (1 = case, 0 = control) and ModelVector."""

    subject_ids: tuple
    labels: np.ndarray
    vectors: np.ndarray
    feature_names: tuple = ()

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        vectors = np.asarray(self.vectors, dtype=np.float64)
        ids = tuple(str(s) for s in self.subject_ids)
        if vectors.ndim != 2 or len(vectors) != len(labels) or len(ids) != len(labels):
            raise ContractError("subject_ids, labels and vectors must have matching lengths")
        if len(set(ids)) != len(ids):
            raise ContractError("subject ids must be unique")
        if not np.isin(labels, (0, 1)).all():
            raise ContractError("labels must be 0 (control) or 1 (case)")
        if len(np.unique(labels)) != 2:
            raise ContractError("dataset needs both case and control rows")
        if not np.isfinite(vectors).all():
            raise ContractError("ModelVectors must be finite")
        labels.setflags(write=False)
        vectors.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "subject_ids", ids)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def __len__(self):
        return len(self.labels)

    def subset(self, index) -> "Dataset":
        index = np.asarray(index, dtype=np.intp)
        return Dataset(
            tuple(self.subject_ids[i] for i in index), self.labels[index], self.vectors[index], self.feature_names
        )

    @classmethod
    def from_table(cls, table, columns=None) -> "Dataset":
        """Build from a feature table (DataFrame with subject_id, cohort, ModelVector columns)."""
        from ..features import MODEL_VECTOR_COLUMNS

        columns = tuple(columns or MODEL_VECTOR_COLUMNS)
        missing = [c for c in ("subject_id", "cohort", *columns) if c not in table.columns]
        if missing:
            raise ContractError(f"feature table lacks columns: {', '.join(missing)}")
        cohort = table["cohort"].astype(str).str.lower()
        bad = sorted(set(cohort) - {CASE, CONTROL})
        if bad:
            raise ContractError(f"unknown cohort labels: {bad}")
        return cls(
            tuple(table["subject_id"].astype(str)),
            (cohort == CASE).to_numpy().astype(np.int64),
            table.loc[:, list(columns)].to_numpy(dtype=np.float64),
            columns,
        )


@dataclass(frozen=True)
class CVConfig:
    seed: int = 0
    n_folds: int = 5
    holdout_fraction: float = 0.2
    stratified: bool = True
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if not 0 < self.holdout_fraction < 0.5:
            raise ConfigError("holdout_fraction must lie in (0, 0.5)")
        if self.n_folds < 2:
            raise ConfigError("n_folds must be at least 2")
        if not self.stratified:
            raise ConfigError("only stratified splitting is implemented")


@dataclass(frozen=True)
class ModelReport:
    model_name: str
    accuracy: float
    sensitivity: float
    specificity: float
    mean_auc: float
    per_fold_auc: tuple = field(default_factory=tuple)

    def as_row(self) -> dict:
        return {
            "model": self.model_name,
            "accuracy": self.accuracy,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "mean_auc": self.mean_auc,
        }


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(ds: Dataset, fraction: float, seed: int):
    """Per-class proportional train/holdout partition."""
    if not 0 < fraction < 1:
        raise ContractError("fraction must lie in (0, 1)")
    rng = np.random.default_rng([int(seed), _SPLIT_STREAM])
    hold = []
    for c in (0, 1):
        members = np.flatnonzero(ds.labels == c)
        if len(members) < 2 / fraction:
            raise ContractError(f"class {c} has {len(members)} rows; need at least {math.ceil(2 / fraction)}")
        members = rng.permutation(members)
        hold.append(members[: _round_half_up(fraction * len(members))])
    hold = np.sort(np.concatenate(hold))
    train = np.setdiff1d(np.arange(len(ds)), hold)
    return ds.subset(train), ds.subset(hold)


def kfold_indices(n_rows: int, labels, k: int, seed: int) -> list:
    """Stratified folds: shuffled members of each class dealt round-robin."""
    labels = np.asarray(labels)
    if len(labels) != n_rows:
        raise ContractError("labels length must equal n_rows")
    if k < 2:
        raise ContractError("k must be at least 2")
    rng = np.random.default_rng([int(seed), _FOLD_STREAM])
    folds = [[] for _ in range(k)]
    offset = 0
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if len(members) < k:
            raise ContractError(f"class {c!r} has {len(members)} rows, fewer than k={k}")
        for j, idx in enumerate(rng.permutation(members)):
            folds[(offset + j) % k].append(idx)
        offset = (offset + len(members)) % k
    return [np.sort(np.asarray(f, dtype=np.intp)) for f in folds]


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC: P(case score > control score) + P(tie)/2."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ContractError("scores and labels must have the same shape")
    pos = labels == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ContractError("roc_auc needs both classes")
    ranks = rankdata(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def model_seed(seed: int, model_spec: str, fold: int) -> int:
    """Stream seed for one (seed, model, fold) unit, independent of execution order."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(model_spec.encode()), int(fold)])
    return int(ss.generate_state(1)[0])


def make_model(model_spec: str, random_state: int = 0):
    """Unfitted estimator for ``model_spec``, wrapped with a train-fitted z-score step."""
    if model_spec == "knn":
        clf = KNeighborsClassifier(n_neighbors=5)
    elif model_spec == "random_forest":
        clf = RandomForestClassifier(n_estimators=500, max_features="sqrt", random_state=random_state)
    elif model_spec == "logistic_regularized":
        clf = L2LogisticRegressionCV(alphas=(0.001, 0.01, 0.1, 1.0), cv=3, random_state=random_state)
    elif model_spec == "gradient_boosting":
        clf = GradientBoostingClassifier(n_estimators=200, learning_rate=0.1, max_depth=2)
    elif model_spec == "svm_rbf":
        from sklearn.svm import SVC

        clf = SVC(kernel="rbf", probability=True, random_state=random_state)
    elif model_spec == "mlp":
        from sklearn.neural_network import MLPClassifier

        clf = MLPClassifier(hidden_layer_sizes=(16,), max_iter=2000, random_state=random_state)
    else:
        raise ConfigError(f"unknown model {model_spec!r}; choose from {', '.join(ALL_MODELS)}")
    return Pipeline([("scale", StandardScaler()), ("clf", clf)])


def fit_predict(model_spec: str, train: Dataset, test_vectors, seed: int = 0, fold: int = 0) -> np.ndarray:
    """Fit on ``train`` and return the case probability for each test vector."""
    model = make_model(model_spec, model_seed(seed, model_spec, fold))
    model.fit(train.vectors, train.labels)
    test_vectors = np.asarray(test_vectors, dtype=np.float64)
    if test_vectors.ndim == 1:
        test_vectors = test_vectors[None, :]
    proba = model.predict_proba(test_vectors)
    return proba[:, list(model.classes_).index(1)]


def _holdout_metrics(scores, labels, threshold):
    pred = scores >= threshold
    case = labels == 1
    accuracy = float(np.mean(pred == case))
    sensitivity = float(np.mean(pred[case])) if case.any() else float("nan")
    specificity = float(np.mean(~pred[~case])) if (~case).any() else float("nan")
    return accuracy, sensitivity, specificity


def evaluate_model(model_spec: str, train: Dataset, holdout: Dataset, cfg: CVConfig) -> ModelReport:
    folds = kfold_indices(len(train), train.labels, cfg.n_folds, cfg.seed)
    aucs = []
    for i, test_idx in enumerate(folds):
        fit_idx = np.setdiff1d(np.arange(len(train)), test_idx)
        scores = fit_predict(model_spec, train.subset(fit_idx), train.vectors[test_idx], cfg.seed, i)
        aucs.append(roc_auc(scores, train.labels[test_idx]))
    scores = fit_predict(model_spec, train, holdout.vectors, cfg.seed, cfg.n_folds)
    acc, sens, spec = _holdout_metrics(scores, holdout.labels, cfg.threshold)
    return ModelReport(model_spec, acc, sens, spec, float(np.mean(aucs)), tuple(float(a) for a in aucs))


def rank_reports(reports) -> list:
    """Best first by summed accuracy and mean-AUC ranks; ties by AUC, accuracy, then name."""
    reports = list(reports)
    if not reports:
        return reports
    acc_rank = rankdata([-r.accuracy for r in reports])
    auc_rank = rankdata([-r.mean_auc for r in reports])
    keyed = [
        (acc_rank[i] + auc_rank[i], -r.mean_auc, -r.accuracy, r.model_name, r)
        for i, r in enumerate(reports)
    ]
    keyed.sort(key=lambda t: t[:4])
    return [t[-1] for t in keyed]


def train_eval_suite(ds: Dataset, cfg: CVConfig = CVConfig(), models=REQUIRED_MODELS) -> list:
    """Holdout split, k-fold CV AUC on the train part, holdout metrics; ranked best first."""
    models = list(models)
    for m in models:
        if m not in ALL_MODELS:
            raise ConfigError(f"unknown model {m!r}; choose from {', '.join(ALL_MODELS)}")
    if len(set(models)) != len(models):
        raise ConfigError("model list contains duplicates")
    train, holdout = stratified_split(ds, cfg.holdout_fraction, cfg.seed)
    return rank_reports(evaluate_model(m, train, holdout, cfg) for m in models)
