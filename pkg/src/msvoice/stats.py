"""Correlation, two-sample Kolmogorov-Smirnov and logistic GLM statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import pandas as pd
from scipy import special
from scipy import stats as sps

from .exceptions import ContractError, InsufficientDataError, SchemaError

KS_EXACT_MAX_PRODUCT = 10_000
SIGNIFICANT_P = 0.05
BORDERLINE_P = 0.1


# --------------------------------------------------------------------------- Pearson


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    p_one_sided: float
    n: int


def pearson_one_sided(x, y) -> CorrelationResult:
    """Pearson r with a one-sided p-value for H1: true correlation > 0.

    The p-value is the upper tail of t = r * sqrt((n - 2) / (1 - r^2)) under
    Student's t with n - 2 degrees of freedom.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ContractError("x and y must be 1-D and equally long")
    n = len(x)
    if n < 3:
        raise InsufficientDataError(f"{n} pairs, need at least 3", "pearson")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = dx @ dx, dy @ dy
    if sxx == 0 or syy == 0:
        raise ContractError("correlation undefined for a constant vector")
    r = float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))
    if r >= 1.0:
        p = 0.0
    elif r <= -1.0:
        p = 1.0
    else:
        t = r * math.sqrt((n - 2) / (1 - r * r))
        p = float(sps.t.sf(t, n - 2))
    return CorrelationResult(r, p, n)


# --------------------------------------------------------------------------- Kolmogorov-Smirnov


@dataclass(frozen=True)
class KSResult:
    d_statistic: float
    p_value: float
    n1: int
    n2: int
    method: str  # "exact" or "asymptotic"
    ties: bool = False


def _ks_d_scaled(x: np.ndarray, y: np.ndarray) -> int:
    """max |n2*C1(t) - n1*C2(t)| over all t; D = this / (n1*n2). Integer, exact."""
    n1, n2 = len(x), len(y)
    grid = np.union1d(x, y)
    c1 = np.searchsorted(np.sort(x), grid, side="right").astype(np.int64)
    c2 = np.searchsorted(np.sort(y), grid, side="right").astype(np.int64)
    return int(np.max(np.abs(c1 * n2 - c2 * n1)))


def ks_exact_pvalue(n1: int, n2: int, d_scaled: int) -> float:
    """P(D >= d) under H0 for untied samples, by lattice-path counting.

    Counts monotone paths from (0, 0) to (n1, n2) that stay strictly inside
    |i*n2 - j*n1| < d_scaled; p = 1 - inside / C(n1 + n2, n1). Integer
    arithmetic keeps the result exact until the final division.
    """
    if d_scaled <= 0:
        return 1.0
    row = [0] * (n2 + 1)
    for j in range(n2 + 1):
        if abs(j * n1) < d_scaled:
            row[j] = 1 if j == 0 else row[j - 1]
        else:
            row[j] = 0
    for i in range(1, n1 + 1):
        new = [0] * (n2 + 1)
        for j in range(n2 + 1):
            if abs(i * n2 - j * n1) < d_scaled:
                new[j] = row[j] + (new[j - 1] if j else 0)
        row = new
    inside = Fraction(row[n2], math.comb(n1 + n2, n1))
    return float(1 - inside)


def ks_asymptotic_pvalue(d: float, n1: int, n2: int) -> float:
    """Kolmogorov limiting distribution at sqrt(n1*n2/(n1+n2)) * D."""
    en = n1 * n2 / (n1 + n2)
    return float(min(1.0, max(0.0, special.kolmogorov(math.sqrt(en) * d))))


def ks_two_sample(x, y) -> KSResult:
    """Two-sided two-sample Kolmogorov-Smirnov test.

    D = sup |ECDF_x - ECDF_y| is computed exactly over the pooled values, so
    ties are handled. The p-value is exact when n1*n2 <= 10000 and the
    samples share no values; otherwise the asymptotic series is used and
    ``method`` says so.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size == 0 or y.size == 0:
        raise ContractError("both samples must be non-empty")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ContractError("samples must be finite")
    n1, n2 = len(x), len(y)
    d_scaled = _ks_d_scaled(x, y)
    d = d_scaled / (n1 * n2)
    pooled = np.concatenate([x, y])
    ties = len(np.unique(pooled)) < len(pooled)
    if n1 * n2 <= KS_EXACT_MAX_PRODUCT and not ties:
        return KSResult(d, ks_exact_pvalue(n1, n2, d_scaled), n1, n2, "exact", False)
    return KSResult(d, ks_asymptotic_pvalue(d, n1, n2), n1, n2, "asymptotic", ties)


# --------------------------------------------------------------------------- logistic GLM


@dataclass(frozen=True)
class Coefficient:
    name: str
    coefficient: float
    std_error: float
    z: float
    p_two_sided: float

    @property
    def borderline(self) -> bool:
        return self.p_two_sided < BORDERLINE_P


@dataclass(frozen=True)
class GLMResult:
    """Logistic fit on z-scored predictors; ``rows[0]`` is the intercept."""

    rows: tuple[Coefficient, ...]
    converged: bool
    n_iterations: int

    @property
    def intercept(self) -> Coefficient:
        return self.rows[0]

    @property
    def predictors(self) -> tuple[Coefficient, ...]:
        return self.rows[1:]

    def __getitem__(self, name: str) -> Coefficient:
        for row in self.rows:
            if row.name == name:
                return row
        raise KeyError(name)


def _sigmoid(eta):
    return special.expit(eta)


def irls_logistic(
    X: np.ndarray,
    y: np.ndarray,
    l2: float = 0.0,
    max_iter: int = 50,
    tol: float = 1e-8,
    penalize_first: bool = False,
    beta0: np.ndarray | None = None,
):
    """Newton/IRLS for (optionally L2-penalized) logistic regression.

    ``X`` must already contain any intercept column. The penalty is
    ``l2/2 * ||beta||^2 * n`` on all columns except the first unless
    ``penalize_first``. A singular weighted Gram matrix gets a 1e-8 ridge.

    Returns (beta, fisher_information, converged, n_iterations).
    """
    n, p = X.shape
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=np.float64)
    pen = np.full(p, l2 * n)
    if not penalize_first:
        pen[0] = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = _sigmoid(X @ beta)
        w = mu * (1 - mu)
        info = (X * w[:, None]).T @ X + np.diag(pen)
        grad = X.T @ (y - mu) - pen * beta
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.solve(info + 1e-8 * np.eye(p), grad)
        if not np.all(np.isfinite(step)):
            break
        beta = beta + step
        if np.max(np.abs(step)) < tol:
            converged = True
            break
    mu = _sigmoid(X @ beta)
    w = mu * (1 - mu)
    info = (X * w[:, None]).T @ X + np.diag(pen)
    return beta, info, converged, it


def _zscore(X: np.ndarray):
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    if np.any(sd == 0):
        raise ContractError("constant predictor column")
    return (X - mean) / sd, mean, sd


def logistic_glm(X, y, names=None) -> GLMResult:
    """Logistic regression with Wald tests, on internally standardized predictors.

    Coefficients are per predictor SD, so p-values do not depend on the
    units of any column. Perfect separation is not an error: the last
    iterate is returned with ``converged=False``, and rows whose standard
    error collapsed to zero get NaN z and p.

    Args:
        X: (n, p) predictors; no constant columns.
        y: binary outcome (1 = case).
        names: predictor names, default ``x1..xp``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise ContractError("X must be (n, p) with one outcome per row")
    n, p = X.shape
    if n <= p + 1:
        raise InsufficientDataError(f"{n} rows for {p} predictors", "logistic_glm")
    if not set(np.unique(y)) <= {0.0, 1.0}:
        raise ContractError("outcomes must be 0/1")
    Z, _, _ = _zscore(X)
    names = list(names) if names is not None else [f"x{j + 1}" for j in range(p)]
    if len(names) != p:
        raise ContractError("one name per predictor required")

    design = np.column_stack([np.ones(n), Z])
    beta, info, converged, n_iter = irls_logistic(design, y)
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(info)
    se = np.sqrt(np.clip(np.diag(cov), 0, None))
    rows = []
    for name, b, s in zip(["(intercept)"] + names, beta, se):
        if s > 0 and math.isfinite(s):
            z = b / s
            pval = float(2 * sps.norm.sf(abs(z)))
        else:
            # degenerate information (separated fit): the Wald test is undefined
            z = pval = math.nan
        rows.append(Coefficient(name, float(b), float(s), float(z), pval))
    return GLMResult(tuple(rows), converged, n_iter)


# --------------------------------------------------------------------------- validation


def validate_features(
    auto: pd.DataFrame, reference: pd.DataFrame, features=None, id_column: str = "subject_id"
) -> list[tuple[str, CorrelationResult]]:
    """Correlate automatically and manually derived features per subject.

    Both tables are indexed by ``id_column``; every shared feature column
    (or those in ``features``) is tested with :func:`pearson_one_sided` over
    the common subjects. Output is sorted by feature name.
    """
    for name, table in (("auto", auto), ("reference", reference)):
        if id_column not in table.columns:
            raise SchemaError(f"{name} table lacks column {id_column!r}")
    if features is None:
        meta = {id_column, "cohort", "age_years", "gender_code"}
        a_cols = {c for c in auto.columns if c not in meta}
        r_cols = {c for c in reference.columns if c not in meta}
        if a_cols != r_cols:
            raise SchemaError(
                f"feature columns differ: only in auto {sorted(a_cols - r_cols)}, "
                f"only in reference {sorted(r_cols - a_cols)}"
            )
        features = sorted(a_cols)
    else:
        missing = [f for f in features if f not in auto.columns or f not in reference.columns]
        if missing:
            raise SchemaError(f"feature columns missing: {missing}")
        features = sorted(features)
    a = auto.set_index(auto[id_column].astype(str))
    r = reference.set_index(reference[id_column].astype(str))
    common = [s for s in a.index if s in set(r.index)]
    if len(common) < 3:
        raise InsufficientDataError(f"{len(common)} common subjects, need 3", "validate_features")
    out = []
    for f in features:
        out.append((f, pearson_one_sided(a.loc[common, f].to_numpy(float), r.loc[common, f].to_numpy(float))))
    return out
