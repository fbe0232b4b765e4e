"""Overall-survival regression from lesion-encoder features.

Pipeline per model: PCA on the latent features, append age and resection
status, fit a log-link Tweedie GLM by IRLS, and predict days of survival.
Sub-models from cross-validation folds (and different encoders) are
combined by averaging their predictions.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats

RESECTION_VALUES = ("GTR", "STR", "NA")
CLASSES = ("short", "mid", "long")
DEFAULT_COMPONENTS = 10
DEFAULT_POWER = 1.6
DEFAULT_POWERS = tuple(round(1.1 + 0.1 * i, 1) for i in range(9))
RIDGE = 1e-10
_ETA_CLIP = 700.0


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, iterations: int):
        super().__init__(message)
        self.iterations = iterations


class MissingCaseError(KeyError):
    pass


# ---------------------------------------------------------------------------
# data containers


@dataclass(frozen=True)
class ClinicalRecord:
    case_id: str
    age: float
    resection: str = "NA"
    os_days: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.age) and 0 < self.age < 120):
            raise ValueError(f"{self.case_id}: age must be in (0, 120), got {self.age}")
        resection = (self.resection or "NA").strip().upper()
        if resection not in RESECTION_VALUES:
            raise ValueError(f"{self.case_id}: resection must be one of {RESECTION_VALUES}, got {self.resection!r}")
        object.__setattr__(self, "resection", resection)
        if self.os_days is not None and not (math.isfinite(self.os_days) and self.os_days > 0):
            raise ValueError(f"{self.case_id}: os_days must be > 0, got {self.os_days}")


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    case_ids: tuple
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        ids = tuple(str(c) for c in self.case_ids)
        if values.ndim != 2 or values.shape[0] != len(ids):
            raise ValueError(f"need an (n_cases, d) matrix matching {len(ids)} case ids, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("features must be finite")
        if len(set(ids)) != len(ids):
            raise ValueError("case ids must be unique")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "case_ids", ids)

    @property
    def shape(self):
        return self.values.shape

    def rows(self, ids: Sequence[str]) -> np.ndarray:
        index = {c: i for i, c in enumerate(self.case_ids)}
        try:
            return self.values[[index[c] for c in ids]]
        except KeyError as exc:
            raise MissingCaseError(f"no features for case {exc.args[0]!r}") from None


@dataclass(frozen=True)
class SurvivalClassThresholds:
    short_below: float = 300.0
    long_above: float = 450.0

    def __post_init__(self):
        if not self.short_below < self.long_above:
            raise ValueError("short_below must be < long_above")


DEFAULT_THRESHOLDS = SurvivalClassThresholds()


# ---------------------------------------------------------------------------
# PCA


@dataclass(eq=False)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        return cls(
            np.asarray(d["mean"], dtype=np.float64),
            np.atleast_2d(np.asarray(d["components"], dtype=np.float64)),
            np.asarray(d["explained_variance"], dtype=np.float64),
        )


def fit_pca(X, n_components: int) -> PcaModel:
    """Principal directions of ``X`` from the SVD of the centred matrix.

    Explained variances use the ``n - 1`` normaliser. Each component is
    signed so that its largest-magnitude entry is positive.
    """
    X = np.asarray(getattr(X, "values", X), dtype=np.float64)
    n, d = X.shape
    if n < 2:
        raise ValueError("PCA needs at least 2 cases")
    if not 1 <= n_components <= min(n - 1, d):
        raise ValueError(f"n_components must be in [1, {min(n - 1, d)}], got {n_components}")
    mean = X.mean(axis=0)
    centred = X - mean
    _, s, vt = np.linalg.svd(centred, full_matrices=False)
    if s[0] <= np.finfo(np.float64).eps * max(1.0, np.abs(X).max()) * max(n, d):
        raise ValueError("features have zero variance; PCA is undefined")
    comps = vt[:n_components].copy()
    pivot = np.argmax(np.abs(comps), axis=1)
    signs = np.sign(comps[np.arange(n_components), pivot])
    comps *= signs[:, None]
    var = s[:n_components] ** 2 / (n - 1)
    return PcaModel(mean, comps, var)


def project(pca: PcaModel, X) -> np.ndarray:
    X = np.asarray(getattr(X, "values", X), dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != pca.mean.size:
        raise ValueError(f"expected {pca.mean.size} feature columns, got shape {X.shape}")
    return (X - pca.mean) @ pca.components.T


def reconstruct(pca: PcaModel, Z) -> np.ndarray:
    return np.asarray(Z, dtype=np.float64) @ pca.components + pca.mean


# ---------------------------------------------------------------------------
# design matrix


def assemble_features(reduced, clinical: Sequence[ClinicalRecord],
                      case_ids: Sequence[str] | None = None) -> np.ndarray:
    """Append ``age, GTR, STR`` columns to reduced features.

    Rows follow the order of ``clinical``. When ``case_ids`` labels the rows
    of ``reduced`` they are matched by id; otherwise rows must already be in
    clinical order.
    """
    reduced = np.atleast_2d(np.asarray(reduced, dtype=np.float64))
    if case_ids is not None:
        index = {str(c): i for i, c in enumerate(case_ids)}
        try:
            reduced = reduced[[index[r.case_id] for r in clinical]]
        except KeyError as exc:
            raise MissingCaseError(f"case {exc.args[0]!r} has no feature row") from None
    elif reduced.shape[0] != len(clinical):
        raise ValueError(f"{reduced.shape[0]} feature rows but {len(clinical)} clinical records")
    extra = np.array(
        [[r.age, float(r.resection == "GTR"), float(r.resection == "STR")] for r in clinical],
        dtype=np.float64,
    ).reshape(len(clinical), 3)
    return np.hstack([reduced, extra])


# ---------------------------------------------------------------------------
# Tweedie GLM


def tweedie_deviance(y, mu, power: float) -> np.ndarray:
    """Unit deviance of the Tweedie family for ``1 < power < 2``."""
    y = np.asarray(y, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    p = power
    return 2.0 * (
        y ** (2 - p) / ((1 - p) * (2 - p))
        - y * mu ** (1 - p) / (1 - p)
        + mu ** (2 - p) / (2 - p)
    )


def mean_deviance(beta, A, y, power: float) -> float:
    """Mean deviance for log-link coefficients ``beta`` on design ``A`` (intercept column included)."""
    mu = np.exp(np.clip(A @ beta, -_ETA_CLIP, _ETA_CLIP))
    return float(np.mean(tweedie_deviance(y, mu, power)))


def mean_deviance_grad(beta, A, y, power: float) -> np.ndarray:
    """Gradient of :func:`mean_deviance` with respect to ``beta``."""
    y = np.asarray(y, dtype=np.float64)
    mu = np.exp(np.clip(A @ beta, -_ETA_CLIP, _ETA_CLIP))
    return (2.0 / y.size) * (A.T @ (mu ** (1 - power) * (mu - y)))


@dataclass(eq=False)
class TweedieModel:
    power: float
    coefficients: np.ndarray
    intercept: float
    feature_means: np.ndarray
    feature_stds: np.ndarray
    n_iter: int = 0
    deviance_history: list = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.coefficients.size

    def standardize(self, design) -> np.ndarray:
        design = np.asarray(design, dtype=np.float64)
        if design.ndim == 1:
            design = design.reshape(1, -1)
        if design.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} design columns, got {design.shape[1]}")
        return (design - self.feature_means) / self.feature_stds

    def to_dict(self) -> dict:
        return {
            "power": self.power,
            "intercept": self.intercept,
            "coefficients": self.coefficients.tolist(),
            "feature_means": self.feature_means.tolist(),
            "feature_stds": self.feature_stds.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TweedieModel":
        return cls(
            float(d["power"]),
            np.asarray(d["coefficients"], dtype=np.float64).reshape(-1),
            float(d["intercept"]),
            np.asarray(d["feature_means"], dtype=np.float64).reshape(-1),
            np.asarray(d["feature_stds"], dtype=np.float64).reshape(-1),
        )


def _check_power(power: float) -> float:
    power = float(power)
    if not 1.1 - 1e-12 <= power <= 1.9 + 1e-12:
        raise ValueError(f"Tweedie power must lie in [1.1, 1.9], got {power}")
    return power


def fit_tweedie(design, y, power: float = DEFAULT_POWER, max_iter: int = 100, tol: float = 1e-8) -> TweedieModel:
    """Fit a log-link Tweedie GLM by iteratively reweighted least squares.

    Columns are standardised first (constant columns keep std 1). The
    iteration starts from ``mu = y`` and halves any step that would raise
    the mean deviance, so ``deviance_history`` never increases. Stops when
    the relative deviance change drops below ``tol``.

    Raises:
        ValueError: non-positive ``y``, power outside [1.1, 1.9], too few rows.
        ConvergenceError: no convergence within ``max_iter`` iterations.
    """
    power = _check_power(power)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    design = np.asarray(design, dtype=np.float64).reshape(y.size, -1)
    n, k = design.shape
    if not np.all(np.isfinite(y)) or np.any(y <= 0):
        raise ValueError("targets must be finite and strictly positive")
    if not np.all(np.isfinite(design)):
        raise ValueError("design matrix must be finite")
    if n < k + 1:
        raise ValueError(f"need at least {k + 1} rows for {k} features, got {n}")

    means = design.mean(axis=0) if k else np.zeros(0)
    stds = design.std(axis=0) if k else np.zeros(0)
    stds = np.where(stds > 0, stds, 1.0)
    A = np.hstack([np.ones((n, 1)), (design - means) / stds])
    ridge = RIDGE * np.eye(k + 1)

    def solve(mu, rhs_vec):
        w = mu ** (2 - power)
        return np.linalg.solve(A.T @ (A * w[:, None]) + ridge, A.T @ (w * rhs_vec))

    # first step: weighted least squares on log(y) from mu = y
    mu0 = np.maximum(y, 1e-10)
    beta = solve(mu0, np.log(mu0))
    dev = mean_deviance(beta, A, y, power)
    history = [dev]

    for it in range(2, max_iter + 1):
        mu = np.exp(np.clip(A @ beta, -_ETA_CLIP, _ETA_CLIP))
        step = solve(mu, (y - mu) / mu)
        t = 1.0
        for _ in range(60):
            candidate = beta + t * step
            new_dev = mean_deviance(candidate, A, y, power)
            if new_dev <= dev:
                break
            t *= 0.5
        else:
            # no descent left at machine precision: already at the optimum
            return _model(power, beta, means, stds, it - 1, history)
        beta = candidate
        history.append(new_dev)
        change = abs(dev - new_dev)
        dev = new_dev
        if change <= tol * max(abs(history[-2]), np.finfo(np.float64).tiny):
            return _model(power, beta, means, stds, it, history)
    raise ConvergenceError(f"IRLS did not converge in {max_iter} iterations", max_iter)


def _model(power, beta, means, stds, n_iter, history) -> TweedieModel:
    return TweedieModel(power, beta[1:].copy(), float(beta[0]), means, stds, n_iter, history)


def predict_os(model: TweedieModel, design) -> np.ndarray:
    """Predicted survival in days, ``exp(intercept + standardised_row . coefficients)``.

    A single row gives a length-1 array.
    """
    eta = model.intercept + model.standardize(design) @ model.coefficients
    return np.exp(np.clip(eta, -_ETA_CLIP, _ETA_CLIP))


# ---------------------------------------------------------------------------
# evaluation


def classify_os(os_days: float, thresholds: SurvivalClassThresholds = DEFAULT_THRESHOLDS) -> str:
    """``short`` below 300 days, ``long`` above 450, ``mid`` in between (both ends inclusive)."""
    os_days = float(os_days)
    if not (math.isfinite(os_days) and os_days > 0):
        raise ValueError(f"survival must be a positive number of days, got {os_days}")
    if os_days < thresholds.short_below:
        return "short"
    if os_days > thresholds.long_above:
        return "long"
    return "mid"


@dataclass
class OsEvaluation:
    accuracy: float
    mse: float
    median_se: float
    std_se: float
    spearman_r: float

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "mse": self.mse,
            "median_se": self.median_se,
            "std_se": self.std_se,
            "spearman_r": self.spearman_r,
        }


def spearman(a, b) -> float:
    """Pearson correlation of average ranks; 0.0 when either side is constant."""
    ra, rb = stats.rankdata(a), stats.rankdata(b)
    ra, rb = ra - ra.mean(), rb - rb.mean()
    den = math.sqrt(float(ra @ ra) * float(rb @ rb))
    return 0.0 if den == 0 else float(ra @ rb) / den


def evaluate_os(pred, actual, thresholds: SurvivalClassThresholds = DEFAULT_THRESHOLDS) -> OsEvaluation:
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    actual = np.asarray(actual, dtype=np.float64).reshape(-1)
    if pred.size != actual.size:
        raise ValueError(f"length mismatch: {pred.size} predictions vs {actual.size} actual values")
    if pred.size < 2:
        raise ValueError("need at least 2 cases to evaluate")
    hits = [classify_os(p, thresholds) == classify_os(a, thresholds) for p, a in zip(pred, actual)]
    se = (pred - actual) ** 2
    return OsEvaluation(
        accuracy=float(np.mean(hits)),
        mse=float(se.mean()),
        median_se=float(np.median(se)),
        std_se=float(se.std()),
        spearman_r=spearman(pred, actual),
    )


# ---------------------------------------------------------------------------
# sub-models, cross-validation, ensembles


@dataclass(eq=False)
class SubModel:
    """One PCA projection plus the Tweedie GLM fitted on top of it."""

    pca: PcaModel
    tweedie: TweedieModel

    def predict(self, features: FeatureMatrix, clinical: Sequence[ClinicalRecord]) -> np.ndarray:
        ids = [r.case_id for r in clinical]
        reduced = project(self.pca, features.rows(ids))
        return predict_os(self.tweedie, assemble_features(reduced, clinical))

    def to_dict(self) -> dict:
        return {"pca": self.pca.to_dict(), "tweedie": self.tweedie.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "SubModel":
        return cls(PcaModel.from_dict(d["pca"]), TweedieModel.from_dict(d["tweedie"]))


def _targets(clinical: Sequence[ClinicalRecord]) -> np.ndarray:
    missing = [r.case_id for r in clinical if r.os_days is None]
    if missing:
        raise ValueError(f"cases without survival time cannot be used for fitting: {missing[:5]}")
    return np.array([r.os_days for r in clinical], dtype=np.float64)


def fit_submodel(features: FeatureMatrix, clinical: Sequence[ClinicalRecord],
                 n_components: int = DEFAULT_COMPONENTS, power: float = DEFAULT_POWER,
                 max_iter: int = 100, tol: float = 1e-8) -> SubModel:
    """Fit PCA and the GLM on the cases listed in ``clinical``."""
    y = _targets(clinical)
    X = features.rows([r.case_id for r in clinical])
    pca = fit_pca(X, n_components)
    design = assemble_features(project(pca, X), clinical)
    return SubModel(pca, fit_tweedie(design, y, power, max_iter, tol))


def fold_assignment(n_cases: int, n_folds: int = 5, seed: int = 0) -> np.ndarray:
    """Fold index per case from a seeded shuffle; fold sizes differ by at most one."""
    if n_folds < 2:
        raise ValueError("need at least 2 folds")
    if n_cases < n_folds:
        raise ValueError(f"{n_cases} cases cannot fill {n_folds} folds")
    perm = np.random.default_rng(seed).permutation(n_cases)
    folds = np.empty(n_cases, dtype=int)
    for f, part in enumerate(np.array_split(perm, n_folds)):
        folds[part] = f
    return folds


@dataclass(eq=False)
class CrossValidationResult:
    case_ids: list
    folds: np.ndarray
    submodels: list
    predictions: np.ndarray
    actual: np.ndarray
    evaluation: OsEvaluation
    fold_evaluations: list
    n_components: int
    power: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "n_components": self.n_components,
            "power": self.power,
            "n_folds": len(self.submodels),
            "seed": self.seed,
            "evaluation": self.evaluation.to_dict(),
            "folds": [
                {
                    "fold": f,
                    "holdout": [c for c, g in zip(self.case_ids, self.folds) if g == f],
                    "evaluation": ev.to_dict() if ev is not None else None,
                }
                for f, ev in enumerate(self.fold_evaluations)
            ],
            "predictions": [
                {
                    "case_id": c,
                    "fold": int(g),
                    "actual_os_days": float(a),
                    "predicted_os_days": float(p),
                    "predicted_class": classify_os(p),
                }
                for c, g, a, p in zip(self.case_ids, self.folds, self.actual, self.predictions)
            ],
        }


def cross_validate(features: FeatureMatrix, clinical: Sequence[ClinicalRecord],
                   n_components: int = DEFAULT_COMPONENTS, power: float = DEFAULT_POWER,
                   n_folds: int = 5, seed: int = 0,
                   thresholds: SurvivalClassThresholds = DEFAULT_THRESHOLDS) -> CrossValidationResult:
    """K-fold cross-validation; PCA and GLM are refit on each training split.

    The evaluation is computed on the pooled holdout predictions.
    """
    clinical = list(clinical)
    actual = _targets(clinical)
    folds = fold_assignment(len(clinical), n_folds, seed)
    predictions = np.empty(len(clinical))
    submodels, fold_evals = [], []
    for f in range(n_folds):
        train = [r for r, g in zip(clinical, folds) if g != f]
        hold = [r for r, g in zip(clinical, folds) if g == f]
        model = fit_submodel(features, train, n_components, power)
        pred = model.predict(features, hold)
        predictions[folds == f] = pred
        submodels.append(model)
        fold_evals.append(evaluate_os(pred, actual[folds == f], thresholds) if len(hold) >= 2 else None)
    return CrossValidationResult(
        case_ids=[r.case_id for r in clinical],
        folds=folds,
        submodels=submodels,
        predictions=predictions,
        actual=actual,
        evaluation=evaluate_os(predictions, actual, thresholds),
        fold_evaluations=fold_evals,
        n_components=n_components,
        power=power,
        seed=seed,
    )


def ensemble_predict(families, features: FeatureMatrix, clinical: Sequence[ClinicalRecord]) -> np.ndarray:
    """Average predictions over model families.

    Each family (a list of sub-models, e.g. the folds of one encoder) is
    first averaged over its sub-models; the family means are then averaged.
    A bare :class:`SubModel` counts as a family of one.
    """
    families = [[f] if isinstance(f, SubModel) else list(f) for f in families]
    if not families or any(len(f) == 0 for f in families):
        raise ValueError("need at least one non-empty model family")
    family_means = [np.mean([m.predict(features, clinical) for m in fam], axis=0) for fam in families]
    return np.mean(family_means, axis=0)


@dataclass(eq=False)
class GridSearchResult:
    best_components: int
    best_power: float
    table: list

    def to_dict(self) -> dict:
        return {"best": {"n_components": self.best_components, "power": self.best_power}, "table": self.table}


def grid_search(features: FeatureMatrix, clinical: Sequence[ClinicalRecord],
                components_range: Iterable[int] = range(2, 61), powers: Iterable[float] = DEFAULT_POWERS,
                seed: int = 0, n_folds: int = 5, n_jobs: int = 1) -> GridSearchResult:
    """Linear search over (n_components, power) scored by cross-validated accuracy.

    Ties go to fewer components, then to the smaller power. ``n_jobs > 1``
    evaluates grid points in threads; the table keeps grid order.
    """
    comps = sorted(int(c) for c in components_range)
    powers = sorted(float(p) for p in powers)
    if not comps or not powers:
        raise ValueError("grid ranges must be non-empty")
    points = [(c, p) for c in comps for p in powers]

    def score(point):
        c, p = point
        ev = cross_validate(features, clinical, c, p, n_folds, seed).evaluation
        return {"n_components": c, "power": p, **ev.to_dict()}

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            table = list(pool.map(score, points))
    else:
        table = [score(pt) for pt in points]
    best = table[0]
    for row in table[1:]:
        if row["accuracy"] > best["accuracy"]:
            best = row
    return GridSearchResult(best["n_components"], best["power"], table)


# ---------------------------------------------------------------------------
# file formats


def read_feature_csv(source) -> tuple[FeatureMatrix, list[ClinicalRecord]]:
    """Parse ``case_id,age,resection,os_days,f0,...`` rows.

    ``source`` is a path or the CSV text itself (when it contains a newline).
    A blank ``os_days`` marks an unlabeled case.
    """
    text = source if isinstance(source, str) and "\n" in source else Path(source).read_text()
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ValueError("feature CSV is empty") from None
    if header[:4] != ["case_id", "age", "resection", "os_days"]:
        raise ValueError(f"feature CSV must start with case_id,age,resection,os_days; got {header[:4]}")
    feat_cols = header[4:]
    if not feat_cols or feat_cols != [f"f{i}" for i in range(len(feat_cols))]:
        raise ValueError("feature columns must be named f0, f1, ... in order")
    ids, rows, clinical = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ValueError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        case_id, age, resection, os_days = (c.strip() for c in row[:4])
        try:
            clinical.append(ClinicalRecord(case_id, float(age), resection or "NA",
                                           float(os_days) if os_days else None))
            rows.append([float(v) for v in row[4:]])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        ids.append(case_id)
    if not ids:
        raise ValueError("feature CSV has no data rows")
    return FeatureMatrix(tuple(ids), np.array(rows)), clinical


def write_feature_csv(features: FeatureMatrix, clinical: Sequence[ClinicalRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["case_id", "age", "resection", "os_days"] + [f"f{i}" for i in range(features.shape[1])])
    for r, row in zip(clinical, features.rows([r.case_id for r in clinical])):
        os_days = "" if r.os_days is None else repr(float(r.os_days))
        w.writerow([r.case_id, repr(float(r.age)), r.resection, os_days] + [repr(float(v)) for v in row])
    return buf.getvalue()


def models_to_json(submodels: Sequence[SubModel], **meta) -> str:
    doc = {"format": "spherebrats-os-model", "version": 1, **meta,
           "submodels": [m.to_dict() for m in submodels]}
    return json.dumps(doc, indent=2) + "\n"


def models_from_json(text: str) -> list[SubModel]:
    doc = json.loads(text)
    try:
        return [SubModel.from_dict(d) for d in doc["submodels"]]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed model file: missing {exc}") from exc


def predictions_csv(case_ids: Sequence[str], predictions, thresholds=DEFAULT_THRESHOLDS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["case_id", "predicted_os_days", "predicted_class"])
    for c, p in zip(case_ids, predictions):
        w.writerow([c, repr(float(p)), classify_os(p, thresholds)])
    return buf.getvalue()
