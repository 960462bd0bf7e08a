"""Transforms, scalings and normalizations for spectral feature matrices.

Every operation is a pure function `FeatureMatrix -> FeatureMatrix`. The private `_apply_*`
twins additionally return the statistics they fitted, which `apply_pipeline` records in the
pipeline audit.
"""

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, Dict, List, Mapping, Sequence, Tuple

import numpy as np
from scipy import stats

from specprep.exceptions import ConfigError, PipelineStepError, SpecprepError, TransformError

from .iohelper import PathLike, json_dumps, load_json, loads_json
from .matrix import FeatureMatrix

Fitted = Dict[str, Any]
Applied = Tuple[FeatureMatrix, Fitted]

LOG_BASES = {"e": None, "2": 2.0, "10": 10.0}
MAX_PEAK_MODES = ("per_spectrum", "mean_spectrum_location")
SCALING_KINDS = ("unit_sd_scale", "pareto_scale", "median_iqr_scale")


def _listing(items: Sequence[str], limit: int = 10) -> str:
    shown = ", ".join(f"`{item}`" for item in items[:limit])
    if len(items) > limit:
        shown += f" and {len(items) - limit} more"
    return shown


def _column_sd(kind: str, matrix: FeatureMatrix) -> np.ndarray:
    if matrix.n < 2:
        raise TransformError(kind, "A column standard deviation needs at least 2 samples.")
    sd = np.std(matrix.values, axis=0, ddof=1)
    flat = [label for label, value in zip(matrix.feature_labels, sd) if not value > 0]
    if flat:
        raise TransformError(kind, f"Zero standard deviation in column(s) {_listing(flat)}.")
    return sd


######################
# Log transformation #
######################


def _log_base(base: Any) -> str:
    if isinstance(base, (int, float)) and not isinstance(base, bool) and float(base).is_integer():
        return str(int(base))
    return str(base)


def _apply_log_shift(matrix: FeatureMatrix, a: float = 1.0, base: str = "e") -> Applied:
    base = _log_base(base)
    if base not in LOG_BASES:
        raise TransformError("log_shift", f"base must be one of {sorted(LOG_BASES)}, got {base!r}.")
    shifted = matrix.values + a
    offending = np.argwhere(~(shifted > 0))
    if offending.size:
        row, column = offending[0]
        raise TransformError(
            "log_shift",
            f"value {matrix.values[row, column]!r} + a={a!r} is not positive at sample"
            f" `{matrix.sample_ids[row]}`, feature `{matrix.feature_labels[column]}`.",
        )
    logged = np.log(shifted)
    if LOG_BASES[base] is not None:
        logged = logged / np.log(LOG_BASES[base])
    return matrix.with_values(logged), {"a": a, "base": base}


def log_shift(matrix: FeatureMatrix, a: float = 1.0, base: str = "e") -> FeatureMatrix:
    """log(value + a), natural log unless another base is requested."""
    return _apply_log_shift(matrix, a, base)[0]


###########
# Scaling #
###########


def _apply_unit_sd_scale(matrix: FeatureMatrix, center: bool = False) -> Applied:
    sd = _column_sd("unit_sd_scale", matrix)
    values = matrix.values
    fitted: Fitted = {"sd": sd.tolist()}
    if center:
        mean = values.mean(axis=0)
        values = values - mean
        fitted["mean"] = mean.tolist()
    return matrix.with_values(values / sd), fitted


def unit_sd_scale(matrix: FeatureMatrix, center: bool = False) -> FeatureMatrix:
    """Reduction to z-scores: each column divided by its sample SD (n - 1 denominator)."""
    return _apply_unit_sd_scale(matrix, center)[0]


def _apply_pareto_scale(matrix: FeatureMatrix) -> Applied:
    sd = _column_sd("pareto_scale", matrix)
    return matrix.with_values(matrix.values / np.sqrt(sd)), {"sd": sd.tolist()}


def pareto_scale(matrix: FeatureMatrix) -> FeatureMatrix:
    """Each column divided by the square root of its SD."""
    return _apply_pareto_scale(matrix)[0]


def _apply_median_iqr_scale(matrix: FeatureMatrix) -> Applied:
    lower, median, upper = np.percentile(matrix.values, [25, 50, 75], axis=0)
    iqr = upper - lower
    flat = [label for label, value in zip(matrix.feature_labels, iqr) if not value > 0]
    if flat:
        raise TransformError(
            "median_iqr_scale", f"Zero inter-quartile range in column(s) {_listing(flat)}."
        )
    scaled = (matrix.values - median) / iqr
    return matrix.with_values(scaled), {"median": median.tolist(), "iqr": iqr.tolist()}


def median_iqr_scale(matrix: FeatureMatrix) -> FeatureMatrix:
    return _apply_median_iqr_scale(matrix)[0]


#################################
# Within-spectrum normalization #
#################################


def _apply_closure(matrix: FeatureMatrix) -> Applied:
    values = matrix.values
    negative = np.flatnonzero((values < 0).any(axis=1))
    if negative.size:
        raise TransformError(
            "closure", f"Negative intensity in sample `{matrix.sample_ids[negative[0]]}`."
        )
    totals = values.sum(axis=1)
    empty = np.flatnonzero(~(totals > 0))
    if empty.size:
        raise TransformError(
            "closure", f"Row sum is not positive for sample `{matrix.sample_ids[empty[0]]}`."
        )
    return matrix.with_values(values / totals[:, None]), {"row_sum": totals.tolist()}


def closure(matrix: FeatureMatrix) -> FeatureMatrix:
    """Divide every spectrum by its total so that each row sums to 1."""
    return _apply_closure(matrix)[0]


def _apply_max_peak(matrix: FeatureMatrix, mode: str = "per_spectrum") -> Applied:
    values = matrix.values
    negative = np.flatnonzero((values < 0).any(axis=1))
    if negative.size:
        raise TransformError(
            "max_peak", f"Negative intensity in sample `{matrix.sample_ids[negative[0]]}`."
        )
    fitted: Fitted = {"mode": mode}
    if mode == "per_spectrum":
        divisor = values.max(axis=1)
        fitted["location"] = [matrix.feature_labels[j] for j in values.argmax(axis=1)]
    else:
        # One location for the whole matrix, taken from the mean spectrum.
        location = int(values.mean(axis=0).argmax())
        divisor = values[:, location]
        fitted["location"] = matrix.feature_labels[location]
    zero = np.flatnonzero(~(divisor > 0))
    if zero.size:
        raise TransformError(
            "max_peak", f"Zero divisor for sample `{matrix.sample_ids[zero[0]]}`."
        )
    fitted["divisor"] = divisor.tolist()
    return matrix.with_values(values / divisor[:, None]), fitted


def max_peak(matrix: FeatureMatrix, mode: str = "per_spectrum") -> FeatureMatrix:
    """Divide every spectrum by its maximum, or by its value where the mean spectrum peaks."""
    return _apply_max_peak(matrix, mode)[0]


def _apply_lag_diff(matrix: FeatureMatrix) -> Applied:
    if matrix.p < 2:
        raise TransformError("lag_diff", "Lagging needs at least 2 features.")
    labels = matrix.feature_labels
    lagged = [f"{labels[j + 1]}-{labels[j]}" for j in range(matrix.p - 1)]
    return matrix.with_values(np.diff(matrix.values, axis=1), lagged), {}


def lag_diff(matrix: FeatureMatrix) -> FeatureMatrix:
    """Differences between subsequent features along the spectral range."""
    return _apply_lag_diff(matrix)[0]


def _apply_quantile(matrix: FeatureMatrix) -> Applied:
    if matrix.n < 2:
        raise TransformError("quantile", "Quantile normalization needs at least 2 samples.")
    values = matrix.values
    order = np.argsort(values, axis=1, kind="stable")
    ordered = np.take_along_axis(values, order, axis=1)
    reference = ordered.mean(axis=0)

    normalized = np.empty_like(values)
    for i in range(matrix.n):
        # Tied values share the mean of the reference values they span.
        _, starts, counts = np.unique(ordered[i], return_index=True, return_counts=True)
        shared = np.add.reduceat(reference, starts) / counts
        normalized[i, order[i]] = np.repeat(shared, counts)
    return matrix.with_values(normalized), {"reference": reference.tolist()}


def quantile(matrix: FeatureMatrix) -> FeatureMatrix:
    """Give every sample the mean distribution of the sorted samples, matched by rank."""
    return _apply_quantile(matrix)[0]


def _apply_rank(matrix: FeatureMatrix) -> Applied:
    return matrix.with_values(stats.rankdata(matrix.values, method="average", axis=1)), {}


def rank(matrix: FeatureMatrix) -> FeatureMatrix:
    """Within-sample ranks of the spectral response; ties get their average rank."""
    return _apply_rank(matrix)[0]


def _apply_binarize(matrix: FeatureMatrix, thresholds: Sequence[float]) -> Applied:
    limits = np.asarray(thresholds, dtype=float)
    if limits.shape != (matrix.p,):
        raise TransformError(
            "binarize", f"{limits.size} threshold(s) given for {matrix.p} feature(s)."
        )
    # A value at the detection limit counts as not detected.
    detected = (matrix.values > limits).astype(float)
    return matrix.with_values(detected), {"thresholds": limits.tolist()}


def binarize(matrix: FeatureMatrix, thresholds: Sequence[float]) -> FeatureMatrix:
    return _apply_binarize(matrix, thresholds)[0]


##################
# Pipeline steps #
##################


def _check_log_shift(params: Mapping[str, Any]) -> Dict[str, Any]:
    a = params.get("a", 1.0)
    base = _log_base(params.get("base", "e"))
    if isinstance(a, bool) or not isinstance(a, (int, float)) or not np.isfinite(a):
        raise ConfigError("log_shift", f"shift `a` must be a finite number, got {a!r}.")
    if base not in LOG_BASES:
        raise ConfigError("log_shift", f"base must be one of {sorted(LOG_BASES)}, got {base!r}.")
    return {"a": float(a), "base": base}


def _check_unit_sd(params: Mapping[str, Any]) -> Dict[str, Any]:
    center = params.get("center", False)
    if not isinstance(center, bool):
        raise ConfigError("unit_sd_scale", f"`center` must be true or false, got {center!r}.")
    return {"center": center}


def _check_max_peak(params: Mapping[str, Any]) -> Dict[str, Any]:
    mode = params.get("mode", "per_spectrum")
    if mode not in MAX_PEAK_MODES:
        raise ConfigError("max_peak", f"mode must be one of {list(MAX_PEAK_MODES)}, got {mode!r}.")
    return {"mode": mode}


def _check_binarize(params: Mapping[str, Any]) -> Dict[str, Any]:
    thresholds = params.get("thresholds")
    if not isinstance(thresholds, (list, tuple)) or not thresholds:
        raise ConfigError("binarize", "`thresholds` must be a non-empty list of numbers.")
    try:
        return {"thresholds": tuple(float(value) for value in thresholds)}
    except (TypeError, ValueError):
        raise ConfigError("binarize", f"`thresholds` must be numbers, got {thresholds!r}.")


def _no_params(params: Mapping[str, Any]) -> Dict[str, Any]:
    return {}


_Checker = Callable[..., Dict[str, Any]]
_STEPS: Dict[str, Tuple[Tuple[str, ...], _Checker, Callable[..., Applied]]] = {
    "log_shift": (("a", "base"), _check_log_shift, _apply_log_shift),
    "unit_sd_scale": (("center",), _check_unit_sd, _apply_unit_sd_scale),
    "pareto_scale": ((), _no_params, _apply_pareto_scale),
    "median_iqr_scale": ((), _no_params, _apply_median_iqr_scale),
    "closure": ((), _no_params, _apply_closure),
    "max_peak": (("mode",), _check_max_peak, _apply_max_peak),
    "lag_diff": ((), _no_params, _apply_lag_diff),
    "quantile": ((), _no_params, _apply_quantile),
    "rank": ((), _no_params, _apply_rank),
    "binarize": (("thresholds",), _check_binarize, _apply_binarize),
}

KINDS = tuple(_STEPS)


@dataclass(frozen=True)
class TransformStep:
    """A named transform with its validated parameters."""

    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _STEPS:
            raise ConfigError(
                "pipeline", f"Unknown transform `{self.kind}`; expected one of {list(KINDS)}."
            )
        allowed, check, _ = _STEPS[self.kind]
        unknown = sorted(set(self.params) - set(allowed))
        if unknown:
            raise ConfigError(self.kind, f"Unknown parameter(s): {', '.join(unknown)}")
        object.__setattr__(self, "params", MappingProxyType(check(self.params)))

    def apply(self, matrix: FeatureMatrix) -> Applied:
        return _STEPS[self.kind][2](matrix, **self.params)

    def to_dict(self) -> Dict[str, Any]:
        params = {
            key: list(value) if isinstance(value, tuple) else value
            for key, value in self.params.items()
        }
        return {"kind": self.kind, "params": params}


@dataclass(frozen=True)
class StepAudit:
    index: int
    kind: str
    params: Mapping[str, Any]
    fitted: Mapping[str, Any]
    n_features_out: int


@dataclass(frozen=True)
class Pipeline:
    steps: Tuple[TransformStep, ...] = ()
    audit: Tuple[StepAudit, ...] = ()
    diagnostics: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    @classmethod
    def from_records(cls, records: Any, source: PathLike = "<pipeline>") -> "Pipeline":
        if not isinstance(records, list):
            raise ConfigError(source, "A pipeline is a JSON array of {kind, params} objects.")
        steps = []
        for index, record in enumerate(records):
            if not isinstance(record, dict) or "kind" not in record:
                raise ConfigError(source, f"Step {index} needs a `kind`.")
            unknown = sorted(set(record) - {"kind", "params"})
            if unknown:
                raise ConfigError(source, f"Step {index} has unknown key(s): {', '.join(unknown)}")
            params = record.get("params") or {}
            if not isinstance(params, dict):
                raise ConfigError(source, f"Step {index} `params` must be an object.")
            steps.append(TransformStep(record["kind"], params))
        return cls(tuple(steps))

    @classmethod
    def from_json(cls, text: str, source: PathLike = "<pipeline>") -> "Pipeline":
        return cls.from_records(loads_json(text, source), source)

    @classmethod
    def load(cls, path: PathLike) -> "Pipeline":
        return cls.from_records(load_json(path), path)

    def to_json(self) -> str:
        return json_dumps([step.to_dict() for step in self.steps])

    def audit_records(self) -> Dict[str, Any]:
        return {
            "steps": [
                {
                    "index": entry.index,
                    "kind": entry.kind,
                    "params": self.steps[entry.index].to_dict()["params"],
                    "fitted": dict(entry.fitted),
                    "n_features_out": entry.n_features_out,
                }
                for entry in self.audit
            ],
            "diagnostics": list(self.diagnostics),
        }


def ordering_diagnostics(steps: Sequence[TransformStep]) -> List[str]:
    """Warn about scaling steps that compute means/SDs before the data were logged."""
    messages = []
    for index, step in enumerate(steps):
        if step.kind != "log_shift":
            continue
        for earlier, previous in enumerate(steps[:index]):
            if previous.kind in SCALING_KINDS:
                messages.append(
                    f"Step order: scaling step {earlier} ({previous.kind}) precedes log_shift at"
                    f" step {index}; apply logarithms early and compute means and standard"
                    " deviations only after log-transforming."
                )
    return messages


def apply_pipeline(matrix: FeatureMatrix, pipeline: Pipeline) -> Tuple[FeatureMatrix, Pipeline]:
    audit = []
    current = matrix
    for index, step in enumerate(pipeline.steps):
        try:
            current, fitted = step.apply(current)
        except SpecprepError as error:
            raise PipelineStepError(index, step.kind, error)
        audit.append(StepAudit(index, step.kind, step.params, fitted, current.p))
    return current, Pipeline(
        steps=pipeline.steps,
        audit=tuple(audit),
        diagnostics=tuple(ordering_diagnostics(pipeline.steps)),
    )


###########################
# Closure bias experiment #
###########################


@dataclass(frozen=True, eq=False)
class BiasReport:
    p: int
    n: int
    seed: int
    corr_before: np.ndarray
    corr_after: np.ndarray
    mean_offdiag_before: float
    mean_offdiag_after: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p": self.p,
            "n": self.n,
            "seed": self.seed,
            "mean_offdiag_before": self.mean_offdiag_before,
            "mean_offdiag_after": self.mean_offdiag_after,
            "corr_before": self.corr_before.tolist(),
            "corr_after": self.corr_after.tolist(),
        }


def _correlation(values: np.ndarray) -> np.ndarray:
    corr = np.corrcoef(values, rowvar=False)
    corr = (corr + corr.T) / 2
    np.fill_diagonal(corr, 1.0)
    return corr


def _mean_offdiag(corr: np.ndarray) -> float:
    return float(corr[~np.eye(corr.shape[0], dtype=bool)].mean())


def closure_bias_experiment(p: int, n: int, seed: int) -> BiasReport:
    """Correlations of p independent log-normal variables before and after closure."""
    if p < 2:
        raise ConfigError("closure_bias_experiment", f"p must be at least 2, got {p}.")
    if n < 100:
        raise ConfigError("closure_bias_experiment", f"n must be at least 100, got {n}.")
    if not 0 <= seed < 2**64:
        raise ConfigError("closure_bias_experiment", "seed must be a 64-bit unsigned integer.")
    rng = np.random.default_rng(seed)
    raw = np.exp(rng.standard_normal((n, p)))
    closed = raw / raw.sum(axis=1, keepdims=True)
    before, after = _correlation(raw), _correlation(closed)
    return BiasReport(
        p=p,
        n=n,
        seed=seed,
        corr_before=before,
        corr_after=after,
        mean_offdiag_before=_mean_offdiag(before),
        mean_offdiag_after=_mean_offdiag(after),
    )
