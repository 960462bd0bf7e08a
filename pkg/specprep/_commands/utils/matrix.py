import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from specprep.exceptions import ConfigError, MatrixParseError, MatrixValidationError, OutputError

from .iohelper import PathLike, reject_unknown_keys, write_frame

Labels = Tuple[str, ...]

ID_COLUMN = "id"
GROUP_COLUMN = "group"
BATCH_COLUMN = "batch"
RESERVED_COLUMNS = (ID_COLUMN, GROUP_COLUMN, BATCH_COLUMN)


def _duplicates(labels: Sequence[str]) -> List[str]:
    seen, repeated = set(), []
    for label in labels:
        if label in seen and label not in repeated:
            repeated.append(label)
        seen.add(label)
    return repeated


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """n samples by p features of spectral intensities.

    Rows are samples (spectra), columns are features: grid points along the m/z axis or
    integrated peaks. `group` and `batch` are optional per-sample categorical labels.
    `values` is copied and made read-only on construction.
    """

    values: np.ndarray
    sample_ids: Labels
    feature_labels: Labels
    group: Optional[Labels] = None
    batch: Optional[Labels] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise MatrixValidationError(f"Expected a 2-d matrix, got {values.ndim} dimension(s).")
        n, p = values.shape
        if n < 1 or p < 1:
            raise MatrixValidationError(f"A feature matrix needs n >= 1 and p >= 1, got {n}x{p}.")
        sample_ids = tuple(str(label) for label in self.sample_ids)
        feature_labels = tuple(str(label) for label in self.feature_labels)
        if len(sample_ids) != n:
            raise MatrixValidationError(f"{len(sample_ids)} sample ids for {n} rows.")
        if len(feature_labels) != p:
            raise MatrixValidationError(f"{len(feature_labels)} feature labels for {p} columns.")
        for kind, labels in (("sample id", sample_ids), ("feature label", feature_labels)):
            repeated = _duplicates(labels)
            if repeated:
                raise MatrixValidationError(f"Duplicate {kind}(s): {', '.join(repeated)}")
        if np.isnan(values).any():
            row, column = np.argwhere(np.isnan(values))[0]
            raise MatrixValidationError(
                f"Missing value at sample `{sample_ids[row]}`, feature `{feature_labels[column]}`."
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sample_ids", sample_ids)
        object.__setattr__(self, "feature_labels", feature_labels)
        for name in (GROUP_COLUMN, BATCH_COLUMN):
            labels = getattr(self, name)
            if labels is None:
                continue
            labels = tuple(str(label) for label in labels)
            if len(labels) != n:
                raise MatrixValidationError(f"`{name}` has {len(labels)} labels for {n} samples.")
            object.__setattr__(self, name, labels)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def p(self) -> int:
        return int(self.values.shape[1])

    def with_values(
        self, values: np.ndarray, feature_labels: Optional[Sequence[str]] = None
    ) -> "FeatureMatrix":
        """Same samples and labels, new intensities (and optionally new features)."""
        labels = self.feature_labels if feature_labels is None else tuple(feature_labels)
        return replace(self, values=values, feature_labels=labels)

    def to_frame(self) -> pd.DataFrame:
        columns: Dict[str, Any] = {ID_COLUMN: list(self.sample_ids)}
        if self.group is not None:
            columns[GROUP_COLUMN] = list(self.group)
        if self.batch is not None:
            columns[BATCH_COLUMN] = list(self.batch)
        labels = pd.DataFrame(columns)
        features = pd.DataFrame(np.asarray(self.values), columns=list(self.feature_labels))
        return pd.concat([labels, features], axis=1)


@dataclass(frozen=True)
class SampleSummary:
    sample_id: str
    median: float
    iqr: float


@dataclass(frozen=True)
class BatchSummary:
    batch: str
    n_samples: int
    mean_median: float
    mean_iqr: float


###########
# CSV I/O #
###########


def _read_records(path: Path) -> List[Tuple[int, List[str]]]:
    """Non-blank CSV records with the line each one ends on."""
    try:
        with path.open(newline="", encoding="utf-8-sig") as handle:
            reader = csv.reader(handle, skipinitialspace=True)
            return [(reader.line_num, row) for row in reader if any(cell.strip() for cell in row)]
    except FileNotFoundError:
        raise MatrixParseError(path, "The file does not exist.")
    except (csv.Error, UnicodeDecodeError) as error:
        raise MatrixParseError(path, str(error))


def load_csv(
    path: PathLike,
    header: bool = True,
    group_column: Optional[str] = GROUP_COLUMN,
    batch_column: Optional[str] = BATCH_COLUMN,
) -> FeatureMatrix:
    """Read a feature matrix: first column sample ids, optional `group` / `batch` columns
    right after it, every remaining column a numeric feature in file order.

    Without a header the features are labelled 1..p and no label columns are recognised.
    """
    path = Path(path)
    records = _read_records(path)
    if not records:
        raise MatrixParseError(path, "The file is empty.")
    if header:
        names = [name.strip() for name in records[0][1]]
        body = records[1:]
    else:
        names = [ID_COLUMN] + [str(j) for j in range(1, len(records[0][1]))]
        body = records
    if len(names) < 2:
        raise MatrixParseError(path, "Expected an id column followed by at least one feature.")
    repeated = _duplicates(names)
    if repeated:
        raise MatrixValidationError(f"Duplicate column name(s) in `{path}`: {', '.join(repeated)}")
    for line, row in body:
        if len(row) != len(names):
            raise MatrixParseError(
                path,
                f"ragged row at line {line}: expected {len(names)} fields, saw {len(row)}",
                row=row[0].strip(),
            )

    raw = pd.DataFrame([row for _, row in body], columns=names, dtype=str)
    ids = raw.iloc[:, 0].str.strip()
    label_columns: Dict[str, Labels] = {}
    position = 1
    for name in (group_column, batch_column):
        if header and name and position < raw.shape[1] and raw.columns[position] == name:
            label_columns[name] = tuple(raw.iloc[:, position].str.strip())
            position += 1
    features = raw.iloc[:, position:]
    if features.shape[1] < 1:
        raise MatrixParseError(path, "No feature columns found.")

    values = np.empty(features.shape, dtype=float)
    for j, column in enumerate(features.columns):
        text = features[column].str.strip()
        numbers = pd.to_numeric(text, errors="coerce")
        bad = numbers.isna() | ~np.isfinite(numbers.fillna(0.0))
        if bad.any():
            first = int(np.flatnonzero(bad.to_numpy())[0])
            cell = text.iloc[first]
            details = "missing value" if cell == "" else f"non-numeric value `{cell}`"
            raise MatrixParseError(path, details, row=ids.iloc[first], column=str(column))
        # Python's float() rounds correctly; pandas' fast parser can be 1 ulp off.
        values[:, j] = np.asarray(text.to_numpy(), dtype=float)

    return FeatureMatrix(
        values=values,
        sample_ids=tuple(ids),
        feature_labels=tuple(features.columns),
        group=label_columns.get(group_column) if group_column else None,
        batch=label_columns.get(batch_column) if batch_column else None,
    )


def save_csv(matrix: FeatureMatrix, path: PathLike) -> Path:
    reserved = [label for label in matrix.feature_labels if label in RESERVED_COLUMNS]
    if reserved:
        raise OutputError(
            str(path),
            f"Feature label(s) {', '.join(reserved)} would be read back as label columns.",
        )
    return write_frame(path, matrix.to_frame())


#######################
# Synthetic spectra #
#######################


_SYNTH_KEYS = (
    "n_samples",
    "n_features",
    "peak_locations",
    "peak_log_means",
    "baseline_log_mean",
    "multiplicative_noise_sd",
    "batch_shifts",
    "batch_of",
    "group_shifts",
    "group_of",
    "seed",
    "mz_start",
    "mz_step",
)


@dataclass(frozen=True)
class SynthConfig:
    """Log-normal spectrum generator settings.

    On the log scale every intensity is `baseline_log_mean`, plus `peak_log_means[k]` at
    feature `peak_locations[k]`, plus the sample's batch shift, plus the sample's group shift
    at peak features, plus Normal(0, multiplicative_noise_sd**2).
    """

    n_samples: int
    n_features: int
    peak_locations: Tuple[int, ...] = ()
    peak_log_means: Tuple[float, ...] = ()
    baseline_log_mean: float = 0.0
    multiplicative_noise_sd: float = 0.0
    batch_shifts: Optional[Mapping[str, float]] = None
    batch_of: Optional[Labels] = None
    group_shifts: Optional[Mapping[str, float]] = None
    group_of: Optional[Labels] = None
    seed: int = 0
    mz_start: float = 1000.0
    mz_step: float = 1.0

    def __post_init__(self):
        source = "SynthConfig"
        if self.n_samples < 1 or self.n_features < 1:
            raise ConfigError(source, "n_samples and n_features must be at least 1.")
        if self.multiplicative_noise_sd < 0:
            raise ConfigError(source, "multiplicative_noise_sd must be >= 0.")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(source, "seed must be a 64-bit unsigned integer.")
        object.__setattr__(self, "peak_locations", tuple(int(k) for k in self.peak_locations))
        object.__setattr__(self, "peak_log_means", tuple(float(m) for m in self.peak_log_means))
        if len(self.peak_locations) != len(self.peak_log_means):
            raise ConfigError(source, "peak_locations and peak_log_means differ in length.")
        if any(not 0 <= k < self.n_features for k in self.peak_locations):
            raise ConfigError(source, f"peak locations must lie in [0, {self.n_features}).")
        for shifts, labels, name in (
            (self.batch_shifts, self.batch_of, "batch"),
            (self.group_shifts, self.group_of, "group"),
        ):
            if labels is not None:
                labels = tuple(str(label) for label in labels)
                object.__setattr__(self, f"{name}_of", labels)
                if len(labels) != self.n_samples:
                    raise ConfigError(source, f"{name}_of must give one label per sample.")
            if shifts is None:
                continue
            if labels is None:
                raise ConfigError(source, f"{name}_shifts given without {name}_of.")
            unknown = sorted(set(shifts) - set(labels))
            if unknown:
                raise ConfigError(source, f"{name}_shifts for unknown {name}(s): {unknown}")

    @classmethod
    def from_dict(cls, record: Dict[str, Any], source: PathLike = "<config>") -> "SynthConfig":
        reject_unknown_keys(record, _SYNTH_KEYS, source)
        try:
            return cls(**record)
        except TypeError as error:
            raise ConfigError(source, str(error))


def synthesize(config: SynthConfig) -> FeatureMatrix:
    rng = np.random.default_rng(config.seed)
    n, p = config.n_samples, config.n_features
    log_values = np.full((n, p), config.baseline_log_mean, dtype=float)
    peaks = list(config.peak_locations)
    for location, height in zip(peaks, config.peak_log_means):
        log_values[:, location] += height
    if config.batch_shifts is not None and config.batch_of is not None:
        shift = np.array([config.batch_shifts.get(label, 0.0) for label in config.batch_of])
        log_values += shift[:, None]
    if config.group_shifts is not None and config.group_of is not None and peaks:
        shift = np.array([config.group_shifts.get(label, 0.0) for label in config.group_of])
        log_values[:, peaks] += shift[:, None]
    log_values += config.multiplicative_noise_sd * rng.standard_normal((n, p))

    width = len(str(n))
    return FeatureMatrix(
        values=np.exp(log_values),
        sample_ids=tuple(f"S{i + 1:0{width}d}" for i in range(n)),
        feature_labels=tuple(
            repr(round(config.mz_start + j * config.mz_step, 6)) for j in range(p)
        ),
        group=config.group_of,
        batch=config.batch_of,
    )


#####################
# Sample summaries #
#####################


def sample_summaries(matrix: FeatureMatrix) -> List[SampleSummary]:
    """Within-sample median and inter-quartile range (linear interpolation percentiles)."""
    lower, median, upper = np.percentile(matrix.values, [25, 50, 75], axis=1)
    return [
        SampleSummary(sample_id=sample_id, median=float(mid), iqr=float(max(high - low, 0.0)))
        for sample_id, low, mid, high in zip(matrix.sample_ids, lower, median, upper)
    ]


def batch_summaries(matrix: FeatureMatrix) -> List[BatchSummary]:
    if matrix.batch is None:
        raise MatrixValidationError("Batch summaries need a batch label per sample.")
    summaries = pd.DataFrame(
        [(batch, s.median, s.iqr) for batch, s in zip(matrix.batch, sample_summaries(matrix))],
        columns=["batch", "median", "iqr"],
    )
    grouped = summaries.groupby("batch", sort=True)
    return [
        BatchSummary(
            batch=str(batch),
            n_samples=int(len(rows)),
            mean_median=float(rows["median"].mean()),
            mean_iqr=float(rows["iqr"].mean()),
        )
        for batch, rows in grouped
    ]
