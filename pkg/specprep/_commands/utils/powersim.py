"""Monte Carlo power of the group test under plate designs with a random plate effect."""

from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from specprep.exceptions import ConfigError, OutputError, SimulationError, SpecprepError

from . import plotting
from .design import GLYCOMICS_LAYOUT, PlateLayout
from .iohelper import PathLike, reject_unknown_keys, write_frame
from .lmm import LmmData, fit_lmm, fit_ols, wald_test

ANALYSES = ("ols", "reml", "ml")
FAILED_FIT_FRACTION = 0.01


@dataclass(frozen=True)
class Scenario:
    """A plate layout, (plate, n_cases, n_controls) per plate, and how it is analysed."""

    name: str
    plate_layout: PlateLayout
    analysis: str = "reml"

    def __post_init__(self):
        layout = tuple(tuple(int(value) for value in row) for row in self.plate_layout)
        if not layout:
            raise ConfigError(self.name, "A scenario needs at least one plate.")
        for row in layout:
            if len(row) != 3:
                raise ConfigError(
                    self.name, f"Layout rows are (plate, cases, controls), got {row}."
                )
            plate, cases, controls = row
            if cases < 0 or controls < 0 or cases + controls == 0:
                raise ConfigError(self.name, f"Plate {plate} must hold at least one sample.")
        if len({row[0] for row in layout}) != len(layout):
            raise ConfigError(self.name, "Plate numbers must be unique.")
        if self.analysis not in ANALYSES:
            raise ConfigError(self.name, f"analysis must be one of {list(ANALYSES)}.")
        object.__setattr__(self, "plate_layout", layout)

    @property
    def n_cases(self) -> int:
        return sum(row[1] for row in self.plate_layout)

    @property
    def n_controls(self) -> int:
        return sum(row[2] for row in self.plate_layout)

    def design(self) -> Tuple[np.ndarray, np.ndarray]:
        """Group indicator and plate number per sample, plate by plate, cases first."""
        layout = self.plate_layout
        group = np.concatenate([[1] * cases + [0] * controls for _, cases, controls in layout])
        batch = np.concatenate([[plate] * (cases + controls) for plate, cases, controls in layout])
        return group.astype(int), batch.astype(int)

    @classmethod
    def from_record(cls, record: Any, source: PathLike = "<config>") -> "Scenario":
        if isinstance(record, str):
            return builtin_scenario(record)
        if not isinstance(record, dict):
            raise ConfigError(source, f"A scenario is a name or an object, got {record!r}.")
        reject_unknown_keys(record, ("name", "plate_layout", "analysis"), source)
        if "name" not in record or "plate_layout" not in record:
            raise ConfigError(source, "A custom scenario needs `name` and `plate_layout`.")
        return cls(record["name"], record["plate_layout"], record.get("analysis", "reml"))


SCENARIOS: Dict[str, Scenario] = {
    scenario.name: scenario
    for scenario in (
        Scenario("single-plate", ((1, 97, 191),), analysis="ols"),
        Scenario("blocked", ((1, 32, 65), (2, 32, 63), (3, 33, 63))),
        Scenario("confounded", ((1, 97, 0), (2, 0, 95), (3, 0, 96))),
        Scenario("glycomics", GLYCOMICS_LAYOUT),
    )
}
ALIASES = {"E1": "single-plate", "E2": "blocked", "E3": "confounded", "E4": "glycomics"}


def builtin_scenario(name: str) -> Scenario:
    key = ALIASES.get(name.upper(), name)
    if key not in SCENARIOS:
        raise ConfigError(
            "scenario", f"Unknown scenario `{name}`; built-ins are {sorted(SCENARIOS)} or E1-E4."
        )
    return SCENARIOS[key]


_GRID_KEYS = ("effect_sizes", "sigma_b_values", "sigma_e", "alpha", "n_reps", "seed")


def _default_effects() -> Tuple[float, ...]:
    return tuple(round(0.1 * step, 10) for step in range(16))


@dataclass(frozen=True)
class SimGrid:
    effect_sizes: Tuple[float, ...] = field(default_factory=_default_effects)
    sigma_b_values: Tuple[float, ...] = (3.6, 1.8, 0.9, 0.45)
    sigma_e: float = 1.8
    alpha: float = 0.05
    n_reps: int = 1000
    seed: int = 20100101

    def __post_init__(self):
        effects = tuple(float(value) for value in self.effect_sizes)
        sigmas = tuple(float(value) for value in self.sigma_b_values)
        if not effects:
            raise ConfigError("SimGrid", "effect_sizes must not be empty.")
        if any(later < earlier for earlier, later in zip(effects, effects[1:])):
            raise ConfigError("SimGrid", "effect_sizes must be ascending.")
        if not sigmas or any(value < 0 for value in sigmas):
            raise ConfigError("SimGrid", "sigma_b_values must be non-empty and non-negative.")
        if not self.sigma_e > 0:
            raise ConfigError("SimGrid", "sigma_e must be positive.")
        if not 0 < self.alpha < 1:
            raise ConfigError("SimGrid", "alpha must lie strictly between 0 and 1.")
        if self.n_reps < 1:
            raise ConfigError("SimGrid", "n_reps must be at least 1.")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("SimGrid", "seed must be a 64-bit unsigned integer.")
        object.__setattr__(self, "effect_sizes", effects)
        object.__setattr__(self, "sigma_b_values", sigmas)

    @classmethod
    def from_dict(cls, record: Dict[str, Any], source: PathLike = "<config>") -> "SimGrid":
        reject_unknown_keys(record, _GRID_KEYS, source)
        try:
            return cls(**record)
        except TypeError as error:
            raise ConfigError(source, str(error))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "effect_sizes": list(self.effect_sizes),
            "sigma_b_values": list(self.sigma_b_values),
            "sigma_e": self.sigma_e,
            "alpha": self.alpha,
            "n_reps": self.n_reps,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class PowerPoint:
    effect: float
    power: float
    mc_se: float
    n_valid: int
    n_failed: int = 0
    flagged: bool = False


@dataclass(frozen=True)
class PowerCurve:
    scenario: str
    sigma_b: float
    points: Tuple[PowerPoint, ...]

    @property
    def flagged(self) -> bool:
        return any(point.flagged for point in self.points)


######################
# Replicate streams #
######################


def replicate_stream(
    seed: int, sigma_index: int, effect_index: int, replicate: int
) -> np.random.Generator:
    """Independent generator for one replicate, derived from its grid coordinates only.

    The scenario is deliberately not part of the key: all scenarios see the same draws for
    the same replicate, which pairs the design comparisons.
    """
    sequence = np.random.SeedSequence(seed, spawn_key=(sigma_index, effect_index, replicate))
    return np.random.default_rng(sequence)


def generate_replicate(
    scenario: Scenario,
    effect: float,
    sigma_b: float,
    sigma_e: float,
    stream: np.random.Generator,
) -> LmmData:
    """y = effect * group + b[plate] + e, plate effects drawn once per plate.

    Errors are drawn for all cases, then all controls, and scattered to the layout so that
    every scenario with the same group sizes consumes the stream identically.
    """
    group, batch = scenario.design()
    noise = np.empty(group.size)
    cases = group == 1
    noise[cases] = stream.normal(0.0, sigma_e, int(cases.sum()))
    noise[~cases] = stream.normal(0.0, sigma_e, int((~cases).sum()))
    plates = [plate for plate, _, _ in scenario.plate_layout]
    plate_effects = dict(zip(plates, stream.normal(0.0, sigma_b, len(plates))))
    shift = np.array([plate_effects[plate] for plate in batch])
    return LmmData(y=effect * group + shift + noise, group=group, batch=batch)


def _analyse(scenario: Scenario, data: LmmData):
    if scenario.analysis == "ols":
        return fit_ols(data)
    return fit_lmm(data, method=scenario.analysis)


def _run_cell(task: Tuple[Scenario, SimGrid, int, int]) -> PowerPoint:
    scenario, grid, sigma_index, effect_index = task
    effect = grid.effect_sizes[effect_index]
    sigma_b = grid.sigma_b_values[sigma_index]
    rejections = failed = 0
    for replicate in range(grid.n_reps):
        stream = replicate_stream(grid.seed, sigma_index, effect_index, replicate)
        data = generate_replicate(scenario, effect, sigma_b, grid.sigma_e, stream)
        try:
            fit = _analyse(scenario, data)
        except SpecprepError:
            failed += 1
            continue
        if not fit.converged:
            failed += 1
            continue
        rejections += wald_test(fit, grid.alpha)
    valid = grid.n_reps - failed
    power = rejections / valid if valid else float("nan")
    mc_se = float(np.sqrt(power * (1 - power) / valid)) if valid else float("nan")
    return PowerPoint(
        effect=effect,
        power=power,
        mc_se=mc_se,
        n_valid=valid,
        n_failed=failed,
        flagged=failed > FAILED_FIT_FRACTION * grid.n_reps,
    )


def run_power(scenario: Scenario, grid: SimGrid, workers: Optional[int] = None) -> List[PowerCurve]:
    """One power curve per sigma_b, each point the rejection rate over n_reps replicates.

    Cells are independent; with `workers` > 1 they run in a process pool. The result does not
    depend on the number of workers or the order in which cells finish.
    """
    tasks = [
        (scenario, grid, sigma_index, effect_index)
        for sigma_index in range(len(grid.sigma_b_values))
        for effect_index in range(len(grid.effect_sizes))
    ]
    if workers and workers > 1:
        with Pool(processes=workers) as pool:
            points = pool.map(_run_cell, tasks)
    else:
        points = [_run_cell(task) for task in tasks]
    width = len(grid.effect_sizes)
    return [
        PowerCurve(
            scenario=scenario.name,
            sigma_b=sigma_b,
            points=tuple(points[sigma_index * width : (sigma_index + 1) * width]),
        )
        for sigma_index, sigma_b in enumerate(grid.sigma_b_values)
    ]


def analytic_power_ols(effect: float, n1: int, n2: int, sigma: float, alpha: float) -> float:
    """Normal-approximation power of the two-sided two-sample test."""
    if not sigma > 0:
        raise SimulationError(f"sigma must be positive, got {sigma}.")
    if n1 < 1 or n2 < 1:
        raise SimulationError("Both groups need at least one sample.")
    if not 0 < alpha < 1:
        raise SimulationError("alpha must lie strictly between 0 and 1.")
    shift = abs(effect) / (sigma * np.sqrt(1 / n1 + 1 / n2))
    critical = stats.norm.isf(alpha / 2)
    return float(stats.norm.cdf(shift - critical) + stats.norm.cdf(-shift - critical))


##########
# Output #
##########

CURVE_COLUMNS = ["scenario", "sigma_b", "effect", "power", "mc_se"]


def curves_frame(curves: Iterable[PowerCurve]) -> pd.DataFrame:
    rows = [
        (curve.scenario, curve.sigma_b, point.effect, point.power, point.mc_se)
        for curve in curves
        for point in curve.points
    ]
    return pd.DataFrame(rows, columns=CURVE_COLUMNS)


def emit_curves(curves: Sequence[PowerCurve], path: PathLike, format: str = "csv") -> Path:
    if not curves:
        raise OutputError(str(path), "There are no power curves to write.")
    if format == "csv":
        return write_frame(path, curves_frame(curves))
    if format == "svg":
        return plotting.power_chart(curves, path)
    raise OutputError(str(path), f"Unsupported format `{format}`; use csv or svg.")
