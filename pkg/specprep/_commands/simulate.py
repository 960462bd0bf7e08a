from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import typer

from ..exceptions import ConfigError
from . import utils
from .utils.powersim import SCENARIOS, PowerCurve, Scenario, SimGrid

OUTPUT_FORMATS = ("csv", "svg")


def load_simulation_config(config_path: Path) -> Dict[str, Any]:
    record = utils.iohelper.load_json(config_path)
    if not isinstance(record, dict):
        raise ConfigError(config_path, "Expected a JSON object mirroring SimGrid.")
    return record


def simulate(
    config_path: Optional[Path] = None,
    output_dir: Path = Path("."),
    paper: bool = False,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    formats: Sequence[str] = OUTPUT_FORMATS,
) -> bool:
    """Simulate the power to detect a case-control difference under several plate designs.

    Every scenario is analysed as it would be in practice: the single-plate design with a
    pooled t-test, designs spread over plates with a random plate intercept fitted by REML.
    Returns False when any grid cell had more than 1% failed fits.
    """
    record: Dict[str, Any] = {} if paper or config_path is None else load_simulation_config(
        config_path
    )
    source = config_path or "--paper"
    scenarios: List[Scenario] = [
        Scenario.from_record(item, source)
        for item in record.pop("scenarios", list(SCENARIOS))
    ]
    if not scenarios:
        raise ConfigError(source, "No scenarios to simulate.")
    workers = record.pop("workers", workers)
    if seed is not None:
        record["seed"] = seed
    grid = SimGrid.from_dict(record, source)

    output_dir.mkdir(parents=True, exist_ok=True)
    curves: List[PowerCurve] = []
    for scenario in scenarios:
        scenario_curves = utils.powersim.run_power(scenario, grid, workers=workers)
        curves += scenario_curves
        for fmt in formats:
            utils.powersim.emit_curves(
                scenario_curves, output_dir / f"power_{scenario.name}.{fmt}", fmt
            )
        typer.secho(f"{scenario.name}: {len(scenario_curves)} curve(s) written", err=True)
    if "csv" in formats:
        utils.powersim.emit_curves(curves, output_dir / "power.csv", "csv")
    utils.iohelper.write_json(output_dir / "grid.json", grid.to_dict())

    flagged = [
        (curve.scenario, curve.sigma_b, point.effect, point.n_failed)
        for curve in curves
        for point in curve.points
        if point.flagged
    ]
    for name, sigma_b, effect, n_failed in flagged:
        typer.secho(
            f"WARNING: {name} sigma_b={sigma_b:g} effect={effect:g}: {n_failed} failed fit(s)",
            fg=typer.colors.YELLOW,
            err=True,
        )
    return not flagged
