from pathlib import Path
from typing import Optional

import typer

from ..exceptions import ConfigError
from . import utils
from .utils.matrix import FeatureMatrix, SynthConfig


def synthesize(config_path: Path, output: Path, seed: Optional[int] = None) -> FeatureMatrix:
    """Generate a synthetic log-normal spectrum matrix from a JSON SynthConfig."""
    record = utils.iohelper.load_json(config_path)
    if not isinstance(record, dict):
        raise ConfigError(config_path, "Expected a JSON object.")
    if seed is not None:
        record["seed"] = seed
    matrix = utils.matrix.synthesize(SynthConfig.from_dict(record, config_path))
    utils.matrix.save_csv(matrix, output)
    typer.secho(f"Wrote {matrix.n}x{matrix.p} synthetic matrix to {output}", err=True)
    return matrix
