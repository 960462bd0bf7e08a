from pathlib import Path
from typing import Optional, Tuple

import typer

from . import utils
from .utils.matrix import FeatureMatrix
from .utils.transforms import Pipeline


def audit_path(output: Path) -> Path:
    return output.with_name(f"{output.stem}.audit.json")


def transform(
    input_path: Path,
    pipeline_path: Path,
    output: Path,
    audit_output: Optional[Path] = None,
) -> Tuple[FeatureMatrix, Pipeline]:
    """Apply a JSON pipeline of transforms to a feature matrix CSV.

    Writes the transformed matrix to `output` and the per-step audit (fitted column SDs,
    medians, reference distributions, ...) next to it as JSON. Ordering advice, such as a
    scaling step placed before the log transform, is reported as a warning only.
    """
    matrix = utils.matrix.load_csv(input_path)
    pipeline = Pipeline.load(pipeline_path)
    transformed, applied = utils.transforms.apply_pipeline(matrix, pipeline)
    for message in applied.diagnostics:
        typer.secho(f"WARNING: {message}", fg=typer.colors.YELLOW, err=True)

    utils.matrix.save_csv(transformed, output)
    utils.iohelper.write_json(audit_output or audit_path(output), applied.audit_records())
    typer.secho(
        f"Applied {len(applied.steps)} step(s) to {matrix.n}x{matrix.p} matrix;"
        f" wrote {transformed.n}x{transformed.p} to {output}",
        fg=typer.colors.GREEN,
        err=True,
    )
    return transformed, applied
