from pathlib import Path
from typing import Optional

import typer

from . import utils
from .utils import example
from .utils.transforms import BiasReport


@example(3, 1000, 7)
@example(2, 500, 11)
def demo_closure(p: int, n: int, seed: int, output: Optional[Path] = None) -> BiasReport:
    """Show the spurious correlation that closure normalization induces in independent data.

    Draws n samples of p independent log-normal variables and reports the pairwise
    correlations before and after dividing every sample by its total.
    """
    report = utils.transforms.closure_bias_experiment(p, n, seed)
    if output is not None:
        utils.iohelper.write_json(output, report.to_dict())
    typer.secho(
        f"mean off-diagonal correlation: {report.mean_offdiag_before:+.4f} before closure,"
        f" {report.mean_offdiag_after:+.4f} after",
        err=True,
    )
    return report
