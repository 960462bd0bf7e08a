from pathlib import Path
from typing import Optional

import typer

from . import utils
from .utils.design import (
    CRAMERS_V_WARNING,
    VERDICT_OK,
    VERDICT_PERFECT,
    VERDICT_WARNING,
    ConfoundingReport,
)

_VERDICT_COLORS = {
    VERDICT_OK: typer.colors.GREEN,
    VERDICT_WARNING: typer.colors.YELLOW,
    VERDICT_PERFECT: typer.colors.RED,
}


def design(
    roster_path: Path,
    output_dir: Path = Path("."),
    n_plates: int = 1,
    seed: int = 0,
    diagnose_only: Optional[Path] = None,
    threshold: float = CRAMERS_V_WARNING,
) -> ConfoundingReport:
    """Block-randomize a roster of samples to plates and check the result for confounding.

    Cases and controls (and, when the roster has a `stratum` column, every stratum within
    them) are spread over the plates in near-equal numbers at random. With `diagnose_only`
    an existing assignment CSV is checked instead and no new assignment is made.
    """
    roster = utils.design.load_roster(roster_path)
    output_dir.mkdir(parents=True, exist_ok=True)
    if diagnose_only is not None:
        assignment = utils.design.load_assignment(diagnose_only)
    else:
        assignment = utils.design.block_randomize(roster, n_plates, seed)
        utils.design.save_assignment(assignment, output_dir / "assignment.csv")

    report = utils.design.diagnose(assignment, roster, threshold)
    utils.iohelper.write_json(output_dir / "report.json", report.to_dict())
    typer.secho(
        f"{len(report.plates)} plate(s), {report.single_group_batches} single-group;"
        f" Cramer's V = {report.cramers_v:.3f}; verdict: {report.verdict}",
        fg=_VERDICT_COLORS[report.verdict],
        err=True,
    )
    return report
