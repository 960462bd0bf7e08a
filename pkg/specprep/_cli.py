"""This module defines CLI interactions when using `specprep`."""

from pathlib import Path
from typing import Optional

import click
import typer

from specprep import _commands, _logo

app = typer.Typer(help=_logo.ascii_art, no_args_is_help=True, add_completion=False)

SEED_MAX = 2**64 - 1


def _get_help_string(function):
    return function.__doc__.split("\n\n")[0]


def _seed_option(default: Optional[int]):
    return typer.Option(
        default,
        "--seed",
        "-s",
        min=0,
        max=SEED_MAX,
        help="Seed (64-bit unsigned) for reproducible output.",
    )


@app.command(
    short_help="Apply a transform pipeline to a feature matrix",
    help=_get_help_string(_commands.transform),
)
def transform(
    input_path: Path = typer.Argument(
        ..., metavar="MATRIX", exists=True, dir_okay=False, help="Feature matrix CSV."
    ),
    pipeline: Path = typer.Option(
        ...,
        "--pipeline",
        "-p",
        exists=True,
        dir_okay=False,
        help="JSON array of {kind, params} steps.",
    ),
    output: Path = typer.Option(
        ..., "--output", "-o", dir_okay=False, help="Where to write the transformed CSV."
    ),
    audit: Optional[Path] = typer.Option(
        None,
        "--audit",
        dir_okay=False,
        help="Where to write the audit JSON. Defaults to <output stem>.audit.json.",
        show_default=False,
    ),
    # Single-choice: this command writes one format only.
    output_format: str = typer.Option(
        "csv", "--format", "-f", click_type=click.Choice(["csv"]), help="Output format."
    ),
) -> None:
    _commands.transform(input_path, pipeline, output, audit_output=audit)


@app.command(
    short_help="Block-randomize samples to plates and diagnose confounding",
    help=_get_help_string(_commands.design),
)
def design(
    roster: Path = typer.Argument(
        ..., metavar="ROSTER", exists=True, dir_okay=False, help="Roster CSV: id, group[, stratum]."
    ),
    plates: int = typer.Option(1, "--plates", "-k", min=1, help="Number of plates."),
    seed: int = _seed_option(0),
    output: Path = typer.Option(
        Path("."),
        "--output",
        "-o",
        file_okay=False,
        help="Directory for assignment.csv and report.json.",
    ),
    diagnose_only: Optional[Path] = typer.Option(
        None,
        "--diagnose-only",
        exists=True,
        dir_okay=False,
        help="Diagnose this existing assignment CSV (id, plate) instead of randomizing.",
        show_default=False,
    ),
    threshold: float = typer.Option(
        0.5, "--threshold", min=0.0, max=1.0, help="Cramer's V above which to warn."
    ),
    # Single-choice: this command writes one format only.
    output_format: str = typer.Option(
        "json", "--format", "-f", click_type=click.Choice(["json"]), help="Report format."
    ),
) -> None:
    _commands.design(
        roster,
        output_dir=output,
        n_plates=plates,
        seed=seed,
        diagnose_only=diagnose_only,
        threshold=threshold,
    )


@app.command(
    short_help="Simulate power of plate designs",
    help=_get_help_string(_commands.simulate),
)
def simulate(
    config: Optional[Path] = typer.Argument(
        None,
        metavar="CONFIG",
        exists=True,
        dir_okay=False,
        help="JSON simulation config mirroring SimGrid, plus `scenarios` and `workers`.",
    ),
    paper: bool = typer.Option(
        False,
        "--paper",
        help="Run all four built-in designs over the default grid, ignoring CONFIG.",
        show_default=False,
    ),
    seed: Optional[int] = _seed_option(None),
    output: Path = typer.Option(
        Path("."), "--output", "-o", file_okay=False, help="Directory for the power files."
    ),
    output_format: Optional[str] = typer.Option(
        None,
        "--format",
        "-f",
        click_type=click.Choice(["csv", "svg"]),
        help="Write only this format. Both are written by default.",
        show_default=False,
    ),
    workers: Optional[int] = typer.Option(
        None, "--workers", "-w", min=1, help="Worker processes for the simulation cells."
    ),
) -> None:
    if config is None and not paper:
        raise typer.BadParameter("Give a CONFIG file or use --paper.")
    formats = (output_format,) if output_format else ("csv", "svg")
    if not _commands.simulate(
        config_path=config,
        output_dir=output,
        paper=paper,
        seed=seed,
        workers=workers,
        formats=formats,
    ):
        raise typer.Exit(1)


@app.command(
    "demo-closure",
    short_help="Demonstrate the correlation bias of closure normalization",
    help=_get_help_string(_commands.demo_closure),
)
def demo_closure(
    features: int = typer.Option(3, "--features", "-p", help="Number of variables p."),
    samples: int = typer.Option(10000, "--samples", "-n", help="Number of samples n."),
    seed: int = _seed_option(0),
    output: Optional[Path] = typer.Option(
        None, "--output", "-o", dir_okay=False, help="Where to write the report JSON."
    ),
    # Single-choice: this command writes one format only.
    output_format: str = typer.Option(
        "json", "--format", "-f", click_type=click.Choice(["json"]), help="Report format."
    ),
) -> None:
    _commands.demo_closure(features, samples, seed, output=output)


@app.command(
    short_help="Generate a synthetic spectrum matrix",
    help=_get_help_string(_commands.synthesize),
)
def synthesize(
    config: Path = typer.Argument(
        ..., metavar="CONFIG", exists=True, dir_okay=False, help="JSON SynthConfig."
    ),
    seed: Optional[int] = _seed_option(None),
    output: Path = typer.Option(..., "--output", "-o", dir_okay=False, help="Output CSV."),
) -> None:
    _commands.synthesize(config, output, seed=seed)


@app.command(
    short_help="Summarize samples by median and IQR",
    help=_get_help_string(_commands.summarize),
)
def summarize(
    input_path: Path = typer.Argument(
        ..., metavar="MATRIX", exists=True, dir_okay=False, help="Feature matrix CSV."
    ),
    output: Path = typer.Option(..., "--output", "-o", dir_okay=False, help="Output CSV."),
) -> None:
    _commands.summarize(input_path, output)
