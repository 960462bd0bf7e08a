from pathlib import Path
from typing import List

import pandas as pd
import typer

from . import utils
from .utils.matrix import SampleSummary


def summarize(input_path: Path, output: Path) -> List[SampleSummary]:
    """Write within-sample medians and inter-quartile ranges; compare them across batches."""
    matrix = utils.matrix.load_csv(input_path)
    summaries = utils.matrix.sample_summaries(matrix)
    frame = pd.DataFrame(
        {
            "id": [summary.sample_id for summary in summaries],
            "median": [summary.median for summary in summaries],
            "iqr": [summary.iqr for summary in summaries],
        }
    )
    if matrix.batch is not None:
        frame.insert(1, "batch", list(matrix.batch))
        for batch in utils.matrix.batch_summaries(matrix):
            typer.secho(
                f"batch {batch.batch}: n={batch.n_samples}"
                f" mean median={batch.mean_median:.6g} mean IQR={batch.mean_iqr:.6g}",
                err=True,
            )
    utils.iohelper.write_frame(output, frame)
    return summaries
