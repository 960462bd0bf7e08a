"""**specprep**

Preprocessing and experimental design for high-throughput omics measurements: transform
pipelines with an audit trail, blocked randomization of samples to plates with confounding
checks, random-intercept analysis, and power simulation of plate designs.
"""

from specprep._commands import demo_closure, design, simulate, summarize, synthesize, transform
from specprep._commands.utils.design import block_randomize, diagnose
from specprep._commands.utils.lmm import LmmData, fit_lmm, fit_ols, wald_test
from specprep._commands.utils.matrix import FeatureMatrix, load_csv, save_csv
from specprep._commands.utils.powersim import analytic_power_ols, emit_curves, run_power
from specprep._commands.utils.transforms import Pipeline, apply_pipeline
from specprep._version import __version__

__all__ = [
    "transform",
    "design",
    "simulate",
    "demo_closure",
    "synthesize",
    "summarize",
    "FeatureMatrix",
    "load_csv",
    "save_csv",
    "Pipeline",
    "apply_pipeline",
    "block_randomize",
    "diagnose",
    "LmmData",
    "fit_ols",
    "fit_lmm",
    "wald_test",
    "run_power",
    "analytic_power_ols",
    "emit_curves",
    "__version__",
]
