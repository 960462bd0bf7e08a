from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from specprep.exceptions import OutputError  # noqa: E402

from .iohelper import PathLike  # noqa: E402

if TYPE_CHECKING:  # pragma: no cover
    from .powersim import PowerCurve

# Fixed ids and no timestamp keep repeated renders byte-identical.
_SVG_SETTINGS = {"svg.hashsalt": "specprep", "svg.fonttype": "none"}


def power_chart(curves: Sequence["PowerCurve"], path: PathLike, title: str = "") -> Path:
    """Single-panel line chart: effect size against power, one line per scenario and sigma_b."""
    target = Path(path)
    if not str(path).strip():
        raise OutputError(str(path), "An empty path was given.")
    with plt.rc_context(_SVG_SETTINGS):
        figure, axes = plt.subplots(figsize=(6.4, 4.8))
        try:
            for curve in curves:
                axes.plot(
                    [point.effect for point in curve.points],
                    [point.power for point in curve.points],
                    marker="o",
                    markersize=3,
                    label=f"{curve.scenario}, sigma_b={curve.sigma_b:g}",
                )
            axes.set_xlabel("effect size")
            axes.set_ylabel("power")
            axes.set_ylim(0.0, 1.0)
            axes.grid(True, linewidth=0.3)
            axes.legend(fontsize="small", loc="lower right")
            if title:
                axes.set_title(title)
            figure.savefig(target, format="svg", metadata={"Date": None})
        except OSError as error:
            raise OutputError(target, error.strerror or str(error))
        finally:
            plt.close(figure)
    return target
