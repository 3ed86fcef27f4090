import logging
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..harness.experiments import COLUMN_FOR_LABEL  # noqa: E402
from ..io.atomic import atomic_write  # noqa: E402

log = logging.getLogger("IADA")

MARGIN = 0.02


def curve_limits(curve) -> tuple:
    """
    Accuracy axis limits covering every min / max whisker plus a margin
    """
    values = [
        value
        for points in curve["modes"].values()
        for point in points.values()
        for value in (point["min"], point["max"])
    ]
    if not values:
        return (0.0, 1.0)
    return (min(values) - MARGIN, max(values) + MARGIN)


class plot:
    """
    Sweep curve as median accuracy against sub-domain count with min-max whiskers
    """

    def __init__(self, *args, **kwargs) -> None:
        log.debug(f"processor.plot __init__ kwargs {kwargs}")

    def output(self, data=None, tag=None, report_dir="report"):
        log.info("Using output processor: plot")
        if not data or "curve" not in data:
            log.debug("nothing to plot")
            return None
        curve = data["curve"]
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, points in sorted(curve["modes"].items()):
            counts = sorted(int(c) for c in points)
            medians = [points[str(c)]["median"] for c in counts]
            lower = [points[str(c)]["median"] - points[str(c)]["min"] for c in counts]
            upper = [points[str(c)]["max"] - points[str(c)]["median"] for c in counts]
            ax.errorbar(counts, medians, yerr=[lower, upper], marker="o", capsize=3, label=COLUMN_FOR_LABEL.get(label, label))
        if curve.get("reference") is not None:
            ax.axhline(curve["reference"], color="grey", linestyle="--", label="ADA (count 1)")
        ax.set_xscale("log")
        ax.set_xlabel("number of sub-domains")
        ax.set_ylabel("final domain accuracy")
        ax.set_ylim(*curve_limits(curve))
        ax.set_title(f"end factor {curve['end_factor']}")
        ax.legend()
        fig.tight_layout()

        os.makedirs(report_dir, exist_ok=True)
        path = os.path.join(report_dir, f"{tag or curve.get('name', 'sweep')}.png")
        with atomic_write(path, "wb") as f:
            fig.savefig(f, format="png")
        plt.close(fig)
        log.info(f"wrote {path}")
        return path
