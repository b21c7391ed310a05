"""
Self-contained SVG figures: runtime ECDFs, single-run diagnostics and crossover
scatter plots. Output is byte-identical for identical inputs.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from io import BytesIO
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402
from matplotlib.patches import Polygon  # noqa: E402

from emoselect.core import FloatArray  # noqa: E402
from emoselect.filesupport import OutputArtifact  # noqa: E402
from emoselect.indicators import EcdfCurve  # noqa: E402

L = logging.getLogger(__name__)

SVG_RC = {
    "svg.hashsalt": "emoselect",
    "svg.fonttype": "path",
    "path.simplify": True,
}


def _svgArtifact(fig: Figure, filename: str, description: str) -> OutputArtifact:
    buffer = BytesIO()
    with plt.rc_context(SVG_RC):
        fig.savefig(
            buffer,
            format="svg",
            metadata={"Date": None, "Creator": "emoselect", "Description": description},
        )
    plt.close(fig)
    return OutputArtifact(buffer.getvalue(), filename)


def ecdf_figure(
    curves: Sequence[EcdfCurve], title: str, manifest_hash: str, filename: str
) -> OutputArtifact:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for curve in curves:
        ax.step(curve.abscissa, curve.ordinate, where="post", label=curve.label, linewidth=1.5)
    ax.set_xscale("log")
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("FEvals/n")
    ax.set_ylabel("Fraction of (run, target) pairs")
    ax.set_title(title)
    ax.grid(True, which="both", linestyle=":", alpha=0.5)
    ax.legend(loc="upper left", fontsize="small")
    fig.tight_layout()
    return _svgArtifact(fig, filename, f"runtime ECDF without bootstrapping; manifest {manifest_hash}")


@dataclass(slots=True, frozen=True)
class DiagnosticsSeries:
    label: str
    population: pd.DataFrame
    replacements: pd.DataFrame


def diagnostics_figure(
    problem_id: str,
    series: Sequence[DiagnosticsSeries],
    manifest_hash: str,
    filename: str,
) -> OutputArtifact:
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(7, 7), sharex=True)
    for s in series:
        top.plot(s.population["evals"], s.population["icoco"], label=s.label, linewidth=1.2)
        bottom.plot(s.replacements["evals"], s.replacements["cumulative"], label=s.label, linewidth=1.2)
    top.set_xscale("log")
    top.set_yscale("symlog", linthresh=1e-5)
    top.set_ylabel("Population indicator")
    top.set_title(f"{problem_id}: single run per algorithm")
    bottom.set_xlabel("Function evaluations")
    bottom.set_ylabel("Cumulative parents replaced")
    for ax in (top, bottom):
        ax.grid(True, linestyle=":", alpha=0.5)
    top.legend(fontsize="small")
    fig.tight_layout()
    return _svgArtifact(fig, filename, f"diagnostics for {problem_id}; manifest {manifest_hash}")


@dataclass(slots=True, frozen=True)
class ScatterPanel:
    name: str
    parents: FloatArray
    children: FloatArray
    outline: Optional[FloatArray] = None


def scatter_figure(panels: Sequence[ScatterPanel], filename: str, description: str = "") -> OutputArtifact:
    fig, axes = plt.subplots(1, len(panels), figsize=(3.2 * len(panels), 3.4), squeeze=False)
    for ax, panel in zip(axes[0], panels):
        ax.scatter(panel.children[:, 0], panel.children[:, 1], s=2, alpha=0.5, color="tab:blue")
        if panel.outline is not None:
            ax.add_patch(Polygon(panel.outline, closed=True, fill=False, edgecolor="tab:green", linestyle="--"))
        ax.scatter(panel.parents[:, 0], panel.parents[:, 1], s=40, marker="o", color="tab:red", zorder=3)
        ax.set_title(panel.name)
        ax.set_aspect("equal", adjustable="datalim")
        ax.tick_params(labelsize="x-small")
    fig.tight_layout()
    return _svgArtifact(fig, filename, description or "crossover children")


def curves_frame(curves: Sequence[EcdfCurve]) -> pd.DataFrame:
    """Shared-abscissa table: ``fevals_per_n`` then one column per curve."""
    if not curves:
        return pd.DataFrame({"fevals_per_n": []})
    return pd.DataFrame(
        {"fevals_per_n": curves[0].abscissa, **{c.label: c.ordinate for c in curves}}
    )


def simplex_outline(parents: FloatArray, epsilon: float) -> FloatArray:
    g = parents.mean(axis=0)
    return g + epsilon * (np.asarray(parents) - g)
