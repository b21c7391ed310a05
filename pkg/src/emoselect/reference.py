"""
Reference-value file: one row per problem with the normalisation data and the
best-known normalised hypervolume used by the indicator.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Any, Self

import numpy as np
import pandas as pd

from emoselect.exceptions import ConfigurationException, MissingReferenceException
from emoselect.filesupport import OutputArtifact
from emoselect.indicators import Archive, IndicatorContext, normalized_hypervolume
from emoselect.problems import BiObjectiveProblem

L = logging.getLogger(__name__)

REFERENCE_COLUMNS = [
    "problem_id",
    "n",
    "ideal1",
    "ideal2",
    "nadir1",
    "nadir2",
    "reference_hv",
    "campaign_seed",
]
MISSING_HINT = "run `emoselect reference` with the same configuration first"


def reference_row(
    problem: BiObjectiveProblem, archives: Iterable[Archive], campaign_seed: int
) -> dict[str, object]:
    """Merge the final archives of every reference run, together with the images
    of both single-objective optima, and measure the result."""
    merged = Archive()
    merged.extend(problem.extremes, [-2, -1])
    for archive in archives:
        merged.extend(archive.points(), archive.eval_ids())
    ctx = IndicatorContext.fromProblem(problem)
    hv = min(normalized_hypervolume(merged.points(), ctx), 1.0)
    return {
        "problem_id": problem.id,
        "n": problem.n,
        "ideal1": float(problem.ideal[0]),
        "ideal2": float(problem.ideal[1]),
        "nadir1": float(problem.nadir[0]),
        "nadir2": float(problem.nadir[1]),
        "reference_hv": hv,
        "campaign_seed": campaign_seed,
    }


class ReferenceTable:
    def __init__(self, frame: pd.DataFrame) -> None:
        missing = [c for c in REFERENCE_COLUMNS if c not in frame.columns]
        if missing:
            raise ConfigurationException(f"Reference file lacks columns {missing}", key="reference_file")
        self.frame = frame[REFERENCE_COLUMNS].sort_values(["n", "problem_id"], kind="stable").reset_index(drop=True)
        self._rows: dict[str, Any] = {r.problem_id: r for r in self.frame.itertuples(index=False)}

    def __len__(self) -> int:
        return len(self.frame)

    def __contains__(self, problem_id: object) -> bool:
        return problem_id in self._rows

    @classmethod
    def fromRows(cls, rows: Iterable[Mapping[str, object]]) -> Self:
        return cls(pd.DataFrame(list(rows), columns=REFERENCE_COLUMNS))

    @classmethod
    def load(cls, path: Path) -> Self:
        if not path.is_file():
            raise MissingReferenceException(f"Reference file {path} not found; {MISSING_HINT}")
        return cls(pd.read_csv(path))

    def context(self, problem: BiObjectiveProblem) -> IndicatorContext:
        row = self._rows.get(problem.id)
        if row is None:
            raise MissingReferenceException(f"No reference value for {problem.id}; {MISSING_HINT}")
        return IndicatorContext(
            np.array([row.ideal1, row.ideal2], dtype=np.float64),
            np.array([row.nadir1, row.nadir2], dtype=np.float64),
            float(row.reference_hv),
        )

    def artifact(self, filename: str) -> OutputArtifact:
        return OutputArtifact.fromFrame(self.frame, filename)

    def records(self) -> list[dict[str, object]]:
        return self.frame.to_dict(orient="records")
