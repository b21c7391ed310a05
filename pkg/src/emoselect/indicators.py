"""
Quality measurement: the unbounded non-dominated archive, the 2-d hypervolume,
the COCO-style indicator computed from the archive, and runtime ECDFs over
indicator targets.
"""

from __future__ import annotations

import logging
import math
from bisect import bisect_left, bisect_right
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Optional, Self

import numpy as np
from numpy.typing import ArrayLike

from emoselect.core import FloatArray, IntArray, as_vector
from emoselect.exceptions import AggregationException, ContractViolationException
from emoselect.problems import BiObjectiveProblem

L = logging.getLogger(__name__)

EMPTY_ARCHIVE_PENALTY = 1.0
ECDF_POINTS_PER_DECADE = 20
NORMALISED_REFERENCE = np.ones(2, dtype=np.float64)


@dataclass(slots=True)
class ArchiveStats:
    offered: int = 0
    inserted: int = 0
    rejected: int = 0
    removed: int = 0


class Archive:
    """Every mutually non-dominated objective vector seen so far (m = 2).

    Entries are kept sorted by f1 ascending, hence f2 strictly descending.
    An exact duplicate is weakly dominated by the stored copy, so the earliest
    eval_id wins."""

    def __init__(self) -> None:
        self._f1: list[float] = []
        self._f2: list[float] = []
        self._ids: list[int] = []
        self.stats = ArchiveStats()

    def __len__(self) -> int:
        return len(self._f1)

    def __repr__(self) -> str:
        return f"Archive(size={len(self)}, offered={self.stats.offered})"

    def insert(self, f: ArrayLike, eval_id: int) -> bool:
        v = as_vector(f, name="f")
        if v.shape[0] != 2:
            raise ContractViolationException(f"Archive stores 2 objectives, got {v.shape[0]}")
        f1, f2 = float(v[0]), float(v[1])
        self.stats.offered += 1

        # the entry with the largest f1 not exceeding f1 has the best f2 among them
        right = bisect_right(self._f1, f1)
        if right > 0 and self._f2[right - 1] <= f2:
            self.stats.rejected += 1
            return False

        start = bisect_left(self._f1, f1)
        stop = start
        while stop < len(self._f1) and self._f2[stop] >= f2:
            stop += 1
        if stop > start:
            del self._f1[start:stop], self._f2[start:stop], self._ids[start:stop]
            self.stats.removed += stop - start

        self._f1.insert(start, f1)
        self._f2.insert(start, f2)
        self._ids.insert(start, int(eval_id))
        self.stats.inserted += 1
        return True

    def extend(self, F: FloatArray, eval_ids: ArrayLike) -> int:
        """Offer every row of ``F`` in order; returns how many were kept."""
        return sum(self.insert(f, i) for f, i in zip(F, np.asarray(eval_ids)))

    def points(self) -> FloatArray:
        return np.column_stack([self._f1, self._f2]).astype(np.float64).reshape(-1, 2)

    def eval_ids(self) -> IntArray:
        return np.asarray(self._ids, dtype=np.int64)

    def hypervolume(self, ref: ArrayLike) -> float:
        return hypervolume_2d(self.points(), ref)


def archive_insert(A: Archive, f: ArrayLike, eval_id: int) -> bool:
    return A.insert(f, eval_id)


def hypervolume_2d(points: ArrayLike, ref: ArrayLike) -> float:
    """Area dominated by ``points`` and bounded by ``ref``; points that do not
    strictly dominate ``ref`` add nothing."""
    P = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    r = np.asarray(ref, dtype=np.float64)
    if r.shape != (2,):
        raise ContractViolationException("Hypervolume is implemented for m = 2")
    P = P[np.all(P < r, axis=1)]
    if P.shape[0] == 0:
        return 0.0
    P = P[np.lexsort((P[:, 1], P[:, 0]))]

    volume = 0.0
    ceiling = r[1]
    for f1, f2 in P:
        if f2 < ceiling:
            volume += (r[0] - f1) * (ceiling - f2)
            ceiling = f2
    return float(volume)


@dataclass(slots=True, frozen=True)
class IndicatorContext:
    ideal: FloatArray
    nadir: FloatArray
    reference_hv: float = 1.0

    def __post_init__(self) -> None:
        if not np.all(self.ideal < self.nadir):
            raise ContractViolationException(
                f"Ideal {self.ideal} must be strictly better than nadir {self.nadir}"
            )
        if not 0.0 < self.reference_hv <= 1.0:
            raise ContractViolationException(
                f"reference_hv must lie in (0, 1], got {self.reference_hv}"
            )

    @classmethod
    def fromProblem(cls, problem: BiObjectiveProblem, reference_hv: float = 1.0) -> Self:
        return cls(np.asarray(problem.ideal), np.asarray(problem.nadir), reference_hv)

    def normalize(self, F: ArrayLike) -> FloatArray:
        return (np.asarray(F, dtype=np.float64) - self.ideal) / (self.nadir - self.ideal)


def normalize(F: ArrayLike, ctx: IndicatorContext) -> FloatArray:
    return ctx.normalize(F)


def normalized_hypervolume(F: ArrayLike, ctx: IndicatorContext) -> float:
    return hypervolume_2d(ctx.normalize(F).reshape(-1, 2), NORMALISED_REFERENCE)


def icoco_of_points(F: ArrayLike, ctx: IndicatorContext) -> float:
    """Indicator of an arbitrary point set; lower is better.

    Inside the region of interest it is the hypervolume gap to the reference
    value; outside it is the reference value plus the distance to the region."""
    U = ctx.normalize(F).reshape(-1, 2)
    if U.shape[0] == 0:
        return ctx.reference_hv + EMPTY_ARCHIVE_PENALTY
    if np.any(np.all(U < NORMALISED_REFERENCE, axis=1)):
        return ctx.reference_hv - hypervolume_2d(U, NORMALISED_REFERENCE)
    distance = np.linalg.norm(U - np.clip(U, 0.0, 1.0), axis=1)
    return ctx.reference_hv + float(distance.min())


def icoco_value(A: Archive, ctx: IndicatorContext) -> float:
    return icoco_of_points(A.points(), ctx)


def default_targets() -> FloatArray:
    """58 targets: 10^0 down to 10^-5 in tenths of a decade, then seven
    negative targets -10^-5 ... -10^-4.4."""
    positive = 10.0 ** (-np.arange(51) / 10.0)
    negative = -(10.0 ** np.linspace(-5.0, -4.4, 7))
    return np.concatenate([positive, negative])


@dataclass(slots=True, frozen=True)
class IndicatorTrace:
    """Archive indicator of one run sampled at increasing evaluation counts."""

    evals: IntArray
    values: FloatArray
    n: int
    label: str = ""

    def __post_init__(self) -> None:
        if self.evals.shape != self.values.shape or self.evals.ndim != 1 or self.evals.size == 0:
            raise ContractViolationException("Trace columns must be non-empty, 1-d and of equal length")
        if np.any(np.diff(self.evals) <= 0):
            raise ContractViolationException(f"Trace {self.label!r} evals are not strictly increasing")

    def first_hits(self, targets: FloatArray) -> FloatArray:
        """Earliest evaluation count reaching each target (inf if never)."""
        reached = self.values[:, None] <= targets[None, :]
        first = np.argmax(reached, axis=0)
        return np.where(reached.any(axis=0), self.evals[first].astype(np.float64), math.inf)


@dataclass(slots=True, frozen=True)
class EcdfCurve:
    abscissa: FloatArray
    ordinate: FloatArray
    n: int
    label: str = ""
    hits: FloatArray = field(default_factory=lambda: np.empty(0))

    def value_at(self, fevals_per_n: float) -> float:
        idx = np.searchsorted(self.abscissa, fevals_per_n, side="right") - 1
        return 0.0 if idx < 0 else float(self.ordinate[idx])


def ecdf_grid(n: int, max_evals: float, extra: FloatArray) -> FloatArray:
    low = 1.0 / n
    high = max(max_evals / n, low)
    decades = max(math.log10(high / low), 0.0)
    count = max(int(math.ceil(decades * ECDF_POINTS_PER_DECADE)) + 1, 2)
    grid = np.geomspace(low, high, count)
    return np.unique(np.concatenate([grid, extra]))


def ecdf(
    traces: Sequence[IndicatorTrace],
    targets: Optional[FloatArray] = None,
    label: str = "",
    abscissa: Optional[FloatArray] = None,
) -> EcdfCurve:
    """Fraction of (run, target) pairs reached within each budget, budgets in
    evaluations per dimension. First-hit times are used as they are, without
    bootstrapped restarts.

    Pass ``abscissa`` to evaluate several curves on one shared grid."""
    if not traces:
        raise AggregationException("No runs to aggregate")
    dims = {t.n for t in traces}
    if len(dims) != 1:
        raise AggregationException(f"Runs of different dimensions cannot be aggregated: {sorted(dims)}")
    n = dims.pop()
    targets = default_targets() if targets is None else np.asarray(targets, dtype=np.float64)

    hits = np.sort(np.concatenate([t.first_hits(targets) for t in traces]) / n)
    finite = hits[np.isfinite(hits)]
    max_evals = max(float(t.evals[-1]) for t in traces)
    if abscissa is None:
        abscissa = ecdf_grid(n, max_evals, finite)
    ordinate = np.searchsorted(finite, abscissa, side="right") / hits.size
    return EcdfCurve(abscissa, ordinate.astype(np.float64), n, label, hits)
