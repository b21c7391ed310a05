"""
The four ranking methods used inside the selections: NS (non-domination level,
then crowding distance), SM (non-domination level, then hypervolume
contribution), SP (SPEA2 fitness) and IB (IBEA fitness with the additive ε
indicator).

Every method returns a total order, best first. Remaining ties go to the
older individual (lower eval_id).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.spatial.distance import cdist

from emoselect.core import FloatArray, IntArray, Population, dominance_matrix
from emoselect.exceptions import ConfigurationException, ContractViolationException

L = logging.getLogger(__name__)

SM_REFERENCE_OFFSET = 0.1


class RankingMethod(StrEnum):
    NS = "NS"
    SM = "SM"
    SP = "SP"
    IB = "IB"


class IbeaConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kappa: float = Field(0.05, gt=0)


@dataclass(slots=True, frozen=True)
class RankingContext:
    """Per-call extras: an explicit SM reference point (None derives one from
    the set) and the IBEA scaling factor."""

    sm_reference: Optional[FloatArray] = None
    ibea: IbeaConfig = field(default_factory=IbeaConfig)


@dataclass(slots=True, frozen=True)
class RankedSet:
    order: IntArray
    key: FloatArray
    fronts: Optional[IntArray] = None

    def __len__(self) -> int:
        return int(self.order.shape[0])

    @property
    def positions(self) -> IntArray:
        """Inverse of ``order``: ``positions[i]`` is the rank of input ``i`` (0 is best)."""
        pos = np.empty_like(self.order)
        pos[self.order] = np.arange(self.order.shape[0])
        return pos

    def best(self, count: int) -> IntArray:
        return self.order[:count]


def _objectives(S: Population | FloatArray) -> FloatArray:
    F = S.F if isinstance(S, Population) else np.asarray(S, dtype=np.float64)
    if F.ndim != 2 or F.shape[0] == 0:
        raise ContractViolationException("Ranking needs a non-empty N×m objective matrix")
    return F


def fast_nondominated_sort(S: Population | FloatArray) -> list[IntArray]:
    """Fronts of ``S`` as index arrays; front 0 is the non-dominated set."""
    F = _objectives(S)
    D = dominance_matrix(F)
    dominated_by_count = D.sum(axis=0)
    fronts: list[IntArray] = []
    current = np.flatnonzero(dominated_by_count == 0)
    while current.size:
        fronts.append(current.astype(np.int64))
        dominated_by_count = dominated_by_count - D[current].sum(axis=0)
        dominated_by_count[current] = -1
        current = np.flatnonzero(dominated_by_count == 0)
    return fronts


def front_indices(S: Population | FloatArray) -> IntArray:
    F = _objectives(S)
    out = np.empty(F.shape[0], dtype=np.int64)
    for level, members in enumerate(fast_nondominated_sort(F)):
        out[members] = level
    return out


def crowding_distance(front: Population | FloatArray) -> FloatArray:
    F = _objectives(front)
    N, m = F.shape
    distance = np.zeros(N, dtype=np.float64)
    if N <= 2:
        distance[:] = math.inf
        return distance
    for obj in range(m):
        order = np.argsort(F[:, obj], kind="stable")
        values = F[order, obj]
        distance[order[0]] = distance[order[-1]] = math.inf
        span = values[-1] - values[0]
        if span == 0:
            continue
        distance[order[1:-1]] += (values[2:] - values[:-2]) / span
    return distance


def hv_contribution_2d(front: Population | FloatArray, ref: FloatArray) -> FloatArray:
    """Exclusive hypervolume of each member of a mutually non-dominated 2-d front."""
    F = _objectives(front)
    if F.shape[1] != 2:
        raise ContractViolationException("Hypervolume contributions are implemented for m = 2")
    ref = np.asarray(ref, dtype=np.float64)
    contribution = np.zeros(F.shape[0], dtype=np.float64)
    inside = np.flatnonzero(np.all(F < ref, axis=1))
    if inside.size == 0:
        return contribution
    # f1 ascending, then f2 descending
    inside = inside[np.lexsort((-F[inside, 1], F[inside, 0]))]
    f1 = F[inside, 0]
    f2 = F[inside, 1]
    next_f1 = np.append(f1[1:], ref[0])
    prev_f2 = np.insert(f2[:-1], 0, ref[1])
    contribution[inside] = (next_f1 - f1) * (prev_f2 - f2)
    return contribution


def sm_reference_point(F: FloatArray) -> FloatArray:
    """Worst value per objective plus a tenth of the set's range (1.0 where the range is 0)."""
    worst = F.max(axis=0)
    span = worst - F.min(axis=0)
    return worst + np.where(span > 0, SM_REFERENCE_OFFSET * span, 1.0)


def rank_ns(S: Population) -> RankedSet:
    fronts = front_indices(S)
    crowding = np.zeros(len(S), dtype=np.float64)
    for members in fast_nondominated_sort(S):
        crowding[members] = crowding_distance(S.F[members])
    order = np.lexsort((S.eval_ids, -crowding, fronts)).astype(np.int64)
    return RankedSet(order, crowding, fronts)


def rank_sm(S: Population, ref: Optional[FloatArray] = None) -> RankedSet:
    ref = sm_reference_point(S.F) if ref is None else np.asarray(ref, dtype=np.float64)
    fronts = front_indices(S)
    contribution = np.zeros(len(S), dtype=np.float64)
    for members in fast_nondominated_sort(S):
        contribution[members] = hv_contribution_2d(S.F[members], ref)
    order = np.lexsort((S.eval_ids, -contribution, fronts)).astype(np.int64)
    return RankedSet(order, contribution, fronts)


def spea2_fitness(S: Population | FloatArray) -> FloatArray:
    """Raw fitness plus k-th nearest neighbour density; lower is better."""
    F = _objectives(S)
    N = F.shape[0]
    if N < 2:
        raise ContractViolationException("SPEA2 fitness needs at least two individuals")
    D = dominance_matrix(F)
    strength = D.sum(axis=1)
    raw = (D * strength[:, None]).sum(axis=0).astype(np.float64)

    k = math.isqrt(N)
    # column 0 of each sorted row is the distance to itself
    sigma_k = np.sort(cdist(F, F), axis=1)[:, k]
    return raw + 1.0 / (sigma_k + 2.0)


def _normalise(F: FloatArray) -> FloatArray:
    low = F.min(axis=0)
    span = F.max(axis=0) - low
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (F - low) / safe, 0.0)


def additive_epsilon_matrix(F: FloatArray) -> FloatArray:
    """``I[a, b]``: smallest shift of ``a`` that makes it weakly dominate ``b``."""
    return np.max(F[:, None, :] - F[None, :, :], axis=2)


def ibea_fitness(S: Population | FloatArray, cfg: IbeaConfig = IbeaConfig()) -> FloatArray:
    """Additive-ε IBEA fitness on min/max normalised objectives; higher is better."""
    F = _objectives(S)
    if F.shape[0] < 2:
        raise ContractViolationException("IBEA fitness needs at least two individuals")
    I = additive_epsilon_matrix(_normalise(F))
    c = float(np.max(np.abs(I)))
    if c == 0.0:
        c = 1.0
    contributions = -np.exp(-I / (c * cfg.kappa))
    np.fill_diagonal(contributions, 0.0)
    return contributions.sum(axis=0)


def rank(method: RankingMethod | str, S: Population, context: RankingContext = RankingContext()) -> RankedSet:
    try:
        method = RankingMethod(method)
    except ValueError:
        raise ConfigurationException(f"Unknown ranking method {method!r}", key="ranking") from None

    if len(S) == 1:
        return RankedSet(np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.float64))

    match method:
        case RankingMethod.NS:
            return rank_ns(S)
        case RankingMethod.SM:
            return rank_sm(S, context.sm_reference)
        case RankingMethod.SP:
            fitness = spea2_fitness(S)
            return RankedSet(np.lexsort((S.eval_ids, fitness)).astype(np.int64), fitness)
        case RankingMethod.IB:
            fitness = ibea_fitness(S, context.ibea)
            return RankedSet(np.lexsort((S.eval_ids, -fitness)).astype(np.int64), fitness)
