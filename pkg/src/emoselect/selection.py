"""
Environmental selections. BA ranks parents, non-parents and children together
and keeps the best μ. BF lets only the family (children plus their parents)
compete for the parents' slots, using ranks computed over everyone. BC drops
the parents unconditionally and keeps the best k children, ranked against the
non-parents.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike

from emoselect.core import IntArray, Population
from emoselect.exceptions import ConfigurationException, ContractViolationException
from emoselect.ranking import RankingContext, RankingMethod, rank

L = logging.getLogger(__name__)


class SelectionMethod(StrEnum):
    BA = "BA"
    BF = "BF"
    BC = "BC"


@dataclass(slots=True, frozen=True)
class SelectionOutcome:
    next_population: Population
    replaced_parent_count: int
    survivors_from_children: int


def _parent_indices(P: Population, R: ArrayLike) -> IntArray:
    idx = np.asarray(R, dtype=np.int64)
    if idx.size == 0 or idx.min() < 0 or idx.max() >= len(P):
        raise ContractViolationException("Parent indices must address members of the population")
    if np.unique(idx).size != idx.size:
        raise ContractViolationException("Parent indices must be distinct")
    return idx


def _outcome(U: Population, kept: IntArray, parents: IntArray, first_child: int) -> SelectionOutcome:
    kept = np.sort(kept)
    return SelectionOutcome(
        next_population=U.subset(kept),
        replaced_parent_count=int(np.setdiff1d(parents, kept).size),
        survivors_from_children=int(np.count_nonzero(kept >= first_child)),
    )


def ba_select(
    P: Population,
    Q: Population,
    R: ArrayLike,
    method: RankingMethod | str,
    context: RankingContext = RankingContext(),
) -> SelectionOutcome:
    parents = _parent_indices(P, R)
    mu = len(P)
    U = P.concat(Q)
    ranked = rank(method, U, context)
    return _outcome(U, ranked.best(mu), parents, mu)


def bf_select(
    P: Population,
    Q: Population,
    R: ArrayLike,
    method: RankingMethod | str,
    context: RankingContext = RankingContext(),
) -> SelectionOutcome:
    parents = _parent_indices(P, R)
    mu = len(P)
    U = P.concat(Q)
    positions = rank(method, U, context).positions

    family = np.concatenate([parents, mu + np.arange(len(Q), dtype=np.int64)])
    winners = family[np.argsort(positions[family], kind="stable")[: parents.size]]
    non_parents = np.setdiff1d(np.arange(mu, dtype=np.int64), parents)
    return _outcome(U, np.concatenate([non_parents, winners]), parents, mu)


def bc_select(
    P: Population,
    Q: Population,
    R: ArrayLike,
    method: RankingMethod | str,
    context: RankingContext = RankingContext(),
) -> SelectionOutcome:
    parents = _parent_indices(P, R)
    k = parents.size
    if len(Q) < k:
        raise ConfigurationException(
            f"BC needs at least as many children as parents (λ={len(Q)}, k={k})",
            key="lambda",
        )
    rest = P.without(parents)
    U = rest.concat(Q)
    positions = rank(method, U, context).positions

    children = len(rest) + np.arange(len(Q), dtype=np.int64)
    winners = children[np.argsort(positions[children], kind="stable")[:k]]
    kept = np.sort(np.concatenate([np.arange(len(rest), dtype=np.int64), winners]))
    return SelectionOutcome(
        next_population=U.subset(kept),
        replaced_parent_count=k,
        survivors_from_children=k,
    )


SELECTIONS = {
    SelectionMethod.BA: ba_select,
    SelectionMethod.BF: bf_select,
    SelectionMethod.BC: bc_select,
}


def select(
    selection: SelectionMethod | str,
    P: Population,
    Q: Population,
    R: ArrayLike,
    method: RankingMethod | str,
    context: RankingContext = RankingContext(),
) -> SelectionOutcome:
    try:
        chosen = SELECTIONS[SelectionMethod(selection)]
    except ValueError:
        raise ConfigurationException(f"Unknown selection {selection!r}", key="selection") from None
    return chosen(P, Q, R, method, context)
