"""
The EMOA main loop.

The "simple" scheme repeats: pick k random parents, breed λ children from
that one parent set, apply BA/BF/BC. The "original" scheme is the generational
loop used for the NSGA-II/SPEA2/SMS-EMOA/IBEA baselines: binary tournaments
on rank, SBX plus polynomial mutation per pair, then BA over μ + μ.

Every evaluated point is offered to the archive as soon as it is evaluated.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import StrEnum
from time import perf_counter_ns
from typing import Any, Optional, Self

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from emoselect.core import GENERATOR_ALGORITHM, IntArray, Population, RandomSource
from emoselect.exceptions import ContractViolationException
from emoselect.indicators import (
    Archive,
    IndicatorContext,
    icoco_of_points,
    icoco_value,
    normalized_hypervolume,
)
from emoselect.problems import BiObjectiveProblem
from emoselect.ranking import IbeaConfig, RankingContext, RankingMethod, rank
from emoselect.selection import SelectionMethod, ba_select, select
from emoselect.stringutil import format_evals, format_time_ns
from emoselect.variation import (
    CrossoverConfig,
    CrossoverMethod,
    generate_children,
    polynomial_mutation,
    sbx_batch,
)

L = logging.getLogger(__name__)

DEFAULT_LAMBDA_FACTOR = 10
DEFAULT_BUDGET_MULTIPLIER = 10_000


def mu_for(n: int) -> int:
    """⌊100·ln n⌋."""
    return int(math.floor(100.0 * math.log(n)))


def lambda_for(n: int, factor: float = DEFAULT_LAMBDA_FACTOR) -> int:
    return max(1, int(round(factor * n)))


def budget_for(n: int, multiplier: int = DEFAULT_BUDGET_MULTIPLIER) -> int:
    return multiplier * n


class Scheme(StrEnum):
    SIMPLE = "simple"
    ORIGINAL = "original"


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    label: str
    problem_id: str
    n: int = Field(ge=2)
    seed: int = Field(ge=0, lt=2**64)
    scheme: Scheme = Scheme.SIMPLE
    selection: SelectionMethod
    crossover: CrossoverConfig
    ranking: RankingMethod
    ibea: IbeaConfig = IbeaConfig()
    mu: int = Field(ge=1)
    lam: int = Field(ge=1)
    max_evals: int = Field(ge=1)
    record_population_indicator: bool = False
    record_interval: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _consistent(self) -> Self:
        k = self.k
        if self.mu < k:
            raise ValueError(f"mu={self.mu} is smaller than the number of parents k={k}")
        if self.max_evals < self.mu:
            raise ValueError(f"max_evals={self.max_evals} cannot cover initialisation (mu={self.mu})")
        if self.selection is SelectionMethod.BC and self.lam < k:
            raise ValueError(f"BC needs lambda >= k, got lambda={self.lam}, k={k}")
        if self.crossover.method is CrossoverMethod.SBX and self.lam % 2:
            raise ValueError(f"SBX needs an even lambda, got {self.lam}")
        if self.scheme is Scheme.ORIGINAL and (
            self.selection is not SelectionMethod.BA
            or self.crossover.method is not CrossoverMethod.SBX
        ):
            raise ValueError("The original scheme uses BA survivor selection with SBX")
        return self

    @property
    def k(self) -> int:
        k = self.crossover.resolved(self.n).k
        assert k is not None
        return k

    @property
    def interval(self) -> int:
        return self.record_interval if self.record_interval is not None else self.lam

    @classmethod
    def forProblem(
        cls,
        problem: BiObjectiveProblem,
        *,
        selection: SelectionMethod | str,
        crossover: CrossoverMethod | str | CrossoverConfig,
        ranking: RankingMethod | str,
        seed: int,
        lambda_factor: float = DEFAULT_LAMBDA_FACTOR,
        budget_multiplier: int = DEFAULT_BUDGET_MULTIPLIER,
        scheme: Scheme | str = Scheme.SIMPLE,
        label: Optional[str] = None,
        **kwargs: Any,
    ) -> Self:
        """Defaults for dimension n: μ = ⌊100 ln n⌋, λ = factor·n, 10⁴·n evaluations.
        The original scheme uses λ = μ rounded up to even."""
        n = problem.n
        cfg = (
            crossover
            if isinstance(crossover, CrossoverConfig)
            else CrossoverConfig(method=CrossoverMethod(crossover))
        )
        mu = kwargs.pop("mu", mu_for(n))
        if Scheme(scheme) is Scheme.ORIGINAL:
            lam = mu + mu % 2
        else:
            lam = lambda_for(n, lambda_factor)
        return cls(
            label=label or f"{selection}-{cfg.method}-{ranking}",
            problem_id=problem.id,
            n=n,
            seed=seed,
            scheme=Scheme(scheme),
            selection=SelectionMethod(selection),
            crossover=cfg.resolved(n),
            ranking=RankingMethod(ranking),
            mu=mu,
            lam=kwargs.pop("lam", lam),
            max_evals=kwargs.pop("max_evals", budget_for(n, budget_multiplier)),
            **kwargs,
        )


@dataclass
class RunRecord:
    config: RunConfig
    indicator: pd.DataFrame
    replacements: pd.DataFrame
    archive: Archive
    population: Optional[pd.DataFrame]
    evaluations: int
    iterations: int
    wall_time_ns: int = 0
    final_population: Optional[Population] = field(default=None, repr=False)

    def metadata(self) -> dict[str, Any]:
        """Config echo and run facts; the only place wall-clock time appears."""
        return {
            "config": self.config.model_dump(mode="json"),
            "generator": GENERATOR_ALGORITHM,
            "evaluations": self.evaluations,
            "iterations": self.iterations,
            "overshoot": max(0, self.evaluations - self.config.max_evals),
            "archive": {
                "size": len(self.archive),
                "offered": self.archive.stats.offered,
                "inserted": self.archive.stats.inserted,
                "rejected": self.archive.stats.rejected,
                "removed": self.archive.stats.removed,
            },
            "wall_time_ns": self.wall_time_ns,
        }

    def archive_frame(self) -> pd.DataFrame:
        points = self.archive.points()
        return pd.DataFrame(
            {"eval_id": self.archive.eval_ids(), "f1": points[:, 0], "f2": points[:, 1]}
        )

    @property
    def final_icoco(self) -> float:
        return float(self.indicator["icoco"].iloc[-1])

    @property
    def final_replacements(self) -> int:
        return int(self.replacements["cumulative"].iloc[-1])


class _TraceRecorder:
    def __init__(self, config: RunConfig, archive: Archive, ctx: IndicatorContext) -> None:
        self.config = config
        self.archive = archive
        self.ctx = ctx
        self.last: Optional[int] = None
        self.indicator: list[tuple[int, float, float, int]] = []
        self.population: list[tuple[int, float]] = []
        self.replacements: list[tuple[int, int]] = []

    def sample(self, evals: int, P: Population, cumulative: int, *, force: bool = False) -> None:
        if self.last is not None:
            if evals == self.last:
                return
            if not force and evals - self.last < self.config.interval:
                return
        self.last = evals
        points = self.archive.points()
        self.indicator.append(
            (evals, icoco_value(self.archive, self.ctx), normalized_hypervolume(points, self.ctx), len(self.archive))
        )
        self.replacements.append((evals, cumulative))
        if self.config.record_population_indicator:
            self.population.append((evals, icoco_of_points(P.F, self.ctx)))

    def frames(self) -> tuple[pd.DataFrame, pd.DataFrame, Optional[pd.DataFrame]]:
        indicator = pd.DataFrame(self.indicator, columns=["evals", "icoco", "archive_hv", "archive_size"])
        replacements = pd.DataFrame(self.replacements, columns=["evals", "cumulative"])
        population = (
            pd.DataFrame(self.population, columns=["evals", "icoco"])
            if self.config.record_population_indicator
            else None
        )
        return indicator, replacements, population


def init_population(
    problem: BiObjectiveProblem,
    mu: int,
    rng: RandomSource,
    archive: Optional[Archive] = None,
) -> Population:
    """μ uniform points in the search box, evaluated with eval_ids 0..μ−1."""
    if mu < 1:
        raise ContractViolationException(f"mu must be at least 1, got {mu}")
    X = rng.uniform(problem.bounds.lower, problem.bounds.upper, (mu, problem.n))
    F = problem.evaluate(X)
    eval_ids = np.arange(mu, dtype=np.int64)
    if archive is not None:
        archive.extend(F, eval_ids)
    return Population(X, F, eval_ids)


def select_parents(P: Population, k: int, rng: RandomSource) -> IntArray:
    """k distinct member indices, uniformly at random."""
    return rng.sample_without_replacement(len(P), k)


def binary_tournaments(positions: IntArray, count: int, rng: RandomSource) -> IntArray:
    """Winners of ``count`` tournaments between two distinct random members."""
    size = positions.shape[0]
    a = rng.integers(0, size, count)
    b = (a + rng.integers(1, size, count)) % size
    return np.where(positions[a] < positions[b], a, b)


def _original_offspring(
    P: Population,
    config: RunConfig,
    cfg: CrossoverConfig,
    problem: BiObjectiveProblem,
    rng: RandomSource,
    context: RankingContext,
    first_eval_id: int,
) -> Population:
    positions = rank(config.ranking, P, context).positions
    pairs = config.lam // 2
    mates = binary_tournaments(positions, 2 * pairs, rng)
    c1, c2 = sbx_batch(P.X[mates[0::2]], P.X[mates[1::2]], cfg, rng, pairs)
    X = np.empty((config.lam, problem.n), dtype=np.float64)
    X[0::2] = problem.bounds.repair(c1)
    X[1::2] = problem.bounds.repair(c2)
    X = polynomial_mutation(X, problem.bounds, cfg, rng)
    eval_ids = np.arange(first_eval_id, first_eval_id + config.lam, dtype=np.int64)
    return Population(X, problem.evaluate(X), eval_ids)


def run(
    config: RunConfig,
    problem: BiObjectiveProblem,
    archive: Optional[Archive] = None,
    ctx: Optional[IndicatorContext] = None,
) -> RunRecord:
    """One complete run. An iteration only starts when its λ evaluations fit
    the remaining budget, so evaluations never exceed ``max_evals``."""
    if config.problem_id != problem.id or config.n != problem.n:
        raise ContractViolationException(
            f"Config is for {config.problem_id} (n={config.n}), problem is {problem.id}"
        )
    started = perf_counter_ns()
    rng = RandomSource(config.seed)
    archive = Archive() if archive is None else archive
    ctx = IndicatorContext.fromProblem(problem) if ctx is None else ctx
    cfg = config.crossover.resolved(problem.n)
    context = RankingContext(ibea=config.ibea)
    recorder = _TraceRecorder(config, archive, ctx)

    P = init_population(problem, config.mu, rng, archive)
    evals = config.mu
    cumulative = 0
    iterations = 0
    recorder.sample(evals, P, cumulative, force=True)

    while evals + config.lam <= config.max_evals:
        if config.scheme is Scheme.SIMPLE:
            R = select_parents(P, config.k, rng)
            Q = generate_children(P.subset(R), config.lam, cfg, problem, rng, evals)
            archive.extend(Q.F, Q.eval_ids)
            outcome = select(config.selection, P, Q, R, config.ranking, context)
        else:
            Q = _original_offspring(P, config, cfg, problem, rng, context, evals)
            archive.extend(Q.F, Q.eval_ids)
            outcome = ba_select(P, Q, np.arange(len(P)), config.ranking, context)
        evals += config.lam
        iterations += 1
        cumulative += outcome.replaced_parent_count
        P = outcome.next_population
        recorder.sample(evals, P, cumulative)

    recorder.sample(evals, P, cumulative, force=True)
    indicator, replacements, population = recorder.frames()
    elapsed = perf_counter_ns() - started
    L.debug(
        f"{config.label} on {problem.id} seed {config.seed}: {format_evals(evals)} evaluations, "
        f"{iterations} iterations, archive {len(archive)} in {format_time_ns(elapsed)}"
    )
    return RunRecord(
        config=config,
        indicator=indicator,
        replacements=replacements,
        archive=archive,
        population=population,
        evaluations=evals,
        iterations=iterations,
        wall_time_ns=elapsed,
        final_population=P,
    )
