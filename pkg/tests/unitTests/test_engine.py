import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from emoselect.core import RandomSource, dominates
from emoselect.engine import (
    RunConfig,
    Scheme,
    binary_tournaments,
    budget_for,
    init_population,
    lambda_for,
    mu_for,
    run,
    select_parents,
)
from emoselect.exceptions import ContractViolationException
from emoselect.indicators import Archive
from emoselect.problems import SHIPPED_PAIRS, make_problem
from emoselect.selection import SelectionMethod
from emoselect.variation import CrossoverMethod


class LoggingArchive(Archive):
    def __init__(self) -> None:
        super().__init__()
        self.offered: list[tuple[float, float]] = []

    def insert(self, f, eval_id: int) -> bool:
        self.offered.append((float(f[0]), float(f[1])))
        return super().insert(f, eval_id)


@pytest.fixture(scope="module")
def problem():
    return make_problem(SHIPPED_PAIRS[1], 2, 2, suite_seed=3)


def config(problem, selection="BC", crossover="SPX", ranking="NS", **kwargs) -> RunConfig:
    kwargs.setdefault("budget_multiplier", 100)
    return RunConfig.forProblem(
        problem, selection=selection, crossover=crossover, ranking=ranking, seed=1, **kwargs
    )


def test_default_sizes() -> None:
    assert mu_for(2) == 69
    assert mu_for(10) == 230
    assert lambda_for(10) == 100
    assert lambda_for(4, 0.5) == 2
    assert budget_for(20) == 200_000


def test_for_problem_defaults(problem) -> None:
    cfg = config(problem)
    assert (cfg.mu, cfg.lam, cfg.max_evals, cfg.k) == (69, 20, 200, 3)
    assert cfg.label == "BC-SPX-NS"
    assert cfg.interval == 20


def test_config_validation(problem) -> None:
    with pytest.raises(ValidationError):
        config(problem, lam=2)
    with pytest.raises(ValidationError):
        config(problem, crossover="SBX", lam=3)
    with pytest.raises(ValidationError):
        config(problem, scheme=Scheme.ORIGINAL, crossover="SBX")
    with pytest.raises(ValidationError):
        config(problem, max_evals=10)


def test_init_population(problem) -> None:
    archive = Archive()
    P = init_population(problem, 30, RandomSource(1), archive)
    assert len(P) == 30
    assert P.eval_ids.tolist() == list(range(30))
    assert problem.bounds.contains(P.X)
    assert archive.stats.offered == 30


def test_select_parents(problem) -> None:
    P = init_population(problem, 10, RandomSource(1))
    rng = RandomSource(2)
    assert sorted(select_parents(P, 10, rng).tolist()) == list(range(10))
    counts = np.zeros(10)
    draws = 20_000
    for _ in range(draws):
        R = select_parents(P, 3, rng)
        assert len(set(R.tolist())) == 3
        counts[R] += 1
    np.testing.assert_allclose(counts / draws, 0.3, atol=0.015)


def test_binary_tournaments() -> None:
    positions = np.array([3, 0, 2, 1])
    winners = binary_tournaments(positions, 1000, RandomSource(4))
    assert set(winners.tolist()) <= {0, 1, 2, 3}
    assert 0 not in winners
    assert np.count_nonzero(winners == 1) > np.count_nonzero(winners == 2)


def test_budget_equal_to_mu(problem) -> None:
    record = run(config(problem, max_evals=69), problem)
    assert record.evaluations == 69
    assert record.iterations == 0
    assert record.indicator["evals"].tolist() == [69]
    assert record.final_replacements == 0


def test_bc_replacement_law(problem) -> None:
    record = run(config(problem), problem)
    assert record.iterations == 6
    assert record.evaluations == 189
    assert record.final_replacements == 3 * 6
    assert record.replacements["cumulative"].tolist() == [3 * i for i in range(7)]
    assert record.indicator["evals"].tolist() == [69 + 20 * i for i in range(7)]
    assert record.metadata()["overshoot"] == 0


@pytest.mark.parametrize("selection", list(SelectionMethod))
@pytest.mark.parametrize("crossover", list(CrossoverMethod))
def test_every_combination_runs(problem, selection, crossover) -> None:
    record = run(config(problem, selection=selection, crossover=crossover), problem)
    assert record.evaluations <= record.config.max_evals
    assert len(record.final_population) == record.config.mu
    assert np.all(np.diff(record.replacements["cumulative"]) >= 0)
    assert np.all(record.archive.eval_ids() < record.evaluations)


@pytest.mark.parametrize("ranking", ["NS", "SM", "SP", "IB"])
def test_every_ranking_runs(problem, ranking) -> None:
    record = run(config(problem, ranking=ranking), problem)
    assert record.iterations == 6
    assert np.all(np.diff(record.indicator["icoco"]) <= 1e-12)
    assert np.all(np.diff(record.indicator["archive_hv"]) >= -1e-12)


def test_archive_holds_every_nondominated_evaluation(problem) -> None:
    archive = LoggingArchive()
    record = run(config(problem, selection="BF", crossover="REX"), problem, archive=archive)
    assert len(archive.offered) == record.evaluations
    offered = set(archive.offered)
    expected = {a for a in offered if not any(dominates(b, a) for b in offered)}
    assert {tuple(map(float, p)) for p in archive.points()} == expected


def test_runs_are_deterministic(problem) -> None:
    first = run(config(problem, ranking="SM", record_population_indicator=True), problem)
    second = run(config(problem, ranking="SM", record_population_indicator=True), problem)
    pd.testing.assert_frame_equal(first.indicator, second.indicator)
    pd.testing.assert_frame_equal(first.population, second.population)
    pd.testing.assert_frame_equal(first.archive_frame(), second.archive_frame())
    other = run(config(problem, ranking="SM").model_copy(update={"seed": 2}), problem)
    assert not first.archive_frame().equals(other.archive_frame())


def test_record_interval(problem) -> None:
    record = run(config(problem, record_interval=50, record_population_indicator=True), problem)
    assert record.indicator["evals"].tolist() == [69, 129, 189]
    assert record.population["evals"].tolist() == [69, 129, 189]


def test_population_trace_is_optional(problem) -> None:
    assert run(config(problem), problem).population is None


def test_original_scheme(problem) -> None:
    cfg = config(problem, selection="BA", crossover="SBX", scheme=Scheme.ORIGINAL, label="NSGA-II")
    assert cfg.lam == 70
    record = run(cfg, problem)
    assert record.iterations == 1
    assert record.evaluations == 139
    assert record.final_replacements <= 70


def test_config_must_match_problem(problem) -> None:
    other = make_problem(SHIPPED_PAIRS[0], 1, 3, suite_seed=3)
    with pytest.raises(ContractViolationException):
        run(config(problem), other)
