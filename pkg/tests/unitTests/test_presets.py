import pytest

from emoselect.engine import Scheme
from emoselect.exceptions import ConfigurationException
from emoselect.presets import (
    expand_algorithms,
    original_names,
    original_notes,
    parse_algorithm,
    preset_names,
)
from emoselect.problems import SHIPPED_PAIRS, make_problem
from emoselect.ranking import RankingMethod
from emoselect.selection import SelectionMethod
from emoselect.variation import CrossoverMethod


def test_parse_label() -> None:
    spec = parse_algorithm("BC-SPX-NS")
    assert spec.selection is SelectionMethod.BC
    assert spec.crossover is CrossoverMethod.SPX
    assert spec.ranking is RankingMethod.NS
    assert spec.scheme is Scheme.SIMPLE
    assert spec.lambda_factor == 10


def test_parse_lambda_suffix() -> None:
    spec = parse_algorithm("BA-SPX-NS:lambda=3n")
    assert spec.label == "BA-SPX-NS:lambda=3n"
    assert spec.lambda_factor == 3
    assert parse_algorithm("BA-SPX-NS:lambda=0.5n").lambda_factor == 0.5


@pytest.mark.parametrize("name, ranking", [("NSGA-II", "NS"), ("SPEA2", "SP"), ("SMS-EMOA", "SM"), ("IBEA", "IB")])
def test_parse_baselines(name, ranking) -> None:
    spec = parse_algorithm(name)
    assert spec.scheme is Scheme.ORIGINAL
    assert spec.selection is SelectionMethod.BA
    assert spec.crossover is CrossoverMethod.SBX
    assert spec.ranking is RankingMethod(ranking)
    assert original_notes(name)


@pytest.mark.parametrize("label", ["BX-SPX-NS", "BA-SPX", "ba-spx-ns", "BA-SPX-NS:lambda=n", "NSGA-III"])
def test_bad_labels(label) -> None:
    with pytest.raises(ConfigurationException) as e:
        parse_algorithm(label)
    assert e.value.key == "algorithms"


def test_presets_expand_in_order() -> None:
    labels = [s.label for s in expand_algorithms(["preset:selection-core"])]
    assert labels == ["NSGA-II", "BA-SPX-NS", "BF-SPX-NS", "BC-SPX-NS"]
    sweep = expand_algorithms(["preset:lambda-sweep"])
    assert [s.lambda_factor for s in sweep] == [1, 3, 5, 8, 10]


def test_every_preset_parses() -> None:
    assert set(original_names()) == {"NSGA-II", "SPEA2", "SMS-EMOA", "IBEA"}
    for name in preset_names():
        assert expand_algorithms([f"preset:{name}"])
    assert len(expand_algorithms(["preset:crossovers"])) == 16
    assert len(expand_algorithms(["preset:rankings"])) == 12


def test_duplicates_are_dropped() -> None:
    labels = [s.label for s in expand_algorithms(["BC-SPX-NS", "preset:selection-core", "BC-SPX-NS"])]
    assert labels == ["BC-SPX-NS", "NSGA-II", "BA-SPX-NS", "BF-SPX-NS"]


def test_unknown_preset() -> None:
    with pytest.raises(ConfigurationException):
        expand_algorithms(["preset:nope"])
    with pytest.raises(ConfigurationException):
        expand_algorithms([])


def test_run_config_from_spec() -> None:
    problem = make_problem(SHIPPED_PAIRS[0], 1, 2, suite_seed=1)
    cfg = parse_algorithm("BA-SPX-NS:lambda=3n").runConfig(problem, 5, budget_multiplier=100)
    assert (cfg.lam, cfg.mu, cfg.max_evals, cfg.seed) == (6, 69, 200, 5)
    baseline = parse_algorithm("IBEA").runConfig(problem, 5, budget_multiplier=100)
    assert baseline.lam == 70
    assert baseline.label == "IBEA"


def test_run_config_errors_are_configuration_errors() -> None:
    problem = make_problem(SHIPPED_PAIRS[0], 1, 2, suite_seed=1)
    with pytest.raises(ConfigurationException) as e:
        parse_algorithm("BC-SPX-NS:lambda=1n").runConfig(problem, 1, budget_multiplier=100)
    assert e.value.key == "algorithms"
