"""
Algorithm labels and preset grids.

A label is ``X-Y-Z`` (selection, crossover, ranking) with an optional
``:lambda=<f>n`` suffix, the name of a baseline EMOA (``NSGA-II``, ``SPEA2``,
``SMS-EMOA``, ``IBEA``), or ``preset:<name>`` for one of the shipped grids.
"""

from __future__ import annotations

import logging
import re
from collections.abc import Iterable
from functools import cache
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field

from emoselect import data
from emoselect.engine import DEFAULT_LAMBDA_FACTOR, RunConfig, Scheme
from emoselect.exceptions import ConfigurationException
from emoselect.json import getObject, getResource
from emoselect.problems import BiObjectiveProblem
from emoselect.ranking import RankingMethod
from emoselect.selection import SelectionMethod
from emoselect.variation import CrossoverMethod, OperatorParameters

L = logging.getLogger(__name__)

PRESET_PREFIX = "preset:"
_LABEL = re.compile(
    r"^(?P<sel>[A-Z]{2})-(?P<cx>[A-Z]{3})-(?P<rank>[A-Z]{2})(?::lambda=(?P<lam>\d+(?:\.\d+)?)n)?$"
)


@cache
def _presetData() -> dict[str, Any]:
    return getObject(getResource(data, "presets.json"))


def original_names() -> list[str]:
    return list(_presetData()["originals"])


def preset_names() -> list[str]:
    return list(_presetData()["presets"])


def original_notes(name: str) -> str:
    return _presetData()["originals"][name]["notes"]


class AlgorithmSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    label: str
    scheme: Scheme = Scheme.SIMPLE
    selection: SelectionMethod
    crossover: CrossoverMethod
    ranking: RankingMethod
    lambda_factor: float = Field(DEFAULT_LAMBDA_FACTOR, gt=0)

    def runConfig(
        self,
        problem: BiObjectiveProblem,
        seed: int,
        *,
        budget_multiplier: int,
        record_population_indicator: bool = False,
        record_interval: Optional[int] = None,
        operators: Optional[OperatorParameters] = None,
    ) -> RunConfig:
        operators = operators if operators is not None else OperatorParameters()
        try:
            return RunConfig.forProblem(
                problem,
                selection=self.selection,
                crossover=operators.crossoverConfig(self.crossover),
                ranking=self.ranking,
                seed=seed,
                lambda_factor=self.lambda_factor,
                budget_multiplier=budget_multiplier,
                scheme=self.scheme,
                label=self.label,
                record_population_indicator=record_population_indicator,
                record_interval=record_interval,
            )
        except ValueError as e:
            raise ConfigurationException(f"{self.label} on {problem.id}: {e}", key="algorithms") from e


def parse_algorithm(label: str) -> AlgorithmSpec:
    label = label.strip()
    originals = _presetData()["originals"]
    if label in originals:
        return AlgorithmSpec(
            label=label,
            scheme=Scheme.ORIGINAL,
            selection=SelectionMethod.BA,
            crossover=CrossoverMethod.SBX,
            ranking=RankingMethod(originals[label]["ranking"]),
        )
    match = _LABEL.match(label)
    if match is None:
        raise ConfigurationException(
            f"Cannot parse algorithm {label!r}; expected X-Y-Z[:lambda=<f>n], a baseline name "
            f"({', '.join(originals)}) or preset:<name>",
            key="algorithms",
        )
    try:
        factor = float(match["lam"]) if match["lam"] else float(DEFAULT_LAMBDA_FACTOR)
        return AlgorithmSpec(
            label=label,
            selection=SelectionMethod(match["sel"]),
            crossover=CrossoverMethod(match["cx"]),
            ranking=RankingMethod(match["rank"]),
            lambda_factor=factor,
        )
    except ValueError as e:
        raise ConfigurationException(f"Cannot parse algorithm {label!r}: {e}", key="algorithms") from None


def expand_algorithms(entries: Iterable[str]) -> list[AlgorithmSpec]:
    """Resolve labels and presets, keeping the first occurrence of each label."""
    presets = _presetData()["presets"]
    specs: dict[str, AlgorithmSpec] = {}
    for entry in entries:
        if entry.startswith(PRESET_PREFIX):
            name = entry.removeprefix(PRESET_PREFIX)
            if name not in presets:
                raise ConfigurationException(
                    f"Unknown preset {name!r}; known presets: {', '.join(presets)}", key="algorithms"
                )
            labels = presets[name]["algorithms"]
        else:
            labels = [entry]
        for label in labels:
            spec = parse_algorithm(label)
            specs.setdefault(spec.label, spec)
    if not specs:
        raise ConfigurationException("The algorithm grid is empty", key="algorithms")
    return list(specs.values())
