"""
Campaigns: the (algorithm × problem × seed) grid read from a TOML file, its
execution over a process pool, the trace files every run leaves behind, and
the aggregations built from them (ECDFs, diagnostics, checks, summary).

Output layout below the output directory::

    campaign.json                 config echo, cell list, manifest hash
    suite.csv                     problem manifest
    reference.csv                 written by the reference command
    runs/<algorithm>/<problem>/seed-<s>/
        indicator.csv population.csv replacements.csv archive.csv record.json
        (each trace CSV ends with a manifest_hash column)
    summary-<hash>.csv  ecdf-n<n>-<hash>.{csv,svg}
    diagnostics-<problem>-<hash>.{csv,svg}  checks-<hash>.csv
"""

from __future__ import annotations

import hashlib
import logging
import tomllib
from collections.abc import Callable, Iterable, Iterator, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Self, TypeVar

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from emoselect import __version__
from emoselect.campaignresults import CampaignResultsBuilder, MessageType, Severity
from emoselect.core import FloatArray, IntArray
from emoselect.engine import DEFAULT_BUDGET_MULTIPLIER, RunRecord, run
from emoselect.exceptions import (
    AggregationException,
    ConfigurationException,
    EarlyAbortException,
    TraceMissingException,
)
from emoselect.filesupport import OutputArtifact, safeFileStem
from emoselect.indicators import (
    Archive,
    EcdfCurve,
    IndicatorContext,
    IndicatorTrace,
    default_targets,
    ecdf,
    ecdf_grid,
)
from emoselect.json import canonicalDumps, readObject
from emoselect.plotting import (
    DiagnosticsSeries,
    curves_frame,
    diagnostics_figure,
    ecdf_figure,
)
from emoselect.presets import AlgorithmSpec, expand_algorithms
from emoselect.problems import ProblemSuite, make_suite, problem_from_id
from emoselect.reference import ReferenceTable, reference_row
from emoselect.stringutil import format_evals
from emoselect.variation import OperatorParameters

L = logging.getLogger(__name__)

CAMPAIGN_FILE = "campaign.json"
SUITE_FILE = "suite.csv"
RECORD_FILE = "record.json"
RUNS_DIR = "runs"
HASH_DIGITS = 12
HASH_COLUMN = "manifest_hash"
MONOTONE_TOLERANCE = 1e-12
REFERENCE_PRESET = "preset:reference"

T = TypeVar("T")
R = TypeVar("R")


class CampaignSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "campaign"
    dims: list[int] = Field(default_factory=lambda: [2], min_length=1)
    problems: list[str] = Field(default_factory=list)
    suite_seed: int = Field(1, ge=0)
    algorithms: list[str] = Field(min_length=1)
    seeds: int = Field(15, ge=1)
    seed_list: Optional[list[int]] = None
    seed_base: int = Field(1, ge=0)
    budget_multiplier: int = Field(DEFAULT_BUDGET_MULTIPLIER, ge=1)
    record_population_indicator: bool = False
    record_interval: Optional[int] = Field(None, ge=1)
    reference_file: str = "reference.csv"
    reference_budget_multiplier: int = Field(100_000, ge=1)
    reference_seeds: int = Field(15, ge=1)
    workers: int = Field(1, ge=1)
    operators: OperatorParameters = Field(default_factory=OperatorParameters)

    @field_validator("dims")
    @classmethod
    def _dims_at_least_two(cls, dims: list[int]) -> list[int]:
        if any(n < 2 for n in dims):
            raise ValueError("every dimension must be at least 2")
        return dims

    @field_validator("seed_list")
    @classmethod
    def _seeds_distinct(cls, seeds: Optional[list[int]]) -> Optional[list[int]]:
        if seeds is not None:
            if not seeds:
                raise ValueError("seed_list must not be empty")
            if len(set(seeds)) != len(seeds):
                raise ValueError("seeds must be distinct")
            if any(s < 0 for s in seeds):
                raise ValueError("seeds must be non-negative")
        return seeds

    def seedValues(self, seed_base: Optional[int] = None) -> list[int]:
        if self.seed_list is not None:
            return list(self.seed_list)
        base = self.seed_base if seed_base is None else seed_base
        return list(range(base, base + self.seeds))


class CampaignConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    campaign: CampaignSection


def _errorKey(error: Any) -> str:
    return ".".join(str(part) for part in error["loc"])


def load_campaign_config(path: Path) -> CampaignSection:
    """Parse and validate a campaign file; errors name the offending key."""
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigurationException(f"Config file {path} not found", key="--config") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationException(f"{path} is not valid TOML: {e}", key="--config") from None
    try:
        return CampaignConfig.model_validate(raw).campaign
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigurationException(first["msg"], key=_errorKey(first)) from None


@dataclass(slots=True, frozen=True)
class Cell:
    algorithm: str
    problem_id: str
    n: int
    seed: int

    @property
    def cellId(self) -> str:
        return f"{self.algorithm}/{self.problem_id}/seed-{self.seed}"

    @property
    def relativeDir(self) -> Path:
        return (
            Path(RUNS_DIR)
            / safeFileStem(self.algorithm)
            / safeFileStem(self.problem_id)
            / f"seed-{self.seed}"
        )

    def toDict(self) -> dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "problem_id": self.problem_id,
            "n": self.n,
            "seed": self.seed,
            "path": self.relativeDir.as_posix(),
        }

    @classmethod
    def fromDict(cls, stuff: dict[str, Any]) -> Self:
        return cls(stuff["algorithm"], stuff["problem_id"], int(stuff["n"]), int(stuff["seed"]))


@dataclass(slots=True, frozen=True)
class RunTask:
    """Everything a worker process needs to execute one cell."""

    spec: AlgorithmSpec
    cell: Cell
    suite_seed: int
    budget_multiplier: int
    record_population_indicator: bool
    record_interval: Optional[int]
    operators: Optional[OperatorParameters]
    context: Optional[tuple[tuple[float, float], tuple[float, float], float]]
    run_dir: Optional[str]
    manifest_hash: str


def _execute(fn: Callable[[T], R], tasks: Sequence[T], workers: int) -> Iterator[R]:
    """Results in task order; a pool only when more than one worker is wanted."""
    if workers <= 1 or len(tasks) <= 1:
        yield from map(fn, tasks)
        return
    pool = ProcessPoolExecutor(max_workers=min(workers, len(tasks)))
    try:
        yield from pool.map(fn, tasks)
    finally:
        # pending cells are dropped on interrupt or failure
        pool.shutdown(wait=False, cancel_futures=True)


def _runTask(task: RunTask) -> RunRecord:
    problem = problem_from_id(task.cell.problem_id, task.suite_seed)
    config = task.spec.runConfig(
        problem,
        task.cell.seed,
        budget_multiplier=task.budget_multiplier,
        record_population_indicator=task.record_population_indicator,
        record_interval=task.record_interval,
        operators=task.operators,
    )
    ctx = None
    if task.context is not None:
        ideal, nadir, reference_hv = task.context
        ctx = IndicatorContext(np.array(ideal), np.array(nadir), reference_hv)
    return run(config, problem, ctx=ctx)


def _runAndWrite(task: RunTask) -> dict[str, Any]:
    record = _runTask(task)
    assert task.run_dir is not None
    write_run_record(record, Path(task.run_dir), task.manifest_hash, task.cell)
    return record_summary(record, task.cell)


def _runForArchive(task: RunTask) -> tuple[FloatArray, IntArray]:
    record = _runTask(task)
    return record.archive.points(), record.archive.eval_ids()


def record_summary(record: RunRecord, cell: Cell) -> dict[str, Any]:
    return {
        "algorithm": cell.algorithm,
        "problem_id": cell.problem_id,
        "seed": cell.seed,
        "evaluations": record.evaluations,
        "final_icoco": record.final_icoco,
        "archive_size": len(record.archive),
        "cumulative_replacements": record.final_replacements,
    }


def write_run_record(record: RunRecord, run_dir: Path, manifest_hash: str, cell: Cell) -> None:
    """Trace CSVs first, ``record.json`` last: a run directory counts as
    complete only once its record exists."""
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / RECORD_FILE).unlink(missing_ok=True)
    traces = {
        "indicator.csv": record.indicator,
        "replacements.csv": record.replacements,
        "archive.csv": record.archive_frame(),
    }
    if record.population is not None:
        traces["population.csv"] = record.population
    for name, frame in traces.items():
        stamped = frame.assign(**{HASH_COLUMN: manifest_hash})
        OutputArtifact.fromFrame(stamped, name).saveToDirectory(run_dir)
    if record.population is None:
        (run_dir / "population.csv").unlink(missing_ok=True)
    metadata = record.metadata() | {
        "cell": cell.toDict(),
        "manifest_hash": manifest_hash,
        "summary": record_summary(record, cell),
        "complete": True,
    }
    OutputArtifact.fromText(canonicalDumps(metadata), RECORD_FILE).saveToDirectory(run_dir)


def is_complete(run_dir: Path, manifest_hash: str) -> bool:
    path = run_dir / RECORD_FILE
    if not path.is_file():
        return False
    try:
        stuff = readObject(path)
    except ValueError:
        return False
    return bool(stuff.get("complete")) and stuff.get("manifest_hash") == manifest_hash


class Campaign:
    def __init__(
        self,
        config: CampaignSection,
        out_dir: Path,
        *,
        seed_base: Optional[int] = None,
        workers: Optional[int] = None,
    ) -> None:
        self.config = config
        self.out_dir = out_dir
        self.seeds = config.seedValues(seed_base)
        self.workers = workers if workers is not None else config.workers
        self.suite: ProblemSuite = make_suite(config.dims, config.suite_seed).select(config.problems)
        self.algorithms: list[AlgorithmSpec] = expand_algorithms(config.algorithms)
        if len(self.suite) == 0:
            raise ConfigurationException("No problems selected", key="campaign.problems")

    @property
    def reference_path(self) -> Path:
        return self.out_dir / self.config.reference_file

    def cells(self) -> list[Cell]:
        return [
            Cell(spec.label, problem.id, problem.n, seed)
            for spec in self.algorithms
            for problem in self.suite
            for seed in self.seeds
        ]

    def manifest(self, reference: ReferenceTable) -> dict[str, Any]:
        return {
            "version": __version__,
            "config": self.config.model_dump(mode="json", exclude={"workers", "seed_base", "seeds"}),
            "seeds": self.seeds,
            "algorithms": [spec.model_dump(mode="json") for spec in self.algorithms],
            "suite": self.suite.manifest().to_dict(orient="records"),
            "reference": reference.records(),
        }

    @staticmethod
    def hashOf(manifest: dict[str, Any]) -> str:
        return hashlib.sha256(canonicalDumps(manifest).encode("utf-8")).hexdigest()

    def run(self, builder: CampaignResultsBuilder, force: bool = False) -> str:
        """Execute every missing cell; returns the manifest hash."""
        reference = ReferenceTable.load(self.reference_path)
        manifest = self.manifest(reference)
        manifest_hash = self.hashOf(manifest)
        cells = self.cells()
        builder.addCellsTotal(len(cells))
        specs = {spec.label: spec for spec in self.algorithms}

        tasks: list[RunTask] = []
        for cell in cells:
            run_dir = self.out_dir / cell.relativeDir
            if not force and is_complete(run_dir, manifest_hash):
                builder.addCellSkipped(cell.cellId)
                continue
            ctx = reference.context(self.suite.get(cell.problem_id))
            tasks.append(
                RunTask(
                    spec=specs[cell.algorithm],
                    cell=cell,
                    suite_seed=self.config.suite_seed,
                    budget_multiplier=self.config.budget_multiplier,
                    record_population_indicator=self.config.record_population_indicator,
                    record_interval=self.config.record_interval,
                    operators=self.config.operators,
                    context=(
                        (float(ctx.ideal[0]), float(ctx.ideal[1])),
                        (float(ctx.nadir[0]), float(ctx.nadir[1])),
                        ctx.reference_hv,
                    ),
                    run_dir=str(run_dir),
                    manifest_hash=manifest_hash,
                )
            )
        L.info(f"{len(tasks)} of {len(cells)} cells to run with {self.workers} worker(s)")

        try:
            for task, summary in zip(tasks, _execute(_runAndWrite, tasks, self.workers)):
                builder.addCellRun(task.cell.cellId)
                builder.addMessage(
                    f"{format_evals(summary['evaluations'])} evaluations, final indicator {summary['final_icoco']:.6g}",
                    Severity.INFO,
                    MessageType.Progress,
                    algorithm=task.cell.algorithm,
                    cell_id=task.cell.cellId,
                )
        except KeyboardInterrupt:
            raise EarlyAbortException(
                f"Interrupted after {builder.cellsRun} of {len(tasks)} cells; "
                "completed cells are kept and a rerun resumes from there"
            ) from None

        self._writeCampaignFiles(manifest, manifest_hash, cells)
        return manifest_hash

    def _writeCampaignFiles(self, manifest: dict[str, Any], manifest_hash: str, cells: list[Cell]) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        OutputArtifact.fromFrame(self.suite.manifest(), SUITE_FILE).saveToDirectory(self.out_dir)
        document = {
            "manifest": manifest,
            "manifest_hash": manifest_hash,
            "cells": [c.toDict() for c in cells],
        }
        OutputArtifact.fromText(canonicalDumps(document), CAMPAIGN_FILE).saveToDirectory(self.out_dir)
        results = CampaignOutputs.load(self.out_dir)
        results.summaryArtifact().saveToDirectory(self.out_dir)

    def run_reference(self, builder: CampaignResultsBuilder, force: bool = False) -> Path:
        """Long runs of the reference preset on every problem; the union of their
        archives gives each problem's reference hypervolume."""
        if self.reference_path.is_file() and not force:
            builder.addMessage(
                f"Reference file {self.reference_path} exists; use --force to regenerate",
                Severity.WARNING,
                MessageType.Run,
            )
            return self.reference_path
        specs = expand_algorithms([REFERENCE_PRESET])
        seeds = list(range(self.config.suite_seed, self.config.suite_seed + self.config.reference_seeds))
        tasks = [
            RunTask(
                spec=spec,
                cell=Cell(spec.label, problem.id, problem.n, seed),
                suite_seed=self.config.suite_seed,
                budget_multiplier=self.config.reference_budget_multiplier,
                record_population_indicator=False,
                record_interval=None,
                operators=None,
                context=None,
                run_dir=None,
                manifest_hash="",
            )
            for problem in self.suite
            for spec in specs
            for seed in seeds
        ]
        builder.addCellsTotal(len(tasks))
        archives: dict[str, list[Archive]] = {p.id: [] for p in self.suite}
        try:
            for task, (points, ids) in zip(tasks, _execute(_runForArchive, tasks, self.workers)):
                archive = Archive()
                archive.extend(points, ids)
                archives[task.cell.problem_id].append(archive)
                builder.addCellRun(task.cell.cellId)
        except KeyboardInterrupt:
            raise EarlyAbortException(
                f"Interrupted after {builder.cellsRun} of {len(tasks)} reference runs; no reference file written"
            ) from None

        table = ReferenceTable.fromRows(
            reference_row(problem, archives[problem.id], self.config.suite_seed) for problem in self.suite
        )
        self.out_dir.mkdir(parents=True, exist_ok=True)
        target = table.artifact(self.reference_path.name).saveToDirectory(self.reference_path.parent)
        builder.addMessage(
            f"Wrote reference values for {len(table)} problems to {target}", Severity.INFO, MessageType.Run
        )
        return target


class CampaignOutputs:
    """Read side of a campaign directory, used by every aggregation."""

    def __init__(self, out_dir: Path, document: dict[str, Any]) -> None:
        self.out_dir = out_dir
        self.manifest_hash: str = document["manifest_hash"]
        self.cells: list[Cell] = [Cell.fromDict(c) for c in document["cells"]]
        self.algorithms: list[str] = list(dict.fromkeys(c.algorithm for c in self.cells))

    @classmethod
    def load(cls, out_dir: Path) -> Self:
        path = out_dir / CAMPAIGN_FILE
        if not path.is_file():
            raise TraceMissingException(f"{path} not found; run `emoselect run` first")
        return cls(out_dir, readObject(path))

    @property
    def shortHash(self) -> str:
        return self.manifest_hash[:HASH_DIGITS]

    def trace(self, cell: Cell, name: str) -> pd.DataFrame:
        path = self.out_dir / cell.relativeDir / name
        if not path.is_file():
            raise TraceMissingException(f"Trace {path} is missing for {cell.cellId}")
        frame = pd.read_csv(path, dtype={HASH_COLUMN: str})
        if HASH_COLUMN not in frame or not set(frame[HASH_COLUMN]) <= {self.manifest_hash}:
            raise TraceMissingException(
                f"Trace {path} does not belong to campaign {self.shortHash}; rerun the campaign"
            )
        return frame.drop(columns=HASH_COLUMN)

    def record(self, cell: Cell) -> dict[str, Any]:
        path = self.out_dir / cell.relativeDir / RECORD_FILE
        if not path.is_file():
            raise TraceMissingException(f"Run record {path} is missing for {cell.cellId}")
        return readObject(path)

    def indicatorTrace(self, cell: Cell) -> IndicatorTrace:
        frame = self.trace(cell, "indicator.csv")
        return IndicatorTrace(
            frame["evals"].to_numpy(dtype=np.int64),
            frame["icoco"].to_numpy(dtype=np.float64),
            cell.n,
            cell.cellId,
        )

    def summaryArtifact(self) -> OutputArtifact:
        rows = [self.record(cell)["summary"] for cell in self.cells]
        return OutputArtifact.fromFrame(pd.DataFrame(rows), f"summary-{self.shortHash}.csv")

    def selectAlgorithms(self, wanted: Optional[Iterable[str]]) -> list[str]:
        if wanted is None:
            labels = self.algorithms
        else:
            wanted = list(wanted)
            unknown = [w for w in wanted if w not in self.algorithms]
            if unknown:
                raise AggregationException(f"Algorithms {unknown} are not part of this campaign")
            labels = [a for a in self.algorithms if a in wanted]
        if not labels:
            raise AggregationException("The algorithm set is empty")
        return labels

    def groupCells(self, grouping: str) -> dict[str, list[Cell]]:
        """``dimension`` (one group per n), ``problem=<id>`` or ``all``."""
        if grouping == "dimension":
            groups: dict[str, list[Cell]] = {}
            for cell in sorted(self.cells, key=lambda c: c.n):
                groups.setdefault(f"n{cell.n}", []).append(cell)
            return groups
        if grouping == "all":
            dims = sorted({c.n for c in self.cells})
            if len(dims) != 1:
                raise AggregationException(
                    f"Grouping 'all' mixes dimensions {dims}; ECDFs are per dimension"
                )
            return {f"n{dims[0]}": list(self.cells)}
        if grouping.startswith("problem="):
            pid = grouping.removeprefix("problem=")
            chosen = [c for c in self.cells if c.problem_id == pid]
            if not chosen:
                raise AggregationException(f"Problem {pid!r} is not part of this campaign")
            return {safeFileStem(pid): chosen}
        raise ConfigurationException(
            f"Unknown grouping {grouping!r}; use dimension, all or problem=<id>", key="--group"
        )


def aggregate_ecdf(
    out_dir: Path,
    grouping: str = "dimension",
    algorithms: Optional[Iterable[str]] = None,
    targets: Optional[FloatArray] = None,
) -> list[Path]:
    outputs = CampaignOutputs.load(out_dir)
    labels = outputs.selectAlgorithms(algorithms)
    targets = default_targets() if targets is None else targets
    written: list[Path] = []

    for key, cells in outputs.groupCells(grouping).items():
        traces = {
            label: [outputs.indicatorTrace(c) for c in cells if c.algorithm == label] for label in labels
        }
        traces = {label: ts for label, ts in traces.items() if ts}
        if not traces:
            raise AggregationException(f"No runs of the selected algorithms in group {key}")
        first: list[EcdfCurve] = [ecdf(ts, targets, label) for label, ts in traces.items()]
        n = first[0].n
        max_evals = max(float(t.evals[-1]) for ts in traces.values() for t in ts)
        hits = np.concatenate([c.hits[np.isfinite(c.hits)] for c in first])
        grid = ecdf_grid(n, max_evals, hits)
        curves = [ecdf(ts, targets, label, abscissa=grid) for label, ts in traces.items()]

        stem = f"ecdf-{key}-{outputs.shortHash}"
        title = f"Runtime ECDF, {key}, {len(targets)} targets"
        for artifact in (
            OutputArtifact.fromFrame(curves_frame(curves), f"{stem}.csv"),
            ecdf_figure(curves, title, outputs.manifest_hash, f"{stem}.svg"),
        ):
            written.append(artifact.saveToDirectory(out_dir))
    return written


def _monotone(values: FloatArray, decreasing: bool) -> bool:
    steps = np.diff(values)
    if decreasing:
        return bool(np.all(steps <= MONOTONE_TOLERANCE))
    return bool(np.all(steps >= -MONOTONE_TOLERANCE))


def check_runs(outputs: CampaignOutputs, builder: CampaignResultsBuilder) -> OutputArtifact:
    """Archive indicator non-increasing and archive hypervolume non-decreasing
    for every run; violations become Check errors."""
    rows = []
    for cell in outputs.cells:
        frame = outputs.trace(cell, "indicator.csv")
        icoco_ok = _monotone(frame["icoco"].to_numpy(), decreasing=True)
        hv_ok = _monotone(frame["archive_hv"].to_numpy(), decreasing=False)
        rows.append(
            {
                "algorithm": cell.algorithm,
                "problem_id": cell.problem_id,
                "seed": cell.seed,
                "icoco_non_increasing": icoco_ok,
                "archive_hv_non_decreasing": hv_ok,
            }
        )
        if not (icoco_ok and hv_ok):
            builder.addMessage(
                "Archive indicator trace is not monotone",
                Severity.ERROR,
                MessageType.Check,
                algorithm=cell.algorithm,
                cell_id=cell.cellId,
            )
    return OutputArtifact.fromFrame(pd.DataFrame(rows), f"checks-{outputs.shortHash}.csv")


def diagnostics(out_dir: Path, builder: CampaignResultsBuilder) -> list[Path]:
    """Population indicator and cumulative replacement traces per problem, plus
    the monotonicity checks over every run."""
    outputs = CampaignOutputs.load(out_dir)
    written: list[Path] = []
    problems = list(dict.fromkeys(c.problem_id for c in outputs.cells))

    for pid in problems:
        rows: list[pd.DataFrame] = []
        series: list[DiagnosticsSeries] = []
        for label in outputs.algorithms:
            cells = [c for c in outputs.cells if c.problem_id == pid and c.algorithm == label]
            for index, cell in enumerate(cells):
                try:
                    population = outputs.trace(cell, "population.csv")
                except TraceMissingException as e:
                    raise TraceMissingException(
                        f"{e}; run the campaign with record_population_indicator = true"
                    ) from None
                replacements = outputs.trace(cell, "replacements.csv")
                merged = population.rename(columns={"icoco": "population_icoco"}).merge(
                    replacements, on="evals", how="inner"
                )
                merged.insert(0, "seed", cell.seed)
                merged.insert(0, "algorithm", label)
                rows.append(merged)
                if index == 0:
                    series.append(DiagnosticsSeries(label, population, replacements))

        stem = f"diagnostics-{safeFileStem(pid)}-{outputs.shortHash}"
        table = pd.concat(rows, ignore_index=True)[
            ["algorithm", "seed", "evals", "population_icoco", "cumulative"]
        ]
        for artifact in (
            OutputArtifact.fromFrame(table, f"{stem}.csv"),
            diagnostics_figure(pid, series, outputs.manifest_hash, f"{stem}.svg"),
        ):
            written.append(artifact.saveToDirectory(out_dir))

    written.append(check_runs(outputs, builder).saveToDirectory(out_dir))
    return written
