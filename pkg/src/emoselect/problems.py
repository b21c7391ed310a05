"""
Bi-objective test problems built by pairing two transformed single-objective
base functions, in the style of the bi-objective BBOB suite.

Each objective is ``g(z)`` with ``z = R·(x − shift)``: a shift inside
[-4, 4]^n places the optimum, an orthogonal ``R`` rotates the landscape (the
identity for the non-rotated variants). Every base function is 0 at z = 0, so
the ideal point of every problem is (0, 0).
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Self

import numpy as np
import pandas as pd

from emoselect.core import (
    Bounds,
    FloatArray,
    RandomSource,
    as_matrix,
    as_vector,
)
from emoselect.exceptions import ConfigurationException, ContractViolationException

L = logging.getLogger(__name__)

SHIFT_LIMIT = 4.0
NADIR_MARGIN = 1.1
NADIR_FLOOR = 1e-3


class BaseFunctionKind(StrEnum):
    Sphere = "sphere"
    Ellipsoid = "ellipsoid"
    Rastrigin = "rastrigin"
    Rosenbrock = "rosenbrock"
    SharpRidge = "sharpridge"
    DifferentPowers = "differentpowers"


def _exponents(n: int, start: float, span: float) -> FloatArray:
    if n == 1:
        return np.full(1, start)
    return start + span * np.arange(n) / (n - 1)


def base_function_value(kind: BaseFunctionKind, z: FloatArray) -> FloatArray:
    """Raw base function over the last axis of ``z``; minimum 0 at z = 0."""
    n = z.shape[-1]
    match kind:
        case BaseFunctionKind.Sphere:
            return np.sum(z**2, axis=-1)
        case BaseFunctionKind.Ellipsoid:
            weights = 10.0 ** _exponents(n, 0.0, 6.0)
            return np.sum(weights * z**2, axis=-1)
        case BaseFunctionKind.Rastrigin:
            return 10.0 * (n - np.sum(np.cos(2.0 * np.pi * z), axis=-1)) + np.sum(
                z**2, axis=-1
            )
        case BaseFunctionKind.Rosenbrock:
            # optimum of the textbook form is at 1; move it to 0
            y = z + 1.0
            return np.sum(
                100.0 * (y[..., :-1] ** 2 - y[..., 1:]) ** 2 + (y[..., :-1] - 1.0) ** 2,
                axis=-1,
            )
        case BaseFunctionKind.SharpRidge:
            return z[..., 0] ** 2 + 100.0 * np.sqrt(np.sum(z[..., 1:] ** 2, axis=-1))
        case BaseFunctionKind.DifferentPowers:
            return np.sum(np.abs(z) ** _exponents(n, 2.0, 4.0), axis=-1)
    raise ConfigurationException(f"Unknown base function {kind!r}")


@dataclass(slots=True, frozen=True)
class InstanceTransform:
    shift: FloatArray
    rotation: FloatArray
    instance_seed: int

    def __post_init__(self) -> None:
        n = self.shift.shape[0]
        if self.rotation.shape != (n, n):
            raise ContractViolationException(
                f"Rotation must be {n}x{n}, got {self.rotation.shape}"
            )
        if np.any(np.abs(self.shift) > SHIFT_LIMIT):
            raise ContractViolationException(
                f"Shift must lie inside [-{SHIFT_LIMIT}, {SHIFT_LIMIT}]^n"
            )

    @property
    def is_rotated(self) -> bool:
        return not np.array_equal(self.rotation, np.eye(self.shift.shape[0]))

    def apply(self, X: FloatArray) -> FloatArray:
        """z = R·(x − shift) for a vector or for every row of a matrix."""
        return (X - self.shift) @ self.rotation.T


@dataclass(slots=True, frozen=True)
class BaseFunction:
    kind: BaseFunctionKind
    n: int
    transform: InstanceTransform

    def __call__(self, X: FloatArray) -> FloatArray:
        return base_function_value(self.kind, self.transform.apply(X))

    def __str__(self) -> str:
        return f"{self.kind.value}-rot" if self.transform.is_rotated else self.kind.value


def random_rotation(n: int, rng: RandomSource) -> FloatArray:
    """Orthonormalise a standard-normal matrix (QR with the sign of diag(R) fixed)."""
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


@dataclass(frozen=True)
class BiObjectiveProblem:
    id: str
    pair: str
    n: int
    bounds: Bounds
    g1: BaseFunction
    g2: BaseFunction
    ideal: FloatArray
    nadir: FloatArray
    instance_seed: int

    def __str__(self) -> str:
        return f"{self.id} ({self.g1}/{self.g2}, n={self.n})"

    def evaluate(self, x: FloatArray) -> FloatArray:
        """Objective vector for one decision vector, or one row per decision vector."""
        if np.ndim(x) == 1:
            v = as_vector(x, name="x")
            self._check_dimension(v.shape[0])
            return np.array([self.g1(v), self.g2(v)], dtype=np.float64)
        X = as_matrix(x, name="x")
        self._check_dimension(X.shape[1])
        return np.column_stack([self.g1(X), self.g2(X)])

    def _check_dimension(self, n: int) -> None:
        if n != self.n:
            raise ContractViolationException(
                f"Problem {self.id} has n={self.n}, got a vector of length {n}"
            )

    @cached_property
    def extremes(self) -> FloatArray:
        """Objective vectors at the optimum of g1 and at the optimum of g2."""
        return self.evaluate(np.vstack([self.g1.transform.shift, self.g2.transform.shift]))


def evaluate(problem: BiObjectiveProblem, x: FloatArray) -> FloatArray:
    return problem.evaluate(x)


class PairSpec(NamedTuple):
    code: str
    first: tuple[BaseFunctionKind, bool]
    second: tuple[BaseFunctionKind, bool]

    @property
    def name(self) -> str:
        def part(kind: BaseFunctionKind, rotated: bool) -> str:
            return f"{kind.value}-rot" if rotated else kind.value

        return f"{part(*self.first)}_{part(*self.second)}"


_B = BaseFunctionKind
SHIPPED_PAIRS: tuple[PairSpec, ...] = (
    PairSpec("p01", (_B.Sphere, False), (_B.Sphere, False)),
    PairSpec("p02", (_B.Sphere, False), (_B.Rastrigin, True)),
    PairSpec("p03", (_B.Sphere, False), (_B.Rosenbrock, False)),
    PairSpec("p04", (_B.Ellipsoid, False), (_B.Ellipsoid, True)),
    PairSpec("p05", (_B.Ellipsoid, False), (_B.Rastrigin, True)),
    PairSpec("p06", (_B.Rastrigin, True), (_B.Rastrigin, True)),
    PairSpec("p07", (_B.Rosenbrock, False), (_B.Rastrigin, True)),
    PairSpec("p08", (_B.SharpRidge, False), (_B.Sphere, False)),
    PairSpec("p09", (_B.DifferentPowers, False), (_B.Ellipsoid, False)),
    PairSpec("p10", (_B.Rastrigin, False), (_B.Rosenbrock, False)),
)
PAIRS_BY_CODE: dict[str, PairSpec] = {p.code: p for p in SHIPPED_PAIRS}


def problem_id(code: str, n: int) -> str:
    return f"{code}-n{n}"


def instance_seed_for(suite_seed: int, pair_index: int, n: int) -> int:
    state = np.random.SeedSequence([suite_seed, pair_index, n]).generate_state(
        1, dtype=np.uint64
    )
    return int(state[0])


def _estimate_nadir(g1: BaseFunction, g2: BaseFunction) -> FloatArray:
    raw = np.array([g1(g2.transform.shift), g2(g1.transform.shift)], dtype=np.float64)
    return np.maximum(NADIR_MARGIN * raw, NADIR_FLOOR)


def make_problem(spec: PairSpec, pair_index: int, n: int, suite_seed: int) -> BiObjectiveProblem:
    if n < 2:
        raise ConfigurationException(f"Dimension must be at least 2, got {n}", key="dims")
    seed = instance_seed_for(suite_seed, pair_index, n)
    rng = RandomSource(seed)
    functions: list[BaseFunction] = []
    for kind, rotated in (spec.first, spec.second):
        shift = rng.uniform(-SHIFT_LIMIT, SHIFT_LIMIT, n)
        rotation = random_rotation(n, rng) if rotated else np.eye(n)
        functions.append(BaseFunction(kind, n, InstanceTransform(shift, rotation, seed)))
    g1, g2 = functions
    return BiObjectiveProblem(
        id=problem_id(spec.code, n),
        pair=spec.name,
        n=n,
        bounds=Bounds.box(n),
        g1=g1,
        g2=g2,
        ideal=np.zeros(2, dtype=np.float64),
        nadir=_estimate_nadir(g1, g2),
        instance_seed=seed,
    )


@dataclass(frozen=True)
class ProblemSuite:
    problems: tuple[BiObjectiveProblem, ...]
    suite_seed: int

    def __post_init__(self) -> None:
        ids = [p.id for p in self.problems]
        if len(ids) != len(set(ids)):
            raise ContractViolationException("Problem ids in a suite must be unique")

    def __len__(self) -> int:
        return len(self.problems)

    def __iter__(self) -> Iterator[BiObjectiveProblem]:
        return iter(self.problems)

    @property
    def dims(self) -> frozenset[int]:
        return frozenset(p.n for p in self.problems)

    @cached_property
    def _byId(self) -> dict[str, BiObjectiveProblem]:
        return {p.id: p for p in self.problems}

    def get(self, pid: str) -> BiObjectiveProblem:
        try:
            return self._byId[pid]
        except KeyError:
            raise ConfigurationException(f"Unknown problem id {pid!r}", key="problems") from None

    def select(self, wanted: Iterable[str]) -> Self:
        """Keep problems named by pair code (``p06``) or full id (``p06-n20``).
        An empty selection keeps everything."""
        wanted = list(wanted)
        if not wanted:
            return self
        known_codes = set(PAIRS_BY_CODE)
        for w in wanted:
            if w not in known_codes and w not in self._byId:
                raise ConfigurationException(f"Unknown problem {w!r}", key="problems")
        kept = tuple(
            p for p in self.problems if p.id in wanted or p.id.split("-")[0] in wanted
        )
        return type(self)(kept, self.suite_seed)

    def manifest(self) -> pd.DataFrame:
        rows = [
            {
                "problem_id": p.id,
                "pair": p.pair,
                "g1": str(p.g1),
                "g2": str(p.g2),
                "n": p.n,
                "instance_seed": p.instance_seed,
                "nadir1": float(p.nadir[0]),
                "nadir2": float(p.nadir[1]),
            }
            for p in self.problems
        ]
        return pd.DataFrame(rows)

    def writeManifest(self, path: Path) -> None:
        self.manifest().to_csv(path, index=False, lineterminator="\n")


def make_suite(dims: Sequence[int], suite_seed: int) -> ProblemSuite:
    """The shipped pairs instantiated at every dimension in ``dims``.

    A pure function of ``(dims, suite_seed)``: transforms come from per-problem
    seeds derived from the suite seed, the pair and the dimension."""
    if not dims:
        raise ConfigurationException("At least one dimension is required", key="dims")
    problems = [
        make_problem(spec, index, n, suite_seed)
        for n in sorted(set(dims))
        for index, spec in enumerate(SHIPPED_PAIRS, start=1)
    ]
    L.debug(f"Built suite of {len(problems)} problems for dims {sorted(set(dims))}")
    return ProblemSuite(tuple(problems), suite_seed)


def problem_from_id(pid: str, suite_seed: int) -> BiObjectiveProblem:
    """Rebuild one suite member from its id, e.g. ``p06-n20``."""
    code, _, dim = pid.partition("-n")
    if code not in PAIRS_BY_CODE or not dim.isdigit():
        raise ConfigurationException(f"Unknown problem id {pid!r}", key="problems")
    index = SHIPPED_PAIRS.index(PAIRS_BY_CODE[code]) + 1
    return make_problem(PAIRS_BY_CODE[code], index, int(dim), suite_seed)
