"""
Domain types shared by every module: decision and objective vectors, box
bounds, individuals and populations, Pareto dominance, and the seeded random
source that makes a run reproducible.

Vectors are plain ``numpy`` float arrays. A population is stored column-wise
(decision matrix, objective matrix, evaluation ids) since every consumer
(ranking, selection, indicators) works on whole matrices.
"""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from typing import Optional, Self

import numpy as np
from numpy.typing import ArrayLike, NDArray

from emoselect.exceptions import ContractViolationException

FloatArray = NDArray[np.float64]
IntArray = NDArray[np.int64]

# Recorded in run metadata; changing it changes every stored trace.
GENERATOR_ALGORITHM = "PCG64"

SEARCH_LOWER = -5.0
SEARCH_UPPER = 5.0


def as_vector(values: ArrayLike, *, name: str = "vector") -> FloatArray:
    """Convert to a 1-d float64 array, rejecting NaN/Inf."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ContractViolationException(f"{name} must be 1-d, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ContractViolationException(f"{name} contains non-finite values: {v}")
    return v


def as_matrix(values: ArrayLike, *, name: str = "matrix") -> FloatArray:
    """Convert to a 2-d float64 array (rows are vectors), rejecting NaN/Inf."""
    m = np.asarray(values, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise ContractViolationException(f"{name} must be 2-d, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ContractViolationException(f"{name} contains non-finite values")
    return m


def _check_same_length(a: FloatArray, b: FloatArray) -> None:
    if a.shape != b.shape:
        raise ContractViolationException(
            f"Objective vectors differ in length: {a.shape[0]} vs {b.shape[0]}"
        )


def dominates(a: ArrayLike, b: ArrayLike) -> bool:
    """True iff ``a`` is no worse than ``b`` everywhere and strictly better somewhere.

    Exact floating-point comparison; there is no epsilon."""
    va = as_vector(a, name="a")
    vb = as_vector(b, name="b")
    _check_same_length(va, vb)
    return bool(np.all(va <= vb) and np.any(va < vb))


def weakly_dominates(a: ArrayLike, b: ArrayLike) -> bool:
    """True iff ``a`` is no worse than ``b`` in every objective."""
    va = as_vector(a, name="a")
    vb = as_vector(b, name="b")
    _check_same_length(va, vb)
    return bool(np.all(va <= vb))


def dominance_matrix(F: FloatArray) -> NDArray[np.bool_]:
    """``D[i, j]`` is True iff row ``i`` of ``F`` dominates row ``j``."""
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    return le & lt


@dataclass(slots=True, frozen=True)
class Bounds:
    lower: FloatArray
    upper: FloatArray

    def __post_init__(self) -> None:
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ContractViolationException("Bounds must be two 1-d arrays of equal length")
        if not np.all(self.lower < self.upper):
            raise ContractViolationException("Bounds require lower[j] < upper[j] for all j")

    @classmethod
    def box(cls, n: int, low: float = SEARCH_LOWER, high: float = SEARCH_UPPER) -> Self:
        return cls(np.full(n, low, dtype=np.float64), np.full(n, high, dtype=np.float64))

    @property
    def n(self) -> int:
        return int(self.lower.shape[0])

    @property
    def width(self) -> FloatArray:
        return self.upper - self.lower

    def repair(self, x: FloatArray) -> FloatArray:
        """Clamp every variable to the bound it violates. Works on vectors and row matrices."""
        return np.clip(x, self.lower, self.upper)

    def contains(self, x: ArrayLike) -> bool:
        v = np.asarray(x, dtype=np.float64)
        return bool(np.all(v >= self.lower) and np.all(v <= self.upper))


@dataclass(slots=True, frozen=True)
class Individual:
    x: FloatArray
    f: FloatArray
    eval_id: int


@dataclass(slots=True, frozen=True)
class Population:
    """Population members as parallel arrays; index ``i`` identifies a member for
    the duration of one iteration."""

    X: FloatArray
    F: FloatArray
    eval_ids: IntArray

    def __post_init__(self) -> None:
        if not (self.X.shape[0] == self.F.shape[0] == self.eval_ids.shape[0]):
            raise ContractViolationException(
                f"Population arrays disagree in size: {self.X.shape[0]}, {self.F.shape[0]}, {self.eval_ids.shape[0]}"
            )

    @classmethod
    def fromIndividuals(cls, members: Sequence[Individual]) -> Self:
        if not members:
            raise ContractViolationException("A population needs at least one member")
        return cls(
            np.vstack([m.x for m in members]),
            np.vstack([m.f for m in members]),
            np.asarray([m.eval_id for m in members], dtype=np.int64),
        )

    @property
    def capacity(self) -> int:
        return int(self.X.shape[0])

    @property
    def members(self) -> list[Individual]:
        return list(self)

    def __len__(self) -> int:
        return self.capacity

    def __getitem__(self, index: int) -> Individual:
        return Individual(self.X[index], self.F[index], int(self.eval_ids[index]))

    def __iter__(self) -> Iterator[Individual]:
        return (self[i] for i in range(self.capacity))

    def subset(self, indices: ArrayLike) -> Population:
        idx = np.asarray(indices, dtype=np.int64)
        return Population(self.X[idx], self.F[idx], self.eval_ids[idx])

    def without(self, indices: ArrayLike) -> Population:
        keep = np.ones(self.capacity, dtype=bool)
        keep[np.asarray(indices, dtype=np.int64)] = False
        return self.subset(np.flatnonzero(keep))

    def concat(self, other: Population) -> Population:
        return Population(
            np.vstack([self.X, other.X]),
            np.vstack([self.F, other.F]),
            np.concatenate([self.eval_ids, other.eval_ids]),
        )


class RandomSource:
    """Single-owner seeded random stream. Equal seeds give identical draws."""

    def __init__(self, seed: int) -> None:
        if seed < 0 or seed >= 2**64:
            raise ContractViolationException(f"Seed must be a 64-bit unsigned integer, got {seed}")
        self._seed: int = int(seed)
        self.generator: np.random.Generator = np.random.Generator(np.random.PCG64(self._seed))

    def __repr__(self) -> str:
        return f"RandomSource(seed={self._seed}, algorithm={GENERATOR_ALGORITHM})"

    @property
    def seed(self) -> int:
        return self._seed

    def random(self, size: Optional[int | tuple[int, ...]] = None) -> FloatArray:
        """Uniform reals on [0, 1)."""
        return self.generator.random(size)

    def uniform(
        self,
        low: ArrayLike,
        high: ArrayLike,
        size: Optional[int | tuple[int, ...]] = None,
    ) -> FloatArray:
        return self.generator.uniform(low, high, size)

    def normal(
        self, scale: float = 1.0, size: Optional[int | tuple[int, ...]] = None
    ) -> FloatArray:
        return self.generator.normal(0.0, scale, size)

    def sample_without_replacement(self, population_size: int, k: int) -> IntArray:
        """``k`` distinct indices from ``range(population_size)``, uniformly."""
        if not 0 <= k <= population_size:
            raise ContractViolationException(
                f"Cannot draw {k} distinct indices out of {population_size}"
            )
        return self.generator.choice(population_size, size=k, replace=False).astype(np.int64)

    def integers(self, low: int, high: int, size: Optional[int] = None) -> IntArray:
        """Uniform integers on [low, high)."""
        return self.generator.integers(low, high, size, dtype=np.int64)
