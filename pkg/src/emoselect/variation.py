"""
Real-coded crossover operators (SBX with polynomial mutation, BLX-α, PCX, SPX,
REX) and the brood generation step of the simple EMOA: λ children from one
fixed parent set.

Every operator accepts optional ``bounds``; when given, children are clamped
to the violated bound per variable. The single-child forms return a vector,
``size=`` returns one child per row.
"""

from __future__ import annotations

import logging
import math
from enum import StrEnum
from typing import Optional, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from emoselect.core import Bounds, FloatArray, IntArray, Population, RandomSource
from emoselect.exceptions import ConfigurationException, ContractViolationException
from emoselect.problems import BiObjectiveProblem

L = logging.getLogger(__name__)

DEGENERATE_NORM = 1e-12


class CrossoverMethod(StrEnum):
    SBX = "SBX"
    BLX = "BLX"
    PCX = "PCX"
    SPX = "SPX"
    REX = "REX"

    @property
    def is_two_parent(self) -> bool:
        return self in (CrossoverMethod.SBX, CrossoverMethod.BLX)


class CrossoverConfig(BaseModel):
    """Operator parameters. ``None`` means "derive from n" (see ``resolved``)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    method: CrossoverMethod
    eta_c: float = Field(20.0, gt=0)
    eta_m: float = Field(20.0, gt=0)
    p_c: float = Field(0.9, ge=0, le=1)
    p_m: Optional[float] = Field(None, ge=0, le=1)
    alpha: float = Field(0.5, ge=0)
    sigma_zeta_sq: float = Field(0.1, ge=0)
    sigma_eta_sq: float = Field(0.1, ge=0)
    epsilon: Optional[float] = Field(None, gt=0)
    sigma_sq: Optional[float] = Field(None, ge=0)
    k: Optional[int] = Field(None, ge=2)

    @model_validator(mode="after")
    def _two_parent_operators_take_two(self) -> Self:
        if self.method.is_two_parent and self.k not in (None, 2):
            raise ValueError(f"{self.method} uses exactly 2 parents, got k={self.k}")
        return self

    @classmethod
    def forDimension(cls, method: CrossoverMethod | str, n: int, **overrides: float) -> Self:
        return cls(method=CrossoverMethod(method), **overrides).resolved(n)

    @property
    def is_resolved(self) -> bool:
        return None not in (self.p_m, self.epsilon, self.sigma_sq, self.k)

    def resolved(self, n: int) -> Self:
        """Fill every dimension-dependent default: k = 2 for SBX/BLX and n+1
        otherwise, p_m = 1/n, ε = √(n+2), σ² = 1/(k−1)."""
        if self.is_resolved:
            return self
        k = self.k if self.k is not None else (2 if self.method.is_two_parent else n + 1)
        return self.model_copy(
            update={
                "k": k,
                "p_m": self.p_m if self.p_m is not None else 1.0 / n,
                "epsilon": self.epsilon if self.epsilon is not None else math.sqrt(n + 2),
                "sigma_sq": self.sigma_sq if self.sigma_sq is not None else 1.0 / (k - 1),
            }
        )


class OperatorParameters(BaseModel):
    """Campaign-wide overrides for the operator constants; unset fields keep
    the CrossoverConfig defaults. The parent count is not overridable."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    eta_c: Optional[float] = Field(None, gt=0)
    eta_m: Optional[float] = Field(None, gt=0)
    p_c: Optional[float] = Field(None, ge=0, le=1)
    p_m: Optional[float] = Field(None, ge=0, le=1)
    alpha: Optional[float] = Field(None, ge=0)
    sigma_zeta_sq: Optional[float] = Field(None, ge=0)
    sigma_eta_sq: Optional[float] = Field(None, ge=0)
    epsilon: Optional[float] = Field(None, gt=0)
    sigma_sq: Optional[float] = Field(None, ge=0)

    def overrides(self) -> dict[str, float]:
        return self.model_dump(exclude_none=True)

    def crossoverConfig(self, method: CrossoverMethod | str) -> CrossoverConfig:
        return CrossoverConfig(method=CrossoverMethod(method), **self.overrides())


def _repair(children: FloatArray, bounds: Optional[Bounds]) -> FloatArray:
    return children if bounds is None else bounds.repair(children)


def _single_or_batch(children: FloatArray, size: Optional[int]) -> FloatArray:
    return children[0] if size is None else children


def _parent_matrix(parents: FloatArray, cfg: CrossoverConfig) -> tuple[FloatArray, CrossoverConfig]:
    P = np.asarray(parents, dtype=np.float64)
    if P.ndim != 2:
        raise ContractViolationException(f"Parents must be a k×n matrix, got shape {P.shape}")
    cfg = cfg.resolved(P.shape[1])
    if P.shape[0] != cfg.k:
        raise ContractViolationException(
            f"{cfg.method} configured for k={cfg.k} parents, got {P.shape[0]}"
        )
    return P, cfg


def sbx_spread_factor(u: FloatArray | float, eta_c: float) -> FloatArray:
    """β for uniform draws ``u``; β(0.5) = 1."""
    u = np.asarray(u, dtype=np.float64)
    exponent = 1.0 / (eta_c + 1.0)
    with np.errstate(divide="ignore"):
        return np.where(
            u <= 0.5,
            (2.0 * u) ** exponent,
            (1.0 / (2.0 * (1.0 - u))) ** exponent,
        )


def sbx_batch(
    p1: FloatArray, p2: FloatArray, cfg: CrossoverConfig, rng: RandomSource, pairs: int
) -> tuple[FloatArray, FloatArray]:
    """``pairs`` SBX offspring pairs, one per row. ``p1``/``p2`` may be single
    vectors or one parent per row."""
    n = p1.shape[-1]
    apply = rng.random((pairs, n)) < cfg.p_c
    beta = sbx_spread_factor(rng.random((pairs, n)), cfg.eta_c)
    c1 = 0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2)
    c2 = 0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2)
    return np.where(apply, c1, p1), np.where(apply, c2, p2)


def sbx_pair(
    p1: FloatArray,
    p2: FloatArray,
    cfg: CrossoverConfig,
    rng: RandomSource,
    bounds: Optional[Bounds] = None,
) -> tuple[FloatArray, FloatArray]:
    """Two children by simulated binary crossover, variable-wise with rate p_c."""
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    if p1.shape != p2.shape:
        raise ContractViolationException("SBX parents differ in length")
    c1, c2 = sbx_batch(p1, p2, cfg.resolved(p1.shape[0]), rng, 1)
    return _repair(c1[0], bounds), _repair(c2[0], bounds)


def polynomial_mutation(
    x: FloatArray, bounds: Bounds, cfg: CrossoverConfig, rng: RandomSource
) -> FloatArray:
    """Bounded polynomial mutation with index η_m, each variable with probability p_m.
    Accepts one vector or one vector per row."""
    X = np.asarray(x, dtype=np.float64)
    cfg = cfg.resolved(X.shape[-1])
    assert cfg.p_m is not None
    lower, upper = bounds.lower, bounds.upper
    width = upper - lower

    mutate = rng.random(X.shape) < cfg.p_m
    u = rng.random(X.shape)
    exponent = 1.0 / (cfg.eta_m + 1.0)
    delta_l = (X - lower) / width
    delta_r = (upper - X) / width

    low_side = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - delta_l) ** (cfg.eta_m + 1.0)
    high_side = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - delta_r) ** (cfg.eta_m + 1.0)
    with np.errstate(invalid="ignore"):
        delta_q = np.where(
            u < 0.5,
            np.maximum(low_side, 0.0) ** exponent - 1.0,
            1.0 - np.maximum(high_side, 0.0) ** exponent,
        )
    mutated = np.where(mutate, X + delta_q * width, X)
    return bounds.repair(mutated)


def blx_alpha(
    p1: FloatArray,
    p2: FloatArray,
    cfg: CrossoverConfig,
    rng: RandomSource,
    bounds: Optional[Bounds] = None,
    size: Optional[int] = None,
) -> FloatArray:
    """Each variable uniform on [min − α·d, max + α·d], d = |p1_j − p2_j|."""
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    spread = cfg.alpha * np.abs(p1 - p2)
    low = np.minimum(p1, p2) - spread
    high = np.maximum(p1, p2) + spread
    u = rng.random((1 if size is None else size, p1.shape[0]))
    children = low + u * (high - low)
    return _single_or_batch(_repair(children, bounds), size)


def _pcx_children(
    P: FloatArray, centers: IntArray, cfg: CrossoverConfig, rng: RandomSource
) -> FloatArray:
    k, n = P.shape
    g = P.mean(axis=0)
    sigma_zeta = math.sqrt(cfg.sigma_zeta_sq)
    sigma_eta = math.sqrt(cfg.sigma_eta_sq)
    children = np.empty((centers.shape[0], n), dtype=np.float64)

    for p in range(k):
        rows = np.flatnonzero(centers == p)
        if rows.size == 0:
            continue
        others = np.delete(P, p, axis=0) - g
        d = P[p] - g
        d_norm = float(np.linalg.norm(d))

        if d_norm < DEGENERATE_NORM:
            spread = float(np.mean(np.linalg.norm(others, axis=1)))
            if spread < DEGENERATE_NORM:
                children[rows] = P[p]
            else:
                children[rows] = P[p] + rng.normal(sigma_eta * spread, (rows.size, n))
            continue

        e = d / d_norm
        perpendicular = others - np.outer(others @ e, e)
        d_bar = float(np.mean(np.linalg.norm(perpendicular, axis=1)))
        w_zeta = rng.normal(sigma_zeta, (rows.size, 1))
        eta = rng.normal(sigma_eta, (rows.size, n))
        # projecting an isotropic draw onto the complement of d equals summing
        # independent draws along an orthonormal basis of that complement
        eta -= np.outer(eta @ e, e)
        children[rows] = P[p] + w_zeta * d + d_bar * eta
    return children


def pcx(
    parents: FloatArray,
    index_of_center: int,
    cfg: CrossoverConfig,
    rng: RandomSource,
    bounds: Optional[Bounds] = None,
    size: Optional[int] = None,
) -> FloatArray:
    """Parent-centric crossover around ``parents[index_of_center]``."""
    P, cfg = _parent_matrix(parents, cfg)
    if not 0 <= index_of_center < P.shape[0]:
        raise ContractViolationException(
            f"index_of_center must be in [0, {P.shape[0]}), got {index_of_center}"
        )
    centers = np.full(1 if size is None else size, index_of_center, dtype=np.int64)
    return _single_or_batch(_repair(_pcx_children(P, centers, cfg, rng), bounds), size)


def spx(
    parents: FloatArray,
    cfg: CrossoverConfig,
    rng: RandomSource,
    bounds: Optional[Bounds] = None,
    size: Optional[int] = None,
) -> FloatArray:
    """Uniform sample of the simplex spanned by the parents, expanded by ε about
    their mean."""
    P, cfg = _parent_matrix(parents, cfg)
    assert cfg.epsilon is not None
    k = P.shape[0]
    count = 1 if size is None else size
    g = P.mean(axis=0)
    Y = g + cfg.epsilon * (P - g)

    # r_i = u^(1/i) for the i-th step of the recursion
    r = rng.random((count, k - 1)) ** (1.0 / np.arange(1, k))
    c = np.zeros((count, P.shape[1]), dtype=np.float64)
    for i in range(1, k):
        c = r[:, i - 1 : i] * (Y[i - 1] - Y[i] + c)
    return _single_or_batch(_repair(Y[k - 1] + c, bounds), size)


def rex(
    parents: FloatArray,
    cfg: CrossoverConfig,
    rng: RandomSource,
    bounds: Optional[Bounds] = None,
    size: Optional[int] = None,
) -> FloatArray:
    """Parent mean plus a N(0, σ²)-weighted sum of the parents' deviations."""
    P, cfg = _parent_matrix(parents, cfg)
    assert cfg.sigma_sq is not None
    g = P.mean(axis=0)
    xi = rng.normal(math.sqrt(cfg.sigma_sq), (1 if size is None else size, P.shape[0]))
    return _single_or_batch(_repair(g + xi @ (P - g), bounds), size)


def generate_children(
    R: Population,
    lam: int,
    cfg: CrossoverConfig,
    problem: BiObjectiveProblem,
    rng: RandomSource,
    first_eval_id: int,
) -> Population:
    """λ evaluated children, all from the same parent set ``R``.

    SBX runs λ/2 times and polynomial mutation is applied to both children of
    each pair. Evaluation ids run from ``first_eval_id`` upwards."""
    cfg = cfg.resolved(problem.n)
    if lam < 1:
        raise ConfigurationException(f"λ must be at least 1, got {lam}", key="lambda")
    P, cfg = _parent_matrix(R.X, cfg)
    bounds = problem.bounds

    match cfg.method:
        case CrossoverMethod.SBX:
            if lam % 2:
                raise ConfigurationException(f"SBX needs an even λ, got {lam}", key="lambda")
            c1, c2 = sbx_batch(P[0], P[1], cfg, rng, lam // 2)
            pairs = np.empty((lam, problem.n), dtype=np.float64)
            pairs[0::2] = bounds.repair(c1)
            pairs[1::2] = bounds.repair(c2)
            X = polynomial_mutation(pairs, bounds, cfg, rng)
        case CrossoverMethod.BLX:
            X = blx_alpha(P[0], P[1], cfg, rng, bounds, size=lam)
        case CrossoverMethod.PCX:
            centers = np.arange(lam, dtype=np.int64) % P.shape[0]
            X = bounds.repair(_pcx_children(P, centers, cfg, rng))
        case CrossoverMethod.SPX:
            X = spx(P, cfg, rng, bounds, size=lam)
        case CrossoverMethod.REX:
            X = rex(P, cfg, rng, bounds, size=lam)

    F = problem.evaluate(X)
    eval_ids = np.arange(first_eval_id, first_eval_id + lam, dtype=np.int64)
    return Population(X, F, eval_ids)
