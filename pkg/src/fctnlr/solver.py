"""Alternating proximal minimization for network completion.

Objective over the dense tensor X and the network factors {A_k}:

    f(X, {A_k}) = 1/2 ||X - compose({A_k})||_F^2
                  + sum_k lam_k/2 tr(A_k_(k)^T L_k A_k_(k))

subject to X agreeing with the observed entries.  One iteration sweeps the
factors in the current visiting order (each solve is exact and proximally
damped by rho), then refreshes X by blending the composed tensor with the
previous iterate off the observed set and restoring the observations exactly.

The baseline variant rebuilds every partial network from scratch and composes
the full tensor by the whole chain; the accelerated variant shares prefix and
suffix partial contractions through a :class:`~fctnlr.network.ReuseCache`,
composes the full tensor from the partial network of the factor updated last,
and (by default) draws a fresh random visiting order every sweep.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .laplacian import CirculantLaplacian
from .network import (
    FctnFactors,
    FctnRank,
    ReuseCache,
    _compose_except_cached_labeled,
    _compose_from_partial_view,
    _solve_unfold_from_labels,
    compose,
    compose_except,
    property1_unfold,
    shuffle_order,
)
from .sylvester import FactorSubproblem, NumericalFailure, solve_factor
from .tensor import FLOPS, gunfold, mode_fold, mode_unfold

__all__ = [
    "IterationRecord",
    "Observation",
    "SolverConfig",
    "SolverResult",
    "extrapolate",
    "increase_rank",
    "objective",
    "run",
    "update_x",
]

_ALGORITHMS = ("fctnlr", "afctnlr")
_RANK_POLICIES = ("fixed", "threshold")


# ---------- problem data ---------- #


@dataclass
class Observation:
    """Observed entries of a tensor: values where mask is True, zeros elsewhere."""

    values: np.ndarray
    mask: np.ndarray
    _flat: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.mask = np.asfortranarray(np.asarray(self.mask, dtype=bool))
        if self.values.shape != self.mask.shape:
            raise ValueError("values and mask shapes differ")
        if self.values.ndim < 2:
            raise ValueError("need a tensor of order >= 2")
        if not self.mask.any():
            raise ValueError("mask has no observed entry")
        self.values = np.asfortranarray(np.where(self.mask, self.values, 0.0))

    @classmethod
    def from_dense(cls, dense: np.ndarray, mask: np.ndarray) -> "Observation":
        return cls(values=np.asarray(dense), mask=mask)

    @property
    def dims(self) -> tuple:
        return self.values.shape

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def flat_index(self) -> np.ndarray:
        """First-index-fastest linear positions of the observed entries."""
        if self._flat is None:
            self._flat = np.flatnonzero(self.mask.ravel(order="K"))
        return self._flat


def _per_mode(value, n: int, name: str) -> tuple:
    if np.isscalar(value):
        return (float(value),) * n
    seq = tuple(float(v) for v in value)
    if len(seq) != n:
        raise ValueError(f"{name} needs 1 or {n} values, got {len(seq)}")
    return seq


@dataclass
class SolverConfig:
    lam: object = 0.35
    delta: object = 0.5
    rho: float = 0.1
    eps: float = 1e-4
    max_iters: int = 500
    max_rank: object = 2
    initial_rank: object = None
    rank_policy: str = "threshold"
    rank_tau: float | None = None
    grow_noise: float = 1e-2
    algorithm: str = "fctnlr"
    laplacian_sign: str = "positive-definite"
    extrapolation: tuple | None = None
    shuffle: bool = True
    seed: int = 0
    cache_budget: int = 1 << 30

    def __post_init__(self):
        if self.rho <= 0.0:
            raise ValueError("rho must be > 0")
        if self.eps < 0.0:
            raise ValueError("eps must be >= 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.algorithm not in _ALGORITHMS:
            raise ValueError(f"algorithm must be one of {_ALGORITHMS}")
        if self.rank_policy not in _RANK_POLICIES:
            raise ValueError(f"rank_policy must be one of {_RANK_POLICIES}")
        if self.extrapolation is not None:
            alpha, beta = self.extrapolation
            if not 0.0 < alpha < 1.0:
                raise ValueError("extrapolation weight alpha must lie in (0, 1)")
            if not 0.2 < beta < 0.8:
                raise ValueError("old-iterate shrink beta must lie in (0.2, 0.8)")
            self.extrapolation = (float(alpha), float(beta))
        if self.grow_noise < 0.0:
            raise ValueError("grow_noise must be >= 0")

    def tau(self) -> float:
        return 10.0 * self.eps if self.rank_tau is None else float(self.rank_tau)


@dataclass
class IterationRecord:
    """One sweep's bookkeeping.

    ``step_sq`` is the summed squared movement of every block updated this
    iteration (all factors and X), the quantity damped by rho.  ``rank`` is
    the table in force during the sweep; ``rank_grown`` marks that the table
    was enlarged after this iteration's X update, so objective comparisons
    across that boundary are against the post-growth value, not this one.
    ``x_norm`` and ``factor_norm`` record the iterate magnitudes (the latter
    the largest factor Frobenius norm) for boundedness diagnostics.
    """

    iteration: int
    objective: float
    rel_change: float
    wall_ms: float
    flops: int
    cache_hits: int
    rank: tuple
    mk_flops: int
    compose_flops: int
    step_sq: float
    x_norm: float = math.nan
    factor_norm: float = math.nan
    rank_grown: bool = False


@dataclass
class SolverResult:
    x: np.ndarray
    factors: FctnFactors
    trace: list = field(default_factory=list)
    converged: bool = False
    initial_objective: float = math.nan

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def objective(self) -> float:
        return self.trace[-1].objective if self.trace else self.initial_objective


# ---------- objective and block updates ---------- #


def _sq(a: np.ndarray) -> float:
    """Squared Frobenius norm via a flat dot product (no layout copies for
    arrays contiguous in any order)."""
    flat = a.ravel(order="K")
    return float(np.dot(flat, flat))


def objective(x, f: FctnFactors, laps, lams, obs: Observation | None = None, composed=None) -> float:
    """f(X, {A_k}); pass ``composed`` to reuse an already composed network.

    When ``obs`` is given, X must agree with the observed entries exactly
    (the solver maintains that invariant; violating it is a usage error).
    """
    x = np.asarray(x, dtype=np.float64)
    if obs is not None and not np.array_equal(x[obs.mask], obs.values[obs.mask]):
        raise ValueError("x disagrees with the observed entries")
    if composed is None:
        composed = compose(f)
    data = 0.5 * _sq(x - composed)
    reg = 0.0
    for k in range(f.n):
        reg += 0.5 * lams[k] * laps[k].trace_penalty(mode_unfold(f.factor(k), k))
    return data + reg


def update_x(composed, x_prev, obs: Observation, rho: float) -> np.ndarray:
    """Proximally damped refresh: off the observed set average the composed
    network with the previous iterate, on it restore the observations bit for
    bit."""
    out = np.empty(x_prev.shape, dtype=np.float64, order="F")
    np.multiply(x_prev, rho, out=out)
    out += composed
    out /= 1.0 + rho
    fi = obs.flat_index
    out.ravel(order="K")[fi] = obs.values.ravel(order="K")[fi]
    return out


def extrapolate(a_new, a_old, alpha: float, beta: float) -> np.ndarray:
    """Asymmetric momentum: push past the fresh iterate by alpha times the
    step measured against a beta-shrunk old iterate."""
    return a_new + alpha * (a_new - beta * a_old)


def increase_rank(f: FctnFactors, cap: FctnRank, rng: np.random.Generator, noise_scale: float = 1e-2):
    """Grow every below-cap bond by one: zero-padded embedding plus white
    noise on the new entries, scaled per factor by ``noise_scale`` times the
    RMS of the old entries.  Returns the grown factors; with zero noise the
    composed tensor is unchanged."""
    grown, noises = _grow_parts(f, cap, rng)
    out = []
    for k in range(f.n):
        rms = float(np.sqrt(np.mean(f.factor(k) ** 2)))
        out.append(grown.factor(k) + noise_scale * rms * noises[k])
    res = FctnFactors(out)
    res.versions = list(grown.versions)
    return res


def _grow_parts(f: FctnFactors, cap: FctnRank, rng: np.random.Generator):
    """Zero-padded embedding plus unit noise masks for the new entries."""
    new_rank = f.rank.increment_below(cap)
    grown = f.grow(new_rank)
    noises = []
    for k in range(f.n):
        noise = rng.standard_normal(grown.factor(k).shape)
        old_block = tuple(slice(0, s) for s in f.factor(k).shape)
        noise[old_block] = 0.0
        noises.append(noise)
    return grown, noises


# ---------- main loop ---------- #


def run(obs: Observation, cfg: SolverConfig) -> SolverResult:
    n = obs.values.ndim
    dims = obs.dims
    lams = _per_mode(cfg.lam, n, "lam")
    deltas = _per_mode(cfg.delta, n, "delta")
    if any(v < 0 for v in lams):
        raise ValueError("lam must be >= 0")
    laps = [CirculantLaplacian(dims[k], deltas[k], cfg.laplacian_sign) for k in range(n)]

    cap = FctnRank.from_spec(n, cfg.max_rank)
    rank = (
        FctnRank.from_spec(n, cfg.initial_rank)
        if cfg.initial_rank is not None
        else FctnRank.uniform(n, 1)
    )
    if any(a > b for a, b in zip(rank.entries, cap.entries)):
        raise ValueError("initial rank exceeds max_rank")

    rng = np.random.default_rng(cfg.seed)
    f = FctnFactors.random(dims, rank, rng)
    x = obs.values.copy(order="F")
    order = tuple(range(n))
    accelerated = cfg.algorithm == "afctnlr"
    cache = ReuseCache(cfg.cache_budget) if accelerated else None

    initial_objective = objective(x, f, laps, lams)
    result = SolverResult(x=x, factors=f, initial_objective=initial_objective)
    if not math.isfinite(initial_objective):
        raise NumericalFailure("initial objective is not finite")

    for it in range(1, cfg.max_iters + 1):
        t0 = time.perf_counter()
        flops0 = FLOPS.total
        mk0 = FLOPS.labeled("mk")
        comp0 = FLOPS.labeled("compose")
        hits0 = cache.hits if cache is not None else 0
        step_sq = 0.0
        partial_last = None

        for k in order:
            if accelerated:
                parr, plab = _compose_except_cached_labeled(f, k, order, cache)
                m, phys = _solve_unfold_from_labels(parr, plab, k, n)
                x_k = gunfold(x, [k] + phys, 1)
            else:
                partial = compose_except(f, k)
                m = property1_unfold(partial, k, n)
                x_k = mode_unfold(x, k)
            a_prev = mode_unfold(f.factor(k), k)
            prob = FactorSubproblem(
                x_k=x_k, m=m, a_prev=a_prev, lap=laps[k], lam=lams[k], rho=cfg.rho
            )
            a_new = solve_factor(prob)
            if cfg.extrapolation is not None:
                a_new = extrapolate(a_new, a_prev, *cfg.extrapolation)
            step_sq += _sq(a_new - a_prev)
            f.replace(k, mode_fold(a_new, k, f.factor(k).shape))
            if accelerated and k == order[-1]:
                partial_last = (parr, plab)

        if accelerated:
            k_last = order[-1]
            composed = _compose_from_partial_view(
                partial_last[0], partial_last[1], f.factor(k_last), k_last
            )
        else:
            composed = compose(f)
        x_new = update_x(composed, x, obs, cfg.rho)

        diff = math.sqrt(_sq(x_new - x))
        base = math.sqrt(_sq(x))
        if diff == 0.0:
            rel = 0.0
        elif base == 0.0:
            rel = math.inf
        else:
            rel = diff / base
        step_sq += diff * diff

        obj = objective(x_new, f, laps, lams, composed=composed)
        if not math.isfinite(obj):
            raise NumericalFailure(f"objective diverged at iteration {it}")
        x = x_new

        rank_during = tuple(f.rank.entries)
        grown = False
        can_grow = cfg.rank_policy == "threshold" and f.rank.any_below(cap)
        if can_grow and rel < cfg.tau():
            f = _grow_with_continuity(f, cap, rng, laps, lams, x, cfg.grow_noise, obj)
            if cache is not None:
                cache = ReuseCache(cfg.cache_budget)
            grown = True

        result.trace.append(
            IterationRecord(
                iteration=it,
                objective=obj,
                rel_change=rel,
                wall_ms=(time.perf_counter() - t0) * 1e3,
                flops=FLOPS.total - flops0,
                cache_hits=(cache.hits if cache is not None else 0) - hits0,
                rank=rank_during,
                mk_flops=FLOPS.labeled("mk") - mk0,
                compose_flops=FLOPS.labeled("compose") - comp0,
                step_sq=step_sq,
                x_norm=math.sqrt(_sq(x)),
                factor_norm=max(
                    math.sqrt(_sq(f.factor(k))) for k in range(n)
                ),
                rank_grown=grown,
            )
        )

        if not grown and rel <= cfg.eps:
            result.converged = True
            break

        if accelerated and cfg.shuffle:
            order = shuffle_order(order, rng)

    result.x = x
    result.factors = f
    return result


def _grow_with_continuity(f, cap, rng, laps, lams, x, scale, pre_objective):
    """Enlarge the rank table; retry with smaller noise until the objective
    stays within 5% of its pre-growth value (zero noise restores it exactly)."""
    grown, noises = _grow_parts(f, cap, rng)
    scales = [scale, scale / 10.0, 0.0]
    for s in scales:
        out = []
        for k in range(f.n):
            rms = float(np.sqrt(np.mean(f.factor(k) ** 2)))
            out.append(grown.factor(k) + s * rms * noises[k])
        cand = FctnFactors(out)
        cand.versions = list(grown.versions)
        if s == 0.0:
            return cand
        post = objective(x, cand, laps, lams)
        if math.isfinite(post) and post <= 1.05 * pre_objective + 1e-12:
            return cand
    return cand
