"""Permutation-ordered sequential grid search over the six boosting
hyperparameters, with a neighborhood refinement pass.

Every ordering of the six parameters (720 at full budget, a seeded subset
otherwise) is swept coordinate-wise starting from the defaults: each
parameter's grid is scanned with the others fixed at their incumbents and
the best value (validation RMSE, destandardized where applicable) is kept.
The winning ordering is then refined by scanning a half-step neighborhood
around each incumbent value, in the same order. RMSE values are memoized
by exact hyperparameter vector.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import gbt
from .dataprep import DatasetSplit, to_matrix
from .gbt import PARAM_NAMES, HyperParams


class HpoError(Exception):
    pass


class EmptyTargets(HpoError):
    pass


class BudgetZero(HpoError):
    pass


@dataclass(frozen=True)
class ParamGrid:
    values: dict[str, tuple]

    def __getitem__(self, name: str) -> tuple:
        return self.values[name]

    @property
    def total_size(self) -> int:
        return sum(len(v) for v in self.values.values())


def build_grids(targets) -> ParamGrid:
    """Candidate grids: fixed lists for five parameters, and 11 empirical
    quantiles (linear interpolation, deduplicated) of the training targets
    for base_score."""
    t = np.asarray(targets, dtype=float)
    if t.size == 0:
        raise EmptyTargets("no training targets")
    quantiles = np.quantile(t, [i / 10 for i in range(11)], method="linear")
    base_score: list[float] = []
    for q in quantiles:
        q = float(q)
        if not base_score or q != base_score[-1]:
            base_score.append(q)
    return ParamGrid({
        "nrounds": tuple(range(1, 202, 20)),
        "base_score": tuple(base_score),
        "eta": tuple(i / 10 for i in range(11)),
        "gamma": tuple(float(i) for i in range(11)),
        "max_depth": (1, 4, 7, 10, 13),
        "subsample": tuple(round(0.0001 + i / 10, 4) for i in range(10)),
    })


def default_params(train_targets) -> HyperParams:
    """The untuned configuration: library defaults plus the target mean as
    the initial prediction."""
    t = np.asarray(train_targets, dtype=float)
    if t.size == 0:
        raise EmptyTargets("no training targets")
    return HyperParams(
        nrounds=100,
        base_score=float(t.mean()),
        eta=0.3,
        gamma=0.0,
        max_depth=6,
        subsample=1.0,
    )


@dataclass
class HpoProblem:
    """Immutable training/validation data for one model.

    ``to_real`` maps model-space validation predictions to real indicator
    values (inverse z-score); ``val_actual`` is already in real space.
    """

    train_X: np.ndarray
    train_y: np.ndarray
    val_X: np.ndarray
    val_actual: np.ndarray
    feature_names: list[str]
    to_real: Callable[[np.ndarray], np.ndarray] | None = None
    lam: float = 1.0


def problem_from_split(split: DatasetSplit) -> HpoProblem:
    if not split.validation:
        raise HpoError(f"split {split.group}/{split.kind.value} has no validation rows")
    train_X, train_y = to_matrix(split.train, split.feature_names)
    val_X, val_y = to_matrix(split.validation, split.feature_names)
    if split.standardizer is None:
        return HpoProblem(train_X, train_y, val_X, val_y, list(split.feature_names))
    from .dataprep import destandardize

    means = np.empty(len(split.validation))
    sds = np.empty(len(split.validation))
    for i, row in enumerate(split.validation):
        mean, sd = split.standardizer.resolve(row.product_id, row.store_id, row.group)
        means[i] = mean
        sds[i] = sd
    val_actual = val_y * sds + means

    def to_real(pred: np.ndarray) -> np.ndarray:
        return pred * sds + means

    return HpoProblem(train_X, train_y, val_X, val_actual, list(split.feature_names), to_real)


class Evaluator:
    """Trains and scores configurations, memoizing by exact parameter
    vector. Every evaluation (hit or miss) is appended to the log."""

    def __init__(self, problem: HpoProblem, seed: int, memoize: bool = True):
        self.problem = problem
        self.seed = seed
        self.memoize = memoize
        self.cache: dict[tuple, float] = {}
        self.log: list[tuple[HyperParams, float]] = []
        self.evaluations_total = 0
        self.trainings_total = 0
        self.cache_hits = 0
        self._binned = gbt.bin_matrix(problem.train_X)

    def _rmse(self, pred: np.ndarray) -> float:
        real = pred if self.problem.to_real is None else self.problem.to_real(pred)
        return float(math.sqrt(np.mean((real - self.problem.val_actual) ** 2)))

    def _train(self, hp: HyperParams) -> gbt.GbtModel:
        self.trainings_total += 1
        return gbt.train(
            self.problem.train_X,
            self.problem.train_y,
            self.problem.feature_names,
            hp,
            self.seed,
            lam=self.problem.lam,
            binned=self._binned,
        )

    def evaluate(self, hp: HyperParams) -> float:
        self.evaluations_total += 1
        key = hp.key()
        if self.memoize and key in self.cache:
            self.cache_hits += 1
            rmse = self.cache[key]
        else:
            model = self._train(hp)
            rmse = self._rmse(gbt.predict(model, self.problem.val_X))
            if self.memoize:
                self.cache[key] = rmse
        self.log.append((hp, rmse))
        return rmse

    def scan_nrounds(self, hp: HyperParams, candidates) -> list[float]:
        """Evaluate nrounds candidates with the other parameters fixed.

        Boosting models are prefix-nested in the round count for a fixed
        seed, so one training at the largest uncached candidate serves all
        smaller ones exactly.
        """
        missing = [
            int(v) for v in candidates
            if not (self.memoize and hp.replace(nrounds=int(v)).key() in self.cache)
        ]
        model = None
        if missing:
            model = self._train(hp.replace(nrounds=max(missing)))
        rmses = []
        for v in candidates:
            self.evaluations_total += 1
            key = hp.replace(nrounds=int(v)).key()
            if self.memoize and key in self.cache:
                self.cache_hits += 1
                rmse = self.cache[key]
            else:
                rmse = self._rmse(
                    gbt.predict(model, self.problem.val_X, n_trees=int(v))
                )
                if self.memoize:
                    self.cache[key] = rmse
            self.log.append((hp.replace(nrounds=int(v)), rmse))
            rmses.append(rmse)
        return rmses


def _argmin_first(values: list[float]) -> int:
    best = 0
    for i in range(1, len(values)):
        if values[i] < values[best]:
            best = i
    return best


def _coerce(name: str, value) -> float | int:
    if name in ("nrounds", "max_depth"):
        return int(round(value))
    return float(value)


def sequential_pass(
    order: tuple[str, ...],
    grids: ParamGrid,
    evaluator: Evaluator,
    start: HyperParams,
) -> tuple[HyperParams, float]:
    """One coordinate-descent sweep over the six parameters in ``order``;
    ties keep the earlier grid value."""
    if sorted(order) != sorted(PARAM_NAMES):
        raise HpoError(f"order must be a permutation of {PARAM_NAMES}, got {order}")
    incumbent = start
    rmse = math.inf
    for name in order:
        grid = grids[name]
        if name == "nrounds":
            rmses = evaluator.scan_nrounds(incumbent, grid)
        else:
            rmses = [
                evaluator.evaluate(incumbent.replace(**{name: _coerce(name, v)}))
                for v in grid
            ]
        i = _argmin_first(rmses)
        incumbent = incumbent.replace(**{name: _coerce(name, grid[i])})
        rmse = rmses[i]
    return incumbent, rmse


def _neighborhood(name: str, value, grids: ParamGrid) -> list:
    """Half-step local candidates {value-h, value, value+h}, clipped to the
    legal range; base_score uses half the gap to the adjacent quantiles."""
    if name == "nrounds":
        cands = [value - 10, value, value + 10]
        cands = [max(1, int(round(c))) for c in cands]
    elif name == "eta":
        cands = [min(1.0, max(0.0, c)) for c in (value - 0.05, value, value + 0.05)]
    elif name == "gamma":
        cands = [max(0.0, c) for c in (value - 0.5, value, value + 0.5)]
    elif name == "max_depth":
        cands = [max(1, int(round(c))) for c in (value - 1, value, value + 1)]
    elif name == "subsample":
        cands = [min(1.0, max(1e-4, c)) for c in (value - 0.05, value, value + 0.05)]
    else:  # base_score: half-gap to adjacent quantiles
        quantiles = sorted(grids["base_score"])
        below = [q for q in quantiles if q < value]
        above = [q for q in quantiles if q > value]
        cands = [value]
        if below:
            cands.insert(0, value - (value - below[-1]) / 2)
        if above:
            cands.append(value + (above[0] - value) / 2)
    out = []
    for c in cands:
        if c not in out:
            out.append(c)
    return out


def refinement_pass(
    order: tuple[str, ...],
    grids: ParamGrid,
    evaluator: Evaluator,
    start: HyperParams,
) -> tuple[HyperParams, float]:
    incumbent = start
    rmse = math.inf
    for name in order:
        cands = _neighborhood(name, getattr(start, name), grids)
        if name == "nrounds":
            rmses = evaluator.scan_nrounds(incumbent, cands)
        else:
            rmses = [
                evaluator.evaluate(incumbent.replace(**{name: _coerce(name, v)}))
                for v in cands
            ]
        i = _argmin_first(rmses)
        incumbent = incumbent.replace(**{name: _coerce(name, cands[i])})
        rmse = rmses[i]
    return incumbent, rmse


def all_orders() -> list[tuple[str, ...]]:
    return sorted(itertools.permutations(PARAM_NAMES))


@dataclass
class HpoConfig:
    permutation_budget: int = 720


@dataclass
class HpoResult:
    best_params: HyperParams
    best_permutation: tuple[str, ...]
    best_validation_rmse: float
    default_params: HyperParams
    default_rmse: float
    refined_rmse: float
    pass_results: list[tuple[tuple[str, ...], HyperParams, float]]
    log: list[tuple[HyperParams, float]] = field(repr=False)
    evaluations_total: int = 0
    trainings_total: int = 0
    cache_hits: int = 0


def select_orders(budget: int, seed: int) -> list[tuple[str, ...]]:
    orders = all_orders()
    if budget < 1:
        raise BudgetZero("permutation budget must be >= 1")
    if budget >= len(orders):
        return orders
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = sorted(rng.choice(len(orders), size=budget, replace=False).tolist())
    return [orders[i] for i in idx]


def optimize(
    problem: HpoProblem,
    seed: int,
    config: HpoConfig | None = None,
    grids: ParamGrid | None = None,
    memoize: bool = True,
) -> HpoResult:
    """Full search: one sequential pass per selected permutation, winner by
    lowest final RMSE (lexicographically earliest order on ties), then a
    neighborhood refinement in the winning order. The default configuration
    is always evaluated; the reported best is the argmin over the whole
    evaluation log, so the result is never worse than the defaults."""
    config = config or HpoConfig()
    if grids is None:
        grids = build_grids(problem.train_y)
    orders = select_orders(config.permutation_budget, seed)
    evaluator = Evaluator(problem, seed, memoize=memoize)
    defaults = default_params(problem.train_y)
    default_rmse = evaluator.evaluate(defaults)

    pass_results = []
    for order in orders:
        hp, rmse = sequential_pass(order, grids, evaluator, defaults)
        pass_results.append((order, hp, rmse))
    win_order, win_hp, win_rmse = min(pass_results, key=lambda r: (r[2], r[0]))
    _, refined_rmse = refinement_pass(win_order, grids, evaluator, win_hp)

    best_hp, best_rmse = min(evaluator.log, key=lambda e: e[1])
    return HpoResult(
        best_params=best_hp,
        best_permutation=win_order,
        best_validation_rmse=best_rmse,
        default_params=defaults,
        default_rmse=default_rmse,
        refined_rmse=refined_rmse,
        pass_results=pass_results,
        log=list(evaluator.log),
        evaluations_total=evaluator.evaluations_total,
        trainings_total=evaluator.trainings_total,
        cache_hits=evaluator.cache_hits,
    )
