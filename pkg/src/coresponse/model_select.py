"""Group-size selection by AIC sweep and l1-penalty tuning.

``sweep_k`` repeats the capped genetic search for every candidate group size
and scores each run's best group with an AIC built from the simple
regression of the functional variable on the group effect.  ``tune_mu``
picks the l1 penalty weight on an inner stratified split of the training
data.  All seeds derive from the config seed and the (k, repeat) or
(repeat, grid-index) coordinates, so sweeps are reproducible and safe to
parallelize.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .ga import GroupChromosome, OptimizerConfig, run_ga
from .utils import child_int, parallel_map, pearson

DEFAULT_K_RANGE = (2, 50)
DEFAULT_REPEATS = 10
#: candidate l1 penalty weights, strongest first
DEFAULT_MU_GRID = tuple(1.0 / d for d in range(30, 101, 10))

#: relative floor applied to the residual sum of squares (perfect-fit guard)
RSS_FLOOR = 1e-12

SWEEP_COLUMNS = ("k", "repeat", "aic", "r", "group_bits")


@dataclass(frozen=True)
class SweepRun:
    """One genetic-search run inside an AIC sweep."""

    k: int
    repeat: int
    aic: float
    pearson_r: float
    bits: np.ndarray


@dataclass(frozen=True)
class ModelSelectionResult:
    """Outcome of a size sweep and/or an l1-penalty grid search.

    ``per_k`` holds (k, per-repeat AICs, mean AIC) triples; ``per_mu`` holds
    (mu, mean validation r) pairs.  Each half may be empty when only the
    other selection was performed.
    """

    per_k: tuple = ()
    chosen_k: int | None = None
    per_mu: tuple = ()
    chosen_mu: float | None = None
    runs: tuple = ()

    def __post_init__(self):
        if self.per_k:
            best = min(self.per_k, key=lambda row: (row[2], row[0]))
            if self.chosen_k != best[0]:
                raise ValidationError(
                    "chosen_k must minimize mean AIC (ties toward smaller k)"
                )
        if self.per_mu:
            best = max(self.per_mu, key=lambda row: (row[1], row[0]))
            if self.chosen_mu != best[0]:
                raise ValidationError(
                    "chosen_mu must maximize mean validation r "
                    "(ties toward larger mu)"
                )


def aic_for_group(x, M: np.ndarray, y: np.ndarray, *, paper_literal: bool = False) -> float:
    """AIC of the regression y ~ intercept + slope * (M x).

    The group size plays the role of the parameter count: the default score
    is 2*size - 2*lnL with the Gaussian profile log-likelihood
    lnL = -(n/2) (ln(2*pi*RSS/n) + 1).  ``paper_literal`` switches to the
    alternative form -2*size - lnL, which rewards larger groups and is kept
    only for comparison.  RSS is floored at 1e-12 * n * var(y) so perfect
    fits stay finite.
    """
    bits = x.bits if isinstance(x, GroupChromosome) else GroupChromosome(np.asarray(x)).bits
    M = np.asarray(M, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if M.ndim != 2 or y.ndim != 1 or M.shape[0] != y.shape[0]:
        raise ValidationError("M must be n x p and y length n")
    if bits.shape[0] != M.shape[1]:
        raise ValidationError("chromosome length does not match taxon count")
    k = int(bits.sum())
    if k == 0:
        raise ValidationError("AIC undefined for an empty group")

    n = y.shape[0]
    s = M[:, np.flatnonzero(bits)].sum(axis=1)
    s0 = s - s.mean()
    y0 = y - y.mean()
    ss = float(s0 @ s0)
    yy = float(y0 @ y0)
    if ss <= 0.0:
        raise ValidationError("group effect has zero variance; AIC undefined")
    if yy <= 0.0:
        raise ValidationError("functional variable has zero variance")

    rss = yy - float(s0 @ y0) ** 2 / ss
    rss = max(rss, RSS_FLOOR * yy)
    lnl = -(n / 2.0) * (math.log(2.0 * math.pi * rss / n) + 1.0)
    if paper_literal:
        return -2.0 * k - lnl
    return 2.0 * k - 2.0 * lnl


def sweep_k(M: np.ndarray, y: np.ndarray, k_range=DEFAULT_K_RANGE,
            repeats: int = DEFAULT_REPEATS, cfg: OptimizerConfig | None = None,
            *, threads: int = 1, paper_literal: bool = False) -> ModelSelectionResult:
    """Repeat the capped search for every k in ``k_range`` and pick by AIC.

    ``k_range`` is an inclusive (low, high) interval.  Each (k, repeat) run
    uses the seed derived from (cfg.seed, k, repeat); the chosen k minimizes
    the mean AIC over repeats, ties going to the smaller k.
    """
    M = np.asarray(M, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    lo, hi = int(k_range[0]), int(k_range[1])
    if lo < 1 or hi < lo:
        raise ValidationError("k_range must be an interval with 1 <= low <= high")
    if repeats < 1:
        raise ValidationError("repeats must be >= 1")
    if cfg is None:
        cfg = OptimizerConfig(mode="size_cap", k_opt=lo)

    M0 = M - M.mean(axis=0)
    y0 = y - y.mean()

    jobs = [(k, rep) for k in range(lo, hi + 1) for rep in range(repeats)]

    def one(job):
        k, rep = job
        run_cfg = replace(cfg, mode="size_cap", k_opt=k,
                          seed=child_int(cfg.seed, k, rep))
        result = run_ga(M0, y0, run_cfg)
        aic = aic_for_group(result.best, M, y, paper_literal=paper_literal)
        return SweepRun(k, rep, aic, result.best_eval.pearson_r,
                        result.best.bits)

    runs = parallel_map(one, jobs, threads)

    per_k = []
    for k in range(lo, hi + 1):
        aics = tuple(run.aic for run in runs if run.k == k)
        per_k.append((k, aics, float(np.mean(aics))))
    chosen_k = min(per_k, key=lambda row: (row[2], row[0]))[0]
    return ModelSelectionResult(per_k=tuple(per_k), chosen_k=chosen_k,
                                runs=tuple(runs))


def mu_sweep(M_train: np.ndarray, y_train: np.ndarray, grid=DEFAULT_MU_GRID,
             cfg: OptimizerConfig | None = None, *, inner_fraction: float = 0.5,
             n_strata: int = 10, inner_repeats: int = 1,
             threads: int = 1) -> ModelSelectionResult:
    """Score every mu on inner stratified splits of the training data.

    For each inner repeat the training data is split once more; the l1
    search runs on the inner-train part and each candidate group is scored
    by the Pearson correlation of its effect with y on the held-out part
    (0.0 when the effect is degenerate there).  The chosen mu maximizes the
    mean validation r, ties going to the larger mu.
    """
    from .evaluation import stratified_split

    M_train = np.asarray(M_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.float64)
    grid = tuple(float(g) for g in grid)
    if not grid:
        raise ValidationError("mu grid must not be empty")
    if any(g < 0 or not math.isfinite(g) for g in grid):
        raise ValidationError("mu values must be finite and >= 0")
    if inner_repeats < 1:
        raise ValidationError("inner_repeats must be >= 1")
    if cfg is None:
        cfg = OptimizerConfig(mode="l1")

    jobs = []
    for rep in range(inner_repeats):
        plan = stratified_split(y_train, inner_fraction, n_strata,
                                seed=child_int(cfg.seed, rep, 0))
        jobs.extend((rep, j, plan) for j in range(len(grid)))

    def one(job):
        rep, j, plan = job
        Mi, yi = M_train[plan.train_indices], y_train[plan.train_indices]
        Mv, yv = M_train[plan.test_indices], y_train[plan.test_indices]
        run_cfg = replace(cfg, mode="l1", mu=grid[j],
                          seed=child_int(cfg.seed, rep, 1 + j))
        result = run_ga(Mi - Mi.mean(axis=0), yi - yi.mean(), run_cfg)
        s_val = Mv[:, result.best.indices()].sum(axis=1)
        try:
            return pearson(s_val, yv)
        except ValidationError:
            return 0.0

    scores = np.array(parallel_map(one, jobs, threads)).reshape(inner_repeats,
                                                                len(grid))
    per_mu = tuple((grid[j], float(scores[:, j].mean()))
                   for j in range(len(grid)))
    chosen_mu = max(per_mu, key=lambda row: (row[1], row[0]))[0]
    return ModelSelectionResult(per_mu=per_mu, chosen_mu=chosen_mu)


def tune_mu(M_train: np.ndarray, y_train: np.ndarray, grid=DEFAULT_MU_GRID,
            cfg: OptimizerConfig | None = None, **kwargs) -> float:
    """Convenience wrapper around :func:`mu_sweep` returning only the mu."""
    return mu_sweep(M_train, y_train, grid, cfg, **kwargs).chosen_mu


def write_sweep(result: ModelSelectionResult, path, delimiter: str = ",") -> None:
    """Export per-run sweep detail as a (k, repeat, aic, r, group_bits) table."""
    from .tables import fmt, write_table

    rows = [
        [str(run.k), str(run.repeat), fmt(run.aic), fmt(run.pearson_r),
         "".join(str(int(b)) for b in run.bits)]
        for run in result.runs
    ]
    write_table(path, list(SWEEP_COLUMNS), rows, delimiter)
