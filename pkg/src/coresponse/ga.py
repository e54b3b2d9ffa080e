"""Genetic search over binary taxon-membership vectors.

The objective is the centered-correlation surrogate
``x.M0^T.y0 / sqrt(x.M0^T.M0.x)`` (equal to the Pearson correlation of the
group effect with the functional variable, times the constant ||y0||),
penalized either by a hard size cap or by an l1 term on the group size.

The search is a generational GA with linear-rank selection, single-point
crossover, single-bit mutation and elitism.  Selection depends only on the
fitness ORDER of the population, so rescaling the functional variable by a
positive constant leaves trajectories unchanged.  All randomness comes from
per-generation streams derived from the config seed; runs are deterministic
and thread-count independent.
"""

import math
import sys
from dataclasses import dataclass

import numpy as np

from ._kernels import group_terms
from .errors import ValidationError
from .utils import generator

#: default hard-cap penalty weight: sqrt of the largest finite double
ALPHA_DEFAULT = math.sqrt(sys.float_info.max)

#: groups whose effect has squared norm below this are treated as degenerate
DEGENERATE_QUAD = 1e-15

MODES = ("size_cap", "l1")

HISTORY_COLUMNS = (
    "generation",
    "max_fitness",
    "mean_fitness",
    "max_r",
    "mean_r",
    "mean_size",
)


@dataclass(frozen=True)
class GroupChromosome:
    """Binary membership vector over the p taxa."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if bits.ndim != 1 or not np.isin(bits, (0, 1)).all():
            raise ValidationError("chromosome bits must be a 1-d 0/1 vector")
        object.__setattr__(self, "bits", bits)

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    def size(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class OptimizerConfig:
    """GA hyperparameters and penalty mode.

    ``size_cap`` subtracts ``alpha * max(size - k_opt, 0)`` with a huge
    alpha; ``l1`` subtracts ``mu * size``.
    """

    mode: str
    k_opt: int | None = None
    alpha: float = ALPHA_DEFAULT
    mu: float = 0.0
    population_size: int = 200
    crossover_prob: float = 0.8
    mutation_prob: float = 0.1
    max_generations: int = 500
    stagnation_limit: int = 50
    elite_fraction: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"unknown optimizer mode {self.mode!r}")
        if self.mode == "size_cap":
            if self.k_opt is None or self.k_opt < 1:
                raise ValidationError("size_cap mode requires k_opt >= 1")
        if self.mu < 0:
            raise ValidationError("mu must be >= 0")
        if self.alpha <= 0:
            raise ValidationError("alpha must be > 0")
        if self.population_size < 2:
            raise ValidationError("population_size must be >= 2")
        if not 0.0 <= self.crossover_prob <= 1.0 or not 0.0 <= self.mutation_prob <= 1.0:
            raise ValidationError("probabilities must be in [0, 1]")
        if self.max_generations < 1 or self.stagnation_limit < 1:
            raise ValidationError("max_generations and stagnation_limit must be >= 1")
        if not 0.0 <= self.elite_fraction < 1.0:
            raise ValidationError("elite_fraction must be in [0, 1)")


@dataclass(frozen=True)
class FitnessEvaluation:
    """Objective terms for one chromosome.

    ``raw_objective`` is the unnormalized surrogate; ``pearson_r`` divides it
    by ||y0||.  Degenerate chromosomes (empty group, or zero variance of the
    group effect) get raw_objective = pearson_r = 0 and the finite sentinel
    ``-alpha`` as penalized fitness.
    """

    raw_objective: float
    pearson_r: float
    penalized_fitness: float
    group_size: int


@dataclass(frozen=True)
class GAResult:
    best: GroupChromosome
    best_eval: FitnessEvaluation
    history: np.ndarray
    populations: tuple[np.ndarray, ...] | None = None


class Objective:
    """Precomputed quadratic form for batch fitness evaluation.

    Holds G = M0^T M0 (symmetrized), c = M0^T y0 and ||y0||; evaluates whole
    populations through the active kernel backend.
    """

    def __init__(self, M0: np.ndarray, y0: np.ndarray):
        M0 = np.asarray(M0, dtype=np.float64)
        y0 = np.asarray(y0, dtype=np.float64)
        if M0.ndim != 2 or y0.ndim != 1 or M0.shape[0] != y0.shape[0]:
            raise ValidationError("M0 must be n x p and y0 length n")
        gram = M0.T @ M0
        self.gram = (gram + gram.T) / 2.0
        self.cvec = M0.T @ y0
        self.y_norm = float(np.sqrt(y0 @ y0))
        self.n_taxa = M0.shape[1]

    def terms(self, population: np.ndarray):
        pop = np.ascontiguousarray(population, dtype=np.uint8)
        return group_terms(pop, self.gram, self.cvec)

    def evaluate(self, population: np.ndarray, cfg: OptimizerConfig):
        """Return (raw, penalized, r, size) arrays for a population matrix."""
        num, quad, size = self.terms(population)
        ok = (size > 0) & (quad > DEGENERATE_QUAD)
        raw = np.zeros(len(num))
        raw[ok] = num[ok] / np.sqrt(quad[ok])
        if cfg.mode == "size_cap":
            excess = np.maximum(size - cfg.k_opt, 0).astype(np.float64)
            pen = raw - cfg.alpha * excess
        else:
            pen = raw - cfg.mu * size.astype(np.float64)
        pen[~ok] = -cfg.alpha
        r = np.zeros(len(num))
        if self.y_norm > 0:
            r[ok] = raw[ok] / self.y_norm
        return raw, pen, r, size


def evaluate_fitness(x, M0: np.ndarray, y0: np.ndarray, cfg: OptimizerConfig) -> FitnessEvaluation:
    """Evaluate one chromosome against centered data (see :class:`Objective`)."""
    bits = x.bits if isinstance(x, GroupChromosome) else GroupChromosome(np.asarray(x)).bits
    if bits.shape[0] != M0.shape[1]:
        raise ValidationError("chromosome length does not match taxon count")
    objective = Objective(M0, y0)
    raw, pen, r, size = objective.evaluate(bits[None, :], cfg)
    return FitnessEvaluation(float(raw[0]), float(r[0]), float(pen[0]), int(size[0]))


def _initial_population(cfg: OptimizerConfig, p: int, rng: np.random.Generator) -> np.ndarray:
    pop = np.zeros((cfg.population_size, p), dtype=np.uint8)
    if cfg.mode == "size_cap":
        k = min(cfg.k_opt, p)
        # k distinct random bits per individual, so generation 0 is feasible
        order = rng.random((cfg.population_size, p)).argsort(axis=1)
        rows = np.repeat(np.arange(cfg.population_size), k)
        pop[rows, order[:, :k].ravel()] = 1
    else:
        prob = min(0.5, 25.0 / p)
        pop[:] = rng.random((cfg.population_size, p)) < prob
    return pop


def _lexicographic_best(population: np.ndarray, candidates: np.ndarray) -> int:
    best = candidates[0]
    best_key = population[best].tobytes()
    for idx in candidates[1:]:
        key = population[idx].tobytes()
        if key < best_key:
            best, best_key = idx, key
    return int(best)


def run_ga(M0: np.ndarray, y0: np.ndarray, cfg: OptimizerConfig,
           record_populations: bool = False) -> GAResult:
    """Run the genetic search on centered data.

    Returns the best chromosome ever seen (elitist archive; ties broken
    toward the lexicographically smallest bit vector), its evaluation, and a
    per-generation history table with columns ``HISTORY_COLUMNS``.
    Deterministic given ``cfg.seed``.
    """
    objective = Objective(M0, y0)
    p = objective.n_taxa
    if p < 2:
        raise ValidationError("need at least 2 taxa to optimize over")

    pop = _initial_population(cfg, p, generator(cfg.seed, 0))
    raw, pen, r, size = objective.evaluate(pop, cfg)

    archive = None  # (pen, bits_bytes, bits, raw, r, size)
    history = []
    populations = [pop.copy()] if record_populations else None

    def consider(pop, raw, pen, r, size):
        """Update the best-ever archive; True iff best fitness improved."""
        nonlocal archive
        if cfg.mode == "size_cap":
            feasible = np.flatnonzero(size <= cfg.k_opt)
            if feasible.size == 0:  # possible only without elitism
                return False
        else:
            feasible = np.arange(len(pen))
        best_pen = pen[feasible].max()
        cand = feasible[pen[feasible] == best_pen]
        idx = _lexicographic_best(pop, cand)
        key = pop[idx].tobytes()
        entry = (best_pen, key, pop[idx].copy(), raw[idx], r[idx], size[idx])
        if archive is None or best_pen > archive[0]:
            archive = entry
            return True
        if best_pen == archive[0] and key < archive[1]:
            archive = entry
        return False

    def record(gen, pen, r, size):
        history.append(
            (float(gen), pen.max(), pen.mean(), r.max(), r.mean(), size.mean())
        )

    consider(pop, raw, pen, r, size)
    record(0, pen, r, size)

    n_elite = math.ceil(cfg.elite_fraction * cfg.population_size)
    n_off = cfg.population_size - n_elite
    n_pairs = (n_off + 1) // 2
    stagnation = 0

    for gen in range(1, cfg.max_generations + 1):
        if stagnation >= cfg.stagnation_limit:
            break
        rng = generator(cfg.seed, gen)

        # linear-rank selection probabilities (worst rank 1 ... best rank m)
        order = np.argsort(pen, kind="stable")
        ranks = np.empty(cfg.population_size)
        ranks[order] = np.arange(1, cfg.population_size + 1)
        probs = ranks / ranks.sum()

        elite_order = np.argsort(-pen, kind="stable")[:n_elite]
        elites = pop[elite_order].copy()

        parents = rng.choice(cfg.population_size, size=2 * n_pairs, p=probs)
        mothers = pop[parents[0::2]]
        fathers = pop[parents[1::2]]
        cross_points = rng.integers(1, p, size=n_pairs)
        do_cross = rng.random(n_pairs) < cfg.crossover_prob
        tail = np.arange(p)[None, :] >= cross_points[:, None]
        swap = tail & do_cross[:, None]
        child_a = np.where(swap, fathers, mothers).astype(np.uint8)
        child_b = np.where(swap, mothers, fathers).astype(np.uint8)
        offspring = np.empty((2 * n_pairs, p), dtype=np.uint8)
        offspring[0::2] = child_a
        offspring[1::2] = child_b
        offspring = offspring[:n_off]

        do_mutate = rng.random(n_off) < cfg.mutation_prob
        flip_at = rng.integers(0, p, size=n_off)
        rows = np.flatnonzero(do_mutate)
        offspring[rows, flip_at[rows]] ^= 1

        pop = np.concatenate([elites, offspring])
        raw, pen, r, size = objective.evaluate(pop, cfg)
        improved = consider(pop, raw, pen, r, size)
        record(gen, pen, r, size)
        stagnation = 0 if improved else stagnation + 1
        if record_populations:
            populations.append(pop.copy())

    best_pen, _, best_bits, best_raw, best_r, best_size = archive
    if cfg.mode == "size_cap" and best_size > cfg.k_opt:
        raise ValidationError("internal error: archived group exceeds the size cap")
    best_eval = FitnessEvaluation(
        float(best_raw), float(best_r), float(best_pen), int(best_size)
    )
    return GAResult(
        best=GroupChromosome(best_bits),
        best_eval=best_eval,
        history=np.array(history),
        populations=tuple(populations) if record_populations else None,
    )


def write_history(history: np.ndarray, path, delimiter: str = ",") -> None:
    """Export a history table (one row per generation) for plotting."""
    from .tables import fmt, write_table

    rows = [
        [str(int(row[0])), *(fmt(v) for v in row[1:])] for row in history
    ]
    write_table(path, list(HISTORY_COLUMNS), rows, delimiter)
