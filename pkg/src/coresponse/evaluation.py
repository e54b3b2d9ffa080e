"""Repeated stratified train/test evaluation and paired comparison.

Splits are stratified on equal-frequency bins of the functional variable so
train and test preserve its distribution.  Held-out performance is always
the definitional Pearson correlation between the group effect on the test
rows and the test responses.  The convolution operator is built once from
the full-data adjacency and applied to train and test blocks separately;
the network is treated as an input to the method, not re-inferred per
split (a deliberate, documented leakage trade-off).
"""

import math
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.special import betainc

from .errors import ValidationError
from .ga import OptimizerConfig, run_ga
from .ingest import AbundanceMatrix, FunctionalVariable
from .model_select import DEFAULT_MU_GRID, tune_mu
from .network import CoOccurrenceNetwork, convolution_operator
from .utils import child_int, generator, parallel_map, pearson

SIGNIFICANCE_LEVEL = 0.05

PER_REPEAT_COLUMNS = ("repeat", "method", "test_r")
SUMMARY_COLUMNS = ("method", "mean_r", "std_r", "repeats")
TTEST_COLUMNS = ("method_a", "method_b", "t", "p", "significant")


@dataclass(frozen=True)
class SplitPlan:
    """Disjoint train/test index sets covering all samples."""

    train_indices: np.ndarray
    test_indices: np.ndarray
    fraction: float = 0.5
    n_strata: int = 10
    seed: int = 0

    def __post_init__(self):
        train = np.asarray(self.train_indices, dtype=np.int64)
        test = np.asarray(self.test_indices, dtype=np.int64)
        if not 0.0 < self.fraction < 1.0:
            raise ValidationError("fraction must be strictly between 0 and 1")
        if self.n_strata < 1:
            raise ValidationError("n_strata must be >= 1")
        union = np.concatenate([train, test])
        n = union.shape[0]
        if n == 0 or not np.array_equal(np.sort(union), np.arange(n)):
            raise ValidationError(
                "train and test must disjointly cover all sample indices"
            )
        object.__setattr__(self, "train_indices", train)
        object.__setattr__(self, "test_indices", test)

    @property
    def n_samples(self) -> int:
        return self.train_indices.shape[0] + self.test_indices.shape[0]


@dataclass(frozen=True)
class EvaluationReport:
    """Held-out correlations across repeats for one method.

    ``std_r`` is the sample standard deviation (ddof=1), 0.0 for a single
    repeat.  Both summary fields are recomputed from the vector; passing
    inconsistent values (beyond 1e-12) is an error.
    """

    per_repeat_test_r: np.ndarray
    method_tag: str
    mean_r: float | None = None
    std_r: float | None = None

    def __post_init__(self):
        r = np.asarray(self.per_repeat_test_r, dtype=np.float64)
        if r.ndim != 1 or r.shape[0] < 1:
            raise ValidationError("per_repeat_test_r must be a non-empty vector")
        mean = float(r.mean())
        std = float(r.std(ddof=1)) if r.shape[0] > 1 else 0.0
        for given, computed, name in ((self.mean_r, mean, "mean_r"),
                                      (self.std_r, std, "std_r")):
            if given is not None and abs(given - computed) > 1e-12:
                raise ValidationError(f"{name} inconsistent with the r vector")
        object.__setattr__(self, "per_repeat_test_r", r)
        object.__setattr__(self, "mean_r", mean)
        object.__setattr__(self, "std_r", std)

    @property
    def repeats(self) -> int:
        return self.per_repeat_test_r.shape[0]


class TTestResult(NamedTuple):
    t: float
    p: float
    significant: bool


def stratified_split(y, fraction: float = 0.5, n_strata: int = 10,
                     seed: int = 0) -> SplitPlan:
    """Split samples into train/test preserving the distribution of y.

    Samples are sorted by y (ties kept in index order) and cut into
    ``n_strata`` equal-frequency bins; each bin contributes its rounded
    share to the train side.  Bins with a single sample are assigned
    alternately (train first) with a warning.  Deterministic given seed.
    """
    values = y.values if isinstance(y, FunctionalVariable) else np.asarray(
        y, dtype=np.float64)
    if values.ndim != 1 or values.shape[0] < 2:
        raise ValidationError("need at least 2 samples to split")
    if not 0.0 < fraction < 1.0:
        raise ValidationError("fraction must be strictly between 0 and 1")
    if n_strata < 1:
        raise ValidationError("n_strata must be >= 1")

    order = np.argsort(values, kind="stable")
    rng = generator(seed)
    train, test = [], []
    n_single = 0
    for stratum in np.array_split(order, n_strata):
        if stratum.size == 0:
            continue
        if stratum.size == 1:
            warnings.warn("stratum with a single sample; assigning alternately")
            (train if n_single % 2 == 0 else test).append(stratum[0])
            n_single += 1
            continue
        perm = rng.permutation(stratum)
        n_train = math.floor(fraction * stratum.size + 0.5)
        train.extend(perm[:n_train])
        test.extend(perm[n_train:])
    if not train or not test:
        raise ValidationError(
            "split produced an empty side; adjust fraction or strata"
        )
    return SplitPlan(np.sort(np.asarray(train, dtype=np.int64)),
                     np.sort(np.asarray(test, dtype=np.int64)),
                     fraction, n_strata, seed)


def _as_matrix(H) -> np.ndarray:
    if isinstance(H, AbundanceMatrix):
        return H.values
    H = np.asarray(H, dtype=np.float64)
    if H.ndim != 2:
        raise ValidationError("abundance must be a 2-d matrix")
    return H


def _as_vector(y) -> np.ndarray:
    if isinstance(y, FunctionalVariable):
        return y.values
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise ValidationError("functional variable must be a 1-d vector")
    return y


def convolved_matrix(H, A) -> np.ndarray:
    """Full-data topological abundance; A=None means the identity operator."""
    values = _as_matrix(H)
    if A is None:
        return values
    adjacency = A.adjacency if isinstance(A, CoOccurrenceNetwork) else np.asarray(
        A, dtype=np.float64)
    if adjacency.shape != (values.shape[1], values.shape[1]):
        raise ValidationError("adjacency dimension does not match taxon count")
    if isinstance(H, AbundanceMatrix) and isinstance(A, CoOccurrenceNetwork):
        if H.taxon_labels != A.taxon_labels:
            raise ValidationError("abundance and network taxon labels differ")
    return values @ convolution_operator(adjacency)


def evaluate_method(H, A, y, cfg: OptimizerConfig, repeats: int = 100, *,
                    fraction: float = 0.5, n_strata: int = 10,
                    mu_grid=None, inner_repeats: int = 1,
                    method_tag: str | None = None,
                    threads: int = 1) -> EvaluationReport:
    """Score one method over repeated stratified splits.

    Per repeat: split, search on the train block (centered on train means),
    then correlate the chosen group's effect with y on the test block. A
    degenerate test effect scores 0.0.  ``A=None`` runs the identity-graph
    baseline on raw abundances.  In l1 mode a non-None ``mu_grid`` re-tunes
    mu on every training set.  Split seeds depend only on (cfg.seed,
    repeat), so methods sharing a config seed see identical splits and can
    be compared pairwise.
    """
    if repeats < 1:
        raise ValidationError("repeats must be >= 1")
    M_full = convolved_matrix(H, A)
    yv = _as_vector(y)
    if yv.shape[0] != M_full.shape[0]:
        raise ValidationError("sample counts of abundance and y differ")
    if method_tag is None:
        method_tag = "baseline" if A is None else (
            "convolved_l1" if cfg.mode == "l1" else "convolved")

    def one(i: int) -> float:
        plan = stratified_split(yv, fraction, n_strata,
                                seed=child_int(cfg.seed, i, 0))
        Mtr = M_full[plan.train_indices]
        ytr = yv[plan.train_indices]
        run_cfg = replace(cfg, seed=child_int(cfg.seed, i, 2))
        if cfg.mode == "l1" and mu_grid is not None:
            mu = tune_mu(Mtr, ytr, mu_grid,
                         replace(cfg, seed=child_int(cfg.seed, i, 1)),
                         n_strata=n_strata, inner_repeats=inner_repeats)
            run_cfg = replace(run_cfg, mu=mu)
        result = run_ga(Mtr - Mtr.mean(axis=0), ytr - ytr.mean(), run_cfg)
        s_test = M_full[plan.test_indices][:, result.best.indices()].sum(axis=1)
        try:
            return pearson(s_test, yv[plan.test_indices])
        except ValidationError:
            return 0.0

    rs = parallel_map(one, range(repeats), threads)
    return EvaluationReport(np.asarray(rs, dtype=np.float64), method_tag)


def paired_t_test(a, b) -> TTestResult:
    """Two-sided paired t-test on a - b.

    The p-value comes from the regularized incomplete beta form of the
    t-distribution tail; ``significant`` applies the 0.05 threshold.
    Identical difference vectors (zero variance) are an error.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.shape[0] < 2:
        raise ValidationError("paired test needs two equal-length vectors (n >= 2)")
    d = a - b
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise ValidationError("paired differences have zero variance")
    n = d.shape[0]
    t = float(d.mean() / (sd / math.sqrt(n)))
    df = n - 1
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return TTestResult(t, p, p < SIGNIFICANCE_LEVEL)


def write_reports(reports, per_repeat_path, summary_path,
                  delimiter: str = ",") -> None:
    """Export long-format per-repeat correlations plus per-method summaries."""
    from .tables import fmt, write_table

    long_rows = []
    summary_rows = []
    for report in reports:
        long_rows.extend(
            [str(i), report.method_tag, fmt(r)]
            for i, r in enumerate(report.per_repeat_test_r)
        )
        summary_rows.append([report.method_tag, fmt(report.mean_r),
                             fmt(report.std_r), str(report.repeats)])
    write_table(per_repeat_path, list(PER_REPEAT_COLUMNS), long_rows, delimiter)
    write_table(summary_path, list(SUMMARY_COLUMNS), summary_rows, delimiter)


def write_t_tests(reports, path, delimiter: str = ",") -> None:
    """Export pairwise paired t-tests between all report pairs.

    When two methods score identically on every repeat the statistic is
    undefined; the pair still gets a row, with empty t/p cells and
    ``significant`` set from the constant difference (``no`` for a zero
    gap, ``yes`` for a nonzero one, where the t statistic diverges).
    """
    from .tables import fmt, write_table

    rows = []
    for i, ra in enumerate(reports):
        for rb in reports[i + 1:]:
            a = ra.per_repeat_test_r
            b = rb.per_repeat_test_r
            if (a.shape == b.shape and a.shape[0] >= 2
                    and float(np.std(a - b, ddof=1)) == 0.0):
                sig = "no" if float(a[0] - b[0]) == 0.0 else "yes"
                rows.append([ra.method_tag, rb.method_tag, "", "", sig])
                continue
            t, p, sig = paired_t_test(a, b)
            rows.append([ra.method_tag, rb.method_tag, fmt(t), fmt(p),
                         "yes" if sig else "no"])
    write_table(path, list(TTEST_COLUMNS), rows, delimiter)
