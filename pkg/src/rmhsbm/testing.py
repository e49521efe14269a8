"""Per-group structure tests with Benjamini-Hochberg control.

Four procedures are available through :func:`run_tests`:

``wilks-individual``
    chi-square LLR test in every graph, BH across groups within the graph,
    reported as per-group rejection rates over the population.
``wilks-aggregated``
    pool the population's counts first, then one chi-square test per group.
``anova``
    one-way ANOVA of per-graph cell estimates, cells as levels.
``friedman``
    Friedman rank test of per-graph cell estimates, graphs as blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .estimation import BlockSummary, aggregate_summaries, llr_report
from .hierarchy import ParameterGroups
from .numeric import chi2_sf, f_sf

METHODS = ("wilks-individual", "wilks-aggregated", "anova", "friedman")
DECISIONS = ("fail", "reject", "trivial-zero", "not-testable")
CODES = {d: i for i, d in enumerate(DECISIONS)}
# display-only cut for averaged individual rejection rates
DEFAULT_RATE_THRESHOLD = 0.5


@dataclass(frozen=True)
class TestOutcome:
    group_id: int | None
    method: str
    statistic: float
    df: Any
    p_value: float | None
    decision: str

    __test__ = False

    def to_dict(self) -> dict[str, Any]:
        df = list(self.df) if isinstance(self.df, tuple) else self.df
        return {
            "group_id": self.group_id,
            "method": self.method,
            "statistic": self.statistic,
            "df": df,
            "p_value": self.p_value,
            "decision": self.decision,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TestOutcome":
        df = tuple(d["df"]) if isinstance(d["df"], list) else d["df"]
        return cls(d["group_id"], d["method"], d["statistic"], df, d["p_value"], d["decision"])


def _not_testable(gid, method) -> TestOutcome:
    return TestOutcome(gid, method, 0.0, 0, None, "not-testable")


def _trivial(gid, method, df) -> TestOutcome:
    return TestOutcome(gid, method, 0.0, df, 1.0, "trivial-zero")


# -- Benjamini-Hochberg --------------------------------------------------------------


def bh_correct(p_values: Sequence[float], alpha: float = 0.05) -> np.ndarray:
    """Step-up rejections: reject the i smallest p-values for the largest i with p_(i) <= i alpha / m."""
    p = np.asarray(p_values, dtype=float).reshape(-1)
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if p.size == 0:
        return np.zeros(0, dtype=bool)
    if np.isnan(p).any() or (p < 0).any() or (p > 1).any():
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    below = p[order] <= alpha * np.arange(1, m + 1) / m
    out = np.zeros(m, dtype=bool)
    if below.any():
        k = np.nonzero(below)[0].max()
        out[order[: k + 1]] = True
    return out


# -- chi-square tests -------------------------------------------------------------------


def _wilks_arrays(summary: BlockSummary, groups: ParameterGroups, p_values: bool = True):
    """Per-group statistic, df (defined cells - 1), p-value and status code."""
    rep = llr_report(summary, groups)
    defined = groups.group_sum(summary.n > 0).astype(np.int64)
    df = np.maximum(defined - 1, 0)
    edges = groups.group_sum(summary.e)
    status = np.where(df == 0, CODES["not-testable"], np.where(edges == 0, CODES["trivial-zero"], CODES["fail"]))
    p = np.full(len(groups), np.nan)
    for g in np.nonzero(status == CODES["fail"])[0] if p_values else ():
        p[g] = chi2_sf(float(rep.statistics[g]), int(df[g])).value
    p[status == CODES["trivial-zero"]] = 1.0
    return rep.statistics, df, p, status, rep.null_estimates


def wilks_local(summary: BlockSummary, groups: ParameterGroups, group_id: int, alpha: float = 0.05,
                method: str = "wilks-aggregated") -> TestOutcome:
    """chi-square LLR test of one group in one summary (no multiplicity correction)."""
    stats, df, p, status, _ = _wilks_arrays(summary, groups)
    return _outcome(group_id, method, stats, df, p, status, alpha)


def wilks_outcomes(summary: BlockSummary, groups: ParameterGroups, alpha: float = 0.05,
                   method: str = "wilks-aggregated") -> list[TestOutcome]:
    """:func:`wilks_local` for every group, sharing one pass over the summary."""
    stats, df, p, status, _ = _wilks_arrays(summary, groups)
    return [_outcome(g, method, stats, df, p, status, alpha) for g in range(len(groups))]


def _outcome(g, method, stats, df, p, status, alpha) -> TestOutcome:
    if status[g] == CODES["not-testable"]:
        return _not_testable(int(g), method)
    if status[g] == CODES["trivial-zero"]:
        return _trivial(int(g), method, int(df[g]))
    decision = "reject" if p[g] <= alpha else "fail"
    return TestOutcome(int(g), method, float(stats[g]), int(df[g]), float(p[g]), decision)


def wilks_global(summary: BlockSummary, groups: ParameterGroups, alpha: float = 0.05) -> TestOutcome:
    """Global chi-square test over the testable, non-degenerate groups."""
    stats, df, _, status, null = _wilks_arrays(summary, groups, p_values=False)
    use = (status == CODES["fail"]) & (null > 0) & (null < 1)
    if not use.any():
        raise ValueError("no testable groups")
    stat = float(math.fsum(stats[use]))
    total_df = int(df[use].sum())
    p = chi2_sf(stat, total_df).value
    return TestOutcome(None, "wilks-global", stat, total_df, p, "reject" if p <= alpha else "fail")


def individual_rejection_rates(
    population: Sequence[BlockSummary], groups: ParameterGroups, alpha: float = 0.05
) -> np.ndarray:
    """Fraction of graphs whose within-graph BH procedure rejects each group.

    NaN for groups that are not testable in any graph.
    """
    return _individual(population, groups, alpha)[0]


def _individual(population, groups, alpha):
    population = list(population)
    if not population:
        raise ValueError("empty population")
    G = len(groups)
    rejects = np.zeros(G)
    testable = np.zeros(G, dtype=bool)
    trivial_all = np.ones(G, dtype=bool)
    p_sum = np.zeros(G)
    p_cnt = np.zeros(G)
    for s in population:
        _, _, p, status, _ = _wilks_arrays(s, groups)
        live = status == CODES["fail"]
        dec = np.zeros(G, dtype=bool)
        dec[live] = bh_correct(p[live], alpha)
        rejects += dec
        testable |= status != CODES["not-testable"]
        trivial_all &= status != CODES["fail"]
        p_sum[live] += p[live]
        p_cnt[live] += 1
    rates = np.where(testable, rejects / len(population), np.nan)
    with np.errstate(invalid="ignore"):
        mean_p = np.where(p_cnt > 0, p_sum / np.maximum(p_cnt, 1), np.nan)
    return rates, testable, trivial_all, mean_p


# -- population tests -------------------------------------------------------------


@dataclass(frozen=True)
class PopulationEstimates:
    """Per-graph (rows) by per-cell (columns) estimates of one group."""

    values: np.ndarray
    weights: np.ndarray
    cells: tuple = ()
    group_id: int | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("values must be a 2-D array (graphs x cells)")
        w = np.ones_like(v) if self.weights is None else np.array(self.weights, dtype=float)
        if w.shape != v.shape:
            raise ValueError("weights must match values")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    @property
    def n_graphs(self) -> int:
        return self.values.shape[0]

    @property
    def n_cells(self) -> int:
        return self.values.shape[1]

    @property
    def defined(self) -> bool:
        return bool((self.weights > 0).all() and not np.isnan(self.values).any())

    @classmethod
    def from_population(cls, population: Sequence[BlockSummary], groups: ParameterGroups, group_id: int):
        cells = groups.members[group_id]
        rows = np.array([c[0] for c in cells])
        cols = np.array([c[1] for c in cells])
        n = np.array([s.n[rows, cols] for s in population], dtype=float)
        e = np.array([s.e[rows, cols] for s in population], dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            v = np.where(n > 0, e / np.maximum(n, 1), np.nan)
        return cls(v, n, tuple(cells), group_id)


def _check_population_estimates(est: PopulationEstimates) -> None:
    if est.n_graphs < 2:
        raise ValueError(f"need at least 2 graphs, got {est.n_graphs}")
    if est.n_cells < 2:
        raise ValueError(f"need at least 2 cells, got {est.n_cells}")


def anova_local(estimates: PopulationEstimates, alpha: float = 0.05) -> TestOutcome:
    """One-way ANOVA with the group's cells as levels and graphs as replicates."""
    _check_population_estimates(estimates)
    if not estimates.defined:
        raise ValueError("undefined cell estimates (cells without dyads)")
    x = estimates.values
    S, k = x.shape
    df1, df2 = k - 1, k * (S - 1)
    level_means = x.mean(axis=0)
    ssb = S * float(np.sum((level_means - x.mean()) ** 2))
    ssw = float(np.sum((x - level_means) ** 2))
    # round-off below this scale is treated as exact zero
    tol = 1e-12 * max(1.0, float(np.sum(x**2)))
    if ssw <= tol:
        if ssb <= tol:
            F, p = 0.0, 1.0
        else:
            F, p = math.inf, 0.0
    else:
        F = (ssb / df1) / (ssw / df2)
        p = f_sf(F, df1, df2).value
    gid = estimates.group_id
    return TestOutcome(gid, "anova", F, (df1, df2), p, "reject" if p <= alpha else "fail")


def _average_ranks(row: np.ndarray) -> tuple[np.ndarray, float]:
    """Average ranks (1-based) of a row and its tie term sum(t^3 - t)."""
    order = np.argsort(row, kind="stable")
    ranks = np.empty(len(row))
    sorted_row = row[order]
    ties = 0.0
    i = 0
    while i < len(row):
        j = i
        while j + 1 < len(row) and sorted_row[j + 1] == sorted_row[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        t = j - i + 1
        ties += t**3 - t
        i = j + 1
    return ranks, ties


def friedman_local(estimates: PopulationEstimates, alpha: float = 0.05) -> TestOutcome:
    """Friedman test: rank cells within each graph, compare mean ranks across cells."""
    _check_population_estimates(estimates)
    if not estimates.defined:
        raise ValueError("undefined cell estimates (cells without dyads)")
    x = estimates.values
    S, k = x.shape
    ranks = np.empty_like(x)
    tie_total = 0.0
    for s in range(S):
        ranks[s], t = _average_ranks(x[s])
        tie_total += t
    correction = 1.0 - tie_total / (S * k * (k * k - 1))
    gid = estimates.group_id
    if correction <= 0:
        return TestOutcome(gid, "friedman", 0.0, k - 1, 1.0, "fail")
    mean_ranks = ranks.mean(axis=0)
    Q = 12.0 * S / (k * (k + 1)) * float(np.sum((mean_ranks - (k + 1) / 2.0) ** 2)) / correction
    p = chi2_sf(Q, k - 1).value
    return TestOutcome(gid, "friedman", Q, k - 1, p, "reject" if p <= alpha else "fail")


# -- reports ----------------------------------------------------------------------


@dataclass
class TestReport:
    method: str
    alpha: float
    m: int
    outcomes: list[TestOutcome]
    p_profile: list[tuple[float, float]]
    rejection_matrix: np.ndarray
    rates: np.ndarray | None = field(default=None)

    __test__ = False

    @property
    def decisions(self) -> list[str]:
        return [o.decision for o in self.outcomes]

    def rejection_fraction(self) -> float:
        """Mean per-group rejection over the testable, non-trivial groups.

        For wilks-individual this averages the per-group rejection rates.
        """
        live = [o for o in self.outcomes if o.decision in ("reject", "fail")]
        if not live:
            return float("nan")
        if self.method == "wilks-individual" and self.rates is not None:
            return float(np.mean([self.rates[o.group_id] for o in live]))
        return sum(o.decision == "reject" for o in live) / len(live)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "method": self.method,
            "alpha": self.alpha,
            "m": self.m,
            "groups": [o.to_dict() for o in self.outcomes],
            "p_profile": [[p, line] for p, line in self.p_profile],
            "rejection_matrix": np.asarray(self.rejection_matrix).tolist(),
        }
        if self.rates is not None:
            out["rejection_rates"] = [None if np.isnan(r) else float(r) for r in self.rates]
        return out

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TestReport":
        for key in ("method", "alpha", "m", "groups", "p_profile", "rejection_matrix"):
            if key not in d:
                raise ValueError(f"test report: missing key {key!r}")
        rates = d.get("rejection_rates")
        return cls(
            d["method"],
            float(d["alpha"]),
            int(d["m"]),
            [TestOutcome.from_dict(o) for o in d["groups"]],
            [(float(p), float(line)) for p, line in d["p_profile"]],
            np.array(d["rejection_matrix"], dtype=np.int64),
            None if rates is None else np.array([np.nan if r is None else r for r in rates], dtype=float),
        )


def _apply_bh(outcomes: list[TestOutcome], alpha: float) -> tuple[list[TestOutcome], int, list]:
    live = [i for i, o in enumerate(outcomes) if o.decision in ("reject", "fail")]
    p = np.array([outcomes[i].p_value for i in live], dtype=float)
    rej = bh_correct(p, alpha)
    out = list(outcomes)
    for i, r in zip(live, rej):
        o = out[i]
        out[i] = TestOutcome(o.group_id, o.method, o.statistic, o.df, o.p_value, "reject" if r else "fail")
    return out, len(live), _profile(p, alpha)


def _profile(p: np.ndarray, alpha: float) -> list[tuple[float, float]]:
    m = len(p)
    return [(float(v), alpha * (i + 1) / m) for i, v in enumerate(np.sort(p))]


def _matrix(outcomes: list[TestOutcome], groups: ParameterGroups) -> np.ndarray:
    codes = np.array([CODES[o.decision] for o in outcomes], dtype=np.int64)
    return codes[groups.cell_index]


def _population(population) -> list[BlockSummary]:
    if isinstance(population, BlockSummary):
        return [population]
    population = list(population)
    if not population:
        raise ValueError("empty population")
    K = population[0].k_star
    for i, s in enumerate(population):
        if s.k_star != K:
            raise ValueError(f"summary {i} has K*={s.k_star}, expected {K}")
    return population


def aggregated_test(population, groups: ParameterGroups, alpha: float = 0.05) -> TestReport:
    """Pool the population, test every group, BH across groups."""
    return run_tests(population, groups, "wilks-aggregated", alpha)


def run_tests(
    population,
    groups: ParameterGroups,
    method: str,
    alpha: float = 0.05,
    rate_threshold: float = DEFAULT_RATE_THRESHOLD,
) -> TestReport:
    """Run one of the four procedures over every group and assemble the report."""
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    population = _population(population)
    if population[0].k_star != groups.k_star:
        raise ValueError(f"summaries have K*={population[0].k_star} but groups cover K*={groups.k_star}")

    if method == "wilks-individual":
        rates, testable, trivial, mean_p = _individual(population, groups, alpha)
        outcomes = []
        for g in range(len(groups)):
            if not testable[g]:
                outcomes.append(_not_testable(g, method))
            elif trivial[g]:
                outcomes.append(_trivial(g, method, int(groups.sizes[g] - 1)))
            else:
                dec = "reject" if rates[g] >= rate_threshold else "fail"
                outcomes.append(TestOutcome(g, method, float(rates[g]), int(groups.sizes[g] - 1), float(mean_p[g]), dec))
        live = np.array([o.p_value for o in outcomes if o.decision in ("reject", "fail")], dtype=float)
        return TestReport(method, alpha, len(live), outcomes, _profile(live, alpha), _matrix(outcomes, groups), rates)

    if method == "wilks-aggregated":
        pooled = aggregate_summaries(population)
        outcomes = wilks_outcomes(pooled, groups, alpha, method)
    else:
        if len(population) < 2:
            raise ValueError(f"{method} needs at least 2 graphs")
        local = anova_local if method == "anova" else friedman_local
        outcomes = []
        for g in range(len(groups)):
            est = PopulationEstimates.from_population(population, groups, g)
            if est.n_cells < 2 or not est.defined:
                outcomes.append(_not_testable(g, method))
            elif not np.any(est.values):
                df = (est.n_cells - 1, est.n_cells * (est.n_graphs - 1)) if method == "anova" else est.n_cells - 1
                outcomes.append(_trivial(g, method, df))
            else:
                outcomes.append(local(est, alpha))
    outcomes, m, profile = _apply_bh(outcomes, alpha)
    return TestReport(method, alpha, m, outcomes, profile, _matrix(outcomes, groups))

