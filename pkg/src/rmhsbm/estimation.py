"""Block summaries, maximum-likelihood estimates, LLR statistics and BIC.

Everything here works from :class:`BlockSummary`, the per-cell dyad and
edge counts, which are sufficient for the free and the tied model alike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Iterable, Sequence

import numpy as np

from .hierarchy import ParameterGroups

if TYPE_CHECKING:
    from .sampling import GraphSample


@dataclass(frozen=True)
class BlockSummary:
    """Symmetric K x K dyad counts ``n`` and edge counts ``e``."""

    n: np.ndarray
    e: np.ndarray
    n_vertices: int
    n_graphs: int = 1

    def __post_init__(self):
        n = np.array(self.n, dtype=np.int64)
        e = np.array(self.e, dtype=np.int64)
        if n.ndim != 2 or n.shape[0] != n.shape[1] or e.shape != n.shape:
            raise ValueError(f"n and e must be matching square matrices, got {n.shape} and {e.shape}")
        if not (np.array_equal(n, n.T) and np.array_equal(e, e.T)):
            raise ValueError("n and e must be symmetric")
        if (e < 0).any() or (e > n).any():
            raise ValueError("edge counts must satisfy 0 <= e <= n in every cell")
        n.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "e", e)

    @property
    def k_star(self) -> int:
        return self.n.shape[0]

    @property
    def n_dyads(self) -> int:
        """Total dyads over the summarized graphs."""
        rows, cols = np.triu_indices(self.k_star)
        return int(self.n[rows, cols].sum())

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n.tolist(), "e": self.e.tolist(), "n_vertices": self.n_vertices, "n_graphs": self.n_graphs}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "BlockSummary":
        return cls(np.array(data["n"]), np.array(data["e"]), int(data["n_vertices"]), int(data.get("n_graphs", 1)))


def summarize(graph: "GraphSample", k_star: int | None = None) -> BlockSummary:
    """Exact per-cell dyad and edge counts of one graph."""
    tau = np.asarray(graph.membership, dtype=np.int64)
    K = int(tau.max()) + 1 if k_star is None else int(k_star)
    if tau.size and (tau.min() < 0 or tau.max() >= K):
        raise ValueError(f"membership labels must lie in [0, {K})")
    sizes = np.bincount(tau, minlength=K)
    n = np.outer(sizes, sizes)
    np.fill_diagonal(n, sizes * (sizes - 1) // 2)
    edges = np.asarray(graph.edges, dtype=np.int64).reshape(-1, 2)
    if edges.size and edges.max() >= tau.size:
        raise ValueError("edge endpoint has no membership")
    a, b = tau[edges[:, 0]], tau[edges[:, 1]]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    up = np.zeros((K, K), dtype=np.int64)
    np.add.at(up, (lo, hi), 1)
    e = up + np.triu(up, 1).T
    return BlockSummary(n, e, int(tau.size))


def aggregate_summaries(summaries: Sequence[BlockSummary]) -> BlockSummary:
    """Cell-wise sums of n and e over a population."""
    summaries = list(summaries)
    if not summaries:
        raise ValueError("cannot aggregate an empty population")
    K = summaries[0].k_star
    for i, s in enumerate(summaries):
        if s.k_star != K:
            raise ValueError(f"summary {i} has K*={s.k_star}, expected {K}")
    return BlockSummary(
        sum(s.n for s in summaries),
        sum(s.e for s in summaries),
        sum(s.n_vertices for s in summaries),
        sum(s.n_graphs for s in summaries),
    )


def mle_alt(summary: BlockSummary) -> np.ndarray:
    """Per-cell e/n; NaN where the cell has no dyads."""
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(summary.n > 0, summary.e / np.maximum(summary.n, 1), np.nan)


def mle_null(summary: BlockSummary, groups: ParameterGroups) -> np.ndarray:
    """Per-group pooled estimate sum(e)/sum(n); NaN for groups without dyads."""
    _check_groups(summary, groups)
    n_g = groups.group_sum(summary.n)
    e_g = groups.group_sum(summary.e)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(n_g > 0, e_g / np.maximum(n_g, 1), np.nan)


def _check_groups(summary: BlockSummary, groups: ParameterGroups) -> None:
    if summary.k_star != groups.k_star:
        raise ValueError(f"summary has K*={summary.k_star} but groups cover K*={groups.k_star}")


def _xlogy(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x == 0, 0.0, x * np.log(np.where(x == 0, 1.0, y)))


def kl_bernoulli(p, q):
    """KL(Bern(p) || Bern(q)) with 0 log 0 = 0; inf where q is 0 or 1 and p disagrees."""
    p_arr = np.asarray(p, dtype=float)
    q_arr = np.asarray(q, dtype=float)
    if np.isnan(p_arr).any() or np.isnan(q_arr).any():
        raise ValueError("probabilities must not be NaN")
    if ((p_arr < 0) | (p_arr > 1) | (q_arr < 0) | (q_arr > 1)).any():
        raise ValueError("probabilities must lie in [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        # log(p/q) and log((1-p)/(1-q)) written to keep small differences exact
        pos = np.where(p_arr == 0, 0.0, p_arr * (np.log(p_arr) - np.log(q_arr)))
        neg = np.where(p_arr == 1, 0.0, (1 - p_arr) * (np.log1p(-p_arr) - np.log1p(-q_arr)))
        out = pos + neg
    out = np.where(out < 0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def _cell_terms(summary: BlockSummary, groups: ParameterGroups, null: np.ndarray) -> np.ndarray:
    """n * KL(alt || null) per upper cell, zero for empty or degenerate cells."""
    rows, cols, gid = groups.upper_cells
    n = summary.n[rows, cols].astype(float)
    e = summary.e[rows, cols].astype(float)
    q = null[gid]
    ok = (n > 0) & (q > 0) & (q < 1)
    q_safe = np.where(ok, q, 0.5)
    p = np.where(ok, e / np.where(n > 0, n, 1.0), 0.5)
    # n * KL(p || q) as log differences, so p == q cancels to exactly 0
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = np.where(e == 0, 0.0, e * (np.log(p) - np.log(q_safe)))
        neg = np.where(e == n, 0.0, (n - e) * (np.log1p(-p) - np.log1p(-q_safe)))
    t = np.where(ok, pos + neg, 0.0)
    return np.maximum(t, 0.0)


@dataclass(frozen=True)
class LlrReport:
    """Per-group -2 log LR statistics with the estimates they came from."""

    statistics: np.ndarray
    df: np.ndarray
    degenerate: np.ndarray
    null_estimates: np.ndarray
    alt_estimates: np.ndarray

    @property
    def global_statistic(self) -> float:
        return float(math.fsum(self.statistics))

    def rows(self) -> list[dict[str, Any]]:
        return [
            {"group_id": g, "df": int(self.df[g]), "stat": float(self.statistics[g]), "degenerate": bool(self.degenerate[g])}
            for g in range(len(self.statistics))
        ]

    def to_dict(self) -> dict[str, Any]:
        return {
            "global_statistic": self.global_statistic,
            "groups": self.rows(),
            "null_estimates": [None if np.isnan(v) else float(v) for v in self.null_estimates],
            "alt_estimates": np.where(np.isnan(self.alt_estimates), None, self.alt_estimates).tolist(),
        }


def llr_report(summary: BlockSummary, groups: ParameterGroups) -> LlrReport:
    null = mle_null(summary, groups)
    _, _, gid = groups.upper_cells
    terms = _cell_terms(summary, groups, null)
    stats = 2.0 * np.bincount(gid, weights=terms, minlength=len(groups))
    degenerate = np.isnan(null) | (null == 0) | (null == 1)
    return LlrReport(stats, groups.sizes - 1, degenerate, null, mle_alt(summary))


def llr_local(
    summary: BlockSummary,
    groups: ParameterGroups,
    group_id: int,
    alt: np.ndarray | None = None,
    null: np.ndarray | None = None,
) -> float:
    """-2 log LR of group ``group_id``: 2 * sum over its cells of n * KL(alt || null).

    ``alt`` and ``null`` default to the maximum-likelihood estimates.
    """
    _check_groups(summary, groups)
    if null is None:
        null = mle_null(summary, groups)
    q = float(null[group_id])
    if np.isnan(q) or q in (0.0, 1.0):
        return 0.0
    if alt is None:
        alt = mle_alt(summary)
    total = []
    for a, b in groups.members[group_id]:
        n = int(summary.n[a, b])
        if n > 0:
            total.append(n * kl_bernoulli(float(alt[a, b]), q))
    return 2.0 * math.fsum(total)


def llr_global(summary: BlockSummary, groups: ParameterGroups) -> float:
    """Sum of the local statistics over all groups."""
    return llr_report(summary, groups).global_statistic


def log_likelihood(summary: BlockSummary, P: np.ndarray) -> float:
    """Bernoulli log-likelihood of the summarized graph(s) under cell probabilities P."""
    rows, cols = np.triu_indices(summary.k_star)
    n = summary.n[rows, cols].astype(float)
    e = summary.e[rows, cols].astype(float)
    p = np.asarray(P, dtype=float)[rows, cols]
    return float(math.fsum(_xlogy(e, p) + _xlogy(n - e, 1 - p)))


@dataclass(frozen=True)
class BicReport:
    delta: float
    llr: float
    penalty: float
    preferred: str

    def to_dict(self) -> dict[str, Any]:
        return {"delta": self.delta, "llr": self.llr, "penalty": self.penalty, "preferred": self.preferred}


def bic_delta(summary: BlockSummary, groups: ParameterGroups) -> BicReport:
    """BIC difference: global LLR minus sum(|group| - 1) * log(total dyads).

    Negative values favour the tied model.  For a single graph the dyad total
    is C(n, 2); for a pooled summary it is the pooled dyad count.
    """
    if summary.n_vertices < 3 and summary.n_graphs == 1:
        raise ValueError("BIC needs at least 3 vertices")
    dyads = summary.n_dyads
    if dyads < 3:
        raise ValueError("BIC needs at least 3 dyads")
    llr = llr_global(summary, groups)
    penalty = groups.penalty_dof() * math.log(dyads)
    delta = llr - penalty
    return BicReport(delta, llr, penalty, "RMHSBM" if delta < 0 else "SBM")


def expected_pooled(P: np.ndarray, block_sizes: Iterable[int], groups: ParameterGroups) -> np.ndarray:
    """Dyad-weighted mean cell probability per group."""
    from .hierarchy import dyad_counts

    n = dyad_counts(list(block_sizes)).astype(float)
    n_g = groups.group_sum(n)
    with np.errstate(invalid="ignore", divide="ignore"):
        return groups.group_sum(n * np.asarray(P, dtype=float)) / n_g
