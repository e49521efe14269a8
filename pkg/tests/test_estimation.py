import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rmhsbm.estimation import (
    BlockSummary,
    aggregate_summaries,
    bic_delta,
    expected_pooled,
    kl_bernoulli,
    llr_global,
    llr_local,
    llr_report,
    log_likelihood,
    mle_alt,
    mle_null,
    summarize,
)
from rmhsbm.hierarchy import ParameterGroups, build_parameter_groups, bundled_spec, dyad_counts
from rmhsbm.sampling import GraphSample, Seed, draw_model_parameters, perturb_parameters, sample_conditional_sbm

PAIR = ParameterGroups(2, (((0, 0), (0, 1)), ((1, 1),)))
# sizes (5, 2): cells (0,0) and (0,1) both have 10 dyads
EXAMPLE = BlockSummary(np.array([[10, 10], [10, 1]]), np.array([[3, 5], [5, 0]]), 7)


@st.composite
def summaries(draw, k=3):
    n = np.zeros((k, k), dtype=np.int64)
    e = np.zeros((k, k), dtype=np.int64)
    for a in range(k):
        for b in range(a, k):
            n[a, b] = n[b, a] = draw(st.integers(0, 60))
            e[a, b] = e[b, a] = draw(st.integers(0, int(n[a, b])))
    return BlockSummary(n, e, 10)


@st.composite
def partitions(draw, k=3):
    cells = [(a, b) for a in range(k) for b in range(a, k)]
    labels = draw(st.lists(st.integers(0, 3), min_size=len(cells), max_size=len(cells)))
    index = np.zeros((k, k), dtype=np.int64)
    for (a, b), lab in zip(cells, labels):
        index[a, b] = index[b, a] = lab
    return ParameterGroups.from_cell_index(index)


def test_kl_frozen_value():
    # extended-precision oracle: 0.021600854143546534773
    assert kl_bernoulli(0.3, 0.4) == pytest.approx(0.021600854143546534773, rel=1e-14)


def test_kl_conventions():
    assert kl_bernoulli(0.0, 0.3) == pytest.approx(-math.log(0.7))
    assert kl_bernoulli(1.0, 1.0) == 0.0
    assert kl_bernoulli(0.0, 0.0) == 0.0
    assert kl_bernoulli(0.5, 0.0) == math.inf
    assert kl_bernoulli(0.5, 1.0) == math.inf
    with pytest.raises(ValueError):
        kl_bernoulli(1.2, 0.5)
    with pytest.raises(ValueError):
        kl_bernoulli(0.5, float("nan"))


@given(st.floats(0, 1))
def test_kl_self_is_zero(p):
    assert kl_bernoulli(p, p) == 0.0


def test_pinsker_sandwich_grid():
    p = np.arange(1, 100) / 100
    q = np.arange(1, 50) / 100
    P, Q = np.meshgrid(p, q, indexing="ij")
    kl = kl_bernoulli(P, Q)
    lower, upper = 2 * (P - Q) ** 2, (2 / Q) * (P - Q) ** 2
    off = P != Q
    assert (kl[off] > lower[off]).all()
    assert (kl[off] < upper[off]).all()
    assert (kl[~off] == 0).all()


def test_mle_example():
    assert mle_null(EXAMPLE, PAIR)[0] == pytest.approx(0.4, abs=1e-15)
    assert mle_null(EXAMPLE, PAIR)[1] == 0.0
    alt = mle_alt(EXAMPLE)
    assert alt[0, 0] == 0.3 and alt[0, 1] == 0.5


def test_mle_null_grid_maximizer():
    # pooled likelihood over the group maximized on a fine grid lands at 0.4
    grid = np.linspace(0.001, 0.999, 9981)
    ll = 8 * np.log(grid) + 12 * np.log1p(-grid)
    assert grid[np.argmax(ll)] == pytest.approx(0.4, abs=1e-4)


def test_llr_local_example():
    # oracle: 2 * (10 kl(0.3, 0.4) + 10 kl(0.5, 0.4)) at 30 digits = 0.84023702807348199101
    assert llr_local(EXAMPLE, PAIR, 0) == pytest.approx(0.84023702807348199101, rel=1e-12)
    assert llr_local(EXAMPLE, PAIR, 1) == 0.0
    assert llr_global(EXAMPLE, PAIR) == pytest.approx(0.84023702807348199101, rel=1e-12)


def test_llr_matches_explicit_likelihoods():
    alt = mle_alt(EXAMPLE)
    null = PAIR.broadcast(mle_null(EXAMPLE, PAIR))
    explicit = 2 * (log_likelihood(EXAMPLE, np.nan_to_num(alt)) - log_likelihood(EXAMPLE, null))
    assert llr_global(EXAMPLE, PAIR) == pytest.approx(explicit, abs=1e-12)


def test_singleton_and_homogeneous_groups_are_zero():
    s = BlockSummary(np.array([[10, 20], [20, 1]]), np.array([[3, 6], [6, 1]]), 7)
    rep = llr_report(s, PAIR)
    assert rep.statistics.tolist() == [0.0, 0.0]
    assert rep.degenerate.tolist() == [False, True]
    assert rep.df.tolist() == [1, 0]


def test_empty_cells_contribute_nothing():
    s = BlockSummary(np.array([[0, 10], [10, 0]]), np.array([[0, 4], [4, 0]]), 10)
    assert llr_global(s, PAIR) == 0.0


@given(summaries(), partitions())
def test_llr_nonnegative_and_additive(summary, groups):
    rep = llr_report(summary, groups)
    assert (rep.statistics >= 0).all()
    total = rep.global_statistic
    parts = math.fsum(llr_local(summary, groups, g) for g in range(len(groups)))
    assert total == pytest.approx(parts, rel=1e-9, abs=1e-12)


@given(summaries(), partitions())
def test_llr_zero_iff_rates_equal(summary, groups):
    rep = llr_report(summary, groups)
    alt = mle_alt(summary)
    for g, cells in enumerate(groups.members):
        rates = {alt[a, b] for a, b in cells if summary.n[a, b] > 0}
        if len(rates) <= 1:
            assert rep.statistics[g] == 0.0
        else:
            assert rep.statistics[g] > 0.0


@given(summaries(), partitions())
def test_weighted_mean_identity(summary, groups):
    null = mle_null(summary, groups)
    for g, cells in enumerate(groups.members):
        n = sum(int(summary.n[a, b]) for a, b in cells)
        if n:
            e = sum(int(summary.e[a, b]) for a, b in cells)
            assert null[g] == e / n


@given(summaries(), partitions())
def test_llr_likelihood_oracle(summary, groups):
    null = groups.broadcast(np.nan_to_num(mle_null(summary, groups)))
    alt = np.nan_to_num(mle_alt(summary))
    explicit = 2 * (log_likelihood(summary, alt) - log_likelihood(summary, null))
    assert llr_global(summary, groups) == pytest.approx(explicit, abs=1e-8)


def _random_graph(n, k, rng):
    tau = rng.integers(0, k, size=n)
    pairs = np.array(list(itertools.combinations(range(n), 2)))
    keep = rng.random(len(pairs)) < rng.uniform(0.1, 0.9)
    return GraphSample(n, tau, pairs[keep])


def test_summarize_counts_by_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(20):
        g = _random_graph(15, 3, rng)
        s = summarize(g, 3)
        A = g.adjacency()
        for a in range(3):
            for b in range(3):
                ia = np.nonzero(g.membership == a)[0]
                ib = np.nonzero(g.membership == b)[0]
                block = A[np.ix_(ia, ib)]
                if a == b:
                    assert s.e[a, a] == block.sum() // 2
                    assert s.n[a, a] == len(ia) * (len(ia) - 1) // 2
                else:
                    assert s.e[a, b] == block.sum()
                    assert s.n[a, b] == len(ia) * len(ib)


@given(st.lists(st.integers(0, 2**31 - 1), min_size=2, max_size=6), st.randoms())
def test_aggregation_associative_and_order_free(seeds, rnd):
    pop = [summarize(_random_graph(8, 3, np.random.default_rng(s)), 3) for s in seeds]
    whole = aggregate_summaries(pop)
    cut = rnd.randint(1, len(pop) - 1)
    left, right = aggregate_summaries(pop[:cut]), aggregate_summaries(pop[cut:])
    merged = aggregate_summaries([left, right])
    shuffled = list(pop)
    rnd.shuffle(shuffled)
    for other in (merged, aggregate_summaries(shuffled)):
        assert np.array_equal(other.n, whole.n) and np.array_equal(other.e, whole.e)
        assert other.n_graphs == whole.n_graphs == len(pop)


def test_aggregate_rejects_mismatch():
    with pytest.raises(ValueError):
        aggregate_summaries([])
    with pytest.raises(ValueError):
        aggregate_summaries([EXAMPLE, BlockSummary(np.zeros((3, 3)), np.zeros((3, 3)), 0)])


def test_summary_validation_and_roundtrip():
    with pytest.raises(ValueError):
        BlockSummary(np.array([[1, 2], [2, 1]]), np.array([[2, 0], [0, 0]]), 3)
    again = BlockSummary.from_dict(json.loads(json.dumps(EXAMPLE.to_dict())))
    assert np.array_equal(again.e, EXAMPLE.e) and again.n_vertices == 7


def test_bic_tied_example():
    # one group of two cells with identical rates on 100 vertices: delta = -log C(100, 2)
    groups = ParameterGroups(2, (((0, 0), (1, 1)), ((0, 1),)))
    n = dyad_counts([50, 50])
    e = np.array([[245, 500], [500, 245]])
    rep = bic_delta(BlockSummary(n, e, 100), groups)
    assert rep.llr == 0.0
    assert rep.delta == pytest.approx(-8.5071428555627359855, rel=1e-14)
    assert rep.preferred == "RMHSBM"


def test_bic_identity_and_singletons():
    spec = bundled_spec("bnu1_desk")
    groups = build_parameter_groups(spec)
    model = perturb_parameters(draw_model_parameters(groups, seed=2, block_sizes=spec.block_sizes), 0.2, seed=2)
    s = summarize(sample_conditional_sbm(model, spec.default_membership(), Seed(2)), spec.k_star)
    rep = bic_delta(s, groups)
    assert rep.delta == rep.llr - rep.penalty
    assert rep.penalty == groups.penalty_dof() * math.log(280 * 279 // 2)
    idx = np.arange(14)
    singles = ParameterGroups.from_cell_index(np.minimum.outer(idx, idx) * 14 + np.maximum.outer(idx, idx))
    assert len(singles) == 105
    rep = bic_delta(s, singles)
    assert rep.penalty == 0 and rep.delta == 0.0


def test_bic_rejects_tiny_graphs():
    s = BlockSummary(np.array([[1]]), np.array([[0]]), 2)
    with pytest.raises(ValueError):
        bic_delta(s, ParameterGroups(1, (((0, 0),),)))


def test_expected_pooled():
    P = np.array([[0.2, 0.4], [0.4, 0.9]])
    pooled = expected_pooled(P, [5, 2], PAIR)
    assert pooled[0] == pytest.approx(0.3) and pooled[1] == pytest.approx(0.9)


def test_report_serializes():
    d = llr_report(EXAMPLE, PAIR).to_dict()
    json.dumps(d)
    assert d["groups"][0] == {"group_id": 0, "df": 1, "stat": pytest.approx(0.8402370280734819), "degenerate": False}
