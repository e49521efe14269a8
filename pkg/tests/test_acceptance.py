"""Acceptance criteria 1-8, each at its stated tolerance and replicate count.

Every test records one PASS/FAIL line, printed in the terminal summary.
"""

import itertools
import math
import time

import numpy as np
import pytest

from conftest import record
from rmhsbm.estimation import aggregate_summaries, bic_delta, expected_pooled, kl_bernoulli, llr_global, llr_report, summarize
from rmhsbm.harness import Perturbation, StudyConfig, emit_figures, run_study
from rmhsbm.hierarchy import FlatModel, build_parameter_groups, bundled_spec, dyad_counts, two_level_spec
from rmhsbm.numeric import chi2_sf
from rmhsbm.sampling import (
    GraphSample,
    PerturbedModel,
    Seed,
    corrupt_parameters,
    draw_model_parameters,
    perturb_parameters,
    sample_conditional_sbm,
    sample_summary,
    tied_cells,
)
from rmhsbm.testing import bh_correct, wilks_global, wilks_outcomes


def _explicit_llr(A, tau, cell_group):
    """2 (max log L free - max log L tied) by walking every dyad of the adjacency matrix."""
    n = len(tau)
    cell_e, cell_n = {}, {}
    for i, j in itertools.combinations(range(n), 2):
        key = (min(tau[i], tau[j]), max(tau[i], tau[j]))
        cell_n[key] = cell_n.get(key, 0) + 1
        cell_e[key] = cell_e.get(key, 0) + int(A[i, j])
    grp_e, grp_n = {}, {}
    for key in cell_n:
        g = cell_group[key]
        grp_e[g] = grp_e.get(g, 0) + cell_e[key]
        grp_n[g] = grp_n.get(g, 0) + cell_n[key]

    def ll(p, x):
        return (math.log(p) if x else math.log1p(-p)) if 0 < p < 1 else 0.0

    l1 = l0 = 0.0
    for i, j in itertools.combinations(range(n), 2):
        key = (min(tau[i], tau[j]), max(tau[i], tau[j]))
        x = int(A[i, j])
        l1 += ll(cell_e[key] / cell_n[key], x)
        g = cell_group[key]
        l0 += ll(grp_e[g] / grp_n[g], x)
    return 2 * (l1 - l0)


def test_criterion_1_llr_equals_explicit_likelihood():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for r in range(50):
        motifs = list(rng.choice(["A", "B"], size=int(rng.integers(2, 4))))
        leaves = {"A": int(rng.integers(1, 3)), "B": int(rng.integers(1, 3))}
        k = sum(leaves[m] for m in motifs)
        sizes = rng.integers(2, 5, size=k)
        spec = two_level_spec(motifs, leaves, [int(s) for s in sizes])
        if spec.n_vertices > 30:
            spec = spec.with_block_sizes(max(2, 30 // k))
        groups = build_parameter_groups(spec)
        P = groups.broadcast(rng.uniform(0.05, 0.95, size=len(groups)))
        Z = np.triu(rng.normal(0, 0.2, P.shape))
        P = np.clip(P + Z + np.triu(Z, 1).T, 0.01, 0.99)
        g = sample_conditional_sbm(FlatModel(P, spec.block_sizes), spec.default_membership(), Seed(101).derive("g", r))
        cell_group = {(a, b): int(groups.cell_index[a, b]) for a in range(k) for b in range(a, k)}
        ours = llr_global(summarize(g, k), groups)
        oracle = _explicit_llr(g.adjacency(), g.membership.tolist(), cell_group)
        worst = max(worst, abs(ours - oracle))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed < 10
    record(1, ok, f"max |llr - explicit| = {worst:.2e} over 50 graphs (<= 1e-8), {elapsed:.2f} s (< 10 s)")
    assert ok


def test_criterion_2_bnu1_parameter_count():
    t0 = time.perf_counter()
    groups = build_parameter_groups(bundled_spec("bnu1"))
    n_groups, n_cells = len(groups), int(groups.sizes.sum())
    elapsed = time.perf_counter() - t0
    ok = n_groups == 631 and n_cells == 2485 and elapsed < 1
    record(2, ok, f"|groups| = {n_groups}, cells = {n_cells}, {elapsed:.2f} s")
    assert ok


def _ks_uniform(p):
    p = np.sort(np.asarray(p))
    n = len(p)
    return float(max(np.max(np.arange(1, n + 1) / n - p), np.max(p - np.arange(n) / n)))


def test_criterion_3_wilks_calibration():
    t0 = time.perf_counter()
    spec = two_level_spec(["M", "M"], {"M": 3}, 100)
    groups = build_parameter_groups(spec)
    tau = spec.default_membership()
    root = Seed(3)
    pvals, rejects = [], []
    for r in range(2000):
        model = draw_model_parameters(groups, seed=root.derive("params", r), block_sizes=spec.block_sizes)
        s = summarize(sample_conditional_sbm(model, tau, root.derive("graph", r)), spec.k_star)
        pvals += [o.p_value for o in wilks_outcomes(s, groups) if o.decision in ("fail", "reject")]
        rejects.append(wilks_global(s, groups).decision == "reject")
    ks, rate = _ks_uniform(pvals), float(np.mean(rejects))
    elapsed = time.perf_counter() - t0
    ok = ks <= 0.05 and 0.03 <= rate <= 0.07 and elapsed < 300
    record(3, ok, f"KS = {ks:.4f} (<= 0.05), global rejection = {rate:.4f} (in [0.03, 0.07]), {elapsed:.0f} s")
    assert ok


def test_criterion_4_local_statistic_growth_and_band():
    t0 = time.perf_counter()
    root = Seed(4)
    spec = two_level_spec(["M", "M"], {"M": 2}, 50)
    groups = build_parameter_groups(spec)
    base = draw_model_parameters(groups, seed=root.derive("base"), block_sizes=spec.block_sizes)
    s = perturb_parameters(base, 0.05, "population", root.derive("deviation")).deviations
    live = np.nonzero(groups.testable)[0]
    eps = min(abs(s[a, b] - np.mean([s[x, y] for x, y in groups.members[g]])) for g in live for a, b in groups.members[g])
    medians, worst_band = {}, 1.0
    for size in (50, 100, 200):
        sizes = [size] * spec.k_star
        model = PerturbedModel(FlatModel(base.B, sizes), s, "population", 0.05)
        n_g = groups.group_sum(dyad_counts(sizes))
        pooled = expected_pooled(model.effective(), sizes, groups)
        delta = np.minimum(pooled, 1 - pooled)
        stats = np.array([llr_report(sample_summary(model, root.derive("rep", size, r)), groups).statistics
                          for r in range(500)])[:, live]
        lo, hi = (eps**2 * n_g / 9)[live], (8 * n_g / delta)[live]
        worst_band = min(worst_band, float(((stats >= lo) & (stats <= hi)).mean(axis=0).min()))
        medians[size] = np.median(stats, axis=0)
    # superlinear: log-log slope of the median above 1 (doubling size more than doubles the median)
    slope = np.log(medians[200] / medians[50]) / np.log(4)
    elapsed = time.perf_counter() - t0
    ok = bool((slope > 1).all()) and worst_band >= 0.9 and elapsed < 600
    record(4, ok, f"min log-log slope = {slope.min():.2f} (> 1), min band frequency = {worst_band:.3f} (>= 0.9), "
                  f"eps_S = {eps:.2e}, {elapsed:.0f} s")
    assert ok


def test_criterion_5_bic_regimes():
    t0 = time.perf_counter()
    spec = bundled_spec("bnu1_desk")
    groups = build_parameter_groups(spec)
    root = Seed(5)
    support = (0.05, 0.45)  # densities bounded away from 0 and 1/2
    count = round(0.3 * len(tied_cells(groups)))
    null_neg, alt_pos = [], []
    for r in range(500):
        model = draw_model_parameters(groups, seed=root.derive("params", r), block_sizes=spec.block_sizes, support=support)
        null_neg.append(bic_delta(sample_summary(model, root.derive("null", r)), groups).delta < 0)
        bad = corrupt_parameters(model, groups, count, root.derive("corrupt", r), min_gap=0.15, support=support)
        alt_pos.append(bic_delta(sample_summary(bad, root.derive("alt", r)), groups).delta > 0)
    f0, f1 = float(np.mean(null_neg)), float(np.mean(alt_pos))
    elapsed = time.perf_counter() - t0
    ok = f0 >= 0.95 and f1 >= 0.95 and elapsed < 600
    record(5, ok, f"tied: delta < 0 in {f0:.3f}; {count} cells corrupted: delta > 0 in {f1:.3f} (both >= 0.95), {elapsed:.0f} s")
    assert ok


def test_criterion_6_rejection_curve():
    t0 = time.perf_counter()
    n_groups = len(build_parameter_groups(bundled_spec("bnu1_desk")))
    cfg = StudyConfig(spec="bnu1_desk", n_params=20, n_reps=10, S=1, seed=6, corruption_counts=tuple(range(n_groups + 1)),
                      perturbations=(Perturbation(0.0), Perturbation(0.01, "population")), methods=("wilks-aggregated",))
    res = run_study(cfg)
    first_tenth = [p for p in res.curve("none") if p.corruption <= 0.1 * n_groups]
    clean_ok = max(p.rejection_rate for p in first_tenth) >= 0.95
    noisy = res.curve("population-0.01")
    rate0 = noisy[0].rejection_rate
    crossing = next((p.corruption for p in noisy if p.bic_mean >= 0), None)
    bic_ok = crossing is None or crossing >= 0.03 * n_groups
    elapsed = time.perf_counter() - t0
    ok = clean_ok and rate0 >= 0.95 and bic_ok and elapsed < 1200
    record(6, ok, f"no variation: max rate in first 10% = {max(p.rejection_rate for p in first_tenth):.3f} (>= 0.95); "
                  f"1% perturbation: rate at 0 = {rate0:.3f} (>= 0.95), mean BIC first >= 0 at "
                  f"{crossing}/{n_groups} (>= 3%); {elapsed:.0f} s")
    assert ok


def test_criterion_7_robust_test_contrast():
    t0 = time.perf_counter()
    cfg = StudyConfig(spec="bnu1_desk", n_params=20, n_reps=10, S=10, seed=7, corruption_counts=(0,),
                      perturbations=(Perturbation(0.01, "population"),))
    rates = run_study(cfg).points[0].method_rates
    elapsed = time.perf_counter() - t0
    ok = (rates["wilks-individual"] >= 0.5 and rates["wilks-aggregated"] >= 0.5
          and rates["anova"] <= 0.1 and rates["friedman"] <= 0.1 and elapsed < 900)
    shown = ", ".join(f"{m} {v:.3f}" for m, v in rates.items())
    record(7, ok, f"rejection fractions: {shown} (chi2 >= 0.5, anova/friedman <= 0.1); {elapsed:.0f} s")
    assert ok


def test_criterion_8_property_suites(tmp_path):
    failures = []
    rng = np.random.default_rng(8)

    # Pinsker sandwich over the 99 x 49 grid
    P, Q = np.meshgrid(np.arange(1, 100) / 100, np.arange(1, 50) / 100, indexing="ij")
    kl, off = kl_bernoulli(P, Q), P != Q
    if not ((kl[off] > 2 * (P - Q)[off] ** 2).all() and (kl[off] < (2 / Q * (P - Q) ** 2)[off]).all() and (kl[~off] == 0).all()):
        failures.append("pinsker")

    # BH monotonicity and boundary laws
    for _ in range(2000):
        p = rng.beta(0.5, 1, size=rng.integers(1, 40))
        a1, a2 = np.sort(rng.uniform(0.001, 0.999, 2))
        r1, r2 = bh_correct(p, a1), bh_correct(p, a2)
        if (r1 & ~r2).any() or r2[p > a2].any() or not r2[p <= a2 / len(p)].all():
            failures.append("bh")
            break

    # LLR nonnegativity and additivity, summary merge associativity
    spec = bundled_spec("three_motif_desk").with_block_sizes(5)
    groups = build_parameter_groups(spec)
    model = perturb_parameters(draw_model_parameters(groups, seed=8, block_sizes=spec.block_sizes), 0.3, seed=8)
    graphs = [sample_conditional_sbm(model, spec.default_membership(), Seed(8).derive("g", i)) for i in range(12)]
    pop = [summarize(g, spec.k_star) for g in graphs]
    for s in pop:
        rep = llr_report(s, groups)
        if (rep.statistics < 0).any() or abs(rep.global_statistic - math.fsum(rep.statistics)) > 1e-9 * max(1, rep.global_statistic):
            failures.append("llr")
            break
    whole = aggregate_summaries(pop)
    order = rng.permutation(12)
    parts = aggregate_summaries([aggregate_summaries([pop[i] for i in order[:5]]), aggregate_summaries([pop[i] for i in order[5:]])])
    if not (np.array_equal(parts.n, whole.n) and np.array_equal(parts.e, whole.e)):
        failures.append("merge")

    # chi-square df = 2 closed form
    xs = np.linspace(0, 50, 5001)
    if max(abs(chi2_sf(float(x), 2).value - math.exp(-x / 2)) / math.exp(-x / 2) for x in xs) > 1e-12:
        failures.append("chi2-df2")

    # sampler 6-sigma frequency bands, n = 60, K* = 3, 2000 replicates
    Pm = np.array([[0.3, 0.1, 0.5], [0.1, 0.7, 0.05], [0.5, 0.05, 0.2]])
    small = FlatModel(Pm, [20, 20, 20])
    tau = np.repeat(np.arange(3), 20)
    counts = sum(summarize(sample_conditional_sbm(small, tau, Seed(88).derive("band", r)), 3).e for r in range(2000))
    trials = dyad_counts([20, 20, 20]) * 2000
    if not (np.abs(counts / trials - Pm) <= 6 * np.sqrt(Pm * (1 - Pm) / trials)).all():
        failures.append("6-sigma")

    # end-to-end seed determinism
    cfg = StudyConfig(nodes_per_block=8, n_params=2, n_reps=2, S=3, seed=8, corruption_counts=(0, 3))
    emit_figures(run_study(cfg), tmp_path / "a")
    emit_figures(run_study(cfg), tmp_path / "b")
    if any((tmp_path / "a" / f.name).read_bytes() != f.read_bytes() for f in (tmp_path / "b").iterdir()):
        failures.append("determinism")

    ok = not failures
    record(8, ok, "pinsker, bh, llr, merge, chi2 df=2, 6-sigma, determinism" + ("" if ok else f"; failed: {failures}"))
    assert ok
