"""Simulation studies: corruption and perturbation sweeps over a hierarchy spec.

One *unit* of work is (parameterization, perturbation setting, corruption
count, replicate).  Each unit draws its own population of ``S`` graph
summaries and runs the global LLR test, BIC and every per-group method.
Every unit's randomness comes from labels of the master seed, so units can
run in any order or in parallel without changing results.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .estimation import bic_delta
from .hierarchy import HierarchySpec, build_parameter_groups, resolve_spec
from .sampling import Seed, corrupt_parameters, draw_model_parameters, perturb_parameters, sample_population
from .testing import CODES, METHODS, run_tests, wilks_global


@dataclass(frozen=True)
class Perturbation:
    relative_sd: float = 0.0
    mode: str = "population"

    @property
    def label(self) -> str:
        return "none" if self.relative_sd == 0 else f"{self.mode}-{self.relative_sd:g}"


@dataclass(frozen=True)
class StudyConfig:
    """Sweep definition.  ``spec`` is a bundled spec name or a JSON path."""

    spec: str = "bnu1_desk"
    nodes_per_block: int | None = None
    n_params: int = 20
    n_reps: int = 10
    corruption_counts: tuple[int, ...] = (0, 1, 2, 5, 10)
    perturbations: tuple[Perturbation, ...] = (Perturbation(0.0), Perturbation(0.01, "population"))
    S: int = 10
    alpha: float = 0.05
    seed: int = 0
    shape_a: float = 1.0
    shape_b: float = 1.0
    methods: tuple[str, ...] = METHODS
    n_jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "corruption_counts", tuple(int(c) for c in self.corruption_counts))
        perts = tuple(p if isinstance(p, Perturbation) else Perturbation(**p) for p in self.perturbations)
        object.__setattr__(self, "perturbations", perts)
        object.__setattr__(self, "methods", tuple(self.methods))
        for name in ("n_params", "n_reps", "S", "n_jobs"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {v!r}")
        if self.S < 1:
            raise ValueError("S must be at least 1")
        if any(c < 0 for c in self.corruption_counts):
            raise ValueError("corruption_counts must be nonnegative")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.nodes_per_block is not None and self.nodes_per_block < 2:
            raise ValueError("nodes_per_block must be at least 2")
        for p in perts:
            if p.relative_sd < 0 or p.mode not in ("population", "per-individual"):
                raise ValueError(f"invalid perturbation {p}")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")
        if self.S < 2 and {"anova", "friedman"} & set(self.methods):
            raise ValueError("anova and friedman need S >= 2")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "StudyConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | Path) -> "StudyConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["corruption_counts"] = list(self.corruption_counts)
        d["methods"] = list(self.methods)
        d["perturbations"] = [asdict(p) for p in self.perturbations]
        return d

    def resolved_spec(self) -> HierarchySpec:
        spec = resolve_spec(self.spec)
        if self.nodes_per_block is not None:
            spec = spec.with_block_sizes(self.nodes_per_block)
        return spec


@dataclass
class SweepPoint:
    setting: str
    corruption: int
    replicates: int
    rejection_rate: float
    bic_mean: float
    bic_lo: float
    bic_hi: float
    bic_negative: float
    method_rates: dict[str, float] = field(default_factory=dict)
    rejection_matrices: dict[str, np.ndarray] = field(default_factory=dict)
    p_profiles: dict[str, list[tuple[float, float]]] = field(default_factory=dict)


@dataclass
class StudyResult:
    config: StudyConfig
    k_star: int
    n_groups: int
    points: list[SweepPoint]

    def point(self, setting: str, corruption: int) -> SweepPoint:
        for p in self.points:
            if p.setting == setting and p.corruption == corruption:
                return p
        raise KeyError((setting, corruption))

    def curve(self, setting: str) -> list[SweepPoint]:
        return [p for p in self.points if p.setting == setting]

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "k_star": self.k_star,
            "n_groups": self.n_groups,
            "points": [
                {
                    "setting": p.setting,
                    "corruption": p.corruption,
                    "replicates": p.replicates,
                    "rejection_rate": p.rejection_rate,
                    "bic_mean": p.bic_mean,
                    "bic_lo": p.bic_lo,
                    "bic_hi": p.bic_hi,
                    "bic_negative": p.bic_negative,
                    "method_rates": p.method_rates,
                }
                for p in self.points
            ],
        }


def _unit(config: StudyConfig, spec: HierarchySpec, groups, key: tuple[int, int, int, int]) -> dict[str, Any]:
    p_idx, s_idx, c_idx, rep = key
    root = Seed(config.seed)
    pert = config.perturbations[s_idx]
    count = config.corruption_counts[c_idx]
    base = draw_model_parameters(groups, config.shape_a, config.shape_b, root.derive("params", p_idx), spec.block_sizes)
    model = corrupt_parameters(
        base, groups, count, root.derive("corrupt", p_idx, count), config.shape_a, config.shape_b
    )
    if pert.relative_sd > 0:
        # one deviation draw per parameterization, shared by its replicates
        model = perturb_parameters(model, pert.relative_sd, pert.mode, root.derive("perturb", p_idx, s_idx))
    population = sample_population(model, config.S, root.derive("sample", p_idx, s_idx, count, rep))
    rejects, bics = [], []
    for summary in population:
        rejects.append(wilks_global(summary, groups, config.alpha).decision == "reject")
        bics.append(bic_delta(summary, groups).delta)
    out: dict[str, Any] = {"rate": float(np.mean(rejects)), "bic": float(np.mean(bics)), "methods": {}}
    for method in config.methods:
        report = run_tests(population, groups, method, config.alpha)
        if method == "wilks-individual":
            cell = np.nan_to_num(report.rates)[groups.cell_index]
        else:
            cell = (report.rejection_matrix == CODES["reject"]).astype(float)
        out["methods"][method] = (report.rejection_fraction(), cell, report.p_profile)
    return out


def _run_chunk(args):
    config, keys = args
    spec = config.resolved_spec()
    groups = build_parameter_groups(spec)
    return [(k, _unit(config, spec, groups, k)) for k in keys]


def run_study(config: StudyConfig) -> StudyResult:
    """Run every sweep point; deterministic given ``config.seed``."""
    spec = config.resolved_spec()
    groups = build_parameter_groups(spec)
    keys = [
        (p, s, c, r)
        for s in range(len(config.perturbations))
        for c in range(len(config.corruption_counts))
        for p in range(config.n_params)
        for r in range(config.n_reps)
    ]
    if config.n_jobs > 1 and len(keys) > 1:
        chunks = [keys[i:: config.n_jobs] for i in range(config.n_jobs)]
        with ProcessPoolExecutor(config.n_jobs) as pool:
            results = dict(kv for part in pool.map(_run_chunk, [(config, ch) for ch in chunks]) for kv in part)
    else:
        results = {k: _unit(config, spec, groups, k) for k in keys}

    points = []
    for s_idx, pert in enumerate(config.perturbations):
        for c_idx, count in enumerate(config.corruption_counts):
            units = [results[k] for k in sorted(results) if k[1] == s_idx and k[2] == c_idx]
            if not units:
                continue
            bics = np.array([u["bic"] for u in units])
            point = SweepPoint(
                setting=pert.label,
                corruption=count,
                replicates=len(units),
                rejection_rate=float(np.mean([u["rate"] for u in units])),
                bic_mean=float(bics.mean()),
                bic_lo=float(np.quantile(bics, 0.025)),
                bic_hi=float(np.quantile(bics, 0.975)),
                bic_negative=float(np.mean(bics < 0)),
            )
            for method in config.methods:
                fracs = [u["methods"][method][0] for u in units]
                point.method_rates[method] = float(np.nanmean(fracs)) if not np.all(np.isnan(fracs)) else math.nan
                point.rejection_matrices[method] = np.mean([u["methods"][method][1] for u in units], axis=0)
                # the first replicate of the first parameterization is the example profile
                point.p_profiles[method] = units[0]["methods"][method][2]
            points.append(point)
    return StudyResult(config, spec.k_star, len(groups), points)


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_figures(result: StudyResult, out_dir: str | Path) -> list[Path]:
    """Write the sweep as long-format CSVs; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    curve = out / "rejection_curve.csv"
    with curve.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["setting", "corruption", "rejection_rate", "bic_mean", "bic_lo", "bic_hi", "bic_negative", "replicates"])
        for p in result.points:
            w.writerow([p.setting, p.corruption, _fmt(p.rejection_rate), _fmt(p.bic_mean), _fmt(p.bic_lo),
                        _fmt(p.bic_hi), _fmt(p.bic_negative), p.replicates])
    paths.append(curve)

    for method in result.config.methods:
        mpath = out / f"rejection_matrix_{method}.csv"
        with mpath.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["setting", "corruption", "row", "col", "rate"])
            for p in result.points:
                M = p.rejection_matrices[method]
                for i in range(M.shape[0]):
                    for j in range(M.shape[1]):
                        w.writerow([p.setting, p.corruption, i, j, _fmt(M[i, j])])
        ppath = out / f"p_profile_{method}.csv"
        with ppath.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["setting", "corruption", "rank", "p", "bh_line"])
            for p in result.points:
                for rank, (pv, line) in enumerate(p.p_profiles[method], start=1):
                    w.writerow([p.setting, p.corruption, rank, _fmt(pv), _fmt(line)])
        paths += [mpath, ppath]

    summary = out / "study_result.json"
    summary.write_text(json.dumps(result.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    paths.append(summary)
    return paths


def percent_corrupted(count: int, n_groups: int) -> float:
    """Corruption count as a percentage of the number of parameters |groups|."""
    return 100.0 * count / n_groups

