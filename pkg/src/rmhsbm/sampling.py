"""Parameter draws, corruption, perturbation and conditional SBM sampling."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .estimation import BlockSummary
from .hierarchy import FlatModel, ParameterGroups, dyad_counts

DRAW_CLIP = (0.01, 0.99)
PERTURB_CLIP = (0.001, 0.999)
_MASK64 = (1 << 64) - 1


def _label_word(label: Any) -> int:
    # stable across processes, unlike hash()
    text = f"{type(label).__name__}:{label}".encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little")


@dataclass(frozen=True)
class Seed:
    """Master seed plus a path of stream labels.

    Derived generators come from ``numpy.random.SeedSequence`` with the
    labels hashed (blake2b) into its spawn key, so a replicate's stream
    depends only on its labels and never on execution order.
    """

    master_seed: int
    labels: tuple = ()

    def __post_init__(self):
        if isinstance(self.master_seed, bool) or int(self.master_seed) != self.master_seed:
            raise ValueError(f"master_seed must be an integer, got {self.master_seed!r}")
        object.__setattr__(self, "master_seed", int(self.master_seed) & _MASK64)
        object.__setattr__(self, "labels", tuple(self.labels))

    def derive(self, *labels: Any) -> "Seed":
        return Seed(self.master_seed, self.labels + labels)

    def sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.master_seed, spawn_key=tuple(_label_word(x) for x in self.labels))

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.sequence())


def as_seed(seed: Seed | int | None) -> Seed:
    if isinstance(seed, Seed):
        return seed
    return Seed(0 if seed is None else seed)


@dataclass(frozen=True)
class GraphSample:
    """Simple undirected hollow graph with a block membership vector."""

    vertex_count: int
    membership: np.ndarray
    edges: np.ndarray = field(default=None)

    def __post_init__(self):
        n = int(self.vertex_count)
        tau = np.array(self.membership, dtype=np.int64).reshape(-1)
        if tau.shape != (n,):
            raise ValueError(f"membership has {tau.size} entries for {n} vertices")
        if n and tau.min() < 0:
            raise ValueError("membership labels must be nonnegative")
        edges = np.zeros((0, 2), dtype=np.int64) if self.edges is None else np.array(self.edges, dtype=np.int64)
        if edges.size == 0:
            edges = edges.reshape(0, 2)
        if edges.ndim != 2 or edges.shape[1] != 2:
            raise ValueError(f"edges must have shape (m, 2), got {edges.shape}")
        if (edges < 0).any() or (edges >= n).any():
            raise ValueError("edge endpoint out of range")
        if (edges[:, 0] == edges[:, 1]).any():
            raise ValueError("self-loops are not allowed")
        edges = np.sort(edges, axis=1)
        edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
        if len(edges) > 1 and (np.diff(edges, axis=0) == 0).all(axis=1).any():
            raise ValueError("duplicate edges")
        for arr in (tau, edges):
            arr.setflags(write=False)
        object.__setattr__(self, "vertex_count", n)
        object.__setattr__(self, "membership", tau)
        object.__setattr__(self, "edges", edges)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.vertex_count, self.vertex_count), dtype=np.int8)
        A[self.edges[:, 0], self.edges[:, 1]] = 1
        A[self.edges[:, 1], self.edges[:, 0]] = 1
        return A


@dataclass(frozen=True)
class PerturbedModel:
    """Base model plus symmetric per-cell deviations.

    In ``population`` mode the deviations are fixed for every graph.  In
    ``per-individual`` mode ``deviations`` holds the draw for graph 0 and
    graph ``i`` gets its own draw from ``seed.derive("individual", i)``.
    """

    base: FlatModel
    deviations: np.ndarray
    mode: str = "population"
    relative_sd: float = 0.0
    seed: Seed = field(default_factory=lambda: Seed(0))

    def __post_init__(self):
        if self.mode not in ("population", "per-individual"):
            raise ValueError(f"mode must be 'population' or 'per-individual', got {self.mode!r}")
        dev = np.array(self.deviations, dtype=float)
        if dev.shape != self.base.B.shape:
            raise ValueError("deviations must match the base matrix shape")
        if not np.array_equal(dev, dev.T):
            raise ValueError("deviations must be symmetric")
        dev.setflags(write=False)
        object.__setattr__(self, "deviations", dev)

    @property
    def k_star(self) -> int:
        return self.base.k_star

    @property
    def block_sizes(self) -> np.ndarray:
        return self.base.block_sizes

    def deviations_for(self, index: int = 0) -> np.ndarray:
        if self.mode == "population" or index == 0:
            return self.deviations
        return _draw_deviations(self.base.B, self.relative_sd, self.seed.derive("individual", int(index)).rng())

    def effective(self, index: int = 0) -> np.ndarray:
        """Cell probabilities seen by graph ``index``."""
        dev = self.deviations_for(index)
        # re-clip: B + (eff - B) can miss eff by one ulp
        return np.where(dev == 0, self.base.B, np.clip(self.base.B + dev, *PERTURB_CLIP))


def _draw_deviations(B: np.ndarray, relative_sd: float, rng: np.random.Generator) -> np.ndarray:
    K = B.shape[0]
    z = rng.standard_normal((K, K))
    z = np.triu(z) + np.triu(z, 1).T
    s = relative_sd * B * z
    eff = np.where(s == 0, B, np.clip(B + s, *PERTURB_CLIP))
    return eff - B


def _check_shapes(shape_a: float, shape_b: float) -> None:
    if not (shape_a > 0 and shape_b > 0):
        raise ValueError(f"shape parameters must be positive, got ({shape_a}, {shape_b})")


def draw_model_parameters(
    groups: ParameterGroups,
    shape_a: float = 1.0,
    shape_b: float = 1.0,
    seed: Seed | int = 0,
    block_sizes: Sequence[int] | None = None,
    support: tuple[float, float] = (0.0, 1.0),
) -> FlatModel:
    """One Beta(shape_a, shape_b) draw per group, broadcast and clipped to [0.01, 0.99].

    ``support`` rescales the Beta variable onto a sub-interval before clipping.
    """
    _check_shapes(shape_a, shape_b)
    _check_support(support)
    rng = as_seed(seed).rng()
    values = _draw(rng, shape_a, shape_b, support, len(groups))
    return FlatModel(groups.broadcast(values), block_sizes)


def _check_support(support: tuple[float, float]) -> None:
    lo, hi = support
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError(f"support must satisfy 0 <= lo < hi <= 1, got {support}")


def _draw(rng, shape_a, shape_b, support, size=None):
    lo, hi = support
    return np.clip(lo + (hi - lo) * rng.beta(shape_a, shape_b, size=size), *DRAW_CLIP)


def tied_cells(groups: ParameterGroups) -> list[tuple[int, int]]:
    """Cells that belong to groups of size >= 2, in group order."""
    return [cell for g, cells in enumerate(groups.members) if len(cells) >= 2 for cell in cells]


def corrupt_parameters(
    model: FlatModel,
    groups: ParameterGroups,
    count: int,
    seed: Seed | int = 0,
    shape_a: float = 1.0,
    shape_b: float = 1.0,
    min_gap: float = 0.0,
    support: tuple[float, float] = (0.0, 1.0),
    max_tries: int = 10_000,
) -> FlatModel:
    """Redraw ``count`` tied cells independently, breaking their ties.

    Each redraw is repeated until it differs from the cell's old value by
    more than ``min_gap`` (and is not equal to it).
    """
    _check_shapes(shape_a, shape_b)
    _check_support(support)
    if count < 0:
        raise ValueError("count must be nonnegative")
    candidates = tied_cells(groups)
    if count > len(candidates):
        raise ValueError(f"count {count} exceeds the {len(candidates)} cells in tied groups")
    if count == 0:
        return model
    rng = as_seed(seed).rng()
    picks = rng.choice(len(candidates), size=count, replace=False)
    B = np.array(model.B)
    for p in sorted(picks):
        a, b = candidates[p]
        old = B[a, b]
        for _ in range(max_tries):
            new = float(_draw(rng, shape_a, shape_b, support))
            if new != old and abs(new - old) >= min_gap:
                break
        else:
            raise ValueError(f"could not draw a value at least {min_gap} away from {old}")
        B[a, b] = B[b, a] = new
    return FlatModel(B, model.block_sizes)


def perturb_parameters(
    model: FlatModel,
    relative_sd: float = 0.01,
    mode: str = "population",
    seed: Seed | int = 0,
) -> PerturbedModel:
    """Add Normal(0, (relative_sd * B)^2) deviations, clipped into [0.001, 0.999].

    Cells whose deviation is exactly zero (relative_sd = 0 or B = 0) are left
    untouched, so a zero-sd perturbation is the identity.
    """
    if not relative_sd >= 0:
        raise ValueError(f"relative_sd must be nonnegative, got {relative_sd}")
    seed = as_seed(seed)
    dev = _draw_deviations(model.B, relative_sd, seed.derive("individual", 0).rng())
    return PerturbedModel(model, dev, mode, float(relative_sd), seed)


def _blocks(tau: np.ndarray, k_star: int) -> list[np.ndarray]:
    order = np.argsort(tau, kind="stable")
    bounds = np.searchsorted(tau[order], np.arange(k_star + 1))
    return [order[bounds[k]:bounds[k + 1]] for k in range(k_star)]


def _check_tau(tau: Any, k_star: int) -> np.ndarray:
    tau = np.asarray(tau, dtype=np.int64).reshape(-1)
    if tau.size and (tau.min() < 0 or tau.max() >= k_star):
        raise ValueError(f"membership references a block outside [0, {k_star})")
    return tau


def sample_conditional_sbm(
    model: FlatModel | PerturbedModel,
    tau: Any,
    seed: Seed | int = 0,
    index: int = 0,
) -> GraphSample:
    """Draw every dyad independently with its block pair's probability.

    ``index`` selects the graph's deviations for a per-individual model.
    """
    P = model.effective(index)
    tau = _check_tau(tau, P.shape[0])
    rng = as_seed(seed).rng()
    blocks = _blocks(tau, P.shape[0])
    parts = []
    for a in range(P.shape[0]):
        va = blocks[a]
        if len(va) > 1:
            i, j = np.triu_indices(len(va), 1)
            hit = rng.random(len(i)) < P[a, a]
            parts.append(np.column_stack((va[i[hit]], va[j[hit]])))
        for b in range(a + 1, P.shape[0]):
            vb = blocks[b]
            if len(va) and len(vb):
                hit = rng.random((len(va), len(vb))) < P[a, b]
                i, j = np.nonzero(hit)
                parts.append(np.column_stack((va[i], vb[j])))
    edges = np.concatenate(parts) if parts else np.zeros((0, 2), dtype=np.int64)
    return GraphSample(len(tau), tau, edges)


def sample_summary(
    model: FlatModel | PerturbedModel,
    seed: Seed | int = 0,
    index: int = 0,
) -> BlockSummary:
    """Block summary of a conditional SBM draw without materializing edges.

    Edge counts are Binomial(n_cell, p_cell), which is the exact distribution
    of the summary of :func:`sample_conditional_sbm` (not the same stream).
    """
    P = model.effective(index)
    n = dyad_counts(model.block_sizes)
    rng = as_seed(seed).rng()
    rows, cols = np.triu_indices(P.shape[0])
    e_up = rng.binomial(n[rows, cols], P[rows, cols])
    e = np.zeros_like(n)
    e[rows, cols] = e_up
    e[cols, rows] = e_up
    return BlockSummary(n, e, int(np.sum(model.block_sizes)))


def sample_population(
    model: FlatModel | PerturbedModel,
    n_graphs: int,
    seed: Seed | int = 0,
    tau: Any = None,
    summaries_only: bool = True,
) -> list:
    """``n_graphs`` independent graphs (or their summaries), graph i seeded by label ("graph", i)."""
    seed = as_seed(seed)
    if summaries_only:
        return [sample_summary(model, seed.derive("graph", i), index=i) for i in range(n_graphs)]
    if tau is None:
        tau = np.repeat(np.arange(model.k_star), model.block_sizes)
    return [sample_conditional_sbm(model, tau, seed.derive("graph", i), index=i) for i in range(n_graphs)]


def signal_to_noise(model: FlatModel | PerturbedModel, groups: ParameterGroups) -> float:
    """Signal-to-noise ratio of the tied structure, evaluated as printed.

    For each group: dyad-weighted mean cell probability over the dyad-weighted
    sum of squared deviations of the cell probabilities from that mean; the
    result is the max over groups.  Singleton groups have zero deviation by
    construction and would make every model infinite, so they are skipped.
    A zero denominator in any tied group gives ``inf``.
    """
    P = model.effective(0)
    n = dyad_counts(model.block_sizes).astype(float)
    n_g = groups.group_sum(n)
    keep = groups.testable & (n_g > 0)
    if not keep.any():
        return float("inf")
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(n_g > 0, groups.group_sum(n * P) / n_g, 0.0)
    resid = groups.group_sum(n * (P - groups.broadcast(mean)) ** 2)
    if (resid[keep] == 0).any():
        return float("inf")
    return float(np.max(mean[keep] / resid[keep]))
