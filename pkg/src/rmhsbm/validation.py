"""Input checks shared by the estimator wrappers and the command line."""

from __future__ import annotations

from typing import Any

import numpy as np

from .estimation import BlockSummary, summarize
from .sampling import GraphSample


def check_alpha(alpha: float) -> float:
    if isinstance(alpha, bool) or not isinstance(alpha, (int, float, np.floating)) or not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    return float(alpha)


def check_probability_matrix(B: Any, name: str = "B") -> np.ndarray:
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError(f"{name} must be square, got shape {B.shape}")
    if np.isnan(B).any() or (B < 0).any() or (B > 1).any():
        raise ValueError(f"{name} entries must lie in [0, 1]")
    if not np.array_equal(B, B.T):
        raise ValueError(f"{name} must be symmetric")
    return B


def check_population(X: Any, k_star: int | None = None) -> list[BlockSummary]:
    """Normalize graphs or summaries (or one of either) to a list of summaries."""
    if isinstance(X, (BlockSummary, GraphSample)):
        X = [X]
    try:
        items = list(X)
    except TypeError:
        raise TypeError(f"expected a sequence of graphs or block summaries, got {type(X).__name__}") from None
    if not items:
        raise ValueError("population is empty")
    out = []
    for i, item in enumerate(items):
        if isinstance(item, GraphSample):
            item = summarize(item, k_star)
        elif not isinstance(item, BlockSummary):
            raise TypeError(f"population[{i}] is {type(item).__name__}, expected GraphSample or BlockSummary")
        if k_star is not None and item.k_star != k_star:
            raise ValueError(f"population[{i}] has K*={item.k_star}, expected {k_star}")
        out.append(item)
    return out
