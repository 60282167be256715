"""Symbol histograms, empirical entropy and the training-loss terms.

Only forward values are computed here; gradients are not.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import EmptyInput, NonFiniteInput, ShapeMismatch


@dataclass(frozen=True)
class SymbolHistogram:
    counts: Mapping[int, int]
    total: int = field(init=False)

    def __post_init__(self):
        counts = {int(k): int(v) for k, v in self.counts.items() if v}
        if any(v < 0 for v in counts.values()):
            raise ValueError("negative count")
        object.__setattr__(self, "counts", dict(sorted(counts.items())))
        object.__setattr__(self, "total", sum(counts.values()))
        if self.total == 0:
            raise EmptyInput("histogram has no samples")

    @property
    def symbols(self) -> list[int]:
        return list(self.counts)

    def probability(self, symbol: int) -> float:
        return self.counts.get(symbol, 0) / self.total

    def probabilities(self) -> dict[int, float]:
        return {s: c / self.total for s, c in self.counts.items()}

    def merge(self, other: "SymbolHistogram") -> "SymbolHistogram":
        merged = Counter(self.counts)
        merged.update(other.counts)
        return SymbolHistogram(merged)

    def __add__(self, other):
        return self.merge(other)


@dataclass(frozen=True)
class LossWeights:
    beta: float = 2.0
    gamma: float = 2.0
    h_ref: float = 0.7

    def __post_init__(self):
        for name in ("beta", "gamma", "h_ref"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


def histogram(symbols) -> SymbolHistogram:
    arr = np.asarray(symbols)
    if arr.size == 0:
        raise EmptyInput("no symbols to histogram")
    values, counts = np.unique(arr.ravel(), return_counts=True)
    return SymbolHistogram(dict(zip(values.tolist(), counts.tolist())))


def merge_histograms(hists: Iterable[SymbolHistogram]) -> SymbolHistogram:
    total = Counter()
    for h in hists:
        total.update(h.counts)
    return SymbolHistogram(total)


def empirical_entropy(h: SymbolHistogram) -> float:
    """Shannon entropy of the histogram in bits per symbol."""
    n = h.total
    ent = 0.0
    for c in h.counts.values():
        p = c / n
        ent -= p * math.log2(p)
    return max(ent, 0.0)


def entropy_per_item(batch) -> list[float]:
    """Entropy of each item (first axis) measured on its own histogram."""
    arr = np.asarray(batch)
    if arr.size == 0:
        raise EmptyInput("empty batch")
    return [empirical_entropy(histogram(item)) for item in arr]


def dataset_entropy(batch) -> float:
    """Entropy of the pooled histogram over every item in the batch."""
    return empirical_entropy(histogram(batch))


def entropy_loss(h: SymbolHistogram, h_ref: float) -> float:
    if h_ref < 0:
        raise ValueError("h_ref must be nonnegative")
    return max(empirical_entropy(h) - h_ref, 0.0)


def mse(x, x_hat) -> float:
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise ShapeMismatch(f"{x.shape} vs {x_hat.shape}")
    if x.size == 0:
        raise EmptyInput("mse of empty tensors")
    return float(np.mean((x - x_hat) ** 2))


def joint_loss(mse_val: float, ent_loss: float, task_loss: float,
               w: LossWeights = LossWeights()) -> float:
    """Reconstruction + beta * entropy + gamma * task."""
    parts = (mse_val, ent_loss, task_loss)
    if not all(math.isfinite(v) for v in parts):
        raise NonFiniteInput(f"non-finite loss component in {parts}")
    return mse_val + w.beta * ent_loss + w.gamma * task_loss
