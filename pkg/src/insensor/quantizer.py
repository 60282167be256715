"""Symmetric uniform quantization with a momentum-tracked range.

Symbols are signed integers in ``[-(2**(n-1) - 1), 2**(n-1) - 1]``, i.e.
``2**n - 1`` levels centred on zero, and the step is
``q_scale = 2 * range_max / (2**n - 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateRange, EmptyBatch, SymbolOutOfRange


@dataclass(frozen=True)
class QuantizerState:
    bits: int = 4
    range_max: float = 1.0
    momentum: float = 0.9

    def __post_init__(self):
        if not 2 <= self.bits <= 8:
            raise ValueError(f"bits must be in 2..8, got {self.bits}")
        if not self.range_max >= 0:
            raise ValueError(f"range_max must be >= 0, got {self.range_max}")
        if not 0 <= self.momentum < 1:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")

    @property
    def max_symbol(self) -> int:
        return symbol_limit(self.bits)


def symbol_limit(bits: int) -> int:
    """Largest symbol magnitude at ``bits`` precision."""
    return 2 ** (bits - 1) - 1


def q_scale(state: QuantizerState) -> float:
    if state.range_max <= 0:
        raise DegenerateRange("range_max is 0; quantization step undefined")
    return 2.0 * state.range_max / (2 ** state.bits - 1)


def quantize(z, state: QuantizerState) -> np.ndarray:
    """Round ``z / q_scale`` half away from zero, then clamp to the symbol set."""
    step = q_scale(state)
    z = np.asarray(z, dtype=np.float64)
    q = np.sign(z) * np.floor(np.abs(z) / step + 0.5)
    lim = state.max_symbol
    return np.clip(q, -lim, lim).astype(np.int8)


def dequantize(q, state: QuantizerState) -> np.ndarray:
    q = np.asarray(q)
    lim = state.max_symbol
    if q.size and (q.min() < -lim or q.max() > lim):
        bad = q[(q < -lim) | (q > lim)].flat[0]
        raise SymbolOutOfRange(f"symbol {int(bad)} outside +/-{lim} for {state.bits} bits")
    return q.astype(np.float64) * q_scale(state)


def update_range(state: QuantizerState, batch) -> QuantizerState:
    """Return a new state whose range moves toward ``max|batch|``."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.size == 0:
        raise EmptyBatch("cannot update the range from an empty batch")
    peak = float(np.max(np.abs(batch)))
    new_max = state.momentum * state.range_max + (1.0 - state.momentum) * peak
    return replace(state, range_max=new_max)


def fake_quantize(z, state: QuantizerState) -> np.ndarray:
    """Quantize then dequantize (forward pass of quantization-aware training)."""
    return dequantize(quantize(z, state), state)
