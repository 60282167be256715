"""Tensor files and synthetic activation symbols.

Tensor file layout (little-endian)::

    b"OAST" | version u8 | dtype u8 (0 = i8, 1 = f32) | ndim u8
    | dims u32 * ndim | row-major payload
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from math import prod
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.special import ndtr

from .entropy import SymbolHistogram
from .errors import BadMagic, DimOverflow, TruncatedPayload
from .quantizer import symbol_limit

MAGIC = b"OAST"
VERSION = 1
MAX_DIMS = 4


class DType(enum.IntEnum):
    I8 = 0
    F32 = 1

    @property
    def numpy(self):
        return np.dtype("<i1") if self is DType.I8 else np.dtype("<f4")


@dataclass(frozen=True)
class TensorFile:
    dtype: DType
    dims: tuple[int, ...]
    payload: bytes

    def __post_init__(self):
        object.__setattr__(self, "dtype", DType(self.dtype))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        _check_dims(self.dims)
        expected = prod(self.dims) * self.dtype.numpy.itemsize
        if len(self.payload) != expected:
            raise TruncatedPayload(f"payload is {len(self.payload)} bytes, dims need {expected}")

    @classmethod
    def from_array(cls, arr) -> "TensorFile":
        arr = np.asarray(arr)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if np.issubdtype(arr.dtype, np.integer):
            if arr.size and (arr.min() < -128 or arr.max() > 127):
                raise ValueError("integer tensor does not fit in i8")
            dtype = DType.I8
        else:
            dtype = DType.F32
        data = np.ascontiguousarray(arr, dtype=dtype.numpy)
        return cls(dtype, arr.shape, data.tobytes())

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.payload, dtype=self.dtype.numpy).reshape(self.dims)


def _check_dims(dims):
    if not dims:
        raise DimOverflow("tensor needs at least one dimension")
    if len(dims) > MAX_DIMS:
        raise DimOverflow(f"{len(dims)} dims exceed the maximum of {MAX_DIMS}")
    if any(d < 1 or d >= 2 ** 32 for d in dims):
        raise DimOverflow(f"dimensions must be in 1..2**32-1, got {dims}")


def write_tensor(t: TensorFile) -> bytes:
    head = struct.pack("<4sBBB", MAGIC, VERSION, int(t.dtype), len(t.dims))
    return head + struct.pack(f"<{len(t.dims)}I", *t.dims) + t.payload


def read_tensor(data: bytes) -> TensorFile:
    data = bytes(data)
    if len(data) < 7:
        raise TruncatedPayload("file shorter than header")
    magic, version, dtype, ndim = struct.unpack_from("<4sBBB", data, 0)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadMagic(f"unsupported version {version}")
    if dtype not in (0, 1):
        raise BadMagic(f"unknown dtype code {dtype}")
    if ndim == 0 or ndim > MAX_DIMS:
        raise DimOverflow(f"ndim {ndim} outside 1..{MAX_DIMS}")
    if len(data) < 7 + 4 * ndim:
        raise TruncatedPayload("truncated dims")
    dims = struct.unpack_from(f"<{ndim}I", data, 7)
    _check_dims(dims)
    dt = DType(dtype)
    start = 7 + 4 * ndim
    expected = prod(dims) * dt.numpy.itemsize
    payload = data[start:]
    if len(payload) < expected:
        raise TruncatedPayload(f"payload has {len(payload)} bytes, expected {expected}")
    if len(payload) > expected:
        raise TruncatedPayload(f"{len(payload) - expected} trailing bytes after payload")
    return TensorFile(dt, dims, payload)


def save_tensor(path, arr) -> None:
    Path(path).write_bytes(write_tensor(TensorFile.from_array(arr)))


def load_tensor(path) -> np.ndarray:
    return read_tensor(Path(path).read_bytes()).to_array()


# ----------------------------------------------------------- synthetic data

class DistKind(enum.Enum):
    DiscretizedGaussian = "gaussian"
    Custom = "custom"


@dataclass(frozen=True)
class SyntheticDistribution:
    """Source of quantized activation symbols.

    ``sigma`` is the standard deviation in symbol units; samples are rounded
    half away from zero and clamped to the ``bits`` symbol set, exactly as
    the quantizer would treat a zero-mean Gaussian activation.
    """

    kind: DistKind = DistKind.DiscretizedGaussian
    sigma: float = 1.0
    bits: int = 4
    probs: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        lim = symbol_limit(self.bits)
        if self.kind is DistKind.DiscretizedGaussian and not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.kind is DistKind.Custom:
            if not self.probs or any(abs(s) > lim for s in self.probs):
                raise ValueError(f"custom support must be nonempty within +/-{lim}")

    def pmf(self) -> dict[int, float]:
        lim = symbol_limit(self.bits)
        if self.kind is DistKind.Custom:
            total = sum(self.probs.values())
            return {int(s): p / total for s, p in sorted(self.probs.items()) if p > 0}
        return gaussian_pmf(self.sigma, self.bits)


def gaussian_pmf(sigma: float, bits: int) -> dict[int, float]:
    """Exact symbol probabilities of a clamped, rounded N(0, sigma^2)."""
    lim = symbol_limit(bits)
    k = np.arange(-lim, lim + 1, dtype=np.float64)
    upper = np.where(k == lim, np.inf, k + 0.5)
    lower = np.where(k == -lim, -np.inf, k - 0.5)
    # symmetric tails computed on the positive side for accuracy
    p = np.where(k >= 0, ndtr(-lower / sigma) - ndtr(-upper / sigma),
                 ndtr(upper / sigma) - ndtr(lower / sigma))
    return dict(zip(range(-lim, lim + 1), p.tolist()))


def sample_symbols(d: SyntheticDistribution, count: int, seed: int) -> np.ndarray:
    """``count`` i8 symbols; identical for identical ``(d, count, seed)``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=seed & (2 ** 64 - 1)))
    lim = symbol_limit(d.bits)
    if d.kind is DistKind.Custom:
        pmf = d.pmf()
        return rng.choice(np.array(list(pmf), dtype=np.int8), size=count,
                          p=np.array(list(pmf.values())))
    z = rng.standard_normal(count) * d.sigma
    q = np.sign(z) * np.floor(np.abs(z) + 0.5)
    return np.clip(q, -lim, lim).astype(np.int8)


def expected_histogram(d: SyntheticDistribution, resolution: int = 10 ** 12) -> SymbolHistogram:
    """Integer-count histogram proportional to the exact pmf."""
    counts = {s: round(p * resolution) for s, p in d.pmf().items()}
    return SymbolHistogram(counts)


def huffman_bits_for_sigma(sigma: float, bits: int = 4) -> float:
    """Average Huffman code length of the exact discretized-Gaussian pmf."""
    from .huffman import avg_code_length, build_codebook

    h = expected_histogram(SyntheticDistribution(sigma=sigma, bits=bits))
    return avg_code_length(build_codebook(h), h)


def fit_sigma(target_bits: float, bits: int = 4, iters: int = 60) -> float:
    """Binary-search sigma so the Huffman average length hits ``target_bits``.

    The average length rises from 1 bit (all mass on zero) to a peak below
    ``bits``, then falls again as clamping piles mass onto the end symbols.
    The search is bracketed on the rising side, found by a coarse scan.
    """
    grid = np.geomspace(1e-3, 2.0 * (symbol_limit(bits) + 1), 96)
    values = [huffman_bits_for_sigma(g, bits) for g in grid]
    peak = int(np.argmax(values))
    lo, hi = 1e-3, float(grid[peak])
    if not values[0] < target_bits < values[peak]:
        raise ValueError(f"target {target_bits} outside reachable range "
                         f"({values[0]:.3f}, {values[peak]:.3f}) at {bits} bits")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if huffman_bits_for_sigma(mid, bits) < target_bits:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
