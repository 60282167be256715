"""Canonical Huffman coding of quantized symbol streams.

Codebooks are described by code lengths only; the bit patterns follow
from the canonical ordering (length, then symbol value).  Bits are packed
MSB-first and the final byte is zero-padded.

Stream file layout (little-endian)::

    b"OASH" | version u8 | symbol bits u8 | alphabet size u16
    | (symbol i8, length u8) * alphabet, canonical order
    | symbol count u64 | payload bytes u64 | payload
"""

from __future__ import annotations

import heapq
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .entropy import SymbolHistogram
from .errors import (CorruptStream, EmptyHistogram, SupportMismatch,
                     UnknownSymbol)

MAGIC = b"OASH"
VERSION = 1


@dataclass(frozen=True)
class HuffmanCodebook:
    code_lengths: Mapping[int, int]
    codes: Mapping[int, tuple[int, int]] = field(init=False, compare=False)

    def __post_init__(self):
        lengths = {int(s): int(n) for s, n in self.code_lengths.items()}
        if any(n < 1 for n in lengths.values()):
            raise ValueError("code lengths must be >= 1")
        order = sorted(lengths, key=lambda s: (lengths[s], s))
        object.__setattr__(self, "code_lengths", {s: lengths[s] for s in order})
        codes = {}
        code = 0
        prev = order and lengths[order[0]]
        for s in order:
            n = lengths[s]
            code <<= n - prev
            codes[s] = (code, n)
            code += 1
            prev = n
        object.__setattr__(self, "codes", codes)

    @property
    def symbols(self) -> list[int]:
        """Symbols in canonical order."""
        return list(self.code_lengths)

    def kraft_sum(self) -> Fraction:
        return sum((Fraction(1, 2 ** n) for n in self.code_lengths.values()), Fraction(0))

    def bit_string(self, symbol: int) -> str:
        code, n = self.codes[symbol]
        return format(code, f"0{n}b")


@dataclass(frozen=True)
class EncodedStream:
    codebook: HuffmanCodebook
    symbol_count: int
    payload: bytes
    symbol_bits: int = 8


def build_codebook(h: SymbolHistogram | Mapping[int, int]) -> HuffmanCodebook:
    """Optimal prefix code for the histogram.

    Ties between equal weights merge the node holding the smallest symbol
    first, so lengths do not depend on dict or heap internals.  A single
    symbol gets a 1-bit code.
    """
    counts = h.counts if isinstance(h, SymbolHistogram) else dict(h)
    counts = {int(s): int(c) for s, c in counts.items() if c > 0}
    if not counts:
        raise EmptyHistogram("cannot build a code for an empty histogram")
    if len(counts) == 1:
        return HuffmanCodebook({next(iter(counts)): 1})

    lengths = dict.fromkeys(counts, 0)
    heap = [(c, s, [s]) for s, c in counts.items()]
    heapq.heapify(heap)
    while len(heap) > 1:
        c1, m1, g1 = heapq.heappop(heap)
        c2, m2, g2 = heapq.heappop(heap)
        for s in g1:
            lengths[s] += 1
        for s in g2:
            lengths[s] += 1
        heapq.heappush(heap, (c1 + c2, min(m1, m2), g1 + g2))
    return HuffmanCodebook(lengths)


def encode(symbols, cb: HuffmanCodebook, symbol_bits: int = 8) -> EncodedStream:
    arr = np.asarray(symbols).ravel()
    table = {s: cb.bit_string(s) for s in cb.code_lengths}
    try:
        bits = "".join([table[s] for s in arr.tolist()])
    except KeyError as exc:
        raise UnknownSymbol(f"symbol {exc.args[0]} not in codebook") from None
    nbytes = -(-len(bits) // 8)
    payload = int(bits.ljust(nbytes * 8, "0"), 2).to_bytes(nbytes, "big") if bits else b""
    return EncodedStream(cb, int(arr.size), payload, symbol_bits)


def _decode_tables(cb: HuffmanCodebook):
    """first code, count and symbol offset per code length."""
    max_len = max(cb.code_lengths.values())
    count = [0] * (max_len + 1)
    for n in cb.code_lengths.values():
        count[n] += 1
    first = [0] * (max_len + 1)
    offset = [0] * (max_len + 1)
    code = idx = 0
    for n in range(1, max_len + 1):
        code <<= 1
        first[n] = code
        offset[n] = idx
        code += count[n]
        idx += count[n]
    return max_len, first, count, offset


def decode(s: EncodedStream) -> np.ndarray:
    """Inverse of :func:`encode`.

    Raises :class:`CorruptStream` when the payload runs out before
    ``symbol_count`` symbols or holds a bit pattern that is not a code.
    """
    return decode_counted(s)[0]


def decode_counted(s: EncodedStream) -> tuple[np.ndarray, int]:
    """Like :func:`decode`, also returning the number of payload bits consumed."""
    out = np.empty(s.symbol_count, dtype=np.int64)
    if s.symbol_count == 0:
        return out, 0
    if not s.codebook.code_lengths:
        raise CorruptStream("empty codebook with nonzero symbol count")
    max_len, first, count, offset = _decode_tables(s.codebook)
    ordered = s.codebook.symbols
    bits = np.unpackbits(np.frombuffer(s.payload, dtype=np.uint8)).tolist()
    nbits = len(bits)
    pos = 0
    for i in range(s.symbol_count):
        code = n = 0
        while True:
            if pos >= nbits:
                raise CorruptStream(
                    f"payload exhausted after {i} of {s.symbol_count} symbols")
            code = (code << 1) | bits[pos]
            pos += 1
            n += 1
            k = code - first[n]
            if 0 <= k < count[n]:
                out[i] = ordered[offset[n] + k]
                break
            if n == max_len:
                raise CorruptStream(f"invalid code at bit {pos - n}")
    return out, pos


def avg_code_length(cb: HuffmanCodebook, h: SymbolHistogram) -> float:
    """Expected bits per symbol of ``cb`` under the histogram's distribution."""
    missing = [s for s in h.counts if s not in cb.code_lengths]
    if missing:
        raise SupportMismatch(f"symbols {missing} have no code")
    return sum(c * cb.code_lengths[s] for s, c in h.counts.items()) / h.total


def compressed_bits(h: SymbolHistogram, cb: HuffmanCodebook) -> int:
    missing = [s for s in h.counts if s not in cb.code_lengths]
    if missing:
        raise SupportMismatch(f"symbols {missing} have no code")
    return sum(c * cb.code_lengths[s] for s, c in h.counts.items())


# --------------------------------------------------------------- file format

_HEAD = struct.Struct("<4sBBH")
_ENTRY = struct.Struct("<bB")
_TAIL = struct.Struct("<QQ")


def serialize(s: EncodedStream) -> bytes:
    cb = s.codebook
    parts = [_HEAD.pack(MAGIC, VERSION, s.symbol_bits, len(cb.code_lengths))]
    for sym, n in cb.code_lengths.items():
        parts.append(_ENTRY.pack(sym, n))
    parts.append(_TAIL.pack(s.symbol_count, len(s.payload)))
    parts.append(s.payload)
    return b"".join(parts)


def deserialize(data: bytes) -> EncodedStream:
    data = bytes(data)
    if len(data) < _HEAD.size:
        raise CorruptStream("stream shorter than header")
    magic, version, symbol_bits, alphabet = _HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise CorruptStream(f"bad magic {magic!r}")
    if version != VERSION:
        raise CorruptStream(f"unsupported version {version}")
    pos = _HEAD.size
    if len(data) < pos + alphabet * _ENTRY.size + _TAIL.size:
        raise CorruptStream("truncated codebook")
    lengths = {}
    entries = []
    for _ in range(alphabet):
        sym, n = _ENTRY.unpack_from(data, pos)
        pos += _ENTRY.size
        if n == 0 or sym in lengths:
            raise CorruptStream(f"bad codebook entry ({sym}, {n})")
        lengths[sym] = n
        entries.append((n, sym))
    if entries != sorted(entries):
        raise CorruptStream("codebook entries not in canonical order")
    if alphabet and sum(Fraction(1, 2 ** n) for n in lengths.values()) > 1:
        raise CorruptStream("code lengths violate the Kraft inequality")
    count, nbytes = _TAIL.unpack_from(data, pos)
    pos += _TAIL.size
    if len(data) - pos != nbytes:
        raise CorruptStream(f"payload is {len(data) - pos} bytes, header says {nbytes}")
    return EncodedStream(HuffmanCodebook(lengths), count, data[pos:], symbol_bits)


def codebook_from_stream(data: bytes) -> HuffmanCodebook:
    return deserialize(data).codebook
