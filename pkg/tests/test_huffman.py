import struct
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from insensor import huffman as hf
from insensor.entropy import SymbolHistogram, empirical_entropy, histogram
from insensor.errors import (CorruptStream, EmptyHistogram, SupportMismatch,
                             UnknownSymbol)

from oracles import best_prefix_code_cost, is_prefix_free

A, B, C = 0, 1, 2


def test_three_symbol_lengths():
    cb = hf.build_codebook({A: 2, B: 1, C: 1})
    assert cb.code_lengths == {A: 1, B: 2, C: 2}
    assert [cb.bit_string(s) for s in (A, B, C)] == ["0", "10", "11"]


def test_uniform_four():
    cb = hf.build_codebook({s: 5 for s in range(4)})
    assert set(cb.code_lengths.values()) == {2}
    assert hf.avg_code_length(cb, SymbolHistogram({s: 5 for s in range(4)})) == 2.0


def test_single_symbol_one_bit():
    cb = hf.build_codebook({3: 10})
    assert cb.code_lengths == {3: 1}
    s = hf.encode([3] * 10, cb)
    assert len(s.payload) == 2
    assert hf.decode(s).tolist() == [3] * 10


def test_empty_histogram():
    with pytest.raises(EmptyHistogram):
        hf.build_codebook({})


def test_canonical_order_and_tie_break():
    # four equal weights: lengths all 2, codes ascending by symbol
    cb = hf.build_codebook({7: 1, -3: 1, 0: 1, 2: 1})
    assert cb.symbols == [-3, 0, 2, 7]
    assert [cb.bit_string(s) for s in cb.symbols] == ["00", "01", "10", "11"]
    # deterministic regardless of insertion order
    assert hf.build_codebook({2: 1, 0: 1, 7: 1, -3: 1}) == cb


def test_avg_length_example():
    h = SymbolHistogram({A: 2, B: 1, C: 1})
    assert hf.avg_code_length(hf.build_codebook(h), h) == 1.5
    with pytest.raises(SupportMismatch):
        hf.avg_code_length(hf.build_codebook({A: 1, B: 1}), h)


def test_encode_examples():
    cb = hf.build_codebook({A: 2, B: 1, C: 1})
    empty = hf.encode([], cb)
    assert (empty.payload, empty.symbol_count) == (b"", 0)
    assert hf.decode(empty).size == 0
    s = hf.encode([A, A, B, C], cb)
    assert s.symbol_count == 4
    assert s.payload == bytes([0b00101100])   # 0 0 10 11 + two zero pad bits
    with pytest.raises(UnknownSymbol):
        hf.encode([A, 5], cb)


def test_truncated_payload():
    cb = hf.build_codebook({A: 2, B: 1, C: 1})
    s = hf.encode([B, C] * 8, cb)
    short = hf.EncodedStream(cb, s.symbol_count, s.payload[:-1])
    with pytest.raises(CorruptStream):
        hf.decode(short)


def test_invalid_code_in_incomplete_codebook():
    cb = hf.HuffmanCodebook({A: 1, B: 2})     # '11' is unused
    with pytest.raises(CorruptStream):
        hf.decode(hf.EncodedStream(cb, 1, bytes([0b11000000])))


def test_file_format_layout():
    cb = hf.build_codebook({A: 2, B: 1, C: 1})
    s = hf.encode([A, A, B, C], cb, symbol_bits=4)
    raw = hf.serialize(s)
    assert raw[:4] == b"OASH"
    assert raw[4:8] == bytes([1, 4]) + struct.pack("<H", 3)
    assert raw[8:14] == bytes([0, 1, 1, 2, 2, 2])
    assert struct.unpack("<QQ", raw[14:30]) == (4, 1)
    assert raw[30:] == s.payload
    assert hf.deserialize(raw) == s


def test_negative_symbols_serialize():
    h = histogram(np.array([-7, -7, 0, 3, 7]))
    s = hf.encode([-7, 0, 3, 7, -7], hf.build_codebook(h), symbol_bits=4)
    back = hf.deserialize(hf.serialize(s))
    assert back == s
    assert hf.decode(back).tolist() == [-7, 0, 3, 7, -7]


@pytest.mark.parametrize("mutate", [
    lambda b: b"XASH" + b[4:],
    lambda b: b[:4] + bytes([2]) + b[5:],
    lambda b: b[:-1],
    lambda b: b + b"\x00",
    lambda b: b[:10],
    lambda b: b[:8] + bytes([0, 0]) + b[10:],           # zero code length
    lambda b: b[:8] + bytes([1, 2, 0, 1]) + b[12:],     # not canonical order
])
def test_deserialize_rejects_corruption(mutate):
    cb = hf.build_codebook({A: 2, B: 1, C: 1})
    raw = hf.serialize(hf.encode([A, B, C, A], cb))
    with pytest.raises(CorruptStream):
        hf.deserialize(mutate(raw))


def test_kraft_violation_rejected():
    raw = (struct.pack("<4sBBH", b"OASH", 1, 4, 3) + bytes([0, 1, 1, 1, 2, 1])
           + struct.pack("<QQ", 0, 0))
    with pytest.raises(CorruptStream):
        hf.deserialize(raw)


# --- properties

streams = st.lists(st.integers(-7, 7), min_size=1, max_size=300)
count_maps = st.dictionaries(st.integers(-128, 127), st.integers(1, 1000), min_size=1, max_size=40)


@given(streams)
def test_roundtrip(xs):
    cb = hf.build_codebook(histogram(xs))
    s = hf.encode(xs, cb)
    assert hf.decode(s).tolist() == xs
    assert hf.decode(hf.deserialize(hf.serialize(s))).tolist() == xs
    assert hf.serialize(hf.deserialize(hf.serialize(s))) == hf.serialize(s)


@given(count_maps)
def test_shannon_bound_and_kraft(counts):
    h = SymbolHistogram(counts)
    cb = hf.build_codebook(h)
    L = hf.avg_code_length(cb, h)
    H = empirical_entropy(h)
    if len(counts) >= 2:
        assert H - 1e-9 <= L < H + 1
        assert cb.kraft_sum() == 1
    else:
        # the 1-bit single-symbol convention sits exactly on the upper bound
        assert (H, L) == (0.0, 1.0)
        assert cb.kraft_sum() == Fraction(1, 2)
    assert is_prefix_free([cb.bit_string(s) for s in cb.symbols])


@given(count_maps)
def test_canonical_codes_ordered(counts):
    cb = hf.build_codebook(counts)
    keys = [(cb.code_lengths[s], s) for s in cb.symbols]
    assert keys == sorted(keys)
    codes = [cb.codes[s] for s in cb.symbols]
    # within a length codes increase by one; across lengths they stay ordered
    # when left-aligned
    max_len = max(n for _, n in codes)
    aligned = [c << (max_len - n) for c, n in codes]
    assert aligned == sorted(aligned) and len(set(aligned)) == len(aligned)


@settings(max_examples=200)
@given(st.lists(st.integers(1, 8), min_size=1, max_size=4))
def test_optimal_vs_enumeration(counts):
    h = SymbolHistogram(dict(enumerate(counts)))
    cb = hf.build_codebook(h)
    assert hf.compressed_bits(h, cb) == best_prefix_code_cost(counts)


@settings(max_examples=300)
@given(st.dictionaries(st.integers(-7, 7), st.integers(1, 50), min_size=1, max_size=15),
       st.binary(max_size=16), st.integers(0, 200))
def test_fuzzed_decode_never_overreads(counts, payload, n):
    cb = hf.build_codebook(counts)
    try:
        out, used = hf.decode_counted(hf.EncodedStream(cb, n, payload))
    except CorruptStream:
        return
    assert out.size == n
    assert used <= 8 * len(payload)
