import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from insensor.errors import DegenerateRange, EmptyBatch, SymbolOutOfRange
from insensor.quantizer import (QuantizerState, dequantize, fake_quantize, q_scale,
                                quantize, update_range)


def test_q_scale_examples():
    assert q_scale(QuantizerState(bits=4, range_max=7.5)) == 1.0
    assert q_scale(QuantizerState(bits=2, range_max=1.0)) == pytest.approx(2 / 3)
    with pytest.raises(DegenerateRange):
        q_scale(QuantizerState(bits=4, range_max=0.0))


def test_quantize_examples():
    st4 = QuantizerState(bits=4, range_max=7.5)
    assert quantize(3.2, st4) == 3
    assert quantize(0.0, st4) == 0
    assert quantize(7.5, st4) == 7
    assert quantize(-7.5, st4) == -7
    assert quantize(2.5, st4) == 3      # half away from zero
    assert quantize(-2.5, st4) == -3
    with pytest.raises(DegenerateRange):
        quantize([1.0], QuantizerState(bits=4, range_max=0.0))


def test_dequantize_examples():
    st4 = QuantizerState(bits=4, range_max=7.5)
    assert dequantize(0, st4) == 0.0
    assert dequantize(7, st4) == 7.0
    with pytest.raises(SymbolOutOfRange):
        dequantize([9], st4)
    with pytest.raises(SymbolOutOfRange):
        dequantize([-8], st4)


def test_update_range_examples():
    s = QuantizerState(bits=4, range_max=3.0, momentum=0.0)
    assert update_range(s, [1.0, -5.0, 2.0]).range_max == 5.0
    s = QuantizerState(bits=4, range_max=10.0, momentum=0.9)
    new = update_range(s, np.array([[-20.0, 3.0]]))
    assert new.range_max == pytest.approx(11.0)
    assert s.range_max == 10.0            # input not mutated
    assert (new.bits, new.momentum) == (s.bits, s.momentum)
    with pytest.raises(EmptyBatch):
        update_range(s, [])


def test_state_invariants():
    with pytest.raises(ValueError):
        QuantizerState(momentum=1.0)
    with pytest.raises(ValueError):
        QuantizerState(bits=9)
    with pytest.raises(ValueError):
        QuantizerState(range_max=-1.0)


bits_st = st.sampled_from([2, 3, 4, 5, 6, 7, 8])
range_st = st.floats(1e-3, 1e3)


@given(bits_st, range_st, st.floats(-1, 1))
def test_roundtrip_bound(bits, rmax, frac):
    s = QuantizerState(bits=bits, range_max=rmax)
    z = frac * rmax
    err = abs(float(fake_quantize(z, s)) - z)
    assert err <= q_scale(s) / 2 * (1 + 1e-12)


@given(bits_st, range_st, st.lists(st.floats(-1e4, 1e4), min_size=1, max_size=50))
def test_sign_symmetry(bits, rmax, zs):
    s = QuantizerState(bits=bits, range_max=rmax)
    z = np.array(zs)
    assert np.array_equal(quantize(-z, s), -quantize(z, s))


@given(bits_st, range_st, st.floats(1.0001, 100))
def test_clamp(bits, rmax, over):
    s = QuantizerState(bits=bits, range_max=rmax)
    lim = 2 ** (bits - 1) - 1
    assert quantize(rmax * over, s) == lim
    assert quantize(-rmax * over, s) == -lim


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30), st.randoms())
def test_update_range_permutation_invariant(values, rnd):
    s = QuantizerState(bits=4, range_max=2.0, momentum=0.7)
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert update_range(s, values).range_max == update_range(s, shuffled).range_max


def test_symbols_within_set():
    rng = np.random.default_rng(0)
    for bits in (2, 4, 8):
        s = QuantizerState(bits=bits, range_max=1.0)
        q = quantize(rng.normal(0, 3, 10_000), s)
        lim = 2 ** (bits - 1) - 1
        assert q.min() >= -lim and q.max() <= lim
        assert len(np.unique(q)) <= 2 ** bits - 1
