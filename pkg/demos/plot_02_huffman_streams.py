"""
Huffman streams for quantized symbols
=====================================

Build a canonical prefix code from a symbol histogram, pack a stream,
write it to the on-disk format and read it back.
"""

# %%
import numpy as np

from insensor import huffman as hf
from insensor.entropy import empirical_entropy, histogram
from insensor.tensorio import SyntheticDistribution, fit_sigma, sample_symbols

# %%
# A synthetic 4-bit stream whose spread is chosen so the code averages
# roughly 1.57 bits per symbol.
sigma = fit_sigma(1.57, bits=4)
symbols = sample_symbols(SyntheticDistribution(sigma=sigma, bits=4), 100_000, seed=1)
h = histogram(symbols)
cb = hf.build_codebook(h)
print(f"sigma {sigma:.4f}")
for s in cb.symbols:
    print(f"  {s:+d}: {cb.bit_string(s):<12} ({h.counts[s]} occurrences)")

# %%
# The average code length sits between the entropy and entropy + 1.
L = hf.avg_code_length(cb, h)
print(f"entropy {empirical_entropy(h):.4f}, avg length {L:.4f}, "
      f"compression vs 4 bits {4 / L:.2f}x")

# %%
# Serialize, parse, decode.  The stream header carries the code lengths,
# so the decoder rebuilds exactly the same canonical code.
stream = hf.encode(symbols, cb, symbol_bits=4)
blob = hf.serialize(stream)
back = hf.decode(hf.deserialize(blob))
print(f"{len(blob)} bytes on disk for {symbols.size} symbols; lossless: "
      f"{np.array_equal(back, symbols)}")
