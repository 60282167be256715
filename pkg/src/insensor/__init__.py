"""Desk-scale model of an in-sensor autoencoder data path.

Quantization, entropy measurement and Huffman coding of encoder outputs,
network workload accounting, and a per-frame energy / bandwidth model for
sensor-plus-logic-die systems.
"""

from .entropy import (LossWeights, SymbolHistogram, empirical_entropy, entropy_loss,
                      histogram, joint_loss, mse)
from .energy import (EnergyConfig, Mode, Scenario, ScenarioResult, SystemTopology,
                     bandwidth_reduction, total_energy)
from .huffman import HuffmanCodebook, avg_code_length, build_codebook, decode, encode
from .netspec import (NetworkSpec, TensorShape, activation_bytes, count_macs,
                      infer_shapes, load_spec, parse_spec)
from .quantizer import QuantizerState, dequantize, q_scale, quantize, update_range
from .tensorio import SyntheticDistribution, fit_sigma, sample_symbols

__version__ = "0.1.0"
