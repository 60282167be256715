"""Per-frame energy, bandwidth and transfer-latency model.

Two system topologies are compared:

* ``InSensor``: the raw frame crosses a TSV to a stacked logic die where
  the encoder runs.  Its quantized, Huffman-coded output is all that goes
  over the sensor interface (MIPI).
* ``Baseline``: the raw frame (or a configured payload) goes straight over
  the interface and every network layer runs off-sensor.

All energies are in joules; sizes in bytes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, fields, replace

from .errors import InvalidBits, TopologyError
from .netspec import TensorShape, WorkloadSummary, activation_bytes


@dataclass(frozen=True)
class EnergyConfig:
    e_pix: float = 63.6e-12         # pixel readout + ADC, 8-bit pixel
    e_byte_tsv: float = 6.25e-12
    e_byte_inf: float = 100e-12     # MIPI
    e_mac: float = 5e-15
    e_sram_bit: float = 0.23e-12    # per bit read
    weight_bits: int = 8
    e_huff_enc: float = 0.96e-12    # per byte
    e_huff_dec: float = 1.15e-12

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ValueError(f"{f.name} must be a positive finite number, got {v!r}")

    @property
    def e_weight_read(self) -> float:
        return self.e_sram_bit * self.weight_bits

    @classmethod
    def from_dict(cls, d) -> "EnergyConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown energy config keys: {sorted(unknown)}")
        return cls(**d)

    def updated(self, overrides) -> "EnergyConfig":
        return replace(self, **overrides) if overrides else self


class Mode(enum.Enum):
    InSensor = "InSensor"
    Baseline = "Baseline"


@dataclass(frozen=True)
class SystemTopology:
    mode: Mode = Mode.InSensor
    mipi_bandwidth: float = 1e9      # bytes / s
    tsv_bandwidth_multiple: float = 200.0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not self.mipi_bandwidth > 0:
            raise TopologyError("mipi_bandwidth must be positive")
        if not self.tsv_bandwidth_multiple > 1:
            raise TopologyError("tsv_bandwidth_multiple must exceed 1")


@dataclass(frozen=True)
class ScenarioResult:
    e_aps: float
    e_tsv: float
    e_enc: float
    e_huff: float
    e_inf: float
    e_back: float
    bytes_tsv: int
    bytes_over_interface: int
    bytes_encoded: int
    bandwidth_reduction: float
    latency_transfer: float
    tops_per_watt: float
    e_total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "e_total", self.e_aps + self.e_tsv + self.e_inf
                           + self.e_enc + self.e_huff + self.e_back)

    def as_dict(self) -> dict:
        return asdict(self)


# ------------------------------------------------------------ energy terms

def aps_energy(n_pix: int, cfg: EnergyConfig = EnergyConfig()) -> float:
    if n_pix < 1:
        raise ValueError("n_pix must be >= 1")
    return n_pix * cfg.e_pix


def tsv_energy(nbytes: int, cfg: EnergyConfig = EnergyConfig()) -> float:
    return nbytes * cfg.e_byte_tsv


def interface_energy(nbytes: int, cfg: EnergyConfig = EnergyConfig()) -> float:
    return nbytes * cfg.e_byte_inf


def encoder_energy(w: WorkloadSummary, cfg: EnergyConfig = EnergyConfig()) -> float:
    """MAC energy plus one SRAM read per weight."""
    return w.total_macs * cfg.e_mac + w.total_weights * cfg.e_weight_read


def workload_energy(macs: int, weights: int, cfg: EnergyConfig = EnergyConfig()) -> float:
    return macs * cfg.e_mac + weights * cfg.e_weight_read


def huffman_energy(nbytes: int, cfg: EnergyConfig = EnergyConfig()) -> float:
    return nbytes * (cfg.e_huff_enc + cfg.e_huff_dec)


def bandwidth_reduction(input: TensorShape, input_bits: int, out: TensorShape,
                        out_bits: int, effective_bits: float | None = None) -> float:
    """Raw input bits over transmitted bits.

    ``effective_bits`` is the post-Huffman bits per output element; it
    defaults to ``out_bits`` (no entropy coding).
    """
    if effective_bits is None:
        effective_bits = out_bits
    if not 0 < effective_bits <= out_bits:
        raise InvalidBits(f"effective bits {effective_bits} not in (0, {out_bits}]")
    if input_bits < 1 or out_bits < 1:
        raise InvalidBits("bit-widths must be >= 1")
    return (input.element_count * input_bits) / (out.element_count * effective_bits)


def latency_transfer(interface_bytes: int, tsv_bytes: int, topology: SystemTopology) -> float:
    """Seconds spent moving one frame over MIPI and the TSV link."""
    mipi = topology.mipi_bandwidth
    return interface_bytes / mipi + tsv_bytes / (mipi * topology.tsv_bandwidth_multiple)


class TopsDefinition(enum.Enum):
    ENCODER = "encoder"              # e_enc
    ENCODER_IO = "encoder_io"        # e_enc + e_huff + e_tsv
    SENSOR = "sensor"                # everything on the sensor side of MIPI


def tops_per_watt(w: WorkloadSummary | int, e, definition: TopsDefinition = TopsDefinition.ENCODER_IO) -> float:
    """Tera-MACs per joule (= TOPS/W with one op per MAC).

    ``e`` is either an energy in joules, used as is, or a ScenarioResult
    whose denominator is picked by ``definition``.
    """
    macs = w.total_macs if isinstance(w, WorkloadSummary) else int(w)
    if isinstance(e, ScenarioResult):
        definition = TopsDefinition(definition)
        if definition is TopsDefinition.ENCODER:
            e = e.e_enc
        elif definition is TopsDefinition.ENCODER_IO:
            e = e.e_enc + e.e_huff + e.e_tsv
        else:
            e = e.e_aps + e.e_tsv + e.e_enc + e.e_huff + e.e_inf
    if not e > 0:
        raise ValueError("energy must be positive")
    return macs / e / 1e12


# ---------------------------------------------------------------- scenario

@dataclass(frozen=True)
class Scenario:
    """Everything needed to price one frame under one topology.

    ``encoder`` runs on the logic die (InSensor only).  ``backend`` is the
    off-sensor workload: the task head after the encoder for InSensor, the
    whole network for Baseline.  ``effective_bits`` is the measured Huffman
    average length per output symbol.
    """

    input: TensorShape
    input_bits: int = 8
    topology: SystemTopology = SystemTopology()
    encoder: WorkloadSummary | None = None
    quant_bits: int = 4
    effective_bits: float | None = None
    backend: WorkloadSummary | None = None
    backend_overhead_j: float = 0.0
    baseline_payload_bytes: int | None = None
    config: EnergyConfig = EnergyConfig()
    tops_definition: TopsDefinition = TopsDefinition.ENCODER_IO
    name: str = "scenario"


def total_energy(sc: Scenario) -> ScenarioResult:
    cfg = sc.config
    mode = sc.topology.mode
    if sc.backend_overhead_j < 0:
        raise TopologyError("backend_overhead_j must be nonnegative")
    n_pix = sc.input.height * sc.input.width
    raw_bytes = activation_bytes(sc.input, sc.input_bits)
    e_aps = aps_energy(n_pix, cfg)
    e_back = sc.backend_overhead_j
    back_macs = 0
    if sc.backend is not None:
        e_back += encoder_energy(sc.backend, cfg)
        back_macs = sc.backend.total_macs

    if mode is Mode.Baseline:
        if sc.encoder is not None:
            raise TopologyError("Baseline runs no encoder on the sensor; "
                                "put the network in the backend")
        payload = raw_bytes if sc.baseline_payload_bytes is None else sc.baseline_payload_bytes
        if payload < 0:
            raise TopologyError("baseline payload must be nonnegative")
        e_inf = interface_energy(payload, cfg)
        reduction = raw_bytes * 8 / (payload * 8) if payload else math.inf
        tops = back_macs / e_back / 1e12 if back_macs and e_back > 0 else math.nan
        return ScenarioResult(
            e_aps=e_aps, e_tsv=0.0, e_enc=0.0, e_huff=0.0, e_inf=e_inf, e_back=e_back,
            bytes_tsv=0, bytes_over_interface=payload, bytes_encoded=0,
            bandwidth_reduction=reduction,
            latency_transfer=latency_transfer(payload, 0, sc.topology),
            tops_per_watt=tops)

    if sc.encoder is None:
        raise TopologyError("InSensor scenario needs an encoder workload")
    out = sc.encoder.output_shape
    eff = sc.quant_bits if sc.effective_bits is None else sc.effective_bits
    reduction = bandwidth_reduction(sc.input, sc.input_bits, out, sc.quant_bits, eff)
    a_tsv = raw_bytes
    a_enc = activation_bytes(out, sc.quant_bits)
    a_size = math.ceil(out.element_count * eff / 8 - 1e-9)
    e_enc = encoder_energy(sc.encoder, cfg)
    partial = ScenarioResult(
        e_aps=e_aps, e_tsv=tsv_energy(a_tsv, cfg), e_enc=e_enc,
        e_huff=huffman_energy(a_enc, cfg), e_inf=interface_energy(a_size, cfg),
        e_back=e_back, bytes_tsv=a_tsv, bytes_over_interface=a_size,
        bytes_encoded=a_enc, bandwidth_reduction=reduction,
        latency_transfer=latency_transfer(a_size, a_tsv, sc.topology),
        tops_per_watt=math.nan)
    return replace(partial, tops_per_watt=tops_per_watt(sc.encoder, partial, sc.tops_definition))


def format_uj(joules: float) -> str:
    """Microjoules to 4 significant digits."""
    return f"{joules * 1e6:.4g} uJ"
