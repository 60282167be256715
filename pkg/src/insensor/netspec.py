"""Network workload descriptions: parsing, shape inference and MAC/weight counts.

A spec file is line-oriented text::

    # tiny encoder
    input 3x224x224 bits=8
    conv2d kernel=7 stride=4 out_channels=128
    residual out_channels=128 stride=2 blocks=2
    pool kernel=global

Keys may use the short aliases ``k``, ``s``, ``c`` and may drop the ``=``
for those aliases (``conv k7 s4 c128``).  All convolutions use "same"
padding, so the output side is ``ceil(in / stride)``.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

from .errors import ParseError, ShapeError, ValidationError


@dataclass(frozen=True)
class TensorShape:
    channels: int
    height: int
    width: int

    def __post_init__(self):
        for name in ("channels", "height", "width"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ShapeError(f"{name} must be a positive integer, got {v!r}")

    @property
    def element_count(self) -> int:
        return self.channels * self.height * self.width

    def __str__(self):
        return f"{self.channels}x{self.height}x{self.width}"


class LayerKind(enum.Enum):
    Conv2d = "conv2d"
    ResidualBlock = "residual"
    PatchEmbed = "patch_embed"
    WindowAttentionBlock = "window_attention"
    Linear = "linear"
    Pool = "pool"
    Upsample = "upsample"
    Downsample = "downsample"


_KIND_ALIASES = {
    "conv": LayerKind.Conv2d,
    "conv2d": LayerKind.Conv2d,
    "residual": LayerKind.ResidualBlock,
    "residualblock": LayerKind.ResidualBlock,
    "patch_embed": LayerKind.PatchEmbed,
    "patchembed": LayerKind.PatchEmbed,
    "window_attention": LayerKind.WindowAttentionBlock,
    "windowattentionblock": LayerKind.WindowAttentionBlock,
    "swin": LayerKind.WindowAttentionBlock,
    "linear": LayerKind.Linear,
    "fc": LayerKind.Linear,
    "pool": LayerKind.Pool,
    "upsample": LayerKind.Upsample,
    "downsample": LayerKind.Downsample,
}

_KEY_ALIASES = {"k": "kernel", "s": "stride", "c": "out_channels"}

# required / optional keys per kind
_KIND_KEYS = {
    LayerKind.Conv2d: ({"out_channels", "kernel"}, {"stride"}),
    LayerKind.ResidualBlock: ({"out_channels"}, {"stride", "blocks"}),
    LayerKind.PatchEmbed: ({"out_channels", "kernel"}, {"stride"}),
    LayerKind.WindowAttentionBlock: (
        {"out_channels", "heads", "window"}, {"mlp_ratio", "blocks"}),
    LayerKind.Linear: ({"out_channels"}, set()),
    LayerKind.Pool: (set(), {"kernel", "stride", "size"}),
    LayerKind.Upsample: ({"scale"}, set()),
    LayerKind.Downsample: ({"scale"}, set()),
}

_ALL_KEYS = {"out_channels", "kernel", "stride", "window", "heads",
             "mlp_ratio", "scale", "blocks", "size"}


@dataclass(frozen=True)
class LayerSpec:
    """One layer line.

    ``blocks`` stacks identical Residual/WindowAttention blocks (the stride
    applies to the first one).  For Pool, ``size`` requests an adaptive
    output of ``size x size``; ``kernel=global`` parses to ``size=1``.
    """

    kind: LayerKind
    out_channels: int | None = None
    kernel: int | None = None
    stride: int = 1
    window: int | None = None
    heads: int | None = None
    mlp_ratio: Fraction = Fraction(4)
    scale: int | None = None
    blocks: int = 1
    size: int | None = None

    def validate(self):
        for name in ("out_channels", "kernel", "window", "heads", "scale", "size"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValidationError(f"must be >= 1, got {v}", field=name)
        if self.stride < 1:
            raise ValidationError(f"must be >= 1, got {self.stride}", field="stride")
        if self.blocks < 1:
            raise ValidationError(f"must be >= 1, got {self.blocks}", field="blocks")
        if self.mlp_ratio <= 0:
            raise ValidationError("must be positive", field="mlp_ratio")
        if self.kind is LayerKind.WindowAttentionBlock and self.out_channels % self.heads:
            raise ValidationError(
                f"heads={self.heads} does not divide out_channels={self.out_channels}",
                field="heads")
        if self.kind is LayerKind.Pool:
            if self.size is None and self.kernel is None:
                raise ValidationError("pool needs kernel=<k>|global or size=<n>",
                                      field="kernel")
            if self.size is not None and self.kernel is not None:
                raise ValidationError("give either kernel or size, not both",
                                      field="size")
        return self


@dataclass(frozen=True)
class NetworkSpec:
    name: str
    input: TensorShape
    input_bits: int
    layers: tuple[LayerSpec, ...]


@dataclass(frozen=True)
class LayerWorkload:
    output_shape: TensorShape
    macs: int
    weights: int


@dataclass(frozen=True)
class WorkloadSummary:
    per_layer: tuple[LayerWorkload, ...]
    output_shape: TensorShape
    total_macs: int = field(init=False)
    total_weights: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total_macs", sum(l.macs for l in self.per_layer))
        object.__setattr__(self, "total_weights", sum(l.weights for l in self.per_layer))


# ---------------------------------------------------------------- parsing

_INPUT_RE = re.compile(r"^(\d+)x(\d+)x(\d+)$")
_SHORT_RE = re.compile(r"^([ksc])(\d+)$")


def _parse_value(key, raw, lineno):
    if key == "mlp_ratio":
        try:
            return Fraction(raw)
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"not a number: {raw!r}", lineno, key) from None
    if key == "kernel" and raw == "global":
        return "global"
    try:
        return int(raw)
    except ValueError:
        raise ParseError(f"expected an integer, got {raw!r}", lineno, key) from None


def _parse_header(tokens, lineno):
    if len(tokens) < 2:
        raise ParseError("expected 'input <C>x<H>x<W> [bits=<n>]'", lineno, "input")
    m = _INPUT_RE.match(tokens[1])
    if not m:
        raise ParseError(f"bad input shape {tokens[1]!r}", lineno, "input")
    c, h, w = (int(g) for g in m.groups())
    if min(c, h, w) < 1:
        raise ValidationError("input dimensions must be >= 1", lineno, "input")
    bits = 8
    for tok in tokens[2:]:
        key, sep, raw = tok.partition("=")
        if key != "bits" or not sep:
            raise ParseError(f"unexpected token {tok!r}", lineno, key)
        bits = _parse_value("bits", raw, lineno)
    if not 1 <= bits <= 32:
        raise ValidationError(f"bits must be in 1..32, got {bits}", lineno, "bits")
    return TensorShape(c, h, w), bits


def _parse_layer(tokens, lineno):
    kind = _KIND_ALIASES.get(tokens[0].lower())
    if kind is None:
        raise ParseError(f"unknown layer kind {tokens[0]!r}", lineno, "kind")
    kv = {}
    for tok in tokens[1:]:
        key, sep, raw = tok.partition("=")
        if not sep:
            m = _SHORT_RE.match(tok)
            if not m:
                raise ParseError(f"expected key=value, got {tok!r}", lineno)
            key, raw = m.groups()
        key = _KEY_ALIASES.get(key, key)
        if key not in _ALL_KEYS:
            raise ParseError(f"unknown key {key!r}", lineno, key)
        if key in kv:
            raise ParseError("duplicate key", lineno, key)
        kv[key] = _parse_value(key, raw, lineno)

    required, optional = _KIND_KEYS[kind]
    for key in required:
        if key not in kv:
            raise ParseError(f"missing required field for {kind.value}", lineno, key)
    for key in kv:
        if key not in required | optional:
            raise ValidationError(f"not applicable to {kind.value}", lineno, key)

    if kv.get("kernel") == "global":
        if kind is not LayerKind.Pool:
            raise ValidationError("only pool accepts kernel=global", lineno, "kernel")
        del kv["kernel"]
        if "size" in kv:
            raise ValidationError("give either kernel or size, not both", lineno, "size")
        kv["size"] = 1
    if kind is LayerKind.PatchEmbed:
        kv.setdefault("stride", kv["kernel"])
    if kind is LayerKind.Pool and "kernel" in kv:
        kv.setdefault("stride", kv["kernel"])

    layer = LayerSpec(kind=kind, **kv)
    try:
        return layer.validate()
    except ValidationError as exc:
        raise ValidationError(str(exc).split(": ", 1)[-1], lineno, exc.field) from None


def parse_spec(text: str, name: str = "network") -> NetworkSpec:
    """Parse spec-file contents into a validated :class:`NetworkSpec`."""
    header = None
    layers = []
    # a single-line form "input 3x224x224, conv k7 s4 c128" is split on commas
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        for part in body.split(","):
            if part.strip():
                lines.append((lineno, part.split()))
    for lineno, tokens in lines:
        if tokens[0].lower() == "input":
            if header is not None:
                raise ParseError("duplicate input header", lineno, "input")
            header = _parse_header(tokens, lineno)
            continue
        if header is None:
            raise ParseError("layer before 'input' header", lineno, "input")
        layers.append(_parse_layer(tokens, lineno))
    if header is None:
        raise ParseError("missing 'input' header", None, "input")
    if not layers:
        raise ValidationError("spec has no layers", None, "layers")
    net = NetworkSpec(name=name, input=header[0], input_bits=header[1], layers=tuple(layers))
    try:
        infer_shapes(net)
    except ShapeError as exc:
        raise ValidationError(str(exc), None, "layers") from None
    return net


def load_spec(path) -> NetworkSpec:
    path = Path(path)
    return parse_spec(path.read_text(encoding="utf-8"), name=path.stem)


def format_spec(net: NetworkSpec) -> str:
    """Serialize back to spec-file text (inverse of :func:`parse_spec`)."""
    out = [f"input {net.input} bits={net.input_bits}"]
    for layer in net.layers:
        parts = [layer.kind.value]
        for key in ("out_channels", "kernel", "stride", "window", "heads",
                    "scale", "size"):
            v = getattr(layer, key)
            if v is None:
                continue
            if key == "stride" and not (layer.kind in _STRIDED or layer.kernel is not None):
                continue
            parts.append(f"{key}={v}")
        if layer.kind is LayerKind.WindowAttentionBlock:
            parts.append(f"mlp_ratio={layer.mlp_ratio}")
        if layer.kind in (LayerKind.ResidualBlock, LayerKind.WindowAttentionBlock):
            parts.append(f"blocks={layer.blocks}")
        out.append(" ".join(parts))
    return "\n".join(out) + "\n"


_STRIDED = {LayerKind.Conv2d, LayerKind.ResidualBlock, LayerKind.PatchEmbed}


# ------------------------------------------------------- shape inference

def _same(n, stride):
    return -(-n // stride)


def _layer_output(layer: LayerSpec, x: TensorShape) -> TensorShape:
    k = layer.kind
    if k in (LayerKind.Conv2d, LayerKind.PatchEmbed, LayerKind.ResidualBlock):
        return TensorShape(layer.out_channels, _same(x.height, layer.stride),
                           _same(x.width, layer.stride))
    if k is LayerKind.WindowAttentionBlock:
        if layer.out_channels != x.channels:
            raise ShapeError(
                f"window attention keeps channels: input has {x.channels}, "
                f"layer declares {layer.out_channels}")
        return x
    if k is LayerKind.Linear:
        return TensorShape(layer.out_channels, 1, 1)
    if k is LayerKind.Pool:
        if layer.size is not None:
            if layer.size > min(x.height, x.width):
                raise ShapeError(f"adaptive pool to {layer.size} exceeds input {x}")
            return TensorShape(x.channels, layer.size, layer.size)
        return TensorShape(x.channels, _same(x.height, layer.stride),
                           _same(x.width, layer.stride))
    if k is LayerKind.Upsample:
        return TensorShape(x.channels, x.height * layer.scale, x.width * layer.scale)
    if k is LayerKind.Downsample:
        h, w = x.height // layer.scale, x.width // layer.scale
        if h < 1 or w < 1:
            raise ShapeError(f"downsample by {layer.scale} collapses {x} to zero")
        return TensorShape(x.channels, h, w)
    raise AssertionError(k)


def infer_shapes(net: NetworkSpec) -> list[TensorShape]:
    """Output shape after each layer, in order."""
    shapes = []
    x = net.input
    for i, layer in enumerate(net.layers):
        try:
            x = _layer_output(layer, x)
        except ShapeError as exc:
            raise ShapeError(f"layer {i} ({layer.kind.value}): {exc}") from None
        shapes.append(x)
    return shapes


# ------------------------------------------------------------ counting

def _conv(x: TensorShape, cout, kernel, stride):
    ho, wo = _same(x.height, stride), _same(x.width, stride)
    return ho * wo * cout * x.channels * kernel * kernel, cout * x.channels * kernel * kernel


def _residual_block(x: TensorShape, cout, stride):
    out = TensorShape(cout, _same(x.height, stride), _same(x.width, stride))
    m1, w1 = _conv(x, cout, 3, stride)
    m2, w2 = _conv(out, cout, 3, 1)
    macs, weights = m1 + m2, w1 + w2
    if cout != x.channels or stride != 1:
        mp, wp = _conv(x, cout, 1, stride)
        macs += mp
        weights += wp
    return out, macs, weights


def attention_block_cost(tokens: int, channels: int, window_area: int,
                         mlp_ratio) -> tuple[int, int]:
    """(MACs, weights) of one windowed self-attention block.

    qkv projection, scores plus weighted sum over the window, output
    projection and a two-layer MLP.  Softmax and norms are free.
    """
    hidden = int(mlp_ratio * channels)
    macs = (3 * tokens * channels ** 2
            + 2 * tokens * window_area * channels
            + tokens * channels ** 2
            + 2 * tokens * channels * hidden)
    weights = 4 * channels ** 2 + 2 * channels * hidden
    return macs, weights


def _layer_cost(layer: LayerSpec, x: TensorShape):
    k = layer.kind
    if k in (LayerKind.Conv2d, LayerKind.PatchEmbed):
        return _conv(x, layer.out_channels, layer.kernel, layer.stride)
    if k is LayerKind.ResidualBlock:
        macs = weights = 0
        stride = layer.stride
        for _ in range(layer.blocks):
            x, m, w = _residual_block(x, layer.out_channels, stride)
            macs += m
            weights += w
            stride = 1
        return macs, weights
    if k is LayerKind.WindowAttentionBlock:
        area = min(layer.window, x.height) * min(layer.window, x.width)
        m, w = attention_block_cost(x.height * x.width, x.channels, area, layer.mlp_ratio)
        return m * layer.blocks, w * layer.blocks
    if k is LayerKind.Linear:
        n = x.element_count * layer.out_channels
        return n, n
    return 0, 0


def count_macs(net: NetworkSpec) -> WorkloadSummary:
    """Per-layer and total MAC / weight counts (biases and norms excluded)."""
    shapes = infer_shapes(net)
    per_layer = []
    x = net.input
    for layer, out in zip(net.layers, shapes):
        macs, weights = _layer_cost(layer, x)
        per_layer.append(LayerWorkload(out, macs, weights))
        x = out
    return WorkloadSummary(tuple(per_layer), shapes[-1])


def activation_bytes(shape: TensorShape, bits: int) -> int:
    """Bytes needed to hold ``shape`` at ``bits`` per element, rounded up."""
    if not 1 <= bits <= 32:
        raise ValueError(f"bits must be in 1..32, got {bits}")
    return -(-shape.element_count * bits // 8)


def complete_encoder(net: NetworkSpec, d: int, s: int) -> NetworkSpec:
    """Set the encoder output to ``d`` channels at ``s x s`` spatial size.

    The last channel-producing layer gets ``out_channels=d`` (trailing
    attention blocks follow it) and any trailing pool is replaced by an
    adaptive pool to ``s``.  A pool is omitted when the spatial size already
    equals ``s``.
    """
    layers = list(net.layers)
    while layers and layers[-1].kind is LayerKind.Pool:
        layers.pop()
    idx = None
    for i in range(len(layers) - 1, -1, -1):
        if layers[i].kind in (LayerKind.Conv2d, LayerKind.PatchEmbed,
                              LayerKind.ResidualBlock, LayerKind.Linear):
            idx = i
            break
    if idx is None:
        raise ValidationError("no channel-producing layer to resize", None, "out_channels")
    layers[idx] = replace(layers[idx], out_channels=d)
    for j in range(idx + 1, len(layers)):
        if layers[j].kind is LayerKind.WindowAttentionBlock:
            layers[j] = replace(layers[j], out_channels=d).validate()
    trimmed = replace(net, layers=tuple(layers))
    spatial = infer_shapes(trimmed)[-1]
    if (spatial.height, spatial.width) != (s, s):
        layers.append(LayerSpec(LayerKind.Pool, size=s).validate())
    return replace(net, name=f"{net.name}-d{d}-s{s}", layers=tuple(layers))
