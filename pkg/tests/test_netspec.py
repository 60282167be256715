import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from insensor.errors import ParseError, ShapeError, ValidationError
from insensor.netspec import (LayerKind, TensorShape, activation_bytes,
                              attention_block_cost, complete_encoder, count_macs,
                              format_spec, infer_shapes, load_spec, parse_spec)

from oracles import conv_macs_bruteforce, linear_macs_bruteforce


def test_minimal_spec_one_layer():
    net = parse_spec("input 3x224x224, conv k7 s4 c128")
    assert len(net.layers) == 1
    layer = net.layers[0]
    assert (layer.kind, layer.kernel, layer.stride, layer.out_channels) == (
        LayerKind.Conv2d, 7, 4, 128)
    assert net.input_bits == 8


def test_tiny_resnet_spec(specs_dir):
    net = load_spec(specs_dir / "tiny_resnet_vww.spec")
    stem = net.layers[0]
    assert (stem.kind, stem.kernel, stem.stride) == (LayerKind.Conv2d, 7, 4)
    res = [l for l in net.layers if l.kind is LayerKind.ResidualBlock]
    assert [l.out_channels for l in res] == [128, 256, 4]
    assert all(l.blocks == 2 and l.stride == 2 for l in res)
    assert count_macs(net).output_shape == TensorShape(4, 4, 4)


def test_shipped_specs_parse(specs_dir):
    for path in sorted(specs_dir.glob("*.spec")):
        count_macs(load_spec(path))


def test_keynetf_channels_verbatim(specs_dir):
    net = load_spec(specs_dir / "keynetf_encoder.spec")
    convs = [l.out_channels for l in net.layers if l.kind is LayerKind.Conv2d]
    assert convs == [32, 32, 32, 64, 16]


def test_eyenet_dims(specs_dir):
    assert count_macs(load_spec(specs_dir / "eyenet_encoder.spec")).output_shape == \
        TensorShape(4, 25, 40)
    assert count_macs(load_spec(specs_dir / "eyenet_encoder_roi.spec")).output_shape == \
        TensorShape(4, 15, 35)


def test_heads_must_divide_channels():
    with pytest.raises(ValidationError) as exc:
        parse_spec("input 3x28x28\nwindow_attention out_channels=161 heads=5 window=7")
    assert exc.value.field == "heads"
    assert exc.value.line == 2


@pytest.mark.parametrize("text, line, field", [
    ("input 3x8x8\nconv k3", 2, "out_channels"),
    ("input 3x8x8\nblob c3", 2, "kind"),
    ("input 3x8x8\nconv k3 c4 foo=2", 2, "foo"),
    ("input 3xx8\nconv k3 c4", 1, "input"),
    ("conv k3 c4", 1, "input"),
    ("input 3x8x8\nconv k=three c4", 2, "kernel"),
])
def test_parse_errors_carry_location(text, line, field):
    with pytest.raises(ParseError) as exc:
        parse_spec(text)
    assert exc.value.line == line
    assert exc.value.field == field


def test_inapplicable_key_is_validation_error():
    with pytest.raises(ValidationError):
        parse_spec("input 3x8x8\nlinear c4 heads=2")


def test_comments_and_blank_lines():
    net = parse_spec("# header\n\ninput 1x4x4 bits=4  # trailing\nconv c2 k1  # x\n")
    assert net.input_bits == 4 and len(net.layers) == 1


def test_format_roundtrip(specs_dir):
    for path in sorted(specs_dir.glob("*.spec")):
        net = load_spec(path)
        again = parse_spec(format_spec(net), name=net.name)
        assert again == net


# --- shapes

def test_stride4_stem_shape():
    net = parse_spec("input 3x224x224\nconv k7 s4 c128")
    assert infer_shapes(net) == [TensorShape(128, 56, 56)]


def test_patch_embed_shape():
    net = parse_spec("input 3x224x224\npatch_embed k8 c96")
    assert infer_shapes(net) == [TensorShape(96, 28, 28)]


def test_identity_conv_shape():
    net = parse_spec("input 1x1x1\nconv k1 s1 c1")
    assert infer_shapes(net) == [TensorShape(1, 1, 1)]


def test_global_pool_and_resample():
    net = parse_spec("input 8x7x9\npool kernel=global\nupsample scale=3\ndownsample scale=3")
    assert infer_shapes(net) == [TensorShape(8, 1, 1), TensorShape(8, 3, 3),
                                 TensorShape(8, 1, 1)]


def test_downsample_to_zero_is_shape_error():
    net = parse_spec("input 2x4x4\ndownsample scale=2")
    bad = net.__class__(net.name, net.input, 8, net.layers * 3)
    with pytest.raises(ShapeError):
        infer_shapes(bad)
    with pytest.raises(ValidationError):
        parse_spec("input 2x4x4\ndownsample scale=8")


def test_attention_must_keep_channels():
    with pytest.raises(ValidationError):
        parse_spec("input 8x7x7\nwindow_attention c16 heads=2 window=7")


# --- counting

def test_conv_3_to_8_same_padding():
    net = parse_spec("input 3x32x32\nconv k3 s1 c8")
    assert count_macs(net).total_macs == 221_184
    assert conv_macs_bruteforce(3, 32, 32, 8, 3, 1) == 221_184


def test_single_mac():
    w = count_macs(parse_spec("input 1x1x1\nconv k1 c1"))
    assert (w.total_macs, w.total_weights) == (1, 1)


def test_linear_16_to_10():
    w = count_macs(parse_spec("input 16x1x1\nlinear c10"))
    assert (w.total_macs, w.total_weights) == (160, 160)
    assert w.output_shape == TensorShape(10, 1, 1)


def test_residual_block_matches_enumeration():
    # 4 -> 8 channels, stride 2 on 8x8: 3x3 conv, 3x3 conv, 1x1 projection
    w = count_macs(parse_spec("input 4x8x8\nresidual c8 s2"))
    expected = (conv_macs_bruteforce(4, 8, 8, 8, 3, 2)
                + conv_macs_bruteforce(8, 4, 4, 8, 3, 1)
                + conv_macs_bruteforce(4, 8, 8, 8, 1, 2))
    assert w.total_macs == expected == 14_336
    assert w.total_weights == 4 * 8 * 9 + 8 * 8 * 9 + 4 * 8


def test_residual_without_projection():
    w = count_macs(parse_spec("input 8x4x4\nresidual c8 blocks=2"))
    assert w.total_macs == 4 * conv_macs_bruteforce(8, 4, 4, 8, 3, 1)
    assert w.total_weights == 4 * 8 * 8 * 9


def test_attention_block_hand_count():
    # T=16 tokens, C=4, window clipped to the 4x4 map, MLP ratio 4
    assert attention_block_cost(16, 4, 16, 4) == (
        3 * 16 * 16 + 2 * 16 * 16 * 4 + 16 * 16 + 2 * 16 * 4 * 16, 4 * 16 + 2 * 4 * 16)
    w = count_macs(parse_spec("input 4x4x4\nwindow_attention c4 heads=4 window=7 blocks=2"))
    assert w.total_macs == 2 * 5120
    assert w.total_weights == 2 * 192


def test_tiny_resnet_stem_hand_count(specs_dir):
    w = count_macs(load_spec(specs_dir / "tiny_resnet_vww.spec"))
    assert w.per_layer[0].macs == 56 * 56 * 128 * 3 * 7 * 7
    assert w.total_macs == sum(l.macs for l in w.per_layer)
    assert w.total_weights == sum(l.weights for l in w.per_layer)


def test_activation_bytes():
    assert activation_bytes(TensorShape(3, 224, 224), 8) == 150_528
    assert activation_bytes(TensorShape(4, 4, 4), 4) == 32
    assert activation_bytes(TensorShape(1, 1, 1), 8) == 1
    assert activation_bytes(TensorShape(1, 1, 3), 3) == 2


def test_complete_encoder(specs_dir):
    base = load_spec(specs_dir / "tiny_resnet_vww.spec")
    for d, s in [(16, 1), (4, 4), (8, 3), (2, 7)]:
        assert count_macs(complete_encoder(base, d, s)).output_shape == TensorShape(d, s, s)
    swin = load_spec(specs_dir / "tiny_swinvit_vww.spec")
    assert count_macs(complete_encoder(swin, 16, 1)).output_shape == TensorShape(16, 1, 1)
    with pytest.raises(ValidationError):
        complete_encoder(swin, 2, 4)  # 4 heads cannot split 2 channels


# --- properties

small = st.integers(1, 8)


@settings(max_examples=60, deadline=None)
@given(cin=small, h=small, w=small, cout=small, k=st.integers(1, 5), stride=st.integers(1, 4))
def test_conv_macs_match_bruteforce(cin, h, w, cout, k, stride):
    net = parse_spec(f"input {cin}x{h}x{w}\nconv k{k} s{stride} c{cout}")
    assert count_macs(net).total_macs == conv_macs_bruteforce(cin, h, w, cout, k, stride)


@settings(max_examples=40, deadline=None)
@given(c=small, h=small, w=small, cout=small)
def test_linear_macs_match_bruteforce(c, h, w, cout):
    net = parse_spec(f"input {c}x{h}x{w}\nlinear c{cout}")
    assert count_macs(net).total_macs == linear_macs_bruteforce(c * h * w, cout)


@settings(max_examples=40, deadline=None)
@given(h=st.integers(1, 64), w=st.integers(1, 64), h2=st.integers(1, 64), w2=st.integers(1, 64))
def test_weights_independent_of_spatial_size(h, w, h2, w2):
    body = "conv k3 s2 c8\nresidual c16 s2\npatch_embed k2 c16\n"
    a = count_macs(parse_spec(f"input 3x{h}x{w}\n{body}"))
    b = count_macs(parse_spec(f"input 3x{h2}x{w2}\n{body}"))
    assert a.total_weights == b.total_weights


@settings(max_examples=40, deadline=None)
@given(c=small, h=st.integers(1, 40), w=st.integers(1, 40), cout=small, k=st.integers(1, 7))
def test_doubling_height_doubles_stride1_conv(c, h, w, cout, k):
    one = count_macs(parse_spec(f"input {c}x{h}x{w}\nconv k{k} c{cout}")).total_macs
    two = count_macs(parse_spec(f"input {c}x{2 * h}x{w}\nconv k{k} c{cout}")).total_macs
    assert two == 2 * one


def test_shape_inference_deterministic(specs_dir):
    net = load_spec(specs_dir / "tiny_swinvit_vww.spec")
    assert infer_shapes(net) == infer_shapes(net)
    assert count_macs(net) == count_macs(net)
