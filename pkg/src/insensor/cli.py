"""Command-line front end.

Exit codes: 0 success, 2 parse error, 3 data error, 4 scenario error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dse, huffman
from .entropy import empirical_entropy, histogram
from .errors import InSensorError, SymbolOutOfRange
from .netspec import count_macs, infer_shapes, load_spec
from .quantizer import symbol_limit
from .tensorio import DType, TensorFile, read_tensor, write_tensor

EXIT_OK, EXIT_PARSE, EXIT_DATA, EXIT_SCENARIO = 0, 2, 3, 4


def cmd_analyze(args) -> int:
    net = load_spec(args.spec)
    summary = count_macs(net)
    shapes = infer_shapes(net)
    if args.json:
        out = {
            "name": net.name,
            "input": str(net.input),
            "input_bits": net.input_bits,
            "layers": [
                {"kind": l.kind.value, "output": str(s), "macs": w.macs, "weights": w.weights}
                for l, s, w in zip(net.layers, shapes, summary.per_layer)],
            "total_macs": summary.total_macs,
            "total_weights": summary.total_weights,
            "output": str(summary.output_shape),
        }
        print(json.dumps(out, indent=2))
        return EXIT_OK
    print(f"{net.name}: input {net.input} @ {net.input_bits} bits")
    print(f"{'#':>3} {'kind':<18}{'output':>14}{'MACs':>16}{'weights':>12}")
    for i, (l, s, w) in enumerate(zip(net.layers, shapes, summary.per_layer)):
        print(f"{i:>3} {l.kind.value:<18}{str(s):>14}{w.macs:>16,}{w.weights:>12,}")
    print(f"{'total':<22}{str(summary.output_shape):>14}"
          f"{summary.total_macs:>16,}{summary.total_weights:>12,}")
    return EXIT_OK


def cmd_compress(args) -> int:
    t = read_tensor(Path(args.tensor).read_bytes())
    if t.dtype is not DType.I8:
        raise SymbolOutOfRange("compress expects an i8 symbol tensor")
    symbols = t.to_array().ravel()
    lim = symbol_limit(args.bits) if args.bits >= 2 else 0
    if symbols.size and (symbols.min() < -lim or symbols.max() > lim):
        raise SymbolOutOfRange(f"symbols outside +/-{lim} for {args.bits} bits")
    h = histogram(symbols) if symbols.size else None
    if args.codebook:
        cb = huffman.codebook_from_stream(Path(args.codebook).read_bytes())
    elif h is not None:
        cb = huffman.build_codebook(h)
    else:
        raise SymbolOutOfRange("empty tensor and no codebook to encode with")
    stream = huffman.encode(symbols, cb, symbol_bits=args.bits)
    out = Path(args.out) if args.out else Path(args.tensor).with_suffix(".oash")
    out.write_bytes(huffman.serialize(stream))
    stats = {"symbols": int(symbols.size), "stream": str(out),
             "payload_bytes": len(stream.payload)}
    if h is not None:
        eff = huffman.avg_code_length(cb, h)
        stats.update(entropy_bits=empirical_entropy(h), effective_bits=eff,
                     compression_ratio=args.bits / eff)
    if args.json:
        print(json.dumps(stats, indent=2))
    else:
        for k, v in stats.items():
            print(f"{k}: {v:.4f}" if isinstance(v, float) else f"{k}: {v}")
    return EXIT_OK


def cmd_decompress(args) -> int:
    stream = huffman.deserialize(Path(args.stream).read_bytes())
    symbols = huffman.decode(stream).astype(np.int8)
    out = Path(args.out) if args.out else Path(args.stream).with_suffix(".oast")
    if symbols.size:
        data = write_tensor(TensorFile.from_array(symbols))
    else:
        raise SymbolOutOfRange("stream holds no symbols; nothing to write")
    out.write_bytes(data)
    print(f"symbols: {symbols.size}\ntensor: {out}")
    return EXIT_OK


def cmd_energy(args) -> int:
    report = dse.evaluate_scenario(args.scenario, seed=args.seed)
    if args.json:
        print(json.dumps(report.as_dict(), indent=2))
    else:
        print(dse.format_energy_report(report))
    return EXIT_OK


def cmd_sweep(args) -> int:
    grid = dse.load_grid(args.grid)
    rows = dse.run_sweep(grid, seed=args.seed, workers=args.workers)
    text = dse.write_report(rows, args.format)
    Path(args.out).write_text(text, encoding="utf-8")
    failed = sum(1 for r in rows if r["error"])
    print(f"wrote {len(rows)} rows to {args.out}" + (f" ({failed} with errors)" if failed else ""))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="insensor", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="per-layer shapes, MACs and weights of a spec file")
    p.add_argument("spec")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compress", help="Huffman-code an i8 symbol tensor")
    p.add_argument("tensor")
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--codebook", help="reuse the code table of an existing stream file")
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="decode a stream back to an i8 tensor")
    p.add_argument("stream")
    p.add_argument("--out")
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("energy", help="per-frame energy of a scenario, both topologies")
    p.add_argument("scenario")
    p.add_argument("--json", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("sweep", help="design-space sweep to a CSV/JSON report")
    p.add_argument("grid")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InSensorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
