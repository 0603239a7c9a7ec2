"""Command-line interface: encode, decode, inspect, metrics, report.

Exit codes: 0 success, 1 usage, 2 I/O failure, 3 malformed input
(bitstream/weight format errors or a corrupt entropy stream).
"""

import argparse
import sys

from . import bitstream as bsmod
from .codec import decode_image, encode_image, make_report
from .config import ModelConfig
from .errors import FormatError, TinylicError
from .image import mse, psnr, read_ppm, write_ppm
from .weights import init_weights, load_weights


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(1)


def _add_model_args(p, seed_optional):
    group = p.add_mutually_exclusive_group(required=not seed_optional)
    group.add_argument("--seed", type=int, help="initialize weights from this seed")
    group.add_argument("--weights", help="load weights from a TLWT file")
    p.add_argument("--config", help="model config JSON file (default: built-in)")


def _build_parser():
    parser = _Parser(prog="tinylic", description="tinylic learned image codec")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    enc = sub.add_parser("encode", help="compress a PPM image")
    enc.add_argument("--input", required=True)
    enc.add_argument("--output", required=True)
    enc.add_argument("--sf", type=float, default=1.0, help="quality scaling factor")
    _add_model_args(enc, seed_optional=True)

    dec = sub.add_parser("decode", help="decompress a TLIC bitstream")
    dec.add_argument("--input", required=True)
    dec.add_argument("--output", required=True)
    _add_model_args(dec, seed_optional=False)

    ins = sub.add_parser("inspect", help="print bitstream header and chunk sizes")
    ins.add_argument("file")

    met = sub.add_parser("metrics", help="MSE/PSNR between two PPM images")
    met.add_argument("--ref", required=True)
    met.add_argument("--test", required=True)

    rep = sub.add_parser("report", help="encode+decode and print an RD report")
    rep.add_argument("--input", required=True)
    rep.add_argument("--sf", type=float, default=1.0)
    rep.add_argument("--lambda", dest="lam", type=float, default=0.01,
                     help="distortion weight in the J cost (reporting only)")
    _add_model_args(rep, seed_optional=True)

    return parser


def _load_config(args):
    if getattr(args, "config", None):
        with open(args.config) as fh:
            return ModelConfig.from_json(fh.read())
    return ModelConfig()


def _load_model(args, cfg):
    if getattr(args, "weights", None):
        with open(args.weights, "rb") as fh:
            return load_weights(fh.read(), cfg)
    seed = args.seed if args.seed is not None else 0
    return init_weights(cfg, seed)


def _cmd_encode(args):
    cfg = _load_config(args)
    ws = _load_model(args, cfg)
    img = read_ppm(args.input)
    result = encode_image(img, cfg, ws, sf=args.sf)
    with open(args.output, "wb") as fh:
        fh.write(bsmod.serialize(result.bitstream))
    return 0


def _cmd_decode(args):
    cfg = _load_config(args)
    ws = _load_model(args, cfg)
    with open(args.input, "rb") as fh:
        blob = fh.read()
    img = decode_image(blob, cfg, ws)
    write_ppm(img, args.output)
    return 0


def _cmd_inspect(args):
    with open(args.file, "rb") as fh:
        bs = bsmod.parse(fh.read())
    print(f"magic: TLIC  version: {bsmod.VERSION}")
    print(f"original size: {bs.width}x{bs.height}")
    print(f"sf: {bs.sf_fixed / 256.0} (0x{bs.sf_fixed:04X})")
    print(f"config id: {bs.config_id}")
    print(f"z chunk: {len(bs.z_chunk)} bytes")
    for i, chunk in enumerate(bs.y_chunks, start=1):
        print(f"y chunk {i}: {len(chunk)} bytes")
    return 0


def _cmd_metrics(args):
    ref = read_ppm(args.ref)
    test = read_ppm(args.test)
    print(f"mse: {mse(ref, test):.6f}")
    print(f"psnr_db: {psnr(ref, test)}")
    return 0


def _cmd_report(args):
    cfg = _load_config(args)
    ws = _load_model(args, cfg)
    img = read_ppm(args.input)
    report = make_report(img, cfg, ws, sf=args.sf, lam=args.lam)
    for line in report.lines():
        print(line)
    return 0


_COMMANDS = {
    "encode": _cmd_encode,
    "decode": _cmd_decode,
    "inspect": _cmd_inspect,
    "metrics": _cmd_metrics,
    "report": _cmd_report,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FormatError as exc:
        print(f"tinylic: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"tinylic: {exc}", file=sys.stderr)
        return 2
    except TinylicError as exc:
        print(f"tinylic: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
