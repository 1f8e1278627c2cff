"""Command-line interface: ``mkmr {setup,keygen,encrypt,decrypt,stats,bench}``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import formats
from .bench import run_bench
from .codec import WindowStream, decode_stream, encode_image, pack_messages, read_image, window_width, write_pgm
from .errors import CapacityError, DimensionError
from .prm import SecretKeyMatrix
from .sampler import Rng, Seed
from .scheme import Ciphertext, RecipientKey, SchemeParams, decrypt_recipient, encrypt, recipient_key, setup
from .stats import SUITES, chi_square_uniform, summary_json

# Stable exit codes, one per error class.
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_DIMENSION = 4
EXIT_CAPACITY = 5
EXIT_IO = 6
EXIT_STATS = 7


class UsageError(Exception):
    pass


def _log(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def _rng(args) -> Rng:
    return Rng(Seed(args.seed)) if args.seed else Rng()


def _load_params(args, m: int | None = None, q: int | None = None) -> SchemeParams:
    if args.params:
        return SchemeParams.from_dict(json.loads(Path(args.params).read_text()))
    if m is None:
        return setup(128)
    return setup(128, m=m, q=q)


def _load_as(path, kind):
    obj = formats.load(path)
    if not isinstance(obj, kind):
        raise formats.FormatError(f"{path}: expected a {kind.__name__} file, found {type(obj).__name__}")
    return obj


def write_stream(values: np.ndarray, path) -> None:
    """Plaintext stream file: little-endian u64 per element, nothing else."""
    Path(path).write_bytes(np.asarray(values, dtype="<u8").tobytes())


def read_stream(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if len(blob) % 8:
        raise formats.FormatError(f"{path}: stream length {len(blob)} is not a multiple of 8")
    return np.frombuffer(blob, dtype="<u8").astype(np.int64)


def cmd_setup(args) -> int:
    params = setup(args.lam, m=args.m, q=args.q, sigma=args.sigma, tail_cut=args.tail_cut)
    out = Path(args.output)
    out.write_text(json.dumps(params.to_dict(), indent=2) + "\n")
    _log(args, f"wrote {out}: m={params.m} q={params.q} sigma={params.gauss.sigma} bound={params.gauss.bound}")
    return EXIT_OK


def cmd_keygen(args) -> int:
    from .scheme import keygen

    params = _load_params(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    S = keygen(params, _rng(args))
    formats.dump(S, out / "secret.mksk")
    for j in range(1, S.m + 1):
        formats.dump(recipient_key(S, j), out / f"recipient_{j:04d}.mkrk")
    _log(args, f"wrote {out / 'secret.mksk'} and {S.m} recipient keys")
    return EXIT_OK


def cmd_encrypt(args) -> int:
    S = _load_as(args.key, SecretKeyMatrix)
    params = _load_params(args, m=S.m, q=S.q)
    if params.m != S.m or params.q != S.q:
        raise DimensionError(f"params (m={params.m}, q={params.q}) do not match the key (m={S.m}, q={S.q})")
    if len(args.inputs) > S.m:
        raise CapacityError(f"{len(args.inputs)} inputs but only {S.m} recipients")
    rng = _rng(args)
    t = window_width(S.field)
    streams, rows = [], []
    for j, path in enumerate(args.inputs, start=1):
        img = read_image(path)
        ws = encode_image(img, t)
        streams.append(ws)
        rows.append({"row": j, "label": Path(path).name, "kind": "image", "shape": [img.r, img.c], "t": t, "length": len(ws)})
    M = pack_messages(streams, S.m, rng, S.field, l=args.length)
    C = encrypt(S, M, rng, params.gauss)
    formats.dump(C, args.output)
    manifest = {
        "format": "mkmr-manifest",
        "version": 1,
        "q": S.q,
        "m": S.m,
        "l": M.l,
        "seed": args.seed if args.seed else "nondeterministic",
        "rows": rows,
        "random_rows": S.m - len(rows),
    }
    manifest_path = Path(args.manifest or f"{args.output}.manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    _log(args, f"wrote {args.output} ({C.m} x {C.l + 1}) and {manifest_path}; {S.m - len(rows)} random filler rows")
    return EXIT_OK


def cmd_decrypt(args) -> int:
    if bool(args.key) == bool(args.key_matrix):
        raise UsageError("decrypt needs exactly one of --key or --key-matrix")
    C = _load_as(args.ciphertext, Ciphertext)
    if args.key:
        key = _load_as(args.key, RecipientKey)
        row = args.row or key.index
    else:
        if not args.row:
            raise UsageError("--key-matrix requires --row")
        key = recipient_key(_load_as(args.key_matrix, SecretKeyMatrix), args.row)
        row = args.row
    if not 1 <= row <= C.m:
        raise DimensionError(f"row {row} outside [1, {C.m}]")
    plain = decrypt_recipient(key, C, row=row)

    shape = tuple(args.image) if args.image else None
    t = window_width(C.field)
    if shape is None and args.manifest:
        manifest = json.loads(Path(args.manifest).read_text())
        entry = next((r for r in manifest["rows"] if r["row"] == row), None)
        if entry is not None:
            shape, t = tuple(entry["shape"]), entry["t"]
    if shape is not None:
        r, c = shape
        if r * c > len(plain):
            raise DimensionError(f"image {r}x{c} needs {r * c} elements, stream has {len(plain)}")
        img = decode_stream(WindowStream(r, c, t, plain[: r * c]), C.field.q)
        write_pgm(img, args.output)
        _log(args, f"wrote {args.output}: {r}x{c} image from row {row}")
    else:
        write_stream(plain, args.output)
        _log(args, f"wrote {args.output}: {len(plain)} elements from row {row}")
    return EXIT_OK


def cmd_stats(args) -> int:
    rng = _rng(args)
    params = _load_params(args)
    if args.suite == "stream":
        if not args.input:
            raise UsageError("--suite stream needs --input")
        results = [chi_square_uniform(read_stream(args.input), params.q, name=f"stream {Path(args.input).name}")]
    elif args.suite == "all":
        results = []
        for name, fn in SUITES.items():
            results += fn(rng.derive(len(results)), params)
    else:
        kwargs = {"trials": args.trials} if args.suite == "indcpa" and args.trials else {}
        results = SUITES[args.suite](rng, params, **kwargs)
    for r in results:
        _log(args, r.line())
    if args.json:
        Path(args.json).write_text(summary_json(results) + "\n")
    bad = [r for r in results if not r.ok]
    _log(args, f"{len(results) - len(bad)}/{len(results)} checks behaved as expected")
    return EXIT_OK if not bad else EXIT_STATS


def cmd_bench(args) -> int:
    res = run_bench(args.m, args.l, args.reps, _rng(args))
    for line in res.lines():
        _log(args, line)
    if args.json:
        Path(args.json).write_text(json.dumps(res.record()) + "\n")
    return EXIT_OK


def _seed(text: str) -> str:
    try:
        Seed(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"seed must be 64 hex digits: {exc}") from None
    return text


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", default=argparse.SUPPRESS, help="parameter file written by `setup`")
    common.add_argument("--seed", type=_seed, default=argparse.SUPPRESS, help="32-byte hex seed (reproducible runs)")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="mkmr", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("setup", parents=[common], help="write a parameter file")
    p.add_argument("--lambda", dest="lam", type=int, default=128)
    p.add_argument("--m", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--sigma", type=float, default=3.2)
    p.add_argument("--tail-cut", type=int, default=6)
    p.add_argument("-o", "--output", default="params.json")
    p.set_defaults(func=cmd_setup)

    p = sub.add_parser("keygen", parents=[common], help="generate the key matrix and recipient keys")
    p.add_argument("--out-dir", default="keys")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("encrypt", parents=[common], help="encrypt up to m images into one ciphertext")
    p.add_argument("--key", required=True, help="key matrix file (.mksk)")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--manifest", help="manifest path (default: <output>.manifest.json)")
    p.add_argument("--length", type=int, help="stream length l (default: longest input)")
    p.add_argument("inputs", nargs="*", help="PGM (P5) or raw images")
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("decrypt", parents=[common], help="recover one recipient's stream")
    p.add_argument("ciphertext")
    p.add_argument("--key", help="recipient key file (.mkrk)")
    p.add_argument("--key-matrix", help="key matrix file (.mksk); needs --row")
    p.add_argument("--row", type=int, help="row to decrypt (default: the key's own)")
    p.add_argument("--image", nargs=2, type=int, metavar=("R", "C"), help="decode as an R x C image")
    p.add_argument("--manifest", help="take image shape from the sender's manifest")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_decrypt)

    p = sub.add_parser("stats", parents=[common], help="run a statistical suite")
    p.add_argument("--suite", choices=sorted(SUITES) + ["stream", "all"], default="all")
    p.add_argument("--input", help="stream file for --suite stream")
    p.add_argument("--trials", type=int, help="IND-CPA trials")
    p.add_argument("--json", help="write one JSON record per check")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("bench", parents=[common], help="measure throughput")
    p.add_argument("--m", type=int, default=256)
    p.add_argument("--l", type=int, default=4096)
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--json")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    for name, default in (("params", None), ("seed", None), ("quiet", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mkmr: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except formats.FormatError as exc:
        print(f"mkmr: bad format: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except DimensionError as exc:
        print(f"mkmr: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except CapacityError as exc:
        print(f"mkmr: too many inputs: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except OSError as exc:
        print(f"mkmr: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"mkmr: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
