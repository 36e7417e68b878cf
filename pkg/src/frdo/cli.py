"""Command-line front end: encode, decode, sweep, bdrate and selftest."""

from __future__ import annotations

import argparse
import concurrent.futures
import contextlib
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .codec.transform import QP_MAX, QP_MIN
from .distortion import CandidateDistortion, DistortionKind, normalize_candidates
from .feature_net import Network, identity_network, load_weights, seeded_test_network
from .frame_io import Frame, load_pgm, save_pgm
from .metrics import (RDRow, average_rows, bd_rate, curve_from_rows, feature_fidelity,
                      read_rd_rows, select_label, write_rd_csv)
from .rdo.config import EncoderConfig
from .rdo.lagrangian import DEFAULT_K, inject_fault, lambda_from_qp
from .rdo.partition import exhaustive_partition_oracle, partition_region
from .rdo.stream import decode_frame, encode_frame

DEFAULT_QP_LIST = (12, 17, 22, 27)
SELFTEST_BUDGET_S = 60.0


class UsageError(Exception):
    pass


def _qp(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid qp {text!r}") from None
    if not QP_MIN <= value <= QP_MAX:
        raise argparse.ArgumentTypeError(f"qp {value} outside [{QP_MIN}, {QP_MAX}]")
    return value


def _qp_list(text: str) -> list[int]:
    items = [t for t in text.replace(" ", "").split(",") if t]
    if not items:
        raise argparse.ArgumentTypeError("empty qp list")
    return [_qp(t) for t in items]


def _add_coding_flags(p: argparse.ArgumentParser, sweep: bool = False) -> None:
    p.add_argument("--kind", choices=[k.value for k in DistortionKind], default="sse")
    if sweep:
        p.add_argument("--qp-list", type=_qp_list, default=list(DEFAULT_QP_LIST),
                       help="comma separated, default 12,17,22,27")
    else:
        p.add_argument("--qp", type=_qp, default=22)
    p.add_argument("--delta-qp", type=int, default=0, metavar="R",
                   help="search qp in base +- R per coding unit")
    p.add_argument("--ctu", type=int, default=64)
    p.add_argument("--min-cu", type=int, default=4)
    p.add_argument("--mtt-depth", type=int, default=3)
    p.add_argument("--k", type=float, default=DEFAULT_K)
    _add_network_flags(p)


def _add_network_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--weights", metavar="MANIFEST", help="feature network weight manifest")
    p.add_argument("--test-seed", type=int, help="use the seeded test network")
    p.add_argument("--test-channels", type=int, default=64,
                   help="conv width of the seeded test network")
    p.add_argument("--feat-metric", choices=["fsse", "fsad"], default="fsse",
                   help="error measure behind the feat_db column")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frdo", description=__doc__)
    parser.add_argument("--config", metavar="FILE",
                        help="key=value defaults; command-line flags override them")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode one PGM")
    p.add_argument("input")
    p.add_argument("output", nargs="?")
    p.add_argument("--out", dest="out")
    _add_coding_flags(p)

    p = sub.add_parser("decode", help="decode a bitstream to PGM")
    p.add_argument("input")
    p.add_argument("output", nargs="?")
    p.add_argument("--out", dest="out")

    p = sub.add_parser("sweep", help="encode a PGM directory at several qps")
    p.add_argument("input", help="directory of .pgm files")
    p.add_argument("--label", help="prefix for per-image labels")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="CSV path (default: stdout)")
    _add_coding_flags(p, sweep=True)

    p = sub.add_parser("bdrate", help="BD-rate of test.csv against anchor.csv")
    p.add_argument("anchor")
    p.add_argument("test")
    p.add_argument("--label", help="row label to compare (default: average)")
    p.add_argument("--out", help="also write the report CSV here")

    p = sub.add_parser("selftest", help="run the built-in consistency oracles")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-fault", help=argparse.SUPPRESS)
    return parser


def read_config_file(path) -> dict[str, str]:
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def _apply_config(subparser: argparse.ArgumentParser, values: dict[str, str]) -> None:
    actions = {a.dest: a for a in subparser._actions if a.option_strings}
    defaults = {}
    for key, text in values.items():
        action = actions.get(key)
        if action is None:
            raise UsageError(f"config key {key!r} is not a flag of this command")
        try:
            conv = action.type or str
            value = conv(text)
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"config key {key!r}: {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"config key {key!r}: {value!r} not in {list(action.choices)}")
        defaults[key] = value
    subparser.set_defaults(**defaults)


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            values = read_config_file(args.config)
        except OSError as exc:
            parser.error(f"cannot read config: {exc}")
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        try:
            _apply_config(subparsers.choices[args.command], values)
        except UsageError as exc:
            parser.error(str(exc))
        args = parser.parse_args(argv)
    return args


def network_from_args(args) -> Optional[Network]:
    if getattr(args, "weights", None) and getattr(args, "test_seed", None) is not None:
        raise UsageError("--weights and --test-seed are mutually exclusive")
    if getattr(args, "weights", None):
        return load_weights(args.weights)
    if getattr(args, "test_seed", None) is not None:
        return seeded_test_network(args.test_seed, width=args.test_channels)
    return None


def config_from_args(args, qp: int, network: Optional[Network]) -> EncoderConfig:
    kind = DistortionKind(args.kind)
    if kind.uses_features and network is None:
        raise UsageError(f"--kind {kind.value} needs --weights or --test-seed")
    return EncoderConfig(ctu_size=args.ctu, min_cu=args.min_cu, max_mtt_depth=args.mtt_depth,
                         kind=kind, base_qp=qp, delta_qp_range=args.delta_qp, k=args.k,
                         network=network if kind.uses_features else None,
                         delta_qp_limit=max(3, args.delta_qp))


def encode_row(frame: Frame, cfg: EncoderConfig, network: Optional[Network],
               feat_metric: str, label: str = ""):
    """Encode ``frame`` and return ``(bitstream, RDRow, seconds)``."""
    start = time.perf_counter()
    data, stats = encode_frame(frame, cfg)
    seconds = time.perf_counter() - start
    feat = None if network is None else feature_fidelity(frame, stats.recon, network, feat_metric)
    row = RDRow(label, cfg.base_qp, stats.bpp, stats.psnr, feat, stats.total_bits)
    return data, row, seconds


def _fmt(v) -> str:
    if v is None:
        return ""
    return "inf" if v == float("inf") else f"{v:.6f}"


def run_encode(args) -> int:
    network = network_from_args(args)
    cfg = config_from_args(args, args.qp, network)
    out = args.output or args.out
    if not out:
        raise UsageError("encode needs an output path")
    frame = load_pgm(args.input)
    data, row, _ = encode_row(frame, cfg, network, args.feat_metric)
    Path(out).write_bytes(data)
    print("bits,bpp,psnr_db,feat_db")
    print(f"{row.bits},{row.rate_bpp:.6f},{_fmt(row.psnr_db)},{_fmt(row.feat_db)}")
    return 0


def run_decode(args) -> int:
    out = args.output or args.out
    if not out:
        raise UsageError("decode needs an output path")
    save_pgm(decode_frame(Path(args.input).read_bytes()), out)
    return 0


def _sweep_job(job):
    path, label, qp, args, network = job
    cfg = config_from_args(args, qp, network)
    _, row, seconds = encode_row(load_pgm(path), cfg, network, args.feat_metric, label)
    return row, seconds


def run_sweep(args) -> int:
    root = Path(args.input)
    if not root.is_dir():
        raise UsageError(f"{root}: not a directory")
    paths = sorted(p for p in root.iterdir() if p.suffix.lower() == ".pgm")
    if not paths:
        raise UsageError(f"{root}: empty corpus (no .pgm files)")
    network = network_from_args(args)
    config_from_args(args, args.qp_list[0], network)  # validate before fanning out
    prefix = f"{args.label}:" if args.label else ""
    jobs = [(str(p), prefix + p.stem, qp, args, network)
            for p in paths for qp in args.qp_list]
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]
    rows = sorted((r for r, _ in results), key=lambda r: (r.label, r.qp))
    rows += average_rows(rows, f"{prefix}average" if prefix else "average")
    total = sum(s for _, s in results)
    print(f"encode time {total:.3f} s over {len(jobs)} encodes", file=sys.stderr)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_rd_csv(rows, fh)
    else:
        write_rd_csv(rows, sys.stdout)
    return 0


def bdrate_report(anchor_rows, test_rows, label=None) -> list[tuple[str, float]]:
    a = select_label(anchor_rows, label)
    t = select_label(test_rows, label)
    report = []
    for axis in ("psnr_db", "feat_db"):
        if any(r.feat_db is None for r in a + t) and axis == "feat_db":
            continue
        report.append((axis, bd_rate(curve_from_rows(a, axis), curve_from_rows(t, axis))))
    return report


def run_bdrate(args) -> int:
    report = bdrate_report(read_rd_rows(args.anchor), read_rd_rows(args.test), args.label)
    lines = ["metric,percent"] + [f"{axis},{value:.4f}" for axis, value in report]
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
    return 0


# -- selftest ----------------------------------------------------------------

def _check_degeneration(rng) -> Optional[str]:
    net = identity_network()
    for i in range(2):
        frame = Frame.from_array(rng.integers(0, 256, (32, 32), dtype=np.uint8))
        for qp in (22, 27):
            ref = EncoderConfig(ctu_size=32, min_cu=8, max_mtt_depth=1, base_qp=qp)
            feat = EncoderConfig(ctu_size=32, min_cu=8, max_mtt_depth=1, base_qp=qp,
                                 kind=DistortionKind.FSSE, network=net)
            if encode_frame(frame, ref)[0] != encode_frame(frame, feat)[0]:
                return f"frame {i} qp {qp}: FSSE with the identity network differs from SSE"
    return None


def _check_anchor(rng) -> Optional[str]:
    for trial in range(200):
        n = int(rng.integers(1, 8))
        cands = [CandidateDistortion(float(rng.integers(0, 10_000)), float(rng.random() * 50))
                 for _ in range(n)]
        out = normalize_candidates(cands)
        if out[0].d_feat_norm != cands[0].d_sse and cands[0].d_feat != 0:
            return f"trial {trial}: anchor not mapped onto its pixel SSE"
    return None


def _check_oracle(rng) -> Optional[str]:
    # NONE vs QUAD with leaf children: the recursion is exact here, for any kind.
    net = seeded_test_network(1, width=8)
    lam = lambda_from_qp(22)
    for kind in (DistortionKind.SSE, DistortionKind.HFSAD):
        cfg = EncoderConfig(ctu_size=8, min_cu=4, max_mtt_depth=0, kind=kind,
                            network=net if kind.uses_features else None)
        for i in range(10):
            img = rng.integers(0, 256, (8, 8), dtype=np.uint8)
            node = partition_region(img, (0, 0, 8, 8), cfg, lam)
            _, cost = exhaustive_partition_oracle(img, (0, 0, 8, 8), cfg, lam)
            if node.cost.j != cost.j:
                return f"{kind.value} region {i}: search {node.cost.j} vs oracle {cost.j}"
    return None


SELFTEST_CHECKS = (("anchor", _check_anchor), ("degeneration", _check_degeneration),
                   ("oracle", _check_oracle))


def run_selftest(args) -> int:
    start = time.perf_counter()
    failures = 0
    with inject_fault(args.inject_fault) if args.inject_fault else contextlib.nullcontext():
        for name, check in SELFTEST_CHECKS:
            problem = check(np.random.default_rng(args.seed))
            if problem:
                failures += 1
                print(f"{name}: FAIL {problem}")
            else:
                print(f"{name}: ok")
    elapsed = time.perf_counter() - start
    if elapsed > SELFTEST_BUDGET_S:
        print(f"warning: selftest took {elapsed:.1f} s (budget {SELFTEST_BUDGET_S:.0f} s)",
              file=sys.stderr)
    return 1 if failures else 0


COMMANDS = {"encode": run_encode, "decode": run_decode, "sweep": run_sweep,
            "bdrate": run_bdrate, "selftest": run_selftest}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"frdo {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"frdo {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
