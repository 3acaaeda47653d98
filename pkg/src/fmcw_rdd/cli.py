"""Command-line entry point: ``fmcw-rdd <command> [options]``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import experiments as ex
from . import io as rio
from .cnn import ArchitectureSpec, NumericError
from .config import ExperimentConfig, load_config
from .radar_sim import ConfigError, DegeneratePowerError, RangeOverflowError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("fmcw_rdd")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI experiment configuration file")
    p.add_argument("--seed", type=int, default=0, help="root random seed (u64)")
    p.add_argument("--scale", choices=("paper", "desk"), help="preset (default: desk, or the config file's)")
    p.add_argument("--arch", help="comma-separated kernel counts, e.g. 16,2")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fmcw-rdd", description="FMCW radar interference mitigation lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dataset", help="simulate a paired dataset")
    _common(p)
    p.add_argument("--count", type=int, help="number of frames (default: sum of the split sizes)")
    p.add_argument("--role", choices=("sim", "real"), default="sim",
                   help="'real' samples from the alternative scenario distribution")

    p = sub.add_parser("train", help="train a CNN on a dataset")
    _common(p)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--init", help="checkpoint to fine-tune from")

    p = sub.add_parser("eval", help="test-split SINR of a trained CNN")
    _common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)

    p = sub.add_parser("sweep-arch", help="depth x width architecture sweep")
    _common(p)
    p.add_argument("--data", required=True)

    p = sub.add_parser("sample-size-study", help="test SINR against training-set size")
    _common(p)
    p.add_argument("--data", required=True, help="simulated dataset")
    p.add_argument("--real-data", required=True, help="dataset standing in for measurements")

    p = sub.add_parser("compare-methods", help="Monte-Carlo comparison with classical methods")
    _common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", help="trained CNN (required when the method list includes cnn)")

    p = sub.add_parser("ingest", help="turn external clean frames into a dataset")
    _common(p)
    p.add_argument("--input", required=True, help=".rifm file or directory of them")
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config, args.scale)
    if args.arch:
        try:
            cfg = replace(cfg, arch=ArchitectureSpec.parse(args.arch))
        except ValueError as exc:
            raise ConfigError(f"bad --arch {args.arch!r}: {exc}") from exc
    if not 0 <= args.seed < 2**64:
        raise ConfigError("--seed must fit in an unsigned 64-bit integer")
    return cfg


def _load_model(path):
    try:
        model, _ = rio.load_checkpoint(path)
    except FileNotFoundError as exc:
        raise ex.DataError(f"checkpoint {path} not found") from exc
    except rio.FormatError as exc:
        raise ex.DataError(f"{path}: {exc}") from exc
    return model


def cmd_gen_dataset(cfg, args, out: Path) -> None:
    bounds = cfg.alt_bounds if args.role == "real" else cfg.bounds
    m = ex.gen_dataset(cfg, args.count, args.seed, out, bounds=bounds, note=f"role={args.role}")
    print(f"wrote {m.count} frames to {out} ({m.splits})")


def cmd_train(cfg, args, out: Path) -> None:
    ds = ex.Dataset(args.data, cfg)
    init = _load_model(args.init) if args.init else None
    tr, va = ds.split("train"), ds.split("val")
    res = ex.train_model(cfg, tr.pairs(), va.pairs() if len(va) else None, seed=args.seed, init=init)
    out.mkdir(parents=True, exist_ok=True)
    rio.save_checkpoint(out / "model.rdnn", res.model, res.optimizer)
    ex.write_history(out / "history.csv", res)
    print(f"best epoch {res.best_epoch}; checkpoint {out / 'model.rdnn'}")


def cmd_eval(cfg, args, out: Path) -> None:
    ds = ex.Dataset(args.data, cfg)
    model = _load_model(args.checkpoint)
    comp = ex.run_method_comparison(cfg, model, ds.split("test"), None, methods=["interfered", "clean", "cnn"])
    out.mkdir(parents=True, exist_ok=True)
    ex.write_csv(out / "eval_per_frame.csv", comp.rows, ["frame_id", "method", "sinr_db"])
    ex.write_csv(out / "eval_summary.csv", comp.summary, ["method", "n", "median_sinr_db", "mean_sinr_db"])
    for r in comp.summary:
        print(f"{r['method']:>12}: mean {r['mean_sinr_db']:.2f} dB, median {r['median_sinr_db']:.2f} dB")


def cmd_sweep(cfg, args, out: Path) -> None:
    rows = ex.run_arch_sweep(cfg, ex.Dataset(args.data, cfg), out, seed=args.seed)
    for r in rows:
        print(f"{r['arch']:>28} params {r['params']:>8} SINR {r['test_sinr_db']:.2f} dB ({r['status']})")


def cmd_sample_study(cfg, args, out: Path) -> None:
    _, summary = ex.run_sample_size_study(
        cfg, ex.Dataset(args.data, cfg), ex.Dataset(args.real_data, cfg), out, seed=args.seed
    )
    for r in summary:
        print(f"{r['variant']:>10} n={r['size']:>4}: mean {r['mean_sinr_db']:.2f} dB, var {r['var_sinr_db']:.3f}")


def cmd_compare(cfg, args, out: Path) -> None:
    ds = ex.Dataset(args.data, cfg)
    methods = list(cfg.methods)
    model = None
    if "cnn" in methods:
        if not args.checkpoint:
            raise ex.DataError("compare-methods needs --checkpoint when the method list includes cnn")
        model = _load_model(args.checkpoint)
    comp = ex.run_method_comparison(cfg, model, ds.split("test"), out, methods=methods)
    for r in comp.summary:
        print(f"{r['method']:>12}: median {r['median_sinr_db']:.2f} dB, mean {r['mean_sinr_db']:.2f} dB")


def cmd_ingest(cfg, args, out: Path) -> None:
    m = ex.ingest_external_frames(args.input, out, cfg, seed=args.seed)
    print(f"ingested {m.count} frames into {out}")


COMMANDS = {
    "gen-dataset": cmd_gen_dataset,
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep-arch": cmd_sweep,
    "sample-size-study": cmd_sample_study,
    "compare-methods": cmd_compare,
    "ingest": cmd_ingest,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg, args, Path(args.out))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ex.DataError, rio.FormatError, RangeOverflowError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, DegeneratePowerError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # remaining ValueErrors stem from inconsistent settings (e.g. study sizes vs pool)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
