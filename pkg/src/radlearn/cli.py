"""Command line entry point: ``radlearn run | sweep | gen-data``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .datastream import DataError, make_synthetic, save_csv
from .harness import ConfigError, ExperimentConfig, benchmark_config, load_dataset, run_experiment, run_sweep
from .outputs import emit_outputs, emit_sweep

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

logger = logging.getLogger("radlearn")


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else benchmark_config()
    d = cfg.to_dict()
    if args.seed is not None:
        d["seeds"] = args.seed
    if getattr(args, "scheme", None):
        d["scheme"] = None if args.scheme == "none" else args.scheme
    if getattr(args, "baselines", None) is not None:
        d["baselines"] = [b for b in args.baselines.split(",") if b]
    if getattr(args, "noise", None) is not None:
        d["noise_level"] = args.noise
    if args.out:
        d["output_dir"] = args.out
    return ExperimentConfig.from_dict(d)


def cmd_run(args) -> int:
    cfg = _load_config(args)
    results = run_experiment(cfg)
    written = emit_outputs(results, cfg.output_dir, plot=args.plot, extra={"config": cfg.to_dict()})
    for method, per_seed in results.items():
        finals = [s[-1].accuracy for s in per_seed.values()]
        print(f"{method:18s} final accuracy mean {sum(finals) / len(finals):.4f} over {len(finals)} run(s)")
    print(f"wrote {len(written)} files to {cfg.output_dir}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    noises = [float(x) for x in args.noises.split(",")]
    if any(not 0.0 <= n <= 1.0 for n in noises):
        raise ConfigError("noise levels must lie in [0, 1]")
    sweep = run_sweep(cfg, noises)
    written = emit_sweep(sweep, cfg.output_dir, plot=args.plot)
    Path(cfg.output_dir, "sweep_config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
    print(f"wrote {len(written) + 1} files to {cfg.output_dir}")
    return EXIT_OK


def cmd_gen_data(args) -> int:
    ds = make_synthetic(args.k, args.f, args.n, args.spread, args.seed)
    save_csv(ds, args.out)
    print(f"wrote {len(ds)} instances ({args.k} classes, {args.f} features) to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radlearn", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="experiment config JSON (default: built-in synthetic benchmark)")
        p.add_argument("--seed", type=int, action="append", help="run seed; repeat for several")
        p.add_argument("--scheme", help="selection scheme, or 'none' for baselines only")
        p.add_argument("--baselines", help="comma separated baseline names")
        p.add_argument("--out", help="output directory")
        p.add_argument("--plot", action="store_true", help="also write SVG charts")

    p = sub.add_parser("run", help="run one configuration")
    common(p)
    p.add_argument("--noise", type=float, help="label noise level in [0, 1]")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="final accuracy over a grid of noise levels")
    common(p)
    p.add_argument("--noises", default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen-data", help="write a synthetic clustered dataset as CSV")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--f", type=int, default=27)
    p.add_argument("--n", type=int, default=22000)
    p.add_argument("--spread", type=float, default=0.35)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DataError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001
        logger.debug("run failed", exc_info=True)
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
