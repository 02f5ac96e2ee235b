"""Command-line entry point: ``gradgate {train,simulate,sweep-alpha,replay}``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, load_config, output_config, to_train_config
from .controller import ControllerConfig, Decision, begin_round, observe_minibatch
from .report_io import write_csv, write_outputs
from .trainer import train

log = logging.getLogger("gradgate")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _setup_logging() -> None:
    level = os.environ.get("GRADGATE_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _effective(args, extra=()) -> dict:
    overrides = list(args.override or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    overrides.extend(extra)
    return load_config(args.config, overrides)


def run_one(cfg: dict, out_dir: str) -> dict:
    """Train from an effective config dict and write its artifacts."""
    out = output_config(cfg)
    report = train(to_train_config(cfg))
    return write_outputs(out_dir, report, cfg, out.amin_window, out.hist_bins)


def cmd_train(args, source: str | None = None) -> int:
    extra = [f"source={source}"] if source else []
    cfg = _effective(args, extra)
    out_dir = args.out or cfg["output"]["dir"]
    doc = run_one(cfg, out_dir)
    s = doc["batch_stats"]
    print(f"{doc['steps']} steps -> {out_dir}: batch size min {s['min']} avg {s['avg']:.2f} max {s['max']}")
    return EXIT_OK


def _parse_alphas(text: str) -> list[float]:
    try:
        alphas = [float(a) for a in text.split(",") if a.strip()]
    except ValueError:
        raise ConfigError(f"--alphas: cannot parse {text!r}") from None
    if len(alphas) < 2:
        raise ConfigError("--alphas: a sweep needs at least two values")
    return alphas


def _sweep_job(job):
    cfg, out_dir = job
    return run_one(cfg, out_dir)


def cmd_sweep_alpha(args) -> int:
    alphas = _parse_alphas(args.alphas)
    # validate every run's config before starting any of them
    cfgs = [_effective(args, [f"controller.alpha={a!r}"]) for a in alphas]
    root = Path(args.out or cfgs[0]["output"]["dir"])
    jobs = [(cfg, str(root / f"alpha_{a!r}")) for a, cfg in zip(alphas, cfgs)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            docs = list(pool.map(_sweep_job, jobs))
    else:
        docs = [_sweep_job(j) for j in jobs]
    rows = [
        (a, doc["batch_stats"]["avg"], doc["batch_stats"]["max"], doc["final_loss"])
        for a, doc in zip(alphas, docs)
    ]
    root.mkdir(parents=True, exist_ok=True)
    write_csv(root / "sweep.csv", ["alpha", "avg_batch", "max_batch", "final_loss"], rows)
    for a, avg, mx, _ in rows:
        print(f"alpha {a}: avg batch {avg:.2f}, max {mx}")
    return EXIT_OK


def read_trace(path) -> list[tuple[int, list[float]]]:
    """Rounds from a CSV trace, one round of angles (degrees) per line."""
    rounds = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                if not text:
                    log.warning("%s:%d: empty line skipped", path, lineno)
                continue
            cells = [c.strip() for c in text.split(",")]
            try:
                angles = [float(c) for c in cells if c]
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: malformed angle list {text!r}") from None
            if not angles or not all(0.0 <= a <= 180.0 for a in angles):
                raise ConfigError(f"{path}:{lineno}: angles must be degrees in [0, 180]")
            rounds.append((lineno, angles))
    return rounds


def replay_round(angles, cfg: ControllerConfig, verbose: bool = False) -> str:
    rnd = begin_round()
    lines = []
    decision = observe_minibatch(rnd, None, cfg)
    for a in angles:
        if decision.is_step:
            break
        ref = rnd.reference
        decision = observe_minibatch(rnd, a, cfg)
        if verbose:
            thr = "-" if ref is None else f"{ref * cfg.alpha:.4g}"
            lines.append(f"  k={rnd.k} angle={a:g} threshold={thr} -> {decision.value}")
    if decision is Decision.FLUCTUATION:
        head = f"STOP at k={rnd.k} (fluct: {rnd.angles[-1]:g} > {rnd.a_min:g} * {cfg.alpha:g})"
    elif decision is Decision.CAP:
        head = f"STOP at k={rnd.k} (cap)"
    else:
        head = f"NO STOP within trace (k={rnd.k})"
    return "\n".join([head] + lines)


def cmd_replay(args) -> int:
    cfg = ControllerConfig(
        alpha=args.alpha,
        min_minibatches=args.min_minibatches,
        max_minibatches=args.max_minibatches,
    )
    rounds = read_trace(args.trace)
    for i, (lineno, angles) in enumerate(rounds, 1):
        print(f"round {i} (line {lineno}): {replay_round(angles, cfg, args.verbose)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gradgate", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def run_flags(p):
        p.add_argument("--config", metavar="PATH", help="JSON run config (defaults if omitted)")
        p.add_argument("--override", metavar="K=V", action="append", help="dotted key, repeatable")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--seed", type=int, help="top-level seed")

    run_flags(sub.add_parser("train", help="train with dynamic batch sizes"))
    run_flags(sub.add_parser("simulate", help="train on the synthetic gradient stream"))
    sweep = sub.add_parser("sweep-alpha", help="one run per alpha, summary in sweep.csv")
    run_flags(sweep)
    sweep.add_argument("--alphas", default="1.0,1.1,1.2,1.3", help="comma-separated, at least two")
    sweep.add_argument("--jobs", type=int, default=1, metavar="N", help="concurrent runs")

    rp = sub.add_parser("replay", help="replay recorded angle traces through the stop rule")
    rp.add_argument("trace", help="CSV, one round of angles per line")
    rp.add_argument("--alpha", type=float, default=1.1)
    rp.add_argument("--min-minibatches", type=int, default=2)
    rp.add_argument("--max-minibatches", type=int, default=64)
    rp.add_argument("-v", "--verbose", action="store_true", help="print every decision")
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            return cmd_train(args)
        if args.command == "simulate":
            return cmd_train(args, source="sim")
        if args.command == "sweep-alpha":
            if args.jobs < 1:
                raise ConfigError("--jobs must be >= 1")
            return cmd_sweep_alpha(args)
        return cmd_replay(args)
    except ValueError as exc:  # includes ConfigError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
