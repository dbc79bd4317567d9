"""Command-line interface: synth, train, eval, bench, gradcheck.

Every command accepts ``--seed``, ``--config`` and ``--out``. Failures print
one line ``error: <ErrorClass>: <message>`` to stderr and exit with the
error's code (2 usage, 3 configuration, 4 data, 5 divergence).
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import bench
from .datasets import TASKS, generate, load_csv, save_csv, split
from .errors import HydraError, IntegrityError
from .learn import gradient_check
from .metrics import TASK_DELTAS, metric_row
from .models import MODEL_KINDS, ModelBundle, build_and_train

log = logging.getLogger("hydraq")


def _config(args) -> bench.BenchConfig:
    cfg = bench.load_config(args.config) if args.config else bench.BenchConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def cmd_synth(args) -> int:
    cfg = _config(args)
    n = args.n if args.n is not None else cfg.n
    noise = args.noise if args.noise is not None else cfg.noise_level
    seed = args.seed if args.seed is not None else cfg.data_seed
    out = Path(args.out or "data.csv")
    save_csv(generate(n, seed=seed, noise_level=noise), out)
    print(f"wrote {n} samples to {out}")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    dataset = load_csv(args.data)
    bundle = build_and_train(args.model, dataset, args.task, cfg.model)
    out = Path(args.out or f"{args.task}_{args.model}.json")
    bundle.save(out)
    history = bundle.metadata.get("loss_history")
    tail = f", final train MSE {history[-1]:.6g}" if history else ""
    print(f"trained {args.model} on {args.task} ({bundle.metadata['train_size']} rows){tail}; wrote {out}")
    return 0


def cmd_eval(args) -> int:
    bundle = ModelBundle.load(args.bundle)
    if args.task is not None and args.task != bundle.task:
        raise IntegrityError(f"bundle was trained for task {bundle.task!r}, not {args.task!r}")
    dataset = load_csv(args.data)
    if args.rows == "test":
        config = bundle.metadata.get("config", {})
        seed = args.seed if args.seed is not None else config.get("seed", 0)
        dataset = dataset.subset(split(len(dataset), config.get("test_fraction", 0.2), seed).test)
    y = dataset.target(bundle.task)
    row = metric_row(bundle.task, bundle.kind, y, bundle.predict(dataset.features()))
    values = [row.r2, row.mae, *row.acc]
    header = ["task", "model", "n", "R2", "MAE", "Acc_delta1", "Acc_delta2", "Acc_delta3"]
    line = [row.task, row.model, str(row.n_test)] + [f"{v:.6f}" for v in values]
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerow([row.task, row.model, row.n_test] + [repr(v) for v in values])
    deltas = ", ".join(f"{d:g}" for d in TASK_DELTAS[bundle.task])
    print(" ".join(f"{h}={v}" for h, v in zip(header, line)) + f" deltas=({deltas})")
    return 0


def cmd_bench(args) -> int:
    cfg = _config(args)
    base = Path(args.config).resolve().parent if args.config else None
    out = Path(args.out or "report")
    report = bench.run_benchmark(cfg, out, base_dir=base)
    sys.stdout.write(bench.metrics_text(report.rows, report.ordering))
    print(f"report written to {out}")
    return 0


def cmd_gradcheck(args) -> int:
    if args.config:
        bench.load_config(args.config)  # validated for flag uniformity; no fields are used
    seed = args.seed if args.seed is not None else 0
    result = gradient_check(args.circuits, args.draws, seed)
    print(f"max |parameter shift - finite difference| = {result.max_deviation:.3e} "
          f"over {result.num_circuits} circuits x {result.draws} draws ({result.worst})")
    if args.out:
        Path(args.out).write_text(f"{result.max_deviation!r}\n")
    if not result.passed:
        print(f"error: GradientMismatch: deviation {result.max_deviation:.3e} is not below 1e-6", file=sys.stderr)
        return 1
    return 0


class _Parser(argparse.ArgumentParser):
    """Reports usage errors as one ``error: UsageError: ...`` line, exit code 2."""

    def error(self, message):
        self.exit(2, f"error: UsageError: {message} (see {self.prog} --help)\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hydraq", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name: str, func, help_text: str):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--seed", type=int, default=None, help="override the run seed")
        p.add_argument("--config", default=None, help="INI config file")
        p.add_argument("--out", default=None, help="output path")
        p.set_defaults(func=func)
        return p

    p = command("synth", cmd_synth, "generate a synthetic dataset CSV")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--noise", type=float, default=None, help="noise level")

    p = command("train", cmd_train, "train one model on one task and save its bundle")
    p.add_argument("--data", required=True)
    p.add_argument("--task", required=True, choices=TASKS)
    p.add_argument("--model", required=True, choices=MODEL_KINDS)

    p = command("eval", cmd_eval, "score a saved bundle on a dataset")
    p.add_argument("--bundle", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--task", choices=TASKS, default=None, help="expected task; must match the bundle")
    p.add_argument("--rows", choices=("test", "all"), default="test")

    command("bench", cmd_bench, "run the full task x model benchmark")

    p = command("gradcheck", cmd_gradcheck, "compare parameter-shift and finite-difference gradients")
    p.add_argument("--circuits", type=int, default=50)
    p.add_argument("--draws", type=int, default=5)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except HydraError as exc:
        message = str(exc).replace("\n", " ")
        print(f"error: {type(exc).__name__}: {message}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
