"""Command-line entry points: verify, train, sweep, plot.

Config files are TOML with [problem], [optimizer], and [run] tables whose
keys mirror the OptimizerSpec / RunConfig field names; sweep grids are a
[grid] table mapping a field path (e.g. "peak_lr" or "optimizer.beta1") to
a list of values.  All primary outputs are byte-identical across repeated
invocations with the same config and seed.
"""

from __future__ import annotations

import argparse
import sys
import time

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import harness, problems, verify
from .errors import DivergenceDetectedError
from .optim import BiasCorrection, OptimizerSpec


def build_problem(section: dict, seed: int) -> problems.Problem:
    kind = section.get("kind", "quadratic")
    noise_std = float(section.get("noise_std", 0.0))
    if kind == "quadratic":
        dim = int(section.get("dim", 50))
        condition = float(section.get("condition", 1e4))
        h = problems.ill_conditioned_quadratic(dim, condition, seed=(seed, 11))
        shape = tuple(section["shape"]) if "shape" in section else (dim, 1)
        return problems.quadratic_problem(h, shape, noise_std=noise_std)
    if kind == "logistic":
        n = int(section.get("samples", 128))
        dim = int(section.get("dim", 20))
        if "mixing_condition" in section:
            x, y = problems.make_correlated_logistic_data(
                (seed, 12), n=n, dim=dim, condition=float(section["mixing_condition"])
            )
        else:
            x, y = problems.make_logistic_data(
                (seed, 12), n=n, dim=dim, separable=bool(section.get("separable", False))
            )
        return problems.logistic_problem(x, y, noise_std=noise_std)
    if kind == "mlp":
        classes = int(section.get("classes", 3))
        x, y = problems.make_mlp_data(
            (seed, 13),
            n=int(section.get("samples", 64)),
            dim=int(section.get("dim", 6)),
            classes=classes,
        )
        return problems.mlp_problem(
            x, y, hidden=int(section.get("hidden", 8)), classes=classes, noise_std=noise_std
        )
    raise ValueError(f"unknown problem kind {kind!r}")


def build_optimizer(section: dict) -> OptimizerSpec:
    section = dict(section)
    graft = section.pop("graft", None)
    bias = section.pop("bias_correction", None)
    kwargs = dict(section)
    if graft is not None:
        kwargs["graft"] = build_optimizer(graft)
        kwargs.setdefault("scaling", "graft")
    if bias is not None:
        kwargs["bias_correction"] = BiasCorrection(**bias)
    if "ns_coeffs" in kwargs:
        kwargs["ns_coeffs"] = tuple(kwargs["ns_coeffs"])
    return OptimizerSpec(**kwargs)


def build_run_config(doc: dict) -> tuple[harness.RunConfig, dict]:
    run = dict(doc.get("run", {}))
    seed = int(run.get("seed", 0))
    problem = build_problem(doc.get("problem", {}), seed)
    spec = build_optimizer(doc.get("optimizer", {"family": "adam"}))
    clip = run.get("clip_norm", 1.0)
    config = harness.RunConfig(
        problem=problem,
        optimizer=spec,
        total_steps=int(run.get("total_steps", 100)),
        peak_lr=float(run.get("peak_lr", 0.01)),
        warmup_fraction=float(run.get("warmup_fraction", 0.1)),
        clip_norm=None if not clip else float(clip),
        seed=seed,
        reshape=run.get("reshape", "keep"),
        reshape_cap=int(run.get("reshape_cap", harness.TO2D_DEFAULT_CAP)),
        stochastic=bool(run.get("stochastic", True)),
    )
    return config, doc


def _load_toml(path: str) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _write_or_print(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def cmd_verify(args) -> int:
    # suites are generators, so timing each pull times each check
    reports, timings = [], []
    gen = verify.iter_suite(args.suite, args.seed)
    while True:
        start = time.perf_counter()
        try:
            report = next(gen)
        except StopIteration:
            break
        timings.append(time.perf_counter() - start)
        reports.append(report)
    print(verify.summarize(reports))
    if args.report:
        jsonl = verify.reports_to_jsonl(reports, timings if args.timing else None)
        with open(args.report, "w", newline="") as fh:
            fh.write(jsonl)
    return 0 if all(r.passed for r in reports) else 1


def cmd_train(args) -> int:
    config, _ = build_run_config(_load_toml(args.config))
    try:
        records = harness.train(config)
    except DivergenceDetectedError as exc:
        _write_or_print(harness.trace_to_csv(exc.trace), args.out)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _write_or_print(harness.trace_to_csv(records), args.out)
    return 0


def cmd_sweep(args) -> int:
    config, _ = build_run_config(_load_toml(args.config))
    grid_doc = _load_toml(args.grid)
    grid = grid_doc.get("grid", grid_doc)
    if not grid:
        print("error: empty grid", file=sys.stderr)
        return 1
    rows = harness.run_sweep(config, grid)
    _write_or_print(harness.sweep_to_csv(rows, list(grid.keys())), args.out)
    best = [r for r in rows if r.is_best]
    if best:
        print(f"best config: index {best[0].config_index} {best[0].assignment}", file=sys.stderr)
    return 0


def cmd_plot(args) -> int:
    import matplotlib

    matplotlib.use("svg")
    matplotlib.rcParams["svg.hashsalt"] = "kronopt"
    import matplotlib.pyplot as plt

    records = harness.load_trace_csv(args.trace)
    steps = [r.step for r in records]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(steps, [r.loss for r in records], label="loss")
    ax.set_yscale("log")
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    twin = ax.twinx()
    twin.plot(steps, [r.lr for r in records], color="gray", alpha=0.6, label="lr")
    twin.set_ylabel("learning rate")
    ax.set_title(args.title or "training trace")
    fig.tight_layout()
    fig.savefig(args.out, metadata={"Date": None})
    plt.close(fig)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kronopt",
        description="matrix-structured optimizers and their verification suite",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("--suite", default="all", choices=["all", "linalg", "propositions", "table1"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", default=None, help="write a JSONL report here")
    p.add_argument(
        "--timing",
        action="store_true",
        help="include per-check seconds in the report (sacrifices byte determinism)",
    )
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("train", help="train one configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="trace CSV path (stdout when omitted)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="Cartesian hyperparameter sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--out", default=None, help="summary CSV path (stdout when omitted)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="render a trace CSV as an SVG")
    p.add_argument("--trace", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--title", default=None)
    p.set_defaults(func=cmd_plot)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
