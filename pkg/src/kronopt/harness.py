"""Training loop, schedules, gradient clipping, reshaping, and sweeps.

Runs are fully determined by their config: the problem instance, the
initial parameters, and every stochastic gradient derive from the config
seed through counter-based streams, so one config produces byte-identical
trace files run after run.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Optional

import numpy as np

from . import optim, problems
from .errors import DivergenceDetectedError
from .optim import MATRIX_FAMILIES, OptimizerSpec
from .problems import Problem

TO2D_DEFAULT_CAP = 32768


@dataclass(frozen=True)
class RunConfig:
    problem: Problem
    optimizer: OptimizerSpec
    total_steps: int
    peak_lr: float
    warmup_fraction: float = 0.1
    clip_norm: Optional[float] = 1.0
    seed: int = 0
    reshape: str = "keep"  # keep | to2d | to1d
    reshape_cap: int = TO2D_DEFAULT_CAP
    stochastic: bool = True


@dataclass(frozen=True)
class TraceRecord:
    step: int
    loss: float
    grad_norm: float
    update_norm: float
    lr: float


def lr_at(t: int, total_steps: int, warmup_fraction: float, peak: float) -> float:
    """Linear warmup from zero to ``peak``, then cosine decay to zero.

    Warmup covers ceil(warmup_fraction * total_steps) steps; the peak is hit
    exactly at the warmup end and the cosine reaches zero at t = total_steps
    (one step past the last evaluated index).
    """
    if not 0 <= t < total_steps:
        raise ValueError(f"t={t} outside [0, {total_steps})")
    if not 0.0 <= warmup_fraction < 1.0:
        raise ValueError("warmup_fraction must be in [0, 1)")
    warmup_steps = math.ceil(warmup_fraction * total_steps)
    if t < warmup_steps:
        return peak * t / warmup_steps
    span = total_steps - warmup_steps
    if span <= 0:
        return peak
    progress = (t - warmup_steps) / span
    return peak * 0.5 * (1.0 + math.cos(math.pi * progress))


def clip_global(grads: list[np.ndarray], max_norm: float) -> list[np.ndarray]:
    """Joint Euclidean-norm clipping across all parameters."""
    if max_norm <= 0:
        raise ValueError("max_norm must be positive")
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if total <= max_norm:
        return list(grads)
    scale = max_norm / total
    return [scale * g for g in grads]


def reshape_params(shape: tuple[int, ...], strategy: str, cap: int = TO2D_DEFAULT_CAP):
    """Parameter view used by the optimizer.

    to2d folds all trailing dimensions into columns unless the folded shape
    has a dimension above ``cap`` (then the original shape is kept); to1d
    flattens fully; keep preserves the tensor order.
    """
    shape = tuple(int(s) for s in shape)
    if strategy == "keep":
        return shape
    if strategy == "to1d":
        return (int(np.prod(shape)),)
    if strategy == "to2d":
        if len(shape) <= 2:
            return shape
        folded = (shape[0], int(np.prod(shape[1:])))
        if max(folded) > cap:
            return shape
        return folded
    raise ValueError(f"unknown reshape strategy {strategy!r}")


def _optimizer_view(spec: OptimizerSpec, shape: tuple[int, ...]) -> tuple[int, ...]:
    """Matrix families see 1D parameters as single-column matrices."""
    if spec.family in MATRIX_FAMILIES and len(shape) == 1:
        return (shape[0], 1)
    return shape


def _run(config: RunConfig) -> tuple[list[TraceRecord], float, list[np.ndarray]]:
    problem = config.problem
    params = problem.init_params(seed=(config.seed, 7))
    views = [
        _optimizer_view(
            config.optimizer, reshape_params(p.shape, config.reshape, config.reshape_cap)
        )
        for p in params
    ]
    states = [optim.init_state(config.optimizer, v) for v in views]
    bc = config.optimizer.bias_correction
    records: list[TraceRecord] = []
    for t in range(config.total_steps):
        loss = problem.loss_at(params)
        if not math.isfinite(loss):
            raise DivergenceDetectedError(f"loss became non-finite at step {t}", trace=records)
        seed = (config.seed, t) if (config.stochastic and problem.noise is not None) else None
        grads = problem.grad_at(params, batch_seed=seed)
        grad_norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
        if config.clip_norm is not None:
            grads = clip_global(grads, config.clip_norm)
        lr = lr_at(t, config.total_steps, config.warmup_fraction, config.peak_lr)
        update_sq = 0.0
        for i, (param, grad, view) in enumerate(zip(params, grads, views)):
            theta, state = optim.step(
                config.optimizer, states[i], param.reshape(view), grad.reshape(view), lr
            )
            params[i] = theta.reshape(param.shape)
            v_hat = optim.bias_corrected(state.v, config.optimizer.beta3, state.step, bc.post)
            update_sq += float(np.sum(v_hat * v_hat))
        records.append(
            TraceRecord(
                step=t,
                loss=loss,
                grad_norm=grad_norm,
                update_norm=math.sqrt(update_sq),
                lr=lr,
            )
        )
    return records, problem.loss_at(params), params


def train(config: RunConfig) -> list[TraceRecord]:
    """Run the full loop and return the per-step trace."""
    return _run(config)[0]


def trace_to_csv(records: list[TraceRecord]) -> str:
    """Fixed schema, 17 significant digits, bytewise reproducible."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["step", "loss", "grad_norm", "update_norm", "lr"])
    for r in records:
        writer.writerow(
            [r.step] + [f"{v:.17g}" for v in (r.loss, r.grad_norm, r.update_norm, r.lr)]
        )
    return out.getvalue()


def load_trace_csv(path) -> list[TraceRecord]:
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(
                TraceRecord(
                    step=int(row["step"]),
                    loss=float(row["loss"]),
                    grad_norm=float(row["grad_norm"]),
                    update_norm=float(row["update_norm"]),
                    lr=float(row["lr"]),
                )
            )
    return records


@dataclass(frozen=True)
class SweepRow:
    config_index: int
    assignment: dict
    status: str
    final_loss: float
    best_loss: float
    is_best: bool = False


def _apply_assignment(base: RunConfig, assignment: dict) -> RunConfig:
    config = base
    for key, value in assignment.items():
        if key.startswith("optimizer."):
            config = replace(
                config, optimizer=replace(config.optimizer, **{key.split(".", 1)[1]: value})
            )
        else:
            config = replace(config, **{key: value})
    return config


def _derived_seed(run_seed: int, config_index: int) -> int:
    return int(np.random.SeedSequence((run_seed, config_index)).generate_state(1)[0])


def run_sweep(base: RunConfig, grid: dict[str, list]) -> list[SweepRow]:
    """Cartesian product over the grid; each cell trains with its own
    derived seed.  Failed runs are recorded, not raised; the best cell is
    the argmin of final loss with ties broken by config order."""
    if not grid:
        raise ValueError("grid must be nonempty")
    keys = list(grid.keys())
    rows: list[SweepRow] = []
    for index, values in enumerate(product(*(grid[k] for k in keys))):
        assignment = dict(zip(keys, values))
        config = _apply_assignment(base, assignment)
        config = replace(config, seed=_derived_seed(base.seed, index))
        try:
            records, final_loss, _ = _run(config)
            best_loss = min([r.loss for r in records] + [final_loss])
            rows.append(SweepRow(index, assignment, "ok", final_loss, best_loss))
        except DivergenceDetectedError as exc:
            losses = [r.loss for r in exc.trace] or [math.inf]
            rows.append(SweepRow(index, assignment, "diverged", math.inf, min(losses)))
    finite = [r for r in rows if r.status == "ok" and math.isfinite(r.final_loss)]
    if finite:
        best = min(finite, key=lambda r: (r.final_loss, r.config_index))
        rows[best.config_index] = replace(best, is_best=True)
    return rows


def sweep_to_csv(rows: list[SweepRow], keys: list[str]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["config_index"] + keys + ["status", "final_loss", "best_loss", "is_best"])
    for r in rows:
        writer.writerow(
            [r.config_index]
            + [_csv_value(r.assignment[k]) for k in keys]
            + [r.status, f"{r.final_loss:.17g}", f"{r.best_loss:.17g}", int(r.is_best)]
        )
    return out.getvalue()


def _csv_value(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return v
