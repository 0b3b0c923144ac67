"""Command-line front end.

Five subcommands: validate a model file, print the greedy decision
policy, run the brute-force co-design, simulate one sampler, and sweep
the cost-versus-sampling-rate frontier.  Artifact-producing commands
write CSVs plus a manifest echoing every parameter, and identical
invocations produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .codesign import brute_force_codesign, greedy_decision_policy
from .config import load_model
from .errors import ConfigError, ModelValidationError, NoConvergence, NotUnichain
from .mdp import induce_mdp, rvi_solve
from .model import SystemModel, stationary_distribution
from .policies import DecisionPolicy
from .sim import (
    AgeAware,
    AoiiOptimal,
    ChangeAware,
    SweepSpec,
    Tabular,
    Uniform,
    frontier_sweep,
    simulate,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_CONVERGENCE = 4

TRACE_COLUMNS = (
    "t", "x", "x_hat", "phi", "a_S", "a_A", "h",
    "aoi", "aoci", "aoii", "got", "slot_cost",
)
FRONTIER_COLUMNS = (
    "label", "param", "sampling_rate", "avg_cost", "stderr_cost", "horizon", "seeds",
)
AUDIT_COLUMNS = ("candidate", "decision_table", "theta_star", "iterations")
VALUES_COLUMNS = ("x", "x_hat", "phi", "value", "a_S")


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything one invocation is going to do, resolved from flags."""

    command: str
    model: str
    out: str | None = None
    horizon: int = 10**6
    seeds: int = 20
    seed_base: int = 0
    epsilon: float = 1e-8
    delta_list: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8)
    aoi_threshold_list: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8)
    context_dist: tuple[float, ...] | None = None
    sampler: str = "uniform"
    delta: int = 1
    aoi_threshold: int = 1
    trace_slots: int = 10_000
    workers: int = 1
    max_iterations: int = 10**6

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ConfigError("horizon must be positive")
        if self.seeds < 1:
            raise ConfigError("seeds must be positive")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        if self.max_iterations < 1:
            raise ConfigError("max-iterations must be positive")
        if any(d < 1 for d in self.delta_list + self.aoi_threshold_list):
            raise ConfigError("sweep parameters must be >= 1")


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


def _parse_float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gotkit",
        description="Solve and simulate goal-oriented sampling/actuation loops.",
    )
    parser.add_argument("--version", action="version", version=f"gotkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model(p):
        p.add_argument("--model", required=True, help="model YAML file")

    p = sub.add_parser("validate", help="check a model file and print its shape")
    add_model(p)

    p = sub.add_parser("solve-greedy", help="print the greedy decision policy")
    add_model(p)
    p.add_argument(
        "--context-dist",
        help="comma-separated context weights (default: stationary law)",
    )

    p = sub.add_parser("codesign", help="jointly optimize sampler and decision policy")
    add_model(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--max-iterations", type=int, default=10**6)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("simulate", help="simulate one sampling policy")
    add_model(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument(
        "--sampler", choices=("uniform", "age", "change", "aoii"), default="uniform"
    )
    p.add_argument("--delta", type=int, default=1, help="uniform sampling period")
    p.add_argument("--aoi-threshold", type=int, default=1, help="age-aware threshold")
    p.add_argument("--horizon", type=int, default=10**6)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--trace-slots", type=int, default=10_000)
    p.add_argument("--context-dist", help="context weights for the greedy policy")

    p = sub.add_parser("frontier", help="sweep cost vs sampling rate across policies")
    add_model(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--horizon", type=int, default=10**6)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--max-iterations", type=int, default=10**6)
    p.add_argument("--delta-list", default="1,2,3,4,5,6,7,8")
    p.add_argument("--aoi-threshold-list", default="1,2,3,4,5,6,7,8")
    p.add_argument("--context-dist", help="context weights for the greedy policy")
    p.add_argument("--workers", type=int, default=1)
    return parser


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    fields: dict = {"command": args.command, "model": args.model}
    for name in (
        "out", "horizon", "seeds", "seed_base", "epsilon", "sampler",
        "delta", "aoi_threshold", "trace_slots", "workers", "max_iterations",
    ):
        if hasattr(args, name) and getattr(args, name) is not None:
            fields[name] = getattr(args, name)
    if getattr(args, "delta_list", None):
        fields["delta_list"] = _parse_int_list(args.delta_list)
    if getattr(args, "aoi_threshold_list", None):
        fields["aoi_threshold_list"] = _parse_int_list(args.aoi_threshold_list)
    if getattr(args, "context_dist", None):
        fields["context_dist"] = _parse_float_list(args.context_dist)
    return ExperimentSpec(**fields)


def _context_distribution(spec: ExperimentSpec, model: SystemModel) -> np.ndarray:
    if spec.context_dist is not None:
        return np.asarray(spec.context_dist, dtype=np.float64)
    return stationary_distribution(model.context_dynamics)


def _write_csv(path: Path, header: tuple[str, ...], rows) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_manifest(out_dir: Path, spec: ExperimentSpec, extra: dict) -> None:
    payload = {
        "gotkit_version": __version__,
        "spec": asdict(spec),
        **extra,
    }
    text = json.dumps(payload, sort_keys=True, indent=2, default=str)
    (out_dir / "manifest.json").write_text(text + "\n")


def _fmt(value: float) -> str:
    return repr(float(value))


def _prepare_out(spec: ExperimentSpec) -> Path:
    assert spec.out is not None
    out_dir = Path(spec.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _run_validate(spec: ExperimentSpec) -> int:
    model = load_model(spec.model)
    print(f"model ok: {spec.model}")
    print(
        f"semantics={model.num_semantics} contexts={model.num_contexts} "
        f"actuations={model.num_actuations} global_states={model.space.size}"
    )
    print(
        f"channel_success={_fmt(model.channel_success)} "
        f"sampling_cost={_fmt(model.sampling_cost)}"
    )
    return EXIT_OK


def _run_solve_greedy(spec: ExperimentSpec) -> int:
    model = load_model(spec.model)
    dist = _context_distribution(spec, model)
    policy = greedy_decision_policy(model.costs, dist)
    print(list(policy.as_tuple()))
    return EXIT_OK


def _run_codesign(spec: ExperimentSpec) -> int:
    model = load_model(spec.model)
    out_dir = _prepare_out(spec)
    result = brute_force_codesign(
        model,
        epsilon=spec.epsilon,
        max_iterations=spec.max_iterations,
        workers=spec.workers,
    )

    audit_rows = [
        (
            index,
            "-".join(str(a) for a in record.decision.as_tuple()),
            _fmt(record.theta_star),
            record.iterations,
        )
        for index, record in enumerate(result.per_candidate)
    ]
    _write_csv(out_dir / "audit.csv", AUDIT_COLUMNS, audit_rows)

    solution = rvi_solve(
        induce_mdp(model, result.best_decision),
        epsilon=spec.epsilon,
        max_iterations=spec.max_iterations,
    )
    space = model.space
    value_rows = [
        (
            w.x,
            w.x_hat,
            w.phi,
            _fmt(solution.values[space.flat(w)]),
            int(result.best_sampler(space.flat(w))),
        )
        for w in space.states()
    ]
    _write_csv(out_dir / "values.csv", VALUES_COLUMNS, value_rows)

    best = {
        "decision_table": list(result.best_decision.as_tuple()),
        "sampler_table": list(result.best_sampler.as_tuple()),
        "theta_star": result.theta_star,
        "avg_cost": -result.theta_star,
    }
    (out_dir / "best.json").write_text(
        json.dumps(best, sort_keys=True, indent=2) + "\n"
    )
    _write_manifest(out_dir, spec, {"candidates": len(result.per_candidate)})
    print(f"best decision policy: {list(result.best_decision.as_tuple())}")
    print(f"average cost: {_fmt(-result.theta_star)}")
    return EXIT_OK


def _make_sampler(spec: ExperimentSpec):
    if spec.sampler == "uniform":
        return Uniform(spec.delta)
    if spec.sampler == "age":
        return AgeAware(spec.aoi_threshold)
    if spec.sampler == "change":
        return ChangeAware()
    if spec.sampler == "aoii":
        return AoiiOptimal()
    raise ConfigError(f"unknown sampler {spec.sampler!r}")


def _run_simulate(spec: ExperimentSpec) -> int:
    model = load_model(spec.model)
    out_dir = _prepare_out(spec)
    dist = _context_distribution(spec, model)
    policy = greedy_decision_policy(model.costs, dist)
    trace_slots = min(spec.trace_slots, spec.horizon)
    stats = simulate(
        model,
        _make_sampler(spec),
        policy,
        spec.horizon,
        seed=spec.seed_base,
        trace_slots=trace_slots,
    )
    tr = stats.trace
    rows = (
        (
            tr.t[i], tr.x[i], tr.x_hat[i], tr.phi[i], tr.a_s[i], tr.a_a[i],
            tr.h[i], tr.aoi[i], tr.aoci[i], tr.aoii[i],
            _fmt(tr.got[i]), _fmt(tr.slot_cost[i]),
        )
        for i in range(len(tr))
    )
    _write_csv(out_dir / "trace.csv", TRACE_COLUMNS, rows)
    _write_manifest(
        out_dir,
        spec,
        {
            "decision_policy": list(policy.as_tuple()),
            "avg_cost": stats.avg_cost,
            "sampling_rate": stats.sampling_rate,
        },
    )
    print(
        f"avg_cost={_fmt(stats.avg_cost)} "
        f"sampling_rate={_fmt(stats.sampling_rate)} seed={stats.seed}"
    )
    return EXIT_OK


def _run_frontier(spec: ExperimentSpec) -> int:
    model = load_model(spec.model)
    out_dir = _prepare_out(spec)
    dist = _context_distribution(spec, model)
    benchmark_policy = greedy_decision_policy(model.costs, dist)
    codesign = brute_force_codesign(
        model,
        epsilon=spec.epsilon,
        max_iterations=spec.max_iterations,
        workers=spec.workers,
    )

    sweep = SweepSpec(
        uniform_deltas=spec.delta_list,
        age_thresholds=spec.aoi_threshold_list,
        include_change_aware=True,
        include_mismatch=True,
        horizon=spec.horizon,
        seeds=tuple(range(spec.seed_base, spec.seed_base + spec.seeds)),
    )
    points = frontier_sweep(
        model,
        benchmark_policy,
        sweep,
        codesign_pair=(codesign.best_sampler, codesign.best_decision),
    )
    rows = [
        (
            p.label,
            "" if p.param is None else p.param,
            _fmt(p.sampling_rate),
            _fmt(p.avg_cost),
            _fmt(p.stderr_cost),
            p.horizon,
            p.seeds,
        )
        for p in points
    ]
    _write_csv(out_dir / "frontier.csv", FRONTIER_COLUMNS, rows)
    _write_manifest(
        out_dir,
        spec,
        {
            "benchmark_decision_policy": list(benchmark_policy.as_tuple()),
            "codesign_decision_policy": list(codesign.best_decision.as_tuple()),
            "codesign_avg_cost": -codesign.theta_star,
        },
    )
    print(f"wrote {len(points)} frontier rows to {out_dir / 'frontier.csv'}")
    return EXIT_OK


_RUNNERS = {
    "validate": _run_validate,
    "solve-greedy": _run_solve_greedy,
    "codesign": _run_codesign,
    "simulate": _run_simulate,
    "frontier": _run_frontier,
}


def run(spec: ExperimentSpec) -> int:
    """Execute one resolved invocation; raises the package's error types."""
    return _RUNNERS[spec.command](spec)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = spec_from_args(args)
        return run(spec)
    except ConfigError as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ModelValidationError, NotUnichain, ValueError) as exc:
        print(f"error[validation]: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NoConvergence as exc:
        print(f"error[convergence]: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
