"""Command-line interface.

Subcommands: validate, equilibria, simulate, flow, sweep, concentration,
drift-check, compare. Structured results go to stdout as JSON; tabular
results as CSV to --output (or stdout). Exact rationals are serialized as
num/den strings unless --decimal asks for 12-significant-digit decimals.

Exit codes: 0 on success, 1 on domain errors (failed uniqueness check
without --allow-degenerate, invalid population size, state-space cap,
drift violations), 2 on usage errors (bad flags, unreadable or malformed
config). Identical invocations produce byte-identical output. The config
file is never modified.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from typing import Optional, Sequence

from . import continuous, discrete, equilibria, experiments, model
from .errors import BrpopError, ConfigError
from .experiments import format_rational
from .model import Strategy, TieRule


def _load_profile(path: str) -> model.PopulationProfile:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return model.parse_profile(text)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="population JSON file")
    parser.add_argument("--decimal", action="store_true",
                        help="decimal output instead of exact num/den")


def _tie(value: str) -> TieRule:
    try:
        return TieRule.from_name(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _sizes(value: str) -> list[int]:
    try:
        return [int(part) for part in value.split(",") if part]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad size list {value!r}") from exc


def _rational_vector(value: str) -> list[Fraction]:
    return [model.parse_rational(part) for part in value.split(",") if part]


def _int_vector(value: str) -> list[int]:
    try:
        return [int(part) for part in value.split(",") if part]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad count list {value!r}") from exc


def _fmt(value, decimal: bool) -> str:
    return format_rational(value, decimal)


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _point_doc(pt: equilibria.EquilibriumPoint, decimal: bool) -> dict:
    doc = {
        "kind": pt.kind.value,
        "i": pt.i,
        "j": pt.j,
        "abstract_value": _fmt(pt.abstract_value, decimal),
        "state": [_fmt(v, decimal) for v in pt.state],
        "stability": pt.stability.value if pt.stability else None,
        "globally_stable": pt.globally_stable,
    }
    if pt.basin is not None:
        doc["basin"] = {
            "lo": _fmt(pt.basin.lo, decimal),
            "hi": _fmt(pt.basin.hi, decimal),
            "closed_lo": pt.basin.closed_lo,
            "closed_hi": pt.basin.closed_hi,
        }
    else:
        doc["basin"] = None
    if pt.merged_case is not None:
        doc["merged_case"] = pt.merged_case
    return doc


def _cmd_validate(args) -> int:
    profile = _load_profile(args.config)
    report = model.validate_assumption1(profile)
    doc = {
        "passed": report.passed,
        "duplicates": [
            {
                "value": _fmt(d.value, args.decimal),
                "anti_index": d.anti_index,
                "coord_index": d.coord_index,
                "case": d.remark_case,
            }
            for d in report.duplicates
        ],
        "coincidences": [
            {
                "k": c.k,
                "l": c.l,
                "value": _fmt(c.value, args.decimal),
                "threshold_role": c.role,
                "threshold_index": c.index,
                "case": c.remark_case,
                "active": c.active,
            }
            for c in report.coincidences
        ],
        "summary": report.summary(),
    }
    _emit(json.dumps(doc, indent=2) + "\n", args.output)
    if report.passed or args.allow_degenerate:
        return 0
    return 1


def _cmd_equilibria(args) -> int:
    profile = _load_profile(args.config)
    eqset = equilibria.classify(
        equilibria.enumerate_equilibria(profile, args.allow_degenerate)
    )
    doc = {
        "points": [_point_doc(pt, args.decimal) for pt in eqset.points],
        "continuum": [
            {
                "value": _fmt(c.value, args.decimal),
                "anti_index": c.anti_index,
                "coord_index": c.coord_index,
            }
            for c in eqset.continuum
        ],
    }
    _emit(json.dumps(doc, indent=2) + "\n", args.output)
    return 0


def _cmd_simulate(args) -> int:
    profile = _load_profile(args.config)
    caps = discrete.capacities(profile, args.n)
    if args.x0 is not None:
        state0 = discrete.DiscreteState(args.n, tuple(args.x0))
    else:
        state0 = experiments.uniform_state(profile, args.n, args.seed)
    steps = args.steps
    burn_in = int(round(args.burn_in_fraction * steps))
    writer = None
    fh = None
    if args.trajectory_out:
        fh = open(args.trajectory_out, "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(
            ["step"] + [f"subpop_{k}" for k in range(len(caps))] + ["total_x"]
        )

    def on_state(idx: int, total: int, counts: Sequence[int]) -> None:
        writer.writerow(
            [idx]
            + [_fmt(Fraction(c, args.n), args.decimal) for c in counts]
            + [_fmt(Fraction(total, args.n), args.decimal)]
        )

    try:
        stats = discrete.simulate(
            profile, state0, steps, burn_in, args.seed, args.tie,
            on_state=on_state if writer else None,
        )
    finally:
        if fh:
            fh.close()
    doc = {
        "n": args.n,
        "steps": stats.steps,
        "seed": stats.seed,
        "initial_counts": list(state0.counts),
        "final_counts": list(stats.final_state.counts),
        "min_total": _fmt(stats.visited_min_total, args.decimal),
        "max_total": _fmt(stats.visited_max_total, args.decimal),
        "amplitude": _fmt(stats.amplitude, args.decimal),
    }
    _emit(json.dumps(doc, indent=2) + "\n", args.output)
    return 0


def _segment_kind_at(trajectory: continuous.FlowTrajectory, t: float) -> str:
    kind = trajectory.segments[0].kind
    for seg in trajectory.segments:
        if seg.t0 <= t:
            kind = seg.kind
    return kind


def _cmd_flow(args) -> int:
    profile = _load_profile(args.config)
    if args.x0 is not None:
        x0 = args.x0
    elif args.x0_total is not None:
        x0 = [args.x0_total * rho for rho in profile.rho_flat]
    else:
        raise ConfigError("flow needs --x0 or --x0-total")
    trajectory = continuous.flow(
        profile, x0, t_end=args.t_end, eq_tol=args.eq_tol, perturb=args.perturb
    )
    times = [seg.t0 for seg in trajectory.segments] + [trajectory.t_end]
    if args.grid_dt:
        t = 0.0
        while t < trajectory.t_end:
            times.append(t)
            t += args.grid_dt
        times = sorted(set(times))
    lines = ["t," + ",".join(f"x_{k}" for k in range(profile.n_subpops))
             + ",total,segment_kind"]
    for t in times:
        state = trajectory.state_at(t)
        lines.append(
            f"{t:.12g},"
            + ",".join(f"{v:.12g}" for v in state)
            + f",{sum(state):.12g},{_segment_kind_at(trajectory, t)}"
        )
    _emit("\n".join(lines) + "\n", args.output)
    final = trajectory.final_state()
    summary = {
        "t_end": trajectory.t_end,
        "segments": len(trajectory.segments),
        "final_total": sum(final),
    }
    sys.stderr.write(json.dumps(summary) + "\n")
    return 0


def _cmd_sweep(args) -> int:
    profile = _load_profile(args.config)
    rows = experiments.fluctuation_sweep(
        profile, args.sizes, args.replicates, args.steps_per_agent,
        args.burn_in_fraction, args.seed, args.tie,
    )
    out = []
    out.append(",".join(experiments.SWEEP_HEADER))
    for r in rows:
        out.append(
            f"{r.n},{r.replicate},{r.seed},"
            f"{_fmt(r.min_total, args.decimal)},"
            f"{_fmt(r.max_total, args.decimal)},"
            f"{_fmt(r.amplitude, args.decimal)}"
        )
    _emit("\n".join(out) + "\n", args.output)
    return 0


def _cmd_concentration(args) -> int:
    profile = _load_profile(args.config)
    rows = experiments.concentration_check(
        profile, args.sizes, args.eps, args.tie, args.allow_degenerate
    )
    out = [",".join(experiments.CONCENTRATION_HEADER)]
    for r in rows:
        out.append(
            f"{r.n},{r.class_id},"
            f"{_fmt(r.abs_lo, args.decimal)},{_fmt(r.abs_hi, args.decimal)},"
            f"{_fmt(r.hausdorff, args.decimal)},"
            f"{_fmt(r.mass_within_eps, args.decimal)}"
        )
    _emit("\n".join(out) + "\n", args.output)
    return 0


def _cmd_drift_check(args) -> int:
    profile = _load_profile(args.config)
    report = experiments.drift_consistency_check(profile, args.n, args.tie)
    doc = {
        "n": report.n,
        "tie": report.tie.value,
        "singleton_states": report.singleton_states,
        "band_states": report.band_states,
        "violations": [
            {
                "counts": list(v.state.counts),
                "component": v.component,
                "drift": _fmt(v.drift, args.decimal),
                "lo": _fmt(v.lo, args.decimal),
                "hi": _fmt(v.hi, args.decimal),
            }
            for v in report.violations
        ],
    }
    _emit(json.dumps(doc, indent=2) + "\n", args.output)
    return 1 if report.violations else 0


def _cmd_compare(args) -> int:
    profile = _load_profile(args.config)
    result = experiments.compare_discrete_continuous(
        profile, args.n, args.x0, args.steps, args.seed, args.tie
    )
    out = [",".join(experiments.OVERLAY_HEADER)]
    for r in result.rows:
        out.append(
            f"{r.t:.12g},{_fmt(r.discrete_total, args.decimal)},"
            f"{r.continuous_total:.12g}"
        )
    _emit("\n".join(out) + "\n", args.output)
    sys.stderr.write(json.dumps({"sup_gap": result.sup_gap}) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brpop",
        description="Simulate and analyze mixed coordinating/anticoordinating populations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="threshold-uniqueness check")
    _add_common(p)
    p.add_argument("--allow-degenerate", action="store_true")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("equilibria", help="enumerate and classify equilibria")
    _add_common(p)
    p.add_argument("--allow-degenerate", action="store_true")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_equilibria)

    p = sub.add_parser("simulate", help="run the finite-N chain")
    _add_common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--burn-in-fraction", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tie", type=_tie, default=TieRule.PREFER_A)
    p.add_argument("--x0", type=_int_vector, default=None,
                   help="comma-separated counts; default uniform random")
    p.add_argument("--trajectory-out", help="write the full trajectory CSV here")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("flow", help="integrate the mean dynamics")
    _add_common(p)
    p.add_argument("--x0", type=_rational_vector, default=None,
                   help="comma-separated state vector")
    p.add_argument("--x0-total", type=model.parse_rational, default=None,
                   help="start from this total, split proportionally")
    p.add_argument("--t-end", type=float, default=continuous.T_END_DEFAULT)
    p.add_argument("--eq-tol", type=float, default=continuous.EQ_TOL_DEFAULT)
    p.add_argument("--perturb", type=float, default=0.0)
    p.add_argument("--grid-dt", type=float, default=None,
                   help="densify the CSV with this time step")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_flow)

    p = sub.add_parser("sweep", help="fluctuation amplitudes across sizes")
    _add_common(p)
    p.add_argument("--sizes", type=_sizes, required=True)
    p.add_argument("--replicates", type=int, default=50)
    p.add_argument("--steps-per-agent", type=int, default=30)
    p.add_argument("--burn-in-fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tie", type=_tie, default=TieRule.PREFER_A)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("concentration", help="closed classes vs Birkhoff center")
    _add_common(p)
    p.add_argument("--sizes", type=_sizes, required=True)
    p.add_argument("--eps", type=model.parse_rational, default=Fraction(1, 20))
    p.add_argument("--tie", type=_tie, default=TieRule.PREFER_A)
    p.add_argument("--allow-degenerate", action="store_true")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_concentration)

    p = sub.add_parser("drift-check", help="exact drift vs mean-field branches")
    _add_common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tie", type=_tie, default=TieRule.PREFER_A)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_drift_check)

    p = sub.add_parser("compare", help="overlay one chain run on the flow")
    _add_common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--x0", type=_int_vector, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tie", type=_tie, default=TieRule.PREFER_A)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_compare)

    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 2
    except BrpopError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
