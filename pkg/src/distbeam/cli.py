"""Command-line entry point.

Values from ``--config`` (``key = value`` lines) act as defaults; explicit
flags always win.  Exit status: 0 on success, 1 on usage errors, 2 when an
input violates a precondition or an invariant check fails.
"""
from __future__ import annotations

import argparse
import math
import sys

from . import bounds as bnd
from .adapt import Algorithm, error_bound
from .errors import DomainError, InvariantViolation, ProtocolError
from .experiments import ExperimentSpec, ResultTable, export_results, read_config_file, run_experiment
from .phasor import RolePartition, circular_distance, target_phase
from .protocols import ParallelPlan, SequentialPlan, run_adaptation, run_parallel, run_rpp, run_sequential
from .scenario import ScenarioConfig, draw_trial

EPILOG = "Precedence: explicit flag > --config file entry > built-in default."

# built-in defaults for flags that a config file may also set
FLAG_DEFAULTS = {
    "seed": 0,
    "ets": 5,
    "bits": 1,
    "windows": 5,
    "slots": 10,
    "algorithm": "a2",
    "p": 0.5,
    "intervals": 30,
    "eta_target": 0.99,
    "trials": 500,
    "delta": math.pi / 8,
    "noise_std": 0.0,
    "adapting": "0,1",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="master random seed (default 0)")
    p.add_argument("--out", help="write CSV output to this path ('-' for stdout)")
    p.add_argument("--config", help="plain-text key = value file with default values")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="distbeam", description="Distributed energy beamforming with energy feedback.", epilog=EPILOG)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("adapt", help="one adaptation interval on a random deployment", epilog=EPILOG)
    _add_common(p)
    p.add_argument("--ets", type=int, help="number of ETs M (default 5)")
    p.add_argument("--bits", type=int, help="feedback bits B (default 1)")
    p.add_argument("--windows", type=int, help="feedback windows N (default 5)")
    p.add_argument("--algorithm", choices=["a1", "a2"], help="a1 or a2 (default a2)")
    p.add_argument("--adapting", help="comma-separated zero-based adapting ET indices (default 0,1)")
    p.add_argument("--noise-std", type=float, help="std of additive power measurement noise (default 0)")

    for name, text in (("sequential", "sequential training"), ("parallel", "parallel training")):
        p = sub.add_parser(name, help=text, epilog=EPILOG)
        _add_common(p)
        p.add_argument("--ets", type=int, help="number of ETs M (default 5)")
        p.add_argument("--bits", type=int, help="feedback bits B (default 1)")
        p.add_argument("--slots", type=int, help="training slots per interval N_t (default 10)")
        p.add_argument("--algorithm", choices=["a1", "a2"], help="a1 or a2 (default a2)")
        p.add_argument("--noise-std", type=float, help="std of additive power measurement noise (default 0)")
        if name == "parallel":
            p.add_argument("--p", type=float, help="adaptation probability (default 0.5)")
            p.add_argument("--intervals", type=int, help="number of adaptation intervals (default 30)")

    p = sub.add_parser("rpp", help="random phase perturbation baseline", epilog=EPILOG)
    _add_common(p)
    p.add_argument("--ets", type=int, help="number of ETs M (default 5)")
    p.add_argument("--slots", type=int, help="total training slots (default 10)")
    p.add_argument("--delta", type=float, help="perturbation half-width in radians (default pi/8)")

    p = sub.add_parser("bounds", help="efficiency lower bounds and required training slots", epilog=EPILOG)
    _add_common(p)
    p.add_argument("--ets", type=int, help="number of ETs M (default 5)")
    p.add_argument("--bits", type=int, help="feedback bits B (default 1)")
    p.add_argument("--eta-target", type=float, help="target efficiency (default 0.99)")
    p.add_argument("--slots", type=int, help="also report lower bounds at this N_t")
    p.add_argument("--algorithm", choices=["a1", "a2"], help="restrict to one algorithm")
    p.add_argument("--equal-gains", action="store_true", help="use identical unit gains instead of a random draw")

    p = sub.add_parser("experiment", help="run a Monte Carlo experiment and emit CSV", epilog=EPILOG)
    _add_common(p)
    p.add_argument("--figure", help="phase_error, seq_efficiency, eb_gain, tradeoff, coin, comparison")
    p.add_argument("--trials", type=int, help="Monte Carlo trials (default 500)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="experiment parameter override")
    return parser


def _resolve(args, config: dict, key: str, cast=None):
    value = getattr(args, key, None)
    if value is None:
        value = config.get(key, FLAG_DEFAULTS.get(key))
    if cast is not None and value is not None:
        try:
            value = cast(value)
        except ValueError:
            raise UsageError(f"invalid value for {key}: {value!r}") from None
    return value


def _trajectory_table(run_trajectory, slot_duration) -> ResultTable:
    table = ResultTable("trajectory", ("slot", "time_s", "power_w"))
    for k, q in enumerate(run_trajectory):
        table.add(k + 1, (k + 1) * slot_duration, float(q))
    return table


def _maybe_export(args, table: ResultTable) -> None:
    if args.out:
        export_results(table, args.out)


def _deployment(args, config):
    m = _resolve(args, config, "ets", int)
    seed = _resolve(args, config, "seed", int)
    scen = ScenarioConfig(num_ets=m, seed=seed)
    rec, rng = draw_trial(scen, 0)
    return rec.channels, scen.system(), rng, seed


def _cmd_adapt(args, config) -> None:
    channels, cfg, rng, seed = _deployment(args, config)
    bits = _resolve(args, config, "bits", int)
    windows = _resolve(args, config, "windows", int)
    alg = Algorithm.parse(_resolve(args, config, "algorithm"))
    raw = str(_resolve(args, config, "adapting"))
    try:
        adapting = {int(x) for x in raw.split(",") if x.strip()}
    except ValueError:
        raise UsageError(f"invalid adapting set {raw!r}") from None
    m = len(channels)
    if not adapting <= set(range(m)):
        raise DomainError(f"adapting indices must lie in 0..{m - 1}, got {sorted(adapting)}")
    roles = RolePartition(adapting, set(range(m)) - adapting, ())
    fixed = {i: 0.0 for i in roles.non_adapting}
    res = run_adaptation(channels, roles, fixed, bits, windows, alg, cfg,
                         noise_std=_resolve(args, config, "noise_std", float), rng=rng)
    psi = target_phase(channels, roles, fixed)
    err = circular_distance(res.final_phase, psi)
    bound = error_bound(windows * 2 ** bits, bits, alg)
    print(f"final_phase={res.final_phase:.9f} target={psi:.9f} error={err:.3e} "
          f"bound={bound:.3e} slots={len(res.trajectory)}")
    _maybe_export(args, _trajectory_table(res.trajectory, cfg.slot_duration))


def _cmd_sequential(args, config) -> None:
    channels, cfg, rng, _ = _deployment(args, config)
    plan = SequentialPlan(_resolve(args, config, "slots", int), _resolve(args, config, "bits", int),
                          _resolve(args, config, "algorithm"))
    run = run_sequential(channels, plan, cfg, noise_std=_resolve(args, config, "noise_std", float), rng=rng)
    print(f"eta={run.efficiency:.9f} final_power={run.final_power:.6e} q_star={run.q_star:.6e} "
          f"slots={run.training_slots}")
    _maybe_export(args, _trajectory_table(run.trajectory, cfg.slot_duration))


def _cmd_parallel(args, config) -> None:
    channels, cfg, rng, seed = _deployment(args, config)
    plan = ParallelPlan(_resolve(args, config, "p", float), _resolve(args, config, "intervals", int),
                        _resolve(args, config, "slots", int), _resolve(args, config, "bits", int),
                        _resolve(args, config, "algorithm"), seed=seed)
    run = run_parallel(channels, plan, cfg, rng, noise_std=_resolve(args, config, "noise_std", float))
    print(f"eta={run.efficiency:.9f} final_power={run.final_power:.6e} q_star={run.q_star:.6e} "
          f"slots={run.training_slots}")
    _maybe_export(args, _trajectory_table(run.trajectory, cfg.slot_duration))


def _cmd_rpp(args, config) -> None:
    channels, cfg, rng, _ = _deployment(args, config)
    run = run_rpp(channels, cfg, _resolve(args, config, "slots", int), _resolve(args, config, "delta", float), rng)
    print(f"eta={run.efficiency:.9f} final_power={run.final_power:.6e} q_star={run.q_star:.6e} "
          f"slots={run.training_slots}")
    _maybe_export(args, _trajectory_table(run.trajectory, cfg.slot_duration))


def _cmd_bounds(args, config) -> None:
    m = _resolve(args, config, "ets", int)
    bits = _resolve(args, config, "bits", int)
    eta = _resolve(args, config, "eta_target", float)
    if args.equal_gains or str(config.get("equal_gains", "")).lower() in ("1", "true", "yes"):
        if m < 2:
            raise DomainError(f"num_ets must be >= 2, got {m}")
        gains = [1.0] * m
    else:
        channels, _, _, _ = _deployment(args, config)
        gains = [c.power_gain for c in channels]
    algs = [Algorithm.parse(args.algorithm)] if args.algorithm else [Algorithm.A1, Algorithm.A2]
    n_t = args.slots if args.slots is not None else config.get("slots")
    table = ResultTable("bounds", ("algorithm", "bits", "eta_target", "required_n_t", "rounded_n_t", "n_t", "lower_bound"))
    for alg in algs:
        need = bnd.required_slots(gains, bits, eta, alg)
        rounded = bnd.round_up_slots(need, bits) if math.isfinite(need) else ""
        lb = bnd.efficiency_lower_bound(gains, int(n_t), bits, alg) if n_t is not None else ""
        table.add(alg.value, bits, eta, need, rounded, "" if n_t is None else int(n_t), lb)
        line = f"{alg.value} B={bits} eta_target={eta}: required N_t >= {need:.6g} (use {rounded})"
        if n_t is not None:
            line += f"; lower bound at N_t={int(n_t)}: {lb:.6f}"
        print(line)
    _maybe_export(args, table)


def _cmd_experiment(args, config) -> None:
    figure = args.figure or config.get("figure")
    if not figure:
        raise UsageError("experiment requires --figure")
    # every config key except the ones this command consumes is an experiment parameter
    overrides = {k: v for k, v in config.items() if k not in ("figure", "trials", "seed", "out")}
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip().replace("-", "_")] = v.strip()
    spec = ExperimentSpec(figure, _resolve(args, config, "trials", int), _resolve(args, config, "seed", int), overrides)
    table = run_experiment(spec)
    export_results(table, args.out or "-")
    print(f"experiment {spec.figure}: {len(table.rows)} rows from {spec.trials} trials (seed {spec.seed})",
          file=sys.stderr)


COMMANDS = {
    "adapt": _cmd_adapt,
    "sequential": _cmd_sequential,
    "parallel": _cmd_parallel,
    "rpp": _cmd_rpp,
    "bounds": _cmd_bounds,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help(sys.stderr)
            return 1
        config = read_config_file(args.config) if args.config else {}
        COMMANDS[args.command](args, config)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (DomainError, ProtocolError, InvariantViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
