"""Monte Carlo experiments and CSV export.

Each experiment maps to one of the evaluation figures:

================  ==========================================================
``phase_error``   normalized phase error of A1/A2 vs slots in one interval
``seq_efficiency`` mean efficiency of sequential training and its lower bound
``eb_gain``       harvested power vs number of ETs, with and without training
``tradeoff``      average power over a transmission budget, weak ETs shut off
``coin``          parallel training for several adaptation probabilities
``comparison``    sequential vs parallel vs random phase perturbation
================  ==========================================================
"""
from __future__ import annotations

import configparser
import csv
import dataclasses
import io
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .adapt import Algorithm, error_bound
from .bounds import efficiency_lower_bound
from .errors import DomainError
from .phasor import RolePartition, circular_distance, optimal_power, target_phase
from .protocols import (
    ParallelPlan,
    SequentialPlan,
    run_adaptation,
    run_no_adaptation,
    run_parallel,
    run_rpp,
    run_sequential,
)
from .scenario import ScenarioConfig, draw_trial

FIGURE_ALIASES = {
    "phase_error": "phase_error", "f8": "phase_error", "phaseerror": "phase_error",
    "seq_efficiency": "seq_efficiency", "f9": "seq_efficiency", "seqefficiency": "seq_efficiency",
    "eb_gain": "eb_gain", "f10": "eb_gain", "ebgainvsm": "eb_gain",
    "tradeoff": "tradeoff", "overhead": "tradeoff", "overheadtradeoff": "tradeoff",
    "coin": "coin", "parallel_p_sweep": "coin", "parallelpsweep": "coin",
    "comparison": "comparison", "seqvsparvsrpp": "comparison",
}

# per-experiment parameters and their defaults
DEFAULTS: dict[str, dict[str, Any]] = {
    "phase_error": {"num_ets": 5, "adapting": (0, 1), "bits": (1, 2, 3), "algorithms": ("a1", "a2"), "n_t_max": 24},
    "seq_efficiency": {"m_values": (5, 10), "n_t_grid": (4, 8, 12, 16, 20), "algorithms": ("a1", "a2"), "bits": 1},
    "eb_gain": {"m_values": (2, 4, 6, 8, 10, 12), "n_t_grid": (4, 8, 16), "algorithm": "a2", "bits": 1},
    "tradeoff": {"num_ets": 5, "windows": 5, "algorithm": "a2", "bits": 1, "slot_grid": tuple(range(10, 210, 10))},
    "coin": {"num_ets": 7, "windows": 5, "algorithm": "a2", "bits": 1, "intervals": 30,
             "p_values": (0.1, 0.3, 0.5, 0.7, 0.9)},
    "comparison": {"m_values": (5, 10), "n_t": 10, "algorithm": "a2", "bits": 1, "p": 0.5,
                   "rpp_delta": math.pi / 8, "budget_factor": 4},
}

SCENARIO_KEYS = {f.name for f in dataclasses.fields(ScenarioConfig)} - {"seed"}


def resolve_figure(name: str) -> str:
    key = str(name).strip().lower().replace("-", "_")
    if key not in FIGURE_ALIASES:
        raise DomainError(f"unknown figure id {name!r}; choose from {sorted(set(FIGURE_ALIASES.values()))}")
    return FIGURE_ALIASES[key]


@dataclass
class ExperimentSpec:
    figure: str
    trials: int = 500
    seed: int = 0
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        self.figure = resolve_figure(self.figure)
        if self.trials < 1:
            raise DomainError(f"trials must be >= 1, got {self.trials}")
        params = DEFAULTS[self.figure]
        for key in self.overrides:
            if key not in params and key not in SCENARIO_KEYS:
                raise DomainError(f"unknown parameter {key!r} for experiment {self.figure}")

    def params(self) -> dict:
        out = dict(DEFAULTS[self.figure])
        out.update({k: _coerce(v, out[k]) for k, v in self.overrides.items() if k in out})
        return out

    def scenario(self) -> ScenarioConfig:
        kw = {k: v for k, v in self.overrides.items() if k in SCENARIO_KEYS}
        base = ScenarioConfig()
        kw = {k: _coerce(v, getattr(base, k)) for k, v in kw.items()}
        return dataclasses.replace(base, seed=self.seed, **kw)


def _coerce(value, like):
    """Convert config-file strings to the type of the default value."""
    if not isinstance(value, str):
        return value
    if isinstance(like, tuple):
        parts = [p.strip() for p in value.split(",") if p.strip()]
        item = like[0] if like else ""
        return tuple(_coerce(p, item) for p in parts)
    if isinstance(like, bool):
        return value.lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value


@dataclass
class ResultTable:
    figure: str
    columns: tuple
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    records: list = field(default_factory=list, repr=False)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise DomainError(f"row has {len(values)} values, table has {len(self.columns)} columns")
        self.rows.append(tuple(values))

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def where(self, **match) -> list:
        idx = {k: self.columns.index(k) for k in match}
        return [dict(zip(self.columns, r)) for r in self.rows if all(r[i] == match[k] for k, i in idx.items())]


def _mean(xs) -> float:
    return float(np.mean(xs)) if len(xs) else float("nan")


def _phase_error(spec: ExperimentSpec, p: dict) -> ResultTable:
    scen = spec.scenario()
    m = p["num_ets"]
    adapting = set(p["adapting"])
    roles = RolePartition(adapting, set(range(m)) - adapting, ())
    fixed = {i: 0.0 for i in roles.non_adapting}
    table = ResultTable("phase_error", ("n_t", "algorithm", "bits", "mean_norm_error", "max_norm_error", "bound_norm_error"))
    errors: dict = {}
    for t in range(spec.trials):
        rec, _ = draw_trial(scen, t, m)
        cfg = scen.system(m)
        psi_star = target_phase(rec.channels, roles, fixed)
        for alg in p["algorithms"]:
            for b in p["bits"]:
                k = 2 ** b
                for n_t in range(k, p["n_t_max"] + 1, k):
                    res = run_adaptation(rec.channels, roles, fixed, b, n_t // k, alg, cfg)
                    e = circular_distance(res.final_phase, psi_star) / (2 * math.pi)
                    errors.setdefault((n_t, Algorithm.parse(alg).value, b), []).append(e)
        table.records.append(rec)
    for (n_t, alg, b), es in sorted(errors.items(), key=lambda kv: (kv[0][1], kv[0][2], kv[0][0])):
        bound = error_bound(n_t, b, alg) / (2 * math.pi)
        table.add(n_t, alg, b, _mean(es), float(np.max(es)), bound)
    return table


def _seq_efficiency(spec: ExperimentSpec, p: dict) -> ResultTable:
    scen = spec.scenario()
    table = ResultTable("seq_efficiency", ("n_t", "m", "algorithm", "mean_eta", "lower_bound"))
    b = p["bits"]
    for m in p["m_values"]:
        etas: dict = {}
        lbs: dict = {}
        for t in range(spec.trials):
            rec, _ = draw_trial(scen, t, m)
            cfg = scen.system(m)
            gains = rec.gains
            for alg in p["algorithms"]:
                alg = Algorithm.parse(alg).value
                for n_t in p["n_t_grid"]:
                    run = run_sequential(rec.channels, SequentialPlan(n_t, b, alg), cfg)
                    etas.setdefault((n_t, alg), []).append(run.efficiency)
                    lbs.setdefault((n_t, alg), []).append(efficiency_lower_bound(gains, n_t, b, alg))
                    rec.metrics[(m, alg, n_t)] = run.efficiency
            table.records.append(rec)
        for alg in p["algorithms"]:
            alg = Algorithm.parse(alg).value
            for n_t in p["n_t_grid"]:
                table.add(n_t, m, alg, _mean(etas[(n_t, alg)]), _mean(lbs[(n_t, alg)]))
    return table


def _eb_gain(spec: ExperimentSpec, p: dict) -> ResultTable:
    scen = spec.scenario()
    table = ResultTable("eb_gain", ("m", "scheme", "n_t", "mean_power"))
    m_max = max(p["m_values"])
    acc: dict = {}
    for t in range(spec.trials):
        rec, _ = draw_trial(scen, t, m_max)
        for m in p["m_values"]:
            ch = rec.channels[:m]
            cfg = scen.system(m)
            acc.setdefault((m, "optimal", ""), []).append(optimal_power(ch, cfg))
            acc.setdefault((m, "no_adaptation", ""), []).append(run_no_adaptation(ch, cfg))
            for n_t in p["n_t_grid"]:
                run = run_sequential(ch, SequentialPlan(n_t, p["bits"], p["algorithm"]), cfg)
                acc.setdefault((m, "sequential", n_t), []).append(run.final_power)
        table.records.append(rec)
    for m in p["m_values"]:
        for key in [(m, "optimal", ""), (m, "no_adaptation", "")] + [(m, "sequential", n) for n in p["n_t_grid"]]:
            table.add(key[0], key[1], key[2], _mean(acc[key]))
    return table


def _tradeoff(spec: ExperimentSpec, p: dict) -> ResultTable:
    scen = spec.scenario()
    m = p["num_ets"]
    n_t = p["windows"] * 2 ** p["bits"]
    plan = SequentialPlan(n_t, p["bits"], p["algorithm"])
    grid = p["slot_grid"]
    budget = max(grid)
    schemes = ["all_on", "weakest_off", "two_weakest_off", "no_adaptation", "optimal"]
    acc = {s: np.zeros(len(grid)) for s in schemes}
    table = ResultTable("tradeoff", ("total_slots", "scheme", "mean_power"))
    for t in range(spec.trials):
        rec, _ = draw_trial(scen, t, m)
        ch = sorted(rec.channels, key=lambda c: -c.power_gain)
        cfg = scen.system(m)
        for name, keep in (("all_on", m), ("weakest_off", m - 1), ("two_weakest_off", m - 2)):
            run = run_sequential(ch[:keep], plan, scen.system(keep))
            cum = np.cumsum(run.padded(budget))
            acc[name] += np.array([cum[g - 1] / g for g in grid])
        acc["no_adaptation"] += run_no_adaptation(ch, cfg)
        acc["optimal"] += optimal_power(ch, cfg)
        table.records.append(rec)
    for i, g in enumerate(grid):
        for s in schemes:
            table.add(g, s, float(acc[s][i] / spec.trials))
    return table


def _coin(spec: ExperimentSpec, p: dict) -> ResultTable:
    scen = spec.scenario()
    m = p["num_ets"]
    n_t = p["windows"] * 2 ** p["bits"]
    table = ResultTable("coin", ("p", "interval", "slots", "mean_power", "mean_eta", "mean_q_star"))
    for prob in p["p_values"]:
        plan = ParallelPlan(prob, p["intervals"], n_t, p["bits"], p["algorithm"])
        powers = np.zeros(p["intervals"])
        etas = np.zeros(p["intervals"])
        q_star = 0.0
        for t in range(spec.trials):
            rec, rng = draw_trial(scen, t, m)
            run = run_parallel(rec.channels, plan, scen.system(m), rng)
            ends = np.asarray(run.interval_end_powers)
            powers += ends
            etas += ends / run.q_star
            q_star += run.q_star
            rec.metrics[("coin", prob)] = run.efficiency
            if prob == p["p_values"][0]:
                table.records.append(rec)
        for i in range(p["intervals"]):
            table.add(
                prob, i + 1, (i + 1) * n_t,
                float(powers[i] / spec.trials), float(etas[i] / spec.trials), q_star / spec.trials,
            )
    return table


def _comparison(spec: ExperimentSpec, p: dict) -> ResultTable:
    scen = spec.scenario()
    n_t = p["n_t"]
    table = ResultTable("comparison", ("m", "scheme", "slot", "mean_power"))
    for m in p["m_values"]:
        budget = p["budget_factor"] * n_t * (m - 1)
        intervals = budget // n_t
        acc = {s: np.zeros(budget) for s in ("sequential", "parallel", "rpp", "optimal")}
        for t in range(spec.trials):
            rec, rng = draw_trial(scen, t, m)
            cfg = scen.system(m)
            seq = run_sequential(rec.channels, SequentialPlan(n_t, p["bits"], p["algorithm"]), cfg)
            par = run_parallel(rec.channels, ParallelPlan(p["p"], intervals, n_t, p["bits"], p["algorithm"]), cfg, rng)
            rpp = run_rpp(rec.channels, cfg, budget, p["rpp_delta"], rng)
            acc["sequential"] += seq.padded(budget)
            acc["parallel"] += par.padded(budget)
            acc["rpp"] += rpp.trajectory
            acc["optimal"] += seq.q_star
            rec.metrics[("comparison", m)] = {
                "sequential": seq.final_power, "parallel": par.final_power, "rpp": rpp.final_power,
                "q_star": seq.q_star, "sequential_slots": seq.training_slots,
            }
            table.records.append(rec)
        for s, values in acc.items():
            for k in range(budget):
                table.add(m, s, k + 1, float(values[k] / spec.trials))
    return table


_RUNNERS = {
    "phase_error": _phase_error,
    "seq_efficiency": _seq_efficiency,
    "eb_gain": _eb_gain,
    "tradeoff": _tradeoff,
    "coin": _coin,
    "comparison": _comparison,
}


def run_experiment(spec: ExperimentSpec) -> ResultTable:
    params = spec.params()
    table = _RUNNERS[spec.figure](spec, params)
    table.meta = {"figure": spec.figure, "trials": spec.trials, "seed": spec.seed}
    table.meta.update({k: params[k] for k in sorted(params)})
    table.meta.update({k: v for k, v in sorted(dataclasses.asdict(spec.scenario()).items()) if k != "seed"})
    return table


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    return str(value)


def format_results(table: ResultTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_fmt(v) for v in row])
    for key, value in table.meta.items():
        buf.write(f"# {key} = {_fmt(value)}\n")
    return buf.getvalue()


def export_results(table: ResultTable, path) -> None:
    """Write ``table`` as CSV to ``path`` (``"-"`` for standard output)."""
    text = format_results(table)
    if str(path) == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines (``#`` comments) into a dict of strings."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc}") from exc
    try:
        parser.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise DomainError(f"malformed config file {path}: {exc}") from exc
    return {k.replace("-", "_"): v for k, v in parser["config"].items()}
