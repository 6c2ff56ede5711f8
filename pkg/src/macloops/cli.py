"""Command-line surface: scenario ingestion, experiment subcommands and CSV
emission.

Scenarios are JSON documents with a strict schema (unknown keys are
rejected); two presets, ``example1`` (heterogeneous network with a
state-threshold scheduler) and ``example3`` (homogeneous network with the
innovation-threshold scheduler), are compiled in, plus the always-transmit
baseline ``example1-baseline``.  Every run writes its outputs next to a JSON
manifest carrying the resolved scenario hash, seed and tool version; CSV
outputs are byte-identical across reruns with equal hash and seed.

Exit codes: 0 success, 2 usage, 3 validation error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__
from .control import (
    riccati_backward,
    ce_u0,
    two_step_s1,
    two_step_stationarity_residual,
    two_step_u0_optimal,
    two_step_u1,
)
from .errors import ConfigurationError, NumericalError
from .estimation import two_step_posterior
from .model import LoopConfig, NetworkScenario, PlantModel
from .network import CrmConfig, TrafficSource
from .scheduling import SchedulerPolicy
from .sim import MonteCarloResult, ce_law, monte_carlo, sweep_threshold, zero_law
from .stats import (
    DEFAULT_QUAD,
    TruncatedGaussian,
    conditional_moments_compound,
    truncated_moments,
)

OUT_DIR_ENV = "MACLOOPS_OUT_DIR"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def _example1_doc(always: bool = False) -> dict:
    sched = {"kind": "always"} if always else {"kind": "state", "eps": 2.5}
    types = [
        (6, 1.0, 1.0, 10),
        (7, 0.75, 1.5, 20),
        (7, 0.5, 2.0, 25),
    ]
    return {
        "name": "example1-baseline" if always else "example1",
        "episodes": 1000,
        "seed": 1,
        "crm": {"persistence": [1.0, 0.75, 0.5], "max_attempts": 3,
                "slots_per_sample": 10},
        "sources": [],
        "loops": [
            {
                "count": count,
                "plant": {"A": a, "B": 1.0, "Rw": rw, "R0": 1.0,
                          "x0_mean": 0.0, "period": period},
                "scheduler": dict(sched),
                "horizon": 10,
                "weights": {"Q0": 1.0, "Q1": 1.0, "Q2": 1.0},
                "net_penalty": 0.0,
            }
            for count, a, rw, period in types
        ],
    }


def _example3_doc() -> dict:
    return {
        "name": "example3",
        "episodes": 1000,
        "seed": 1,
        "crm": {"persistence": [1.0, 0.75, 0.5], "max_attempts": 3,
                "slots_per_sample": 10},
        "sources": [],
        "loops": [
            {
                "count": 20,
                "phase_step": 5,
                "plant": {"A": 1.0, "B": 1.0, "Rw": 1.0, "R0": 1.0,
                          "x0_mean": 0.0, "period": 10},
                "scheduler": {"kind": "innovation", "eps": 3.5},
                "horizon": 10,
                "weights": {"Q0": 1.0, "Q1": 1.0, "Q2": 1.0},
                "net_penalty": 0.0,
            }
        ],
    }


def presets() -> dict:
    return {
        "example1": _example1_doc(always=False),
        "example1-baseline": _example1_doc(always=True),
        "example3": _example3_doc(),
    }


# ---------------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------------

def _check_keys(obj: dict, path: str, required: Sequence[str], optional: Sequence[str]):
    if not isinstance(obj, dict):
        raise ConfigurationError(f"{path}: expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - set(required) - set(optional))
    if unknown:
        raise ConfigurationError(f"{path}: unknown keys {unknown}")
    missing = sorted(set(required) - set(obj))
    if missing:
        raise ConfigurationError(f"{path}: missing keys {missing}")


def _parse_scheduler(d: dict, path: str) -> SchedulerPolicy:
    _check_keys(d, path, ["kind"], ["eps", "threshold", "direction"])
    kind = d["kind"]
    if kind == "always":
        return SchedulerPolicy.always_transmit()
    if kind == "state":
        return SchedulerPolicy.state_threshold(float(d.get("eps", 0.0)))
    if kind == "innovation":
        return SchedulerPolicy.innovation_threshold(float(d.get("eps", 0.0)))
    if kind == "halfline":
        return SchedulerPolicy.half_line_state(
            float(d.get("threshold", 0.5)), d.get("direction", "ge")
        )
    raise ConfigurationError(f"{path}.kind: unknown scheduler kind {kind!r}")


def _parse_loop(d: dict, path: str) -> list[LoopConfig]:
    """Build the loop block, expanding `count` copies.

    `phase_step` staggers the copies' sampling phases by that many ticks
    (modulo the period); without it all copies share the block's phase.
    """
    _check_keys(d, path, ["plant", "scheduler", "horizon", "weights"],
                ["count", "net_penalty", "phase_step"])
    pd = d["plant"]
    _check_keys(pd, f"{path}.plant", ["A", "B", "Rw", "R0"],
                ["x0_mean", "period", "phase"])
    count = int(d.get("count", 1))
    if count < 1:
        raise ConfigurationError(f"{path}.count: must be >= 1, got {count}")
    period = int(pd.get("period", 1))
    phase0 = int(pd.get("phase", 0))
    phase_step = int(d.get("phase_step", 0))
    wd = d["weights"]
    _check_keys(wd, f"{path}.weights", ["Q0", "Q1", "Q2"], [])
    loops = []
    for i in range(count):
        try:
            plant = PlantModel(
                A=pd["A"], B=pd["B"], Rw=pd["Rw"], R0=pd["R0"],
                x0_mean=pd.get("x0_mean"), period=period,
                phase=(phase0 + i * phase_step) % period,
            )
            loops.append(LoopConfig(
                plant=plant,
                scheduler=_parse_scheduler(d["scheduler"], f"{path}.scheduler"),
                horizon=int(d["horizon"]),
                Q0=wd["Q0"], Q1=wd["Q1"], Q2=wd["Q2"],
                net_penalty=float(d.get("net_penalty", 0.0)),
            ))
        except ConfigurationError as exc:
            raise ConfigurationError(f"{path}: {exc}") from exc
    return loops


def _parse_source(d: dict, path: str) -> TrafficSource:
    _check_keys(d, path, ["kind"], ["rate", "p_on", "p_off"])
    if d["kind"] == "bernoulli":
        return TrafficSource.bernoulli(float(d.get("rate", 0.0)))
    if d["kind"] == "markov":
        return TrafficSource.markov_on_off(float(d.get("p_on", 0.0)),
                                           float(d.get("p_off", 0.0)))
    raise ConfigurationError(f"{path}.kind: unknown source kind {d['kind']!r}")


@dataclass(eq=False)
class ScenarioDoc:
    """A parsed scenario file: the scenario plus run defaults and grouping."""

    name: str
    scenario: NetworkScenario
    episodes: int
    seed: int
    groups: tuple[int, ...]   # loop index -> index of its block in the file


def parse_scenario_doc(source: Union[str, Path, dict]) -> ScenarioDoc:
    """Resolve a preset name, a JSON file path, or an in-memory document."""
    if isinstance(source, dict):
        doc = source
    else:
        name = str(source)
        if name in presets():
            doc = presets()[name]
        else:
            path = Path(name)
            if not path.exists():
                raise ConfigurationError(
                    f"scenario {name!r} is neither a preset "
                    f"({', '.join(sorted(presets()))}) nor a readable file"
                )
            try:
                doc = json.loads(path.read_text())
            except json.JSONDecodeError as exc:
                raise ConfigurationError(
                    f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
                ) from exc
            if not isinstance(doc, dict):
                raise ConfigurationError(f"{path}: top level must be an object")

    _check_keys(doc, "scenario", ["loops", "crm"],
                ["name", "episodes", "seed", "sources", "global_horizon"])
    cd = doc["crm"]
    _check_keys(cd, "crm", ["persistence"], ["max_attempts", "slots_per_sample"])
    crm = CrmConfig(
        persistence=tuple(cd["persistence"]),
        max_attempts=int(cd.get("max_attempts", 0)),
        slots_per_sample=int(cd.get("slots_per_sample", 0)),
    )
    if not isinstance(doc["loops"], list) or not doc["loops"]:
        raise ConfigurationError("scenario.loops: must be a non-empty array")
    loops, groups = [], []
    for bi, block in enumerate(doc["loops"]):
        expanded = _parse_loop(block, f"loops[{bi}]")
        loops.extend(expanded)
        groups.extend([bi] * len(expanded))
    sources = [
        _parse_source(sd, f"sources[{si}]")
        for si, sd in enumerate(doc.get("sources", []))
    ]
    scenario = NetworkScenario(
        loops=tuple(loops),
        crm=crm,
        sources=tuple(sources),
        global_horizon=doc.get("global_horizon"),
    )
    return ScenarioDoc(
        name=str(doc.get("name", "scenario")),
        scenario=scenario,
        episodes=int(doc.get("episodes", 1000)),
        seed=int(doc.get("seed", 1)),
        groups=tuple(groups),
    )


def parse_scenario(source: Union[str, Path, dict]) -> NetworkScenario:
    """Parse and validate a scenario, returning the built configuration."""
    return parse_scenario_doc(source).scenario


def _mat_out(arr: np.ndarray):
    arr = np.asarray(arr)
    if arr.size == 1:
        return float(arr.reshape(-1)[0])
    return arr.tolist()


def emit_scenario(doc: ScenarioDoc) -> dict:
    """Canonical JSON form of a parsed scenario (loops fully expanded).

    parse_scenario(emit_scenario(doc)) rebuilds an identical scenario, which
    is also what the manifest hash is computed over.
    """
    scn = doc.scenario
    out_loops = []
    for lc in scn.loops:
        sched: dict = {"kind": lc.scheduler.kind}
        if lc.scheduler.kind in ("state", "innovation"):
            sched["eps"] = lc.scheduler.eps
        if lc.scheduler.kind == "halfline":
            sched["threshold"] = lc.scheduler.threshold
            sched["direction"] = lc.scheduler.direction
        out_loops.append(
            {
                "plant": {
                    "A": _mat_out(lc.plant.A),
                    "B": _mat_out(lc.plant.B),
                    "Rw": _mat_out(lc.plant.Rw),
                    "R0": _mat_out(lc.plant.R0),
                    "x0_mean": _mat_out(lc.plant.x0_mean),
                    "period": lc.plant.period,
                    "phase": lc.plant.phase,
                },
                "scheduler": sched,
                "horizon": lc.horizon,
                "weights": {
                    "Q0": _mat_out(lc.Q0),
                    "Q1": _mat_out(lc.Q1),
                    "Q2": _mat_out(lc.Q2),
                },
                "net_penalty": lc.net_penalty,
            }
        )
    out_sources = []
    for src in scn.sources:
        if src.kind == "bernoulli":
            out_sources.append({"kind": "bernoulli", "rate": src.rate})
        else:
            out_sources.append({"kind": "markov", "p_on": src.p_on, "p_off": src.p_off})
    return {
        "name": doc.name,
        "episodes": doc.episodes,
        "seed": doc.seed,
        "global_horizon": scn.global_horizon,
        "crm": {
            "persistence": list(scn.crm.persistence),
            "max_attempts": scn.crm.max_attempts,
            "slots_per_sample": scn.crm.slots_per_sample,
        },
        "sources": out_sources,
        "loops": out_loops,
    }


def scenario_hash(doc: ScenarioDoc) -> str:
    canonical = json.dumps(emit_scenario(doc), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _vec(v: np.ndarray) -> str:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    return ";".join(repr(float(c)) for c in arr)


def write_manifest(prefix: Path, doc: ScenarioDoc, seed: int, outputs: list[Path]) -> Path:
    manifest = {
        "scenario": doc.name,
        "scenario_hash": scenario_hash(doc),
        "seed": seed,
        "tool_version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "outputs": [str(p) for p in outputs],
    }
    path = prefix.with_name(prefix.name + "_manifest.json")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


SUMMARY_HEADER = [
    "loop", "group", "period", "scheduler", "eps", "episodes",
    "j_mean", "j_se", "j_lambda_mean", "j_dp", "tx_mean",
    "request_rate", "success_rate", "drop_rate", "bound_prob",
]

TRACE_HEADER = [
    "episode", "loop", "k", "tick", "x", "u", "gamma", "delta", "attempts",
    "xhat", "err", "pred_err_sq", "tau", "d", "cost_term",
]

EVENT_HEADER = ["episode", "tick", "slot", "contender", "attempt", "result"]

SWEEP_HEADER = [
    "eps", "j_mean", "j_se", "bound_prob",
    "request_rate", "success_rate", "drop_rate",
]


def summary_rows(result: MonteCarloResult, doc: ScenarioDoc):
    rows = []
    for stats in result.per_loop:
        lc = doc.scenario.loops[stats.loop]
        sched = lc.scheduler
        eps = sched.eps if sched.kind in ("state", "innovation") else float("nan")
        rep = stats.report
        rows.append([
            stats.loop, doc.groups[stats.loop], lc.plant.period, sched.kind,
            _fmt(eps), rep.episodes, _fmt(rep.j_mean), _fmt(rep.j_se),
            _fmt(rep.j_lambda_mean), _fmt(rep.j_dp), _fmt(rep.tx_mean),
            _fmt(stats.request_rate), _fmt(stats.success_rate),
            _fmt(stats.drop_rate), _fmt(stats.bound_prob),
        ])
    return rows


def trace_rows(episode: int, traces):
    rows = []
    for tr in traces:
        for idx in range(tr.ks.size):
            rows.append([
                episode, tr.loop, int(tr.ks[idx]), int(tr.ticks[idx]),
                _vec(tr.xs[idx]), _vec(tr.us[idx]),
                int(tr.gammas[idx]), int(tr.deltas[idx]), int(tr.attempts[idx]),
                _vec(tr.xhats[idx]), _vec(tr.errs[idx]),
                _fmt(float(tr.pred_err_sq[idx])),
                int(tr.taus[idx]), int(tr.delays[idx]),
                _fmt(float(tr.cost_terms[idx])),
            ])
        # terminal row: state and terminal cost only
        rows.append([
            episode, tr.loop, int(tr.ks.size), int(tr.phase + tr.period * tr.ks.size),
            _vec(tr.xs[-1]), "", "", "", "", "", "", "", "", "",
            _fmt(tr.terminal_cost),
        ])
    return rows


def event_rows(episode: int, event_log):
    rows = []
    for tick, outcome in event_log:
        for ev in outcome.events:
            rows.append([episode, tick, ev.slot, ev.contender, ev.attempt, ev.result])
    return rows


def _out_prefix(args, command: str, label: str) -> Path:
    if args.out:
        return Path(args.out)
    out_dir = Path(os.environ.get(OUT_DIR_ENV, "."))
    return out_dir / f"{command}-{label}-s{args.seed if args.seed is not None else 'default'}"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    doc = parse_scenario_doc(args.scenario)
    seed = doc.seed if args.seed is None else args.seed
    episodes = doc.episodes if args.episodes is None else args.episodes
    law = zero_law if args.law == "zero" else ce_law
    prefix = _out_prefix(args, "simulate", doc.name)
    outputs: list[Path] = []

    trace_path = prefix.with_name(prefix.name + "_trace.csv")
    event_path = prefix.with_name(prefix.name + "_events.csv")
    trace_sink = event_sink = None
    trace_fh = event_fh = None
    if args.dump_trace:
        trace_path.parent.mkdir(parents=True, exist_ok=True)
        trace_fh = open(trace_path, "w", newline="")
        trace_writer = csv.writer(trace_fh)
        trace_writer.writerow(TRACE_HEADER)
        trace_sink = lambda ep, traces: trace_writer.writerows(trace_rows(ep, traces))
        outputs.append(trace_path)
    if args.dump_events:
        event_path.parent.mkdir(parents=True, exist_ok=True)
        event_fh = open(event_path, "w", newline="")
        event_writer = csv.writer(event_fh)
        event_writer.writerow(EVENT_HEADER)
        event_sink = lambda ep, log: event_writer.writerows(event_rows(ep, log))
        outputs.append(event_path)
    try:
        result = monte_carlo(doc.scenario, seed, episodes, law,
                             trace_hook=trace_sink, event_hook=event_sink)
    finally:
        if trace_fh:
            trace_fh.close()
        if event_fh:
            event_fh.close()

    summary_path = prefix.with_name(prefix.name + "_summary.csv")
    _write_csv(summary_path, SUMMARY_HEADER, summary_rows(result, doc))
    outputs.insert(0, summary_path)
    write_manifest(prefix, doc, seed, outputs)
    print(f"simulate {doc.name}: episodes={episodes} seed={seed} "
          f"mean cost {result.j_mean:.4f} +/- {result.j_se:.4f}")
    print(f"wrote {summary_path}")
    return EXIT_OK


def _parse_eps_grid(text: str) -> list[float]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigurationError("eps grid must be start:stop:step or a comma list")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ConfigurationError(f"bad eps grid {text!r}")
        values = []
        v = start
        while v <= stop + 1e-9:
            values.append(round(v, 12))
            v += step
        return values
    return [float(p) for p in text.split(",") if p]


def cmd_sweep(args) -> int:
    doc = parse_scenario_doc(args.scenario)
    seed = doc.seed if args.seed is None else args.seed
    episodes = doc.episodes if args.episodes is None else args.episodes
    grid = _parse_eps_grid(args.eps_grid)
    result = sweep_threshold(doc.scenario, grid, seed, episodes)
    prefix = _out_prefix(args, "sweep", doc.name)
    sweep_path = prefix.with_name(prefix.name + "_sweep.csv")
    rows = [
        [_fmt(float(result.eps[i])), _fmt(float(result.j_mean[i])),
         _fmt(float(result.j_se[i])), _fmt(float(result.bound_prob[i])),
         _fmt(float(result.request_rate[i])), _fmt(float(result.success_rate[i])),
         _fmt(float(result.drop_rate[i]))]
        for i in range(result.eps.size)
    ]
    _write_csv(sweep_path, SWEEP_HEADER, rows)
    write_manifest(prefix, doc, seed, [sweep_path])
    best = int(np.argmin(result.j_mean))
    print(f"sweep {doc.name}: best eps={result.eps[best]} "
          f"cost {result.j_mean[best]:.4f} +/- {result.j_se[best]:.4f}")
    print(f"wrote {sweep_path}")
    return EXIT_OK


def _json_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"cannot parse value {text!r}: {exc.msg}") from exc


def cmd_riccati(args) -> int:
    sol = riccati_backward(
        _json_value(args.a), _json_value(args.b), _json_value(args.q0),
        _json_value(args.q1), _json_value(args.q2), args.horizon,
    )
    out = Path(args.out) if args.out else Path(
        os.environ.get(OUT_DIR_ENV, ".")) / f"riccati-n{args.horizon}"
    path = out.with_name(out.name + ".csv")
    rows = []
    for k in range(sol.horizon + 1):
        gain = _vec(sol.L[k].reshape(-1)) if k < sol.horizon else ""
        rows.append([k, _vec(sol.S[k].reshape(-1)), gain])
    _write_csv(path, ["k", "s", "l"], rows)
    print(f"riccati horizon={args.horizon}: S0={_vec(sol.S[0].reshape(-1))} "
          f"L0={_vec(sol.L[0].reshape(-1))}")
    print(f"wrote {path}")
    return EXIT_OK


def _parse_branch(text: str) -> int:
    t = text.strip().lower().replace(" ", "")
    if t in ("delta0=1", "1"):
        return 1
    if t in ("delta0=0", "0"):
        return 0
    raise ConfigurationError(f"branch must be delta0=0 or delta0=1, got {text!r}")


def cmd_two_step(args) -> int:
    delta0 = _parse_branch(args.branch)
    a, b = args.a, args.b
    q0, q1, q2 = args.q0, args.q1, args.q2
    if delta0 and args.x0 is None:
        raise ConfigurationError("--x0 is required for the delta0=1 branch")
    s1 = two_step_s1(a, b, q0, q1, q2)
    if delta0:
        xhat00 = args.x0
    else:
        xhat00, _ = truncated_moments(TruncatedGaussian(0.0, 1.0, args.threshold))
    u0_ce = ce_u0(a, b, s1, q2, xhat00)
    residual_ce = two_step_stationarity_residual(
        a, b, q0, q1, q2, delta0, xhat00 if delta0 else 0.0, u0_ce,
        threshold=args.threshold,
    )
    u0_opt = two_step_u0_optimal(
        a, b, q0, q1, q2, delta0, xhat00 if delta0 else 0.0,
        threshold=args.threshold,
    )
    post = two_step_posterior(a, b, u0_opt, delta0, 0,
                              x0=args.x0 if delta0 else None,
                              threshold=args.threshold)
    u1 = two_step_u1(a, b, q0, q2, post.xhat11)
    out = Path(args.out) if args.out else Path(
        os.environ.get(OUT_DIR_ENV, ".")) / f"two-step-d{delta0}"
    path = out.with_name(out.name + ".csv")
    header = ["delta0", "x0", "xhat00", "s1", "ce_u0", "residual_at_ce",
              "optimal_u0", "gap", "u1_at_optimal"]
    _write_csv(path, header, [[
        delta0, _fmt(float(args.x0) if args.x0 is not None else float("nan")),
        _fmt(float(xhat00)), _fmt(s1), _fmt(u0_ce), _fmt(residual_ce),
        _fmt(u0_opt), _fmt(u0_opt - u0_ce), _fmt(u1),
    ]])
    print(f"two-step delta0={delta0}: CE u0 = {u0_ce:.6f}, optimal u0 = {u0_opt:.6f}")
    print(f"stationarity residual at the CE point: {residual_ce:.6f}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_moments(args) -> int:
    tg = TruncatedGaussian(args.mu, args.var, args.upper)
    mean, var = truncated_moments(tg)
    rows = [["truncated_mean", _fmt(mean)], ["truncated_var", _fmt(var)]]
    print(f"truncated moments (mu={args.mu}, var={args.var}, upper={args.upper}): "
          f"mean={mean:.9f} var={var:.9f}")
    if args.cond_upper is not None:
        cmean, cvar = conditional_moments_compound(
            args.a, tg, args.noise_var, args.cond_upper, DEFAULT_QUAD
        )
        rows += [["compound_cond_mean", _fmt(cmean)], ["compound_cond_var", _fmt(cvar)]]
        print(f"compound conditional moments (a={args.a}, noise_var={args.noise_var}, "
              f"upper={args.cond_upper}): mean={cmean:.9f} var={cvar:.9f}")
    if args.out:
        path = Path(args.out).with_suffix(".csv")
        _write_csv(path, ["quantity", "value"], rows)
        print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser / entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="macloops",
        description="Simulate networks of control loops over a contention-based sensor link.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte Carlo run of one scenario")
    sim.add_argument("--scenario", required=True,
                     help="preset name or path to a scenario JSON file")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--episodes", type=int, default=None)
    sim.add_argument("--out", default=None, help="output path prefix")
    sim.add_argument("--law", choices=["ce", "zero"], default="ce")
    sim.add_argument("--dump-trace", action="store_true",
                     help="write the per-step trace CSV for every episode")
    sim.add_argument("--dump-events", action="store_true",
                     help="write the per-mini-slot contention event CSV")
    sim.set_defaults(func=cmd_simulate)

    swp = sub.add_parser("sweep", help="cost versus scheduler threshold")
    swp.add_argument("--scenario", required=True)
    swp.add_argument("--eps-grid", required=True,
                     help="start:stop:step or a comma-separated list")
    swp.add_argument("--seed", type=int, default=None)
    swp.add_argument("--episodes", type=int, default=None)
    swp.add_argument("--out", default=None)
    swp.set_defaults(func=cmd_sweep)

    ric = sub.add_parser("riccati", help="backward Riccati sequences as CSV")
    ric.add_argument("--a", default="1.0", help="state matrix (JSON scalar or nested list)")
    ric.add_argument("--b", default="1.0")
    ric.add_argument("--q0", default="1.0")
    ric.add_argument("--q1", default="1.0")
    ric.add_argument("--q2", default="1.0")
    ric.add_argument("--horizon", type=int, required=True)
    ric.add_argument("--out", default=None)
    ric.set_defaults(func=cmd_riccati)

    two = sub.add_parser("two-step", help="two-step probing vs CE first input")
    two.add_argument("--branch", required=True, help="delta0=0 or delta0=1")
    two.add_argument("--x0", type=float, default=None)
    two.add_argument("--a", type=float, default=1.0)
    two.add_argument("--b", type=float, default=1.0)
    two.add_argument("--q0", type=float, default=1.0)
    two.add_argument("--q1", type=float, default=1.0)
    two.add_argument("--q2", type=float, default=1.0)
    two.add_argument("--threshold", type=float, default=0.5)
    two.add_argument("--out", default=None)
    two.set_defaults(func=cmd_two_step)

    mom = sub.add_parser("moments", help="truncated/compound moment spot checks")
    mom.add_argument("--mu", type=float, default=0.0)
    mom.add_argument("--var", type=float, default=1.0)
    mom.add_argument("--upper", type=float, required=True)
    mom.add_argument("--a", type=float, default=0.0,
                     help="source coefficient for the compound conditioning")
    mom.add_argument("--noise-var", type=float, default=1.0)
    mom.add_argument("--cond-upper", type=float, default=None)
    mom.add_argument("--out", default=None)
    mom.set_defaults(func=cmd_moments)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
