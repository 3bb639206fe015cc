"""Command-line front end: index tables, simulations, and bundled experiments.

Subcommands:
    index      build Whittle index tables for a scenario's processes, as CSV
    simulate   Monte-Carlo evaluation of the requested policies, as CSV
    reproduce  run a bundled reference experiment set (I, II, III, or IV)
               and compare measured values against the recorded references

Exit codes: 0 all computations converged; 2 scenario/usage error;
3 solver non-convergence; 4 unexpected internal error.  Errors print a
machine-readable category prefix on stderr.  CSV output is UTF-8 with a
header row, '.' decimal separator, and deterministic formatting; lines
starting with '#' carry run metadata.
"""

import argparse
import csv
import sys

import numpy as np
import yaml

from .belief import DEFAULT_EPSILON, BanditParams, build_space
from .penalty import KINDS as PENALTY_KINDS
from .penalty import make_penalty
from .policy import KINDS as POLICY_KINDS
from .rvi import NonConvergence
from .sim import RVI_EPS, Scenario, run
from .whittle import build_table

EXIT_OK = 0
EXIT_SCENARIO = 2
EXIT_CONVERGENCE = 3
EXIT_INTERNAL = 4

DEFAULT_HORIZON = 10_000
DEFAULT_RUNS = 50
DEFAULT_SEED = 20

SCENARIO_KEYS = {"name", "processes", "policies", "horizon", "runs", "seed",
                 "epsilon", "burn_in", "out", "dump_index", "debug_belief"}
PROCESS_KEYS = {"p", "q", "penalty"}


class ScenarioError(ValueError):
    """Scenario file failed validation; message carries the key path."""


def _fail(path, message):
    raise ScenarioError(f"{path}: {message}")


def _parse_penalty(entry, path):
    if isinstance(entry, str):
        kind, kwargs = entry, {}
    elif isinstance(entry, dict):
        extra = dict(entry)
        kind = extra.pop("kind", None)
        if kind is None:
            _fail(path, "penalty mapping needs a 'kind' key")
        kwargs = extra
    else:
        _fail(path, f"penalty must be a string or mapping, got {type(entry).__name__}")
    if kind not in PENALTY_KINDS:
        _fail(path, f"unknown penalty kind {kind!r}; expected one of {PENALTY_KINDS}")
    try:
        return make_penalty(kind, **kwargs)
    except (TypeError, ValueError) as err:
        _fail(path, str(err))


def _parse_process(entry, path):
    if not isinstance(entry, dict):
        _fail(path, "process entries must be mappings with keys p, q, penalty")
    unknown = set(entry) - PROCESS_KEYS
    if unknown:
        _fail(path, f"unknown keys {sorted(unknown)}")
    for key in PROCESS_KEYS:
        if key not in entry:
            _fail(path, f"missing required key '{key}'")
    try:
        params = BanditParams(float(entry["p"]), float(entry["q"]))
    except (TypeError, ValueError) as err:
        _fail(path, str(err))
    penalty = _parse_penalty(entry["penalty"], f"{path}.penalty")
    return params, penalty


def _load_document(text, path="scenario"):
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as err:
        _fail(path, f"not valid structured text ({err})")
    if not isinstance(doc, dict):
        _fail(path, "top level must be a mapping")
    unknown = set(doc) - SCENARIO_KEYS
    if unknown:
        _fail(path, f"unknown keys {sorted(unknown)}")
    if "processes" not in doc or not isinstance(doc["processes"], list) or not doc["processes"]:
        _fail(path, "needs a non-empty 'processes' list")
    if "out" in doc and not isinstance(doc["out"], str):
        _fail("scenario.out", "output path must be a string")
    for flag in ("dump_index", "debug_belief"):
        if flag in doc and not isinstance(doc[flag], bool):
            _fail(f"scenario.{flag}", "must be a boolean")
    return doc


def _scenario_from_doc(doc, args, need_policies=True):
    processes = [_parse_process(entry, f"scenario.processes[{i}]")
                 for i, entry in enumerate(doc["processes"])]

    policies = doc.get("policies")
    if getattr(args, "policies", None):
        policies = [s.strip() for s in args.policies.split(",") if s.strip()]
    if need_policies:
        if not policies:
            _fail("scenario.policies", "needs a policy list (or --policies)")
        for kind in policies:
            if kind not in POLICY_KINDS:
                _fail("scenario.policies",
                      f"unknown policy kind {kind!r}; expected one of {POLICY_KINDS}")
    else:
        policies = policies or ["whittle"]

    seed = doc.get("seed")
    if getattr(args, "seed", None) is not None:
        seed = args.seed
    if seed is None:
        _fail("scenario.seed", "needs a seed (or --seed)")

    horizon = doc.get("horizon", DEFAULT_HORIZON)
    if getattr(args, "horizon", None) is not None:
        horizon = args.horizon
    runs = doc.get("runs", DEFAULT_RUNS)
    if getattr(args, "runs", None) is not None:
        runs = args.runs
    burn_in = doc.get("burn_in", 0)
    if getattr(args, "burn_in", None) is not None:
        burn_in = args.burn_in

    try:
        return Scenario(
            processes=tuple(processes),
            horizon=int(horizon),
            runs=int(runs),
            seed=int(seed),
            policies=tuple(policies),
            epsilon=float(doc.get("epsilon", DEFAULT_EPSILON)),
            burn_in=int(burn_in),
            name=str(doc.get("name", "scenario")),
            debug_belief=bool(doc.get("debug_belief", False))
            or bool(getattr(args, "debug_belief", False)),
        )
    except ValueError as err:
        _fail("scenario", str(err))


def _read_document(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ScenarioError(f"{path}: {err}") from err
    return _load_document(text)


def load_scenario(path, args, need_policies=True) -> Scenario:
    return _scenario_from_doc(_read_document(path), args, need_policies)


# Bundled experiment sets: per scenario, the processes, the penalty, and the
# recorded reference values (index policy, myopic policy, exact optimum).
REGISTRY = {
    "I": [
        ("A1", [(0.05, 0.2), (0.2, 0.4)], "entropy", 1.2867, 1.527, 1.2866),
        ("A2", [(0.2, 0.2), (0.4, 0.4)], "entropy", 1.7219, 1.873, 1.7219),
        ("A3", [(0.95, 0.95), (0.7, 0.7)], "entropy", 1.2864, 1.5668, 1.2864),
        ("A4", [(0.05, 0.1), (0.2, 0.9)], "entropy", 1.0318, 1.2424, 1.0309),
    ],
    "II": [
        ("B1", [(0.1, 0.1), (0.6, 0.6), (0.3, 0.3)], "entropy", 2.469, 2.792, 2.469),
        ("B2", [(0.1, 0.3), (0.6, 0.6), (0.1, 0.2)], "entropy", 2.2968, 2.7005, 2.2963),
        ("B3", [(0.1, 0.3), (0.5, 0.6), (0.9, 0.9)], "entropy", 2.2179, 2.6506, 2.2158),
    ],
    "III": [
        ("C1", [(0.05, 0.2), (0.4, 0.5)], "mean_std", 1.064, 1.275, 1.057),
        ("C2", [(0.05, 0.1), (0.5, 0.6)], "mean_std", 1.482, 1.814, 1.480),
        ("D1", [(0.05, 0.2), (0.1, 0.3), (0.4, 0.7)], "mean_std", 1.1485, 1.4079, 1.1467),
        ("D2", [(0.1, 0.2), (0.1, 0.8), (0.4, 0.5)], "mean_std", 1.3845, 1.587, 1.3843),
    ],
    "IV": [
        ("E1", [(0.05, 0.2), (0.4, 0.5)], "quadratic", 1.268, 1.618, 1.2677),
        ("E2", [(0.05, 0.2), (0.4, 0.5), (0.1, 0.2)], "quadratic", 1.906, 2.507, 1.904),
        ("F1", [(0.05, 0.2), (0.4, 0.5)], "reciprocal", 21.622, 32.722, 21.466),
        ("F2", [(0.05, 0.2), (0.4, 0.5), (0.1, 0.2)], "reciprocal", 38.225, 49.722, 37.875),
    ],
}


def registry_scenario(set_id, row_name, seed=DEFAULT_SEED, runs=DEFAULT_RUNS,
                      horizon=DEFAULT_HORIZON,
                      policies=("whittle", "myopic", "optimal")) -> Scenario:
    """Scenario object for one bundled experiment row."""
    for name, param_rows, kind, *_ in REGISTRY[set_id]:
        if name == row_name:
            pen = make_penalty(kind)
            return Scenario(
                processes=tuple((BanditParams(p, q), pen) for p, q in param_rows),
                horizon=horizon, runs=runs, seed=seed, policies=tuple(policies),
                name=name)
    raise KeyError(f"no row {row_name!r} in set {set_id}")


def _open_out(path):
    if path is None:
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _sibling_path(out, suffix):
    if out is None:
        return None
    stem = out[:-4] if out.endswith(".csv") else out
    return f"{stem}_{suffix}.csv"


def _write_index_tables(fh, scenario):
    fh.write(f"# name={scenario.name} epsilon={scenario.epsilon!r}\n")
    writer = csv.writer(fh)
    writer.writerow(["process", "position", "last", "age", "belief", "index"])
    for i, (params, penalty) in enumerate(scenario.processes):
        try:
            table = build_table(params, penalty, epsilon=scenario.epsilon)
        except NonConvergence as err:
            raise NonConvergence(f"process {i}: {err}", err.span) from err
        except ValueError as err:
            raise ValueError(f"process {i}: {err}") from err
        sp = table.space
        for rank, pos in enumerate(table.order):
            last, age = sp.tags[pos]
            writer.writerow([i, rank, last, age,
                             repr(float(sp.beliefs[pos])),
                             repr(float(table.indices[rank]))])


def cmd_index(args) -> int:
    doc = _read_document(args.scenario)
    scenario = _scenario_from_doc(doc, args, need_policies=False)
    out = args.out if args.out is not None else doc.get("out")
    fh, close = _open_out(out)
    try:
        _write_index_tables(fh, scenario)
    finally:
        if close:
            fh.close()
    return EXIT_OK


def _write_report(fh, report):
    sc = report.scenario
    meta = report.metadata
    fh.write(f"# name={sc.name} horizon={sc.horizon} runs={sc.runs} seed={sc.seed}\n")
    fh.write(f"# epsilon={meta['epsilon']!r} rvi_eps={meta['rvi_eps']!r} "
             f"burn_in={meta['burn_in']} rng={meta['rng']} "
             f"rng_split=\"{meta['rng_split']}\"\n")
    if report.g_star is not None:
        fh.write(f"# g_star={report.g_star!r}\n")
    if report.regret_is_absolute:
        fh.write("# regret=absolute-gap\n")
    writer = csv.writer(fh)
    writer.writerow(["scenario", "policy", "mean", "stderr", "regret"])
    for kind in sc.policies:
        reg = "" if report.regrets is None else repr(report.regrets[kind])
        writer.writerow([sc.name, kind, repr(report.means[kind]),
                         repr(report.stderr[kind]), reg])


def _write_runs(path, report):
    sc = report.scenario
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "policy", "run", "value"])
        for kind in sc.policies:
            for r, value in enumerate(report.per_run[kind]):
                writer.writerow([sc.name, kind, r, repr(float(value))])


def _belief_check_lines(report):
    lines = []
    for kind, stats in (report.belief_stats or {}).items():
        worst = 0.0
        for i, (params, _) in enumerate(report.scenario.processes):
            seen = stats["seen"][i]
            ones = stats["ones"][i]
            mask = seen >= 100
            if not mask.any():
                continue
            space = build_space(params, report.scenario.epsilon)
            for last in (0, 1):
                for age in range(1, space.F + 2):
                    if not mask[last, age]:
                        continue
                    n = seen[last, age]
                    b = space.chain_belief(last, age)
                    se = max(np.sqrt(b * (1.0 - b) / n), 1e-9)
                    z = abs(ones[last, age] / n - b) / se
                    worst = max(worst, float(z))
        lines.append(f"# belief_check policy={kind} worst_gap_se_units={worst!r}")
    return lines


def cmd_simulate(args) -> int:
    doc = _read_document(args.scenario)
    scenario = _scenario_from_doc(doc, args)
    out = args.out if args.out is not None else doc.get("out")
    dump_index = args.dump_index or bool(doc.get("dump_index", False))
    report = run(scenario)
    fh, close = _open_out(out)
    try:
        _write_report(fh, report)
        for line in _belief_check_lines(report):
            fh.write(line + "\n")
    finally:
        if close:
            fh.close()
    runs_path = _sibling_path(out, "runs")
    if runs_path is not None:
        _write_runs(runs_path, report)
    if dump_index:
        ih, close = _open_out(_sibling_path(out, "index"))
        try:
            _write_index_tables(ih, scenario)
        finally:
            if close:
                ih.close()
    return EXIT_OK


def cmd_reproduce(args) -> int:
    rows = REGISTRY[args.set_id]
    out_rows = []
    for name, param_rows, kind, ref_wi, ref_myopic, ref_opt in rows:
        scenario = registry_scenario(
            args.set_id, name,
            seed=args.seed if args.seed is not None else DEFAULT_SEED,
            runs=args.runs if args.runs is not None else DEFAULT_RUNS,
            horizon=args.horizon if args.horizon is not None else DEFAULT_HORIZON)
        report = run(scenario)
        cells = [
            ("whittle", ref_wi, report.means["whittle"]),
            ("myopic", ref_myopic, report.means["myopic"]),
            ("optimal", ref_opt, report.g_star),
        ]
        for policy, ref, measured in cells:
            dev = 100.0 * (measured - ref) / ref
            print(f"{name:4s} {policy:8s} reference {ref:<8g} "
                  f"measured {measured:.4f}  deviation {dev:+.2f}%")
            out_rows.append([name, policy, repr(float(ref)),
                             repr(float(measured)), repr(dev)])
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scenario", "policy", "reference", "measured",
                             "deviation_pct"])
            writer.writerows(out_rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="restless",
        description="Index-based scheduling of remote monitoring: tables, "
                    "simulations, and bundled reference experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="dump Whittle index tables as CSV")
    p_index.add_argument("--scenario", required=True)
    p_index.add_argument("--out")
    p_index.set_defaults(handler=cmd_index)

    p_sim = sub.add_parser("simulate", help="Monte-Carlo policy evaluation")
    p_sim.add_argument("--scenario", required=True)
    p_sim.add_argument("--out")
    p_sim.add_argument("--seed", type=int)
    p_sim.add_argument("--runs", type=int)
    p_sim.add_argument("--horizon", type=int)
    p_sim.add_argument("--policies")
    p_sim.add_argument("--burn-in", dest="burn_in", type=int)
    p_sim.add_argument("--dump-index", action="store_true")
    p_sim.add_argument("--debug-belief", dest="debug_belief", action="store_true")
    p_sim.set_defaults(handler=cmd_simulate)

    p_rep = sub.add_parser("reproduce", help="run a bundled experiment set")
    p_rep.add_argument("set_id", choices=sorted(REGISTRY))
    p_rep.add_argument("--out")
    p_rep.add_argument("--seed", type=int)
    p_rep.add_argument("--runs", type=int)
    p_rep.add_argument("--horizon", type=int)
    p_rep.set_defaults(handler=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ScenarioError as err:
        print(f"scenario-error: {err}", file=sys.stderr)
        return EXIT_SCENARIO
    except NonConvergence as err:
        print(f"convergence-error: {err}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except Exception as err:
        print(f"internal-error: {err}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
