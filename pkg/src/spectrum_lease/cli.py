"""Command-line entry point: ``spectrum-lease <subcommand> [flags]``.

Scenario files hold ``key = value`` lines (``#`` starts a comment)::

    c0 = 480
    c1 = 1
    q1 = 100
    q2 = 60
    epoch1_len = 0
    epoch2_len = 5
    epoch3_len = 3

Every subcommand writes one table (CSV by default, JSON with ``--format json``)
to ``--out`` or stdout.  Column layouts are listed in ``COLUMNS``.
Exit codes: 0 success, 2 bad input, 3 solver failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .baseline import compare_schemes
from .core import Scenario, ScenarioError, SolverError, validate_scenario
from .monopoly import epoch3_value, plan_monopoly_epoch
from .nash import (Decomposition, GameParams, candidate_from, enumerate_decompositions,
                   find_all_equilibria, pruned_count, select_equilibrium, total_count)
from .report import Table, emit_report
from .reserve import algorithm1_search, evaluate_G_H_U, feasibility_interval
from .simulate import ProtocolError, run_simulation

REQUIRED_KEYS = ("c0", "c1", "q1", "q2", "epoch1_len", "epoch2_len", "epoch3_len")
OPTIONAL_KEYS = ("tol", "seed")
INT_KEYS = ("epoch1_len", "epoch2_len", "epoch3_len", "seed")

COLUMNS = {
    "validate": ["key", "value"],
    "epoch1": ["stage", "weight", "d2", "price", "revenue2"],
    "nash": ["equilibrium", "stage", "zone", "d1", "d2", "mu", "nu"],
    "reserve": ["interval", "x_lo", "x_hi", "decomposition", "x_hat", "r_hat", "revisit"],
    "simulate": ["index", "stage", "kind", "actor", "payload"],
    "compare": ["q1", "q2", "scheme", "revenue1", "revenue2", "total"],
    "reproduce-table1": ["m", "total", "pruned", "total_source", "pruned_source",
                         "printed_total", "printed_pruned", "footnote"],
    "sweep-v": ["x", "V"],
    "sweep-gh": ["x", "G", "H", "U", "V", "F"],
}

TABLE1_M = (2, 4, 6, 8, 10, 15, 20)
# values as printed in the published table; None where nothing was printed
TABLE1_PRINTED = {2: ("16", "13"), 4: ("256", "121"), 6: ("4096", "1093"),
                  8: ("6.6e5", "9841"), 10: ("1.0e6", "8.9e5"), 15: ("1.1e9", "2.2e7"),
                  20: ("1.1e12", "5.2e9")}
TABLE1_FOOTNOTES = {
    8: "printed total 6.6e5 is an apparent exponent typo for 4^8 = 65536",
    10: "printed pruned 8.9e5 is an apparent exponent typo for (3^11-1)/2 = 88573",
}
COMPARE_CONFIGS = ((50.0, 150.0), (100.0, 100.0), (150.0, 50.0))


class ScenarioFileError(ValueError):
    """Malformed scenario file; the message names the key and line."""


def parse_scenario(path, tol: Optional[float] = None) -> Tuple[Scenario, Optional[int]]:
    """Read and validate a scenario file.  Returns the scenario and the optional seed."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioFileError(f"cannot read scenario file {path}: {exc}") from exc
    values: Dict[str, float] = {}
    lines: Dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            key, sep, val = line.partition(":")
        key, val = key.strip(), val.strip()
        if not sep or not key:
            raise ScenarioFileError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in REQUIRED_KEYS + OPTIONAL_KEYS:
            raise ScenarioFileError(f"line {lineno}: unknown key: {key}")
        if key in values:
            raise ScenarioFileError(f"line {lineno}: duplicate key: {key} (first on line {lines[key]})")
        try:
            num = float(val)
        except ValueError:
            raise ScenarioFileError(f"line {lineno}: {key}: not a number: {val!r}") from None
        if key in INT_KEYS and num != int(num):
            raise ScenarioFileError(f"line {lineno}: {key}: expected an integer, got {val!r}")
        values[key], lines[key] = num, lineno
    for key in REQUIRED_KEYS:
        if key not in values:
            raise ScenarioFileError(f"missing key: {key}")
    s = Scenario(values["c0"], values["c1"], values["q1"], values["q2"],
                 int(values["epoch1_len"]), int(values["epoch2_len"]), int(values["epoch3_len"]),
                 tol if tol is not None else values.get("tol", 1e-9))
    try:
        validate_scenario(s)
    except ScenarioError as exc:
        where = ", ".join(f"{k} on line {lines[k]}" for k in _keys_of(str(exc)) if k in lines)
        raise ScenarioError(f"{exc} [{where}]" if where else str(exc)) from None
    seed = values.get("seed")
    return s, None if seed is None else int(seed)


def _keys_of(message: str) -> Tuple[str, ...]:
    """Scenario keys a validation message is about."""
    head = message.split(" ", 1)[0]
    if head in REQUIRED_KEYS + OPTIONAL_KEYS:
        return (head,)
    if head == "price-coefficient":
        return ("c0", "c1", "q1", "q2")
    if "Epoch" in message or "epoch" in message:
        return ("epoch1_len", "epoch2_len", "epoch3_len")
    return ()


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _epoch2_budget_after_epoch1(s: Scenario) -> float:
    if s.len_epoch1 == 0:
        return s.q2
    plan = plan_monopoly_epoch(s, s.layout, 2, s.layout.n_total, s.q2)
    return max(0.0, s.q2 - sum(plan[n] for n in s.layout.epoch1))


def _game(s: Scenario, args) -> GameParams:
    q1 = s.q1 if args.q1_epoch2 is None else args.q1_epoch2
    q2 = _epoch2_budget_after_epoch1(s) if args.q2_epoch2 is None else args.q2_epoch2
    sc = s.with_budgets(max(s.q1, q1), max(s.q2, q2))
    return GameParams(sc, sc.layout, q1, q2)


def cmd_validate(s: Scenario, args) -> Table:
    t = Table(COLUMNS["validate"], meta={"status": "ok"})
    for k, v in (("c0", s.c0), ("c1", s.c1), ("q1", s.q1), ("q2", s.q2),
                 ("epoch1_len", s.len_epoch1), ("epoch2_len", s.len_epoch2),
                 ("epoch3_len", s.len_epoch3), ("tol", s.tol), ("n_total", s.layout.n_total)):
        t.add(k, v)
    return t


def cmd_epoch1(s: Scenario, args) -> Table:
    layout = s.layout
    plan = plan_monopoly_epoch(s, layout, 2, layout.n_total, s.q2)
    t = Table(COLUMNS["epoch1"])
    total = 0.0
    for n in reversed(layout.epoch1):
        w = n - layout.n3
        price = s.c0 - s.c1 * plan[n]
        rev = price * plan[n] * w
        total += rev
        t.add(n, w, plan[n], price, rev)
    t.meta["epoch1_revenue2"] = total
    t.meta["q2_epoch2"] = max(0.0, s.q2 - sum(plan[n] for n in layout.epoch1))
    return t


def cmd_nash(s: Scenario, args) -> Table:
    g = _game(s, args)
    t = Table(COLUMNS["nash"], meta={"q1_epoch2": g.q1_epoch2, "q2_epoch2": g.q2_epoch2})
    if args.decomposition:
        c = candidate_from(Decomposition.parse(args.decomposition, g.stages), g)
        cands = [c] if c.feasible else []
        t.meta["requested"] = c.decomposition.label()
        t.meta["requested_feasible"] = c.feasible
        if not c.feasible:
            t.meta["reason"] = c.reason
        selected = 0 if cands else None
    else:
        cands = find_all_equilibria(g, args.pruned)
        selected = cands.index(select_equilibrium(cands, g))
    t.meta["count"] = len(cands)
    if selected is not None:
        t.meta["selected"] = selected
    for i, c in enumerate(cands):
        t.meta[f"eq{i}.decomposition"] = c.decomposition.label()
        t.meta[f"eq{i}.lambda"] = c.lam
        t.meta[f"eq{i}.zeta"] = c.zeta
        t.meta[f"eq{i}.revenue1"] = c.revenue1
        t.meta[f"eq{i}.revenue2"] = c.revenue2
        rows = zip(c.stages, c.decomposition.labels, c.d1, c.d2, c.mu, c.nu)
        for n, z, d1, d2, mu, nu in sorted(rows, reverse=True):
            t.add(i, n, f"Z{z}", d1, d2, mu, nu)
    return t


def cmd_reserve(s: Scenario, args) -> Table:
    q2 = _epoch2_budget_after_epoch1(s) if args.q2_epoch2 is None else args.q2_epoch2
    sc = s.with_budgets(s.q1, max(s.q2, q2))
    res = algorithm1_search(sc, sc.layout, q2, args.pruned)
    t = Table(COLUMNS["reserve"], meta={"q2_epoch2": q2, "x_star": res.x_star,
                                        "r_star": res.r_star,
                                        "epoch3_revenue": res.epoch3_revenue})
    if res.equilibrium is not None:
        t.meta["decomposition"] = res.equilibrium.decomposition.label()
    for i, iv in enumerate(res.intervals):
        t.add(i, iv.x_lo, iv.x_hi, iv.decomposition, iv.x_hat, iv.r_hat, iv.revisit)
    return t


def cmd_simulate(s: Scenario, args) -> Table:
    out = run_simulation(s, args.pruned)
    t = Table(COLUMNS["simulate"], meta={
        "revenue1": out.report.total1, "revenue2": out.report.total2,
        "reserve": out.reserve, "inferred_q1": out.inferred_q1,
        "inferred_q2_epoch2": out.inferred_q2_epoch2})
    for i, ev in enumerate(out.events):
        payload = ";".join(f"{k}={v:.12g}" for k, v in ev.payload)
        t.add(i, ev.stage, ev.kind, ev.actor, payload)
    return t


def cmd_compare(s: Scenario, args) -> Table:
    seed = args.seed if args.seed is not None else (args.file_seed or 0)
    rows = compare_schemes(s, s.layout, COMPARE_CONFIGS, args.restarts, seed)
    t = Table(COLUMNS["compare"], meta={"restarts": args.restarts, "seed": seed})
    for r in rows:
        t.add(r.q1, r.q2, r.scheme, r.revenue1, r.revenue2, r.total)
    return t


def cmd_reproduce_table1(s: Optional[Scenario], args) -> Table:
    t = Table(COLUMNS["reproduce-table1"])
    for m in TABLE1_M:
        if m <= args.max_enumerate:
            pruned = sum(1 for _ in enumerate_decompositions(m, pruned=True))
            src_p = "enumerated"
        else:
            pruned, src_p = pruned_count(m), "formula"
        if m <= min(args.max_enumerate, 8):
            total = sum(1 for _ in enumerate_decompositions(m, pruned=False))
            src_t = "enumerated"
        else:
            total, src_t = total_count(m), "formula"
        printed = TABLE1_PRINTED.get(m, (None, None))
        t.add(m, total, pruned, src_t, src_p, printed[0], printed[1],
              TABLE1_FOOTNOTES.get(m, ""))
    return t


def _grid(args, lo: float, hi: float) -> np.ndarray:
    if args.grid < 2:
        raise ScenarioError(f"--grid must be at least 2, got {args.grid}")
    return np.linspace(lo, hi, args.grid)


def cmd_sweep_v(s: Scenario, args) -> Table:
    t = Table(COLUMNS["sweep-v"])
    for x in _grid(args, 0.0, s.q1):
        t.add(float(x), epoch3_value(s, s.layout, float(x))[0])
    return t


def cmd_sweep_gh(s: Scenario, args) -> Table:
    if not args.decomposition:
        raise ScenarioError("sweep-gh needs --decomposition, e.g. 'Z1=7,8;Z2=6;Z4=4,5'")
    q2 = _epoch2_budget_after_epoch1(s) if args.q2_epoch2 is None else args.q2_epoch2
    sc = s.with_budgets(s.q1, max(s.q2, q2))
    d = Decomposition.parse(args.decomposition, list(sc.layout.epoch2))
    lo, hi = args.x_min, args.x_max
    if lo is None or hi is None:
        iv = feasibility_interval(d, 0.0 if lo is None else lo, sc, sc.layout, q2)
        if iv is None:
            raise SolverError(f"decomposition {d.label()} is infeasible at x={lo or 0.0:g}")
        lo, hi = iv.x_lo if lo is None else lo, iv.x_hi if hi is None else hi
    t = Table(COLUMNS["sweep-gh"], meta={"decomposition": d.label(), "q2_epoch2": q2,
                                         "x_min": lo, "x_max": hi})
    for x in _grid(args, lo, hi):
        x = float(x)
        G, H, U = evaluate_G_H_U(d, x, sc, sc.layout, q2)
        V = epoch3_value(sc, sc.layout, x)[0]
        t.add(x, G, H, U, V, U + V)
    return t


COMMANDS = {
    "validate": cmd_validate,
    "epoch1": cmd_epoch1,
    "nash": cmd_nash,
    "reserve": cmd_reserve,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "reproduce-table1": cmd_reproduce_table1,
    "sweep-v": cmd_sweep_v,
    "sweep-gh": cmd_sweep_gh,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", type=Path, help="scenario file (key = value lines)")
    common.add_argument("--out", type=Path, help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--tol", type=float, help="override the scenario tolerance")
    common.add_argument("--grid", type=int, default=101, help="sweep points")
    common.add_argument("--q1-epoch2", type=float, help="seller 1 Epoch II budget")
    common.add_argument("--q2-epoch2", type=float, help="seller 2 Epoch II budget")
    common.add_argument("--pruned", type=_bool, default=True, metavar="true|false")
    common.add_argument("--restarts", type=int, default=32)
    common.add_argument("--seed", type=int)
    common.add_argument("--decomposition", help="zones as 'Z1=7,8;Z2=6;Z4=4,5'")
    common.add_argument("--x-min", type=float)
    common.add_argument("--x-max", type=float)
    common.add_argument("--max-enumerate", type=int, default=10,
                        help="largest m counted by enumeration in reproduce-table1")

    parser = argparse.ArgumentParser(prog="spectrum-lease",
                                     description="Two-seller dynamic spectrum leasing solvers.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=COMMANDS[name].__name__[4:].replace("_", "-"))
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        s = None
        args.file_seed = None
        if args.scenario is not None:
            s, args.file_seed = parse_scenario(args.scenario, args.tol)
        elif args.command != "reproduce-table1":
            raise ScenarioFileError(f"{args.command} needs --scenario")
        table = COMMANDS[args.command](s, args)
    except (SolverError, ProtocolError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        text = emit_report(table, args.out, args.format)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out is None:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
