"""Command line orchestration.

Subcommands compose through files: ``compile-spec`` writes an automaton in
the exchange format, ``abstract`` turns an abstraction config into a PTS
model file, ``build-ats`` expands it, ``synthesize`` produces a strategy
plus winning region, ``simulate`` replays a strategy file against a hidden
parameter, and ``casestudy`` runs the shipped end-to-end pipelines.

Exit codes: 0 success, 1 synthesis infeasible (empty winning region),
2 input error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys as _sys
from fractions import Fraction
from pathlib import Path

from . import casestudies, pipeline
from .abstraction import box_index_of, config_from_json, config_to_json, frac
from .adaptive import ats_to_dot, ats_to_json, build_ats
from .estimation import InconsistentHistoryError
from .logic import (Dra, DraFormatError, LtlSyntaxError,
                    UndeclaredPropositionError, UnsupportedFragmentError,
                    compile_to_dra, dra_to_dot, format_dra, parse_dra_file,
                    parse_ltl)
from .simulation import (WinningRegionExitError, check_trace, simulate_pts,
                         simulate_scalar, write_trace_csv)
from .synthesis import (GameSolution, build_product, project_initial,
                        solve_rabin, strategy_records, strategy_to_dot,
                        winning_source_states)
from .systems import pts_from_json, pts_to_json, robustify, ts_to_dot

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INPUT = 2

INPUT_ERRORS = (LtlSyntaxError, UndeclaredPropositionError, UnsupportedFragmentError,
                DraFormatError, InconsistentHistoryError, ValueError, KeyError,
                OSError, json.JSONDecodeError)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class ArtifactWriter:
    """Writes output files and keeps their hashes for the run manifest."""

    def __init__(self):
        self.outputs: dict[str, str] = {}
        self.inputs: dict[str, str] = {}

    def note_input(self, path: str | Path) -> None:
        p = Path(path)
        self.inputs[str(p)] = _sha256(p)

    def write(self, path: str | Path, text: str) -> None:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
        self.outputs[str(p)] = _sha256(p)

    def manifest(self, argv, extra: dict) -> str:
        doc = {"command": list(argv), "inputs": self.inputs,
               "outputs": self.outputs, **extra}
        return json.dumps(doc, indent=1, sort_keys=True)


def _load_dra(args, props_hint=None) -> Dra:
    if getattr(args, "spec", None):
        return parse_dra_file(Path(args.spec).read_text())
    if getattr(args, "formula", None):
        props = args.props or props_hint
        if not props:
            raise ValueError("--formula requires --props")
        return compile_to_dra(parse_ltl(args.formula, props), props)
    raise ValueError("either --spec or --formula is required")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_compile_spec(args, out: ArtifactWriter) -> int:
    f = parse_ltl(args.formula, args.props)
    dra = compile_to_dra(f, args.props)
    out.write(args.out, format_dra(dra))
    if args.emit_dot:
        out.write(args.emit_dot, dra_to_dot(dra))
    print(f"compiled: {dra.n_states} states, {len(dra.pairs)} pair(s) -> {args.out}")
    return EXIT_OK


def cmd_abstract(args, out: ArtifactWriter) -> int:
    out.note_input(args.config)
    cfg = config_from_json(Path(args.config).read_text())
    qpts = cfg.build()
    out.write(args.out, pts_to_json(qpts))
    if args.emit_dot:
        out.write(args.emit_dot, ts_to_dot(robustify(qpts)))
    print(f"abstracted: {qpts.n_states} states, {qpts.n_params} parameter cells, "
          f"{len(qpts.inputs)} inputs -> {args.out}")
    return EXIT_OK


def cmd_build_ats(args, out: ArtifactWriter) -> int:
    out.note_input(args.model)
    pts = pts_from_json(Path(args.model).read_text())
    ats = build_ats(pts)
    out.write(args.out, ats_to_json(ats))
    if args.emit_dot:
        out.write(args.emit_dot, ats_to_dot(ats))
    if args.stats:
        out.write(args.stats, json.dumps({"ats_nodes": ats.n_states}, indent=1))
    print(f"adaptive system: {ats.n_states} nodes -> {args.out}")
    return EXIT_OK


def cmd_synthesize(args, out: ArtifactWriter) -> int:
    out.note_input(args.model)
    if args.spec:
        out.note_input(args.spec)
    pts = pts_from_json(Path(args.model).read_text())
    dra = _load_dra(args, props_hint=pts.props)

    if args.robust:
        ts = robustify(pts)
        product = build_product(ts, dra)
        sol = solve_rabin(product)
        region = winning_source_states(sol, product)
        stats = {"mode": "robust", "product_nodes": product.n_nodes,
                 "winning_nodes": len(sol.winning), "x0_max_cells": len(region)}
        if args.stats:
            out.write(args.stats, json.dumps(stats, indent=1))
        print(f"robust baseline: {len(region)} winning initial states")
        if not region:
            print("winning region is empty", file=_sys.stderr)
            return EXIT_INFEASIBLE
        if args.out:
            out.write(args.out, json.dumps(
                [{"x": pts.states[x]} for x in region], indent=1))
        return EXIT_OK

    ats = build_ats(pts)
    product = build_product(ats, dra)
    sol = solve_rabin(product)
    region = project_initial(sol, product)
    stats = {"mode": "adaptive", "ats_nodes": ats.n_states,
             "product_nodes": product.n_nodes,
             "winning_nodes": len(sol.winning), "x0_max_cells": len(region)}
    if args.stats:
        out.write(args.stats, json.dumps(stats, indent=1))
    if args.winning:
        out.write(args.winning, json.dumps([pts.states[x] for x in region], indent=1))
    print(f"adaptive: {ats.n_states} ATS nodes, {len(sol.winning)} winning product "
          f"nodes, {len(region)} winning initial states")
    if not region:
        print("winning region is empty", file=_sys.stderr)
        return EXIT_INFEASIBLE
    out.write(args.out, json.dumps(strategy_records(sol, product), indent=1))
    if args.emit_dot:
        out.write(args.emit_dot, strategy_to_dot(sol, product))
    return EXIT_OK


def _solution_from_records(records, product) -> GameSolution:
    ats = product.sys
    pts = ats.pts
    strategy = {}
    for rec in records:
        x = pts.state_id(rec["x"])
        theta_set = 0
        for name in rec["theta_set"]:
            theta_set |= 1 << pts.param_id(name)
        node = ats.index[(x, theta_set)]
        pid = product.index[(node, rec["dra_state"])]
        strategy[pid] = pts.input_id(rec["input"])
    return GameSolution(winning=frozenset(strategy), strategy=strategy)


def cmd_simulate(args, out: ArtifactWriter) -> int:
    for path in (args.model, args.strategy) + ((args.spec,) if args.spec else ()):
        out.note_input(path)
    pts = pts_from_json(Path(args.model).read_text())
    dra = _load_dra(args, props_hint=pts.props)
    ats = build_ats(pts)
    product = build_product(ats, dra)
    sol = _solution_from_records(json.loads(Path(args.strategy).read_text()), product)

    if args.config:
        out.note_input(args.config)
        cfg = config_from_json(Path(args.config).read_text())
        theta = tuple(frac(t) for t in args.theta_star.split(","))
        trace = simulate_scalar(cfg.system(), cfg, pts, ats, product, sol,
                                theta_star=theta, x0=frac(args.x0),
                                horizon=args.horizon, seed=args.seed,
                                adversarial=args.adversarial)
    else:
        theta_id = pts.param_id(args.theta_star)
        trace = simulate_pts(pts, ats, product, sol, theta_star=theta_id,
                             x0=pts.state_id(args.x0), horizon=args.horizon,
                             seed=args.seed, adversarial=args.adversarial)
    tmp = Path(args.out)
    tmp.parent.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, str(tmp))
    out.outputs[str(tmp)] = _sha256(tmp)
    report = check_trace(trace, parse_ltl(args.check, pts.props)) if args.check else None
    if report is not None:
        status = ". safe" if report.safe else f". UNSAFE at {report.safety_violations[:5]}"
    else:
        status = ""
    print(f"simulated {args.horizon} steps -> {args.out}{status}")
    return EXIT_OK


def _scalar_casestudy(args, out: ArtifactWriter) -> int:
    art = pipeline.build_scalar()
    outdir = Path(args.outdir)
    out.write(outdir / "config.json", config_to_json(art.cfg))
    out.write(outdir / "model.json", pts_to_json(art.qpts))
    out.write(outdir / "spec.dra", format_dra(art.dra))
    interval = art.region_interval()
    stats = {
        "ats_nodes": art.ats.n_states,
        "product_nodes": art.product.n_nodes,
        "winning_nodes": len(art.sol.winning),
        "x0_max_cells": len(art.region),
        "x0_interval": list(interval) if interval else None,
        "robust_x0_cells": len(art.robust_region),
    }
    print(f"reachable ATS nodes: {stats['ats_nodes']}")
    print(f"winning product nodes: {stats['winning_nodes']}")
    print(f"projected region: {interval[0]} .. {interval[1]}" if interval
          else "projected region: empty")
    print(f"robust baseline winning cells: {stats['robust_x0_cells']}")
    if not art.region:
        print("winning region is empty", file=_sys.stderr)
        return EXIT_INFEASIBLE
    out.write(outdir / "strategy.json",
              json.dumps(strategy_records(art.sol, art.product), indent=1))
    out.write(outdir / "winning.json",
              json.dumps([art.qpts.states[x] for x in art.region], indent=1))

    theta = tuple(frac(t) for t in args.theta_star.split(","))
    trace = simulate_scalar(art.sys, art.cfg, art.qpts, art.ats, art.product,
                            art.sol, theta_star=theta, x0=frac(args.x0),
                            horizon=args.horizon, seed=args.seed)
    path = outdir / "trace.csv"
    write_trace_csv(trace, str(path))
    out.outputs[str(path)] = _sha256(path)
    report = check_trace(trace, parse_ltl(art.formula_text, art.qpts.props))
    print(f"simulation: {args.horizon} steps, "
          f"{'no safety violations' if report.safe else 'UNSAFE'}")
    stats["wall_times"] = {k: round(v, 3) for k, v in art.times.items()}
    (outdir / "stats.json").write_text(json.dumps(stats, indent=1))
    if args.manifest:
        Path(args.manifest).write_text(out.manifest(
            _sys.argv[1:], {"stats": {k: v for k, v in stats.items()
                                      if k != "wall_times"}}))
    return EXIT_OK


def _grid_casestudy(args, out: ArtifactWriter) -> int:
    art = pipeline.build_grid()
    outdir = Path(args.outdir)
    out.write(outdir / "model.json", pts_to_json(art.pts))
    out.write(outdir / "spec.dra", format_dra(art.dra))
    stats = {
        "ats_nodes": art.ats.n_states,
        "product_nodes": art.product.n_nodes,
        "winning_nodes": len(art.sol.winning),
        "x0_max_cells": len(art.region),
        "robust_x0_cells": len(art.robust_region),
    }
    print(f"reachable ATS nodes: {stats['ats_nodes']}")
    print(f"adaptive winning start cells: {stats['x0_max_cells']}")
    print(f"robust baseline winning cells: {stats['robust_x0_cells']}")
    if not art.region:
        print("winning region is empty", file=_sys.stderr)
        return EXIT_INFEASIBLE
    out.write(outdir / "strategy.json",
              json.dumps(strategy_records(art.sol, art.product), indent=1))
    out.write(outdir / "winning.json",
              json.dumps([art.pts.states[x] for x in art.region], indent=1))

    x0 = art.region[0] if args.x0 is None else art.pts.state_id(args.x0)
    gaps = {}
    for theta_name in art.pts.params:
        theta_id = art.pts.param_id(theta_name)
        trace = simulate_pts(art.pts, art.ats, art.product, art.sol,
                             theta_star=theta_id, x0=x0, horizon=args.horizon,
                             seed=args.seed)
        path = outdir / f"trace_{theta_name}.csv"
        write_trace_csv(trace, str(path))
        out.outputs[str(path)] = _sha256(path)
        report = check_trace(trace, parse_ltl(art.formula_text, art.pts.props))
        gaps[theta_name] = {
            "safe": report.safe,
            "gaps": {k: (v.max_gap, v.visits) for k, v in report.recurrence.items()},
        }
        print(f"theta*={theta_name}: {'safe' if report.safe else 'UNSAFE'}, "
              f"recurrence {gaps[theta_name]['gaps']}")
    stats["simulations"] = gaps
    stats["wall_times"] = {k: round(v, 3) for k, v in art.times.items()}
    (outdir / "stats.json").write_text(json.dumps(stats, indent=1))
    if args.manifest:
        Path(args.manifest).write_text(out.manifest(
            _sys.argv[1:], {"stats": {k: v for k, v in stats.items()
                                      if k != "wall_times"}}))
    return EXIT_OK


def cmd_casestudy(args, out: ArtifactWriter) -> int:
    if args.which == "scalar":
        return _scalar_casestudy(args, out)
    return _grid_casestudy(args, out)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adaptsyn",
                                description="adaptive controller synthesis toolkit")
    sub = p.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("compile-spec", help="compile a formula to a Rabin automaton file")
    c.add_argument("formula")
    c.add_argument("--props", nargs="+", required=True)
    c.add_argument("-o", "--out", required=True)
    c.add_argument("--emit-dot")
    c.set_defaults(fn=cmd_compile_spec)

    c = sub.add_parser("abstract", help="build a quotient PTS from an abstraction config")
    c.add_argument("--config", required=True)
    c.add_argument("-o", "--out", required=True)
    c.add_argument("--emit-dot")
    c.set_defaults(fn=cmd_abstract)

    c = sub.add_parser("build-ats", help="expand a PTS into its adaptive system")
    c.add_argument("--model", required=True)
    c.add_argument("-o", "--out", required=True)
    c.add_argument("--stats")
    c.add_argument("--emit-dot")
    c.set_defaults(fn=cmd_build_ats)

    c = sub.add_parser("synthesize", help="solve the game and export the strategy")
    c.add_argument("--model", required=True)
    c.add_argument("--spec", help="automaton exchange file")
    c.add_argument("--formula", help="inline formula (compiled over the model props)")
    c.add_argument("--props", nargs="+")
    c.add_argument("--robust", action="store_true",
                   help="parameter-oblivious baseline instead of the adaptive game")
    c.add_argument("-o", "--out", default="strategy.json")
    c.add_argument("--winning")
    c.add_argument("--stats")
    c.add_argument("--emit-dot")
    c.set_defaults(fn=cmd_synthesize)

    c = sub.add_parser("simulate", help="replay a strategy file against a hidden parameter")
    c.add_argument("--model", required=True)
    c.add_argument("--spec")
    c.add_argument("--formula")
    c.add_argument("--props", nargs="+")
    c.add_argument("--strategy", required=True)
    c.add_argument("--config", help="abstraction config (scalar closed loop)")
    c.add_argument("--theta-star", required=True,
                   help="parameter name, or comma-separated values with --config")
    c.add_argument("--x0", required=True)
    c.add_argument("--horizon", type=int, default=100)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--adversarial", action="store_true")
    c.add_argument("--check", help="formula to monitor on the trace")
    c.add_argument("-o", "--out", required=True)
    c.set_defaults(fn=cmd_simulate)

    c = sub.add_parser("casestudy", help="run a shipped end-to-end pipeline")
    c.add_argument("which", choices=["grid", "scalar"])
    c.add_argument("--outdir", required=True)
    c.add_argument("--theta-star", default="0.45,1.11,-0.18")
    c.add_argument("--x0", default=None)
    c.add_argument("--horizon", type=int, default=None)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--manifest")
    c.set_defaults(fn=cmd_casestudy)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "cmd", None) == "casestudy":
        if args.horizon is None:
            args.horizon = 100 if args.which == "scalar" else 500
        if args.which == "scalar" and args.x0 is None:
            args.x0 = "0"
    out = ArtifactWriter()
    try:
        return args.fn(args, out)
    except WinningRegionExitError:
        raise
    except INPUT_ERRORS as e:
        print(f"error: {e}", file=_sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
