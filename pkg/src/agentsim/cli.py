"""Command-line front end.

Exit codes: 0 success, 1 I/O or usage error, 2 model precondition violated
(bridged graph, bad transition output), 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import algolib
from .agent import INT_CODEC, ModelError, TraceFormatError, dump_trace, execute, load_trace
from .port_graph import (
    GraphError,
    bowtie_with_bridge,
    complete_graph,
    find_bridges,
    format_graph,
    generate_cycle,
    generate_random_2ec,
    is_two_edge_connected,
    petersen_graph,
    read_graph,
    to_dot,
)
from .simulator import MUTATIONS, PHASES, SIM_CODEC, StorageLayout, is_legal, run_simulator
from .verify import fuzz, storage_width_bits, storage_width_cap, verify_instance

EXIT_OK, EXIT_IO, EXIT_MODEL, EXIT_DIVERGED = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, code: int, msg: str):
        super().__init__(msg)
        self.code = code


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _seed(args) -> int:
    env = os.environ.get("AGENTSIM_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CliError(EXIT_IO, f"AGENTSIM_SEED={env!r} is not an integer") from None
    return args.seed


def _load_graph(args):
    try:
        return read_graph(args.graph)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read graph: {exc}") from None
    except GraphError as exc:
        raise CliError(EXIT_IO, f"bad graph file {args.graph}: {exc}") from None


def _load_algo(args, g):
    algo_arg = args.algo
    if algo_arg == "random":
        algo_arg = f"random:{_seed(args)}"
    try:
        a = algolib.resolve(algo_arg, max_degree=g.max_degree)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read algorithm table: {exc}") from None
    except algolib.TableError as exc:
        raise CliError(EXIT_IO, f"bad algorithm table: {exc}") from None
    except ValueError as exc:
        raise CliError(EXIT_IO, f"bad algorithm argument {args.algo!r}: {exc}") from None
    table = a.phi
    if isinstance(table, algolib.TransitionTable) and g.max_degree > table.max_degree:
        raise CliError(
            EXIT_MODEL, f"table covers degree <= {table.max_degree}, graph has max degree {g.max_degree}"
        )
    if not 0 <= args.start < g.n:
        raise CliError(EXIT_IO, f"start node {args.start} outside [0, {g.n - 1}]")
    return a.at(args.start)


def _require_2ec(g):
    if not is_two_edge_connected(g):
        bridges = find_bridges(g)
        if bridges:
            names = ", ".join(f"({u}, {v})" for u, v in bridges)
            raise CliError(EXIT_MODEL, f"graph is not 2-edge-connected; bridge(s): {names}")
        raise CliError(EXIT_MODEL, "graph is not connected")


def cmd_run(args) -> int:
    g = _load_graph(args)
    a = _load_algo(args, g)
    try:
        if args.engine == "simulator":
            _require_2ec(g)
            trace = run_simulator(g, a, args.rounds, args.start)
            codec = SIM_CODEC
            legal = sum(1 for c in trace.configs if is_legal(c))
            _err(f"{trace.total_rounds} simulator rounds, {legal - 1} simulated rounds completed")
        else:
            trace = execute(g, a, args.rounds)
            codec = INT_CODEC
            _err(f"{trace.total_rounds} rounds" + (" (terminated)" if trace.terminated else ""))
    except ModelError as exc:
        raise CliError(EXIT_MODEL, f"{type(exc).__name__}: {exc}") from None
    text = dump_trace(trace, codec)
    _write_out(args.trace_out, text)
    return EXIT_OK


def _write_out(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from None


def cmd_verify(args) -> int:
    g = _load_graph(args)
    a = _load_algo(args, g)
    _require_2ec(g)
    res = verify_instance(g, a, args.start, args.rounds, args.mutation or ())
    records = []
    if res.verdict is not None:
        records.append({
            "check": "simulation", "ok": res.verdict.ok, "compared": res.verdict.compared,
            "divergence": res.verdict.first_divergence,
        })
    if res.report is not None:
        for c in res.report.checks:
            records.append({"check": "phase", "round": c.round, "phase": c.phase, "condition": c.condition,
                            "ok": c.passed, **({"detail": c.detail} if c.detail else {})})
    gaps = res.gaps
    overhead = {
        "check": "overhead", "max": res.max_gap, "min": min(gaps, default=0),
        "mean": round(sum(gaps) / len(gaps), 3) if gaps else 0, "bound": res.bound, "ok": res.bound_ok,
    }
    records.append(overhead)
    if res.error or res.stalled:
        records.append({"check": "run", "ok": False, "reason": res.reason()})
    out = "\n".join(json.dumps(r, sort_keys=True) for r in records) + "\n"
    _write_out(args.report_out, out)

    bound_fail = args.bound_check and not res.bound_ok
    _err(f"simulated rounds: {res.simulated_rounds}/{res.requested_rounds}")
    if res.terminated_at is not None:
        _err(f"terminated at simulated round {res.terminated_at}")
    _err(f"overhead per simulated round: max {res.max_gap}, bound 8|E|+2n+2 = {res.bound}")
    if res.report is not None:
        _err(f"phase checks: {sum(c.passed for c in res.report.checks)}/{len(res.report.checks)} passed")
    if res.error and res.error.startswith(("PhiRangeError", "StorageWidthError")) and not args.mutation:
        _err(res.error)
        return EXIT_MODEL
    if not res.ok or bound_fail:
        _err("FAIL: " + (res.reason() if not res.ok else f"overhead {res.max_gap} exceeds {res.bound}"))
        return EXIT_DIVERGED
    _err("OK")
    return EXIT_OK


def _parse_range(text: str, what: str) -> tuple[int, int]:
    try:
        if ":" in text:
            lo, hi = text.split(":", 1)
            return int(lo), int(hi)
        v = int(text)
        return v, v
    except ValueError:
        raise CliError(EXIT_IO, f"bad {what} range {text!r}; use LO:HI") from None


def cmd_fuzz(args) -> int:
    lo, hi = _parse_range(args.seeds, "seed")
    n_range = _parse_range(args.n, "n")
    if n_range[0] < 3 or n_range[0] > n_range[1]:
        raise CliError(EXIT_IO, "n range must satisfy 3 <= LO <= HI")
    summary = fuzz(range(lo, hi), n_range, args.rounds, args.workers, args.mutation or ())
    print(json.dumps(summary, sort_keys=True, indent=1))
    _err(f"{summary['cases']} cases, {summary['failures']} failures")
    return EXIT_OK if summary["failures"] == 0 else EXIT_DIVERGED


def cmd_bench(args) -> int:
    g = _load_graph(args)
    a = _load_algo(args, g)
    _require_2ec(g)
    res = verify_instance(g, a, args.start, args.rounds, check_phases=False)
    if res.error:
        _err(res.error)
        return EXIT_MODEL
    layout = StorageLayout(g.max_degree, a.storage_width or 0)
    print(f"graph: n={g.n} |E|={g.num_edges} max_degree={g.max_degree}")
    print(f"simulated rounds: {res.simulated_rounds}")
    print("phase moves:")
    for phase in ("LocalComp+DFS", *PHASES[1:]):
        print(f"  {phase:<14} {res.phase_moves.get(phase, 0)}")
    print(f"max overhead: {res.max_gap}  bound 8|E|+2n+2: {res.bound}")
    print(
        f"storage bits: {storage_width_bits(g, a)} = lambda* {a.storage_width or 0} + fixed {layout.total_bits - (a.storage_width or 0)}"
        f"  cap: {storage_width_cap(g, a)}"
    )
    if args.bound_check and not res.bound_ok:
        _err(f"overhead {res.max_gap} exceeds bound {res.bound}")
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_dot(args) -> int:
    g = _load_graph(args)
    highlight = []
    if args.trace is not None:
        if args.round is None:
            raise CliError(EXIT_IO, "--round is required with --trace")
        try:
            trace = load_trace(Path(args.trace).read_text(), SIM_CODEC)
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot read trace: {exc}") from None
        except TraceFormatError as exc:
            raise CliError(EXIT_IO, f"bad simulator trace: {exc}") from None
        if args.round not in trace.rounds:
            raise CliError(EXIT_IO, f"round {args.round} not present in trace (0..{trace.rounds[-1]})")
        c = trace.configs[trace.rounds.index(args.round)]
        for u, st in enumerate(c.storages):
            if st.sim == 1 and 0 <= st.par < g.degree(u):
                highlight.append((u, g.port(u, st.par)))
    elif args.round is not None:
        raise CliError(EXIT_IO, "--round needs --trace")
    sys.stdout.write(to_dot(g, highlight))
    return EXIT_OK


def cmd_gen(args) -> int:
    seed = _seed(args)
    try:
        if args.kind == "cycle":
            g = generate_cycle(args.n, args.scheme, seed)
        elif args.kind == "complete":
            g = complete_graph(args.n)
        elif args.kind == "petersen":
            g = petersen_graph()
        elif args.kind == "bowtie":
            g = bowtie_with_bridge()
        else:
            g = generate_random_2ec(args.n, args.ears, seed)
    except GraphError as exc:
        raise CliError(EXIT_IO, str(exc)) from None
    _write_out(args.out, format_graph(g))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agentsim", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, rounds_default):
        p.add_argument("--graph", required=True, help="graph file (node count, then one port list per line)")
        p.add_argument("--algo", default="flip_flop",
                       help="builtin (flip_flop, explorer), random, random:SEED[:WIDTH[:MAXDEG]], or a table file")
        p.add_argument("--start", type=int, default=0)
        p.add_argument("--rounds", type=int, default=rounds_default)
        p.add_argument("--seed", type=int, default=0, help="seed for --algo random (AGENTSIM_SEED overrides)")

    p = sub.add_parser("run", help="execute the direct engine or the simulator and write a trace")
    common(p, 100)
    p.add_argument("--engine", choices=("oracle", "simulator"), default="oracle")
    p.add_argument("--trace-out", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="check the simulator against direct execution")
    common(p, 100)
    p.add_argument("--report-out", default=None)
    p.add_argument("--no-bound-check", dest="bound_check", action="store_false")
    p.add_argument("--mutation", action="append", choices=MUTATIONS, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fuzz", help="verify random instances, one per seed")
    p.add_argument("--seeds", default="0:100", help="half-open seed range LO:HI")
    p.add_argument("--n", default="3:20", help="node count range LO:HI (inclusive)")
    p.add_argument("--rounds", type=int, default=30)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--mutation", action="append", choices=MUTATIONS, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("bench", help="measure per-round overhead and storage width")
    common(p, 100)
    p.add_argument("--no-bound-check", dest="bound_check", action="store_false")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("dot", help="render a graph as DOT, optionally marking the ITC at a trace round")
    p.add_argument("--graph", required=True)
    p.add_argument("--trace", default=None, help="simulator trace written by 'run --engine simulator'")
    p.add_argument("--round", type=int, default=None)
    p.set_defaults(func=cmd_dot)

    p = sub.add_parser("gen", help="write a corpus graph")
    p.add_argument("kind", choices=("cycle", "complete", "petersen", "bowtie", "ear"))
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--scheme", choices=("oriented", "scrambled"), default="oriented")
    p.add_argument("--ears", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_IO if exc.code else EXIT_OK
    try:
        return args.func(args)
    except CliError as exc:
        _err(f"agentsim: {exc}")
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
