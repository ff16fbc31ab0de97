"""Command-line front end: ``graphnls <verb> ...``.

Every run that produces results writes ``manifest.json`` (argv plus the fully
resolved configuration) and ``results.csv`` into ``--out``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from . import field as fld
from .errors import GraphNLSError, InputError
from .field import EVERYWHERE, EXACT_TAIL, LOCALIZED, TRUNCATED, GraphField, GridSpec, Mesh
from .graph import MetricGraph, parse_graph_spec
from .io import write_field, write_json, write_result, write_table
from .solver import BoundStateResult, SolverOptions

RESULT_COLUMNS = ("index", "p", "lambda", "mass", "energy", "kinetic", "potential",
                  "stationary_residual", "kirchhoff_residual", "kirchhoff_estimate",
                  "support", "converged", "iterations", "method", "field_file")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _common(parser: argparse.ArgumentParser, graph: bool = True) -> None:
    if graph:
        parser.add_argument("--graph", required=True, help="gallery:name?key=value or a JSON graph file")
    parser.add_argument("--p", type=float, default=4.0, help="nonlinearity exponent")
    parser.add_argument("--mode", choices=(LOCALIZED, EVERYWHERE), default=LOCALIZED)
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--tol", type=float, default=1e-9)
    parser.add_argument("--h", type=float, default=None, help="target grid step")
    parser.add_argument("--halfline-mode", choices=(TRUNCATED, EXACT_TAIL), default=None)
    parser.add_argument("--R", type=float, default=None, help="half-line truncation length")
    parser.add_argument("--threads", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="graphnls", description="Stationary NLS on metric graphs.")
    ap.add_argument("--version", action="version", version=f"graphnls {__version__}")
    sub = ap.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    solve = sub.add_parser("solve", help="ground state or a single bound state")
    solve.add_argument("kind", choices=("ground", "bound"))
    _common(solve)
    solve.add_argument("--mu", type=float, default=None)
    solve.add_argument("--lambda", dest="lam", type=float, default=None)

    search = sub.add_parser("search", help="multi-start search for bound states")
    _common(search)
    search.add_argument("--mu", type=float, required=True)
    search.add_argument("--starts", type=int, default=10)

    cons = sub.add_parser("construct", help="explicit bound states")
    cons.add_argument("kind", choices=("cycle", "pendant", "double-bridge"))
    _common(cons)
    cons.add_argument("--lambda", dest="lam", type=float, default=None)
    cons.add_argument("--mu", type=float, default=None)
    cons.add_argument("--L", default=None, help="wave period for pendant constructions")

    wave = sub.add_parser("wave", help="tabulate an odd periodic wave")
    _common(wave, graph=False)
    wave.add_argument("--L", required=True, help="period (rational string allowed)")
    wave.add_argument("--lambda", dest="lam", type=float, required=True)
    wave.add_argument("--n", type=int, default=400, help="samples per minimal period")

    cl = sub.add_parser("classify", help="threshold verdicts for (graph, p, mu)")
    _common(cl)
    cl.add_argument("--mu", type=float, required=True)

    scan = sub.add_parser("scan", help="verdicts plus multi-start search over a mass grid")
    _common(scan)
    scan.add_argument("--mu", required=True, help="start:stop:count (inclusive) or a single mass")
    scan.add_argument("--geometric", action="store_true", help="geometric mass spacing")
    scan.add_argument("--starts", type=int, default=10)

    ver = sub.add_parser("verify", help="run an acceptance battery")
    ver.add_argument("suite", choices=("gn", "rearrangement", "constructions", "thresholds",
                                       "scans", "scaling", "bridge"))

    rr = sub.add_parser("rerun", help="repeat the run recorded in a manifest")
    rr.add_argument("manifest")
    rr.add_argument("--out", default=None, help="write somewhere else than the recorded directory")
    return ap


# -- helpers ---------------------------------------------------------------------------


def _options(args, h_default: float = 1e-2) -> SolverOptions:
    return SolverOptions(tol=args.tol, seed=args.seed, h=args.h or h_default, R=args.R,
                         starts=getattr(args, "starts", 1) or 1, threads=args.threads)


def _check_p(p: float) -> None:
    if not 2 < p < 6 or math.isnan(p):
        raise InputError(f"--p must lie in (2, 6), got {p}")


def _positive(name: str, value) -> None:
    if value is None or not value > 0:
        raise InputError(f"{name} must be given and positive")


def _state_row(i: int, r: BoundStateResult, field_file: str) -> dict:
    d = r.to_dict()
    d.update(index=i, field_file=field_file)
    return d


def _write_states(out: Path, results: Sequence[BoundStateResult]) -> list[str]:
    rows, files = [], []
    for i, r in enumerate(results):
        name = f"field_{i}.csv"
        write_field(out / name, r.field)
        write_result(out / f"result_{i}.json", r)
        rows.append(_state_row(i, r, name))
        files += [name, name + ".json", f"result_{i}.json"]
    write_table(out / "results.csv", RESULT_COLUMNS, rows)
    return files + ["results.csv"]


def _manifest(out: Path, argv: Sequence[str], args, graph: MetricGraph | None, extra: dict,
              outputs: list[str]) -> None:
    config = {k: v for k, v in vars(args).items() if k not in ("out",)}
    config.update(extra)
    write_json(out / "manifest.json", {
        "argv": list(argv),
        "version": __version__,
        "config": config,
        "graph": graph.to_dict() if graph is not None else None,
        "outputs": sorted(outputs),
    })


def _bound_init(g: MetricGraph, args, opts: SolverOptions) -> GraphField:
    lam = args.lam if args.lam is not None else 1.0
    mode = args.halfline_mode or (EXACT_TAIL if lam > 0 and args.mode == LOCALIZED and g.halflines else TRUNCATED)
    if mode == EXACT_TAIL:
        mesh = Mesh(g, GridSpec.build(g, opts.h), EXACT_TAIL)
        rate = math.sqrt(lam)
    else:
        mesh = Mesh(g, GridSpec.build(g, opts.h, R=opts.R if opts.R is not None else 20.0,
                                      h_R=max(opts.h, 0.05)), TRUNCATED)
        rate = None
    # a constant profile is a far better Newton start than a random field
    d = np.ones(mesh.ndof)
    for e in g.halflines:
        if e.id in mesh.slices:
            idx = mesh.sample_dof[mesh.slices[e.id]][1:-1]
            d[idx] = np.exp(-mesh.edge_x[e.id][1:-1])
    u = GraphField(mesh, d, args.mode, rate)
    if args.mu is not None:
        u = u.scaled(math.sqrt(args.mu / fld.mass(u)))
    return u


# -- verbs ---------------------------------------------------------------------------------


def _run(args, argv: Sequence[str]) -> int:
    from .constructions import (_bridge_lengths, cycle_compact_state, double_bridge_state,
                                pendant_compact_state)
    from .scan import COLUMNS, mu_grid, nonexistence_scan
    from .solver import _flow_assisted, ground_state, multi_start_search, newton_bound_state
    from .thresholds import classify_regime
    from .waves import periodic_odd_solution

    if args.verb == "verify":
        from .verify import run_suite

        checks = run_suite(args.suite)
        failed = [c for c in checks if not c.passed]
        print(f"{args.suite}: {len(checks) - len(failed)}/{len(checks)} checks passed")
        return 1 if failed else 0

    _check_p(args.p)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.verb == "wave":
        from .graph import to_fraction

        wave = periodic_odd_solution(to_fraction(args.L), args.p, args.lam)
        write_table(out / "wave.csv", ("x", "phi", "dphi"),
                    ({"x": x, "phi": y, "dphi": d} for x, y, d in wave.table(args.n, wave.k)))
        row = {"L": float(wave.L), "k": wave.k, "slope": wave.s, "half_period": wave.half_period,
               "amplitude": wave.amplitude, "p": args.p, "lambda": args.lam}
        write_table(out / "results.csv", tuple(row), [row])
        _manifest(out, argv, args, None, {}, ["wave.csv", "results.csv"])
        return 0

    g = parse_graph_spec(args.graph)

    if args.verb == "classify":
        _positive("--mu", args.mu)
        rep = classify_regime(g, args.p, args.mu)
        write_json(out / "regime.json", rep.to_dict())
        rec = {k: v for k, v in rep.to_dict().items() if not isinstance(v, (list, dict))}
        write_table(out / "results.csv", tuple(rec), [rec])
        _manifest(out, argv, args, g, {}, ["regime.json", "results.csv"])
        print(json.dumps(json.loads((out / "regime.json").read_text()), indent=2))
        return 0

    if args.verb == "scan":
        mus = mu_grid(args.mu, args.geometric)
        opts = _options(args)
        rows = nonexistence_scan(g, args.p, mus, opts, args.mode, n_starts=args.starts, raise_on_violation=False)
        write_table(out / "results.csv", COLUMNS, [r.as_record() for r in rows])
        _manifest(out, argv, args, g, {"mu_grid": mus, "solver": asdict(opts)}, ["results.csv"])
        bad = [f"mu={r.mu:.12g}: {v}" for r in rows for v in r.violations]
        for line in bad:
            print(f"consistency violation: {line}", file=sys.stderr)
        print(f"{len(rows)} masses, {sum(len(r.states) for r in rows)} states, {len(bad)} violations")
        return 2 if bad else 0

    if args.verb == "search":
        _positive("--mu", args.mu)
        opts = _options(args)
        rep = multi_start_search(g, args.p, args.mu, args.starts, opts, args.mode, report=True)
        files = _write_states(out, rep.states)
        _manifest(out, argv, args, g, {"solver": asdict(opts), "attempts": rep.attempts,
                                       "rejected": rep.rejected}, files)
        print(f"{len(rep.states)} states from {rep.attempts} attempts")
        return 0

    if args.verb == "solve":
        opts = _options(args)
        if args.kind == "ground":
            _positive("--mu", args.mu)
            grid = None
            if args.R is not None:
                grid = GridSpec.build(g, opts.h, R=args.R, h_R=max(opts.h, 0.05))
            r = ground_state(g, args.p, args.mu, grid=grid, nonlinearity=args.mode, opts=opts)
        else:
            if args.mu is None and args.lam is None:
                raise InputError("solve bound needs --mu or --lambda")
            init = _bound_init(g, args, opts)
            r = newton_bound_state(init, args.p, mu=args.mu, lam=args.lam, opts=opts)
            if not r.converged and args.mu is not None and init.halfline_mode == EXACT_TAIL:
                # same fallback as the multi-start search: a short gradient flow supplies the start
                trunc = Mesh(g, GridSpec.build(g, opts.h, R=opts.R or 20.0, h_R=max(opts.h, 0.05)), TRUNCATED)
                alt = _flow_assisted(g, args.p, args.mu, trunc, init.mesh, args.mode, opts,
                                     np.random.default_rng(args.seed))
                if alt is not None and alt.converged:
                    r = alt
        files = _write_states(out, [r])
        _manifest(out, argv, args, g, {"solver": asdict(opts)}, files)
        print(f"{r.method}: converged={r.converged} lambda={r.lam:.12g} energy={r.energy:.12g}")
        if not r.converged:
            print(f"no convergence: {r.message}", file=sys.stderr)
            return 3
        return 0

    # construct
    h = args.h or 1e-3
    if args.kind == "cycle":
        if args.lam is None:
            raise InputError("construct cycle needs --lambda")
        r = cycle_compact_state(g, args.p, args.lam, h=h, halfline=args.halfline_mode, R=args.R)
    elif args.kind == "pendant":
        if args.lam is None:
            raise InputError("construct pendant needs --lambda")
        r = pendant_compact_state(g, args.p, args.lam, L=args.L, h=h, halfline=args.halfline_mode, R=args.R)
    else:
        _positive("--mu", args.mu)
        b1, b2 = _bridge_lengths(g)
        opts = SolverOptions(tol=args.tol, seed=args.seed, h=h, R=args.R)
        r = double_bridge_state(b1, b2, args.p, args.mu, EVERYWHERE, opts, h=h).result
    files = _write_states(out, [r])
    _manifest(out, argv, args, g, {"h": h}, files)
    print(f"{args.kind}: lambda={r.lam:.12g} mass={r.mass:.12g} stationary residual={r.stationary_residual:.3g}")
    return 0


def _rerun(args) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read manifest {args.manifest}: {exc}") from None
    argv = list(manifest["argv"])
    if args.out is not None:
        argv = _replace_out(argv, args.out)
    return main(argv)


def _replace_out(argv: list[str], out: str) -> list[str]:
    res, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--out":
            skip = True
            continue
        if a.startswith("--out="):
            continue
        res.append(a)
    return res + ["--out", out]


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        if args.verb == "rerun":
            return _rerun(args)
        return _run(args, argv)
    except GraphNLSError as exc:
        print(f"graphnls: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
