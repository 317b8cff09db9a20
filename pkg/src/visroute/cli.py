"""``visroute`` command line.

Exit codes: 0 success, 1 a check failed, 2 usage error, 3 bad input data.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

from .geom import CANONICAL, Frame, GeometryError
from .instance import (GenerationError, Instance, InputError, ParseError, gen_random, load, serialize,
                       validate)
from .lowerbounds import ConstructionError, gen_grid, gen_zigzag, grid_check, ratio_report, zigzag_check
from .router import FrameRejected, Mode, Router
from .theta6 import build_theta6, local_edge_oracle
from .visibility import build_visibility_graph

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 3


class DataError(Exception):
    """Input data cannot be used; maps to exit code 3."""


def _frame(text: str) -> Frame:
    try:
        dx, dy = (int(v) for v in text.split(","))
        return Frame(dx, dy)
    except (ValueError, GeometryError):
        raise argparse.ArgumentTypeError(f"expected two integers 'dx,dy', got {text!r}") from None


def _density(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError("density must lie in [0, 1]")
    return v


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load(path: str) -> Instance:
    try:
        return load(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    except ParseError as exc:
        raise DataError(f"{path}: {exc}") from None


def _graph(inst: Instance, mode: Mode, f: Frame):
    vis = build_visibility_graph(inst)
    return vis, (build_theta6(inst, vis, f) if mode is Mode.THETA6 else vis)


# --------------------------------------------------------------------------
# commands


def cmd_validate(args: argparse.Namespace) -> int:
    inst = _load(args.input)
    bad = validate(inst, args.frame)
    for v in bad:
        print(v)
    if bad:
        return EXIT_CHECK
    print(f"OK n={inst.n} m={inst.m}")
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    header = []
    if args.kind == "random":
        inst = gen_random(args.n, args.seed, args.density)
        header.append(f"# random n={args.n} seed={args.seed} density={args.density}")
    else:
        c = gen_grid(args.n) if args.kind == "grid" else gen_zigzag(args.n, args.rho)
        inst = c.instance
        header.append(f"# {c.kind} {json.dumps(c.params, sort_keys=True)} scale={c.scale}")
        header.append(f"# s={c.s} t={c.t}")
    _write(args.output, "\n".join(header) + "\n" + serialize(inst).decode("ascii"))
    return EXIT_OK


def cmd_build(args: argparse.Namespace) -> int:
    inst = _load(args.input)
    _check_frame(inst, args.frame)
    _, g = _graph(inst, Mode(args.mode), args.frame)
    _write(args.output, json.dumps(g.to_json(), separators=(",", ":")) + "\n")
    return EXIT_OK


def _check_frame(inst: Instance, f: Frame) -> None:
    bad = validate(inst, f)
    if bad:
        raise DataError("; ".join(str(b) for b in bad[:3]))


# route workers share the instance through a per-process global
_WORKER: dict = {}


def _init_worker(inst: Instance, mode: str, f: Frame, cap: int | None) -> None:
    _, g = _graph(inst, Mode(mode), f)
    _WORKER.update(router=Router(inst, g, mode, f, check=False), cap=cap)


def _route_source(s: int) -> list[tuple[int, int, str, int]]:
    router, cap = _WORKER["router"], _WORKER["cap"]
    out = []
    for t in range(router.instance.n):
        if t != s:
            tr = router.route(s, t, cap)
            out.append((s, t, tr.outcome.value, tr.step_count))
    return out


def _route_all(inst: Instance, args: argparse.Namespace) -> int:
    sources = range(inst.n)
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs, initializer=_init_worker,
                                 initargs=(inst, args.mode, args.frame, args.max_steps)) as ex:
            rows = [r for chunk in ex.map(_route_source, sources) for r in chunk]
    else:
        _init_worker(inst, args.mode, args.frame, args.max_steps)
        rows = [r for s in sources for r in _route_source(s)]
    failed = [r for r in rows if r[2] != "REACHED"]
    worst = max((r[3] for r in rows), default=0)
    for s, t, outcome, k in failed:
        print(f"{outcome} s={s} t={t} steps={k}")
    print(f"pairs={len(rows)} reached={len(rows) - len(failed)} max_steps={worst} "
          f"max_steps_per_n={worst / inst.n:.3f} n={inst.n} mode={args.mode}")
    if args.report:
        _write(args.report, json.dumps({"mode": args.mode, "frame": list(args.frame.as_tuple()), "n": inst.n,
                                        "runs": [list(r) for r in rows]}) + "\n")
    return EXIT_CHECK if failed else EXIT_OK


def cmd_route(args: argparse.Namespace) -> int:
    inst = _load(args.input)
    _check_frame(inst, args.frame)
    if (args.source is None) != (args.target is None):
        raise _Usage("give both -s and -t, or neither to route every pair")
    if args.source is None:
        return _route_all(inst, args)
    for name, v in (("-s", args.source), ("-t", args.target)):
        if not 0 <= v < inst.n:
            raise _Usage(f"{name} {v} is not a vertex id (0..{inst.n - 1})")
    if args.source == args.target:
        raise _Usage("-s and -t must differ")
    _, g = _graph(inst, Mode(args.mode), args.frame)
    tr = Router(inst, g, args.mode, args.frame, check=False).route(args.source, args.target, args.max_steps)
    if args.trace:
        _write(args.trace, tr.dumps() + "\n")
    if args.svg:
        from .render import write_svg
        write_svg(args.svg, inst, [(u, v) for u, v, _ in g.edges()], tr.to_json(),
                  title=f"{args.mode} {args.source}->{args.target}")
    line = f"{tr.outcome.value} steps={tr.step_count} n={inst.n} mode={args.mode}"
    if tr.error:
        line += f" error={tr.error!r}"
    print(line)
    return EXIT_OK if tr.outcome.value == "REACHED" else EXIT_CHECK


def cmd_oracle_check(args: argparse.Namespace) -> int:
    inst = _load(args.input)
    _check_frame(inst, args.frame)
    vis, th = _graph(inst, Mode.THETA6, args.frame)
    pairs = mismatches = 0
    for u in range(inst.n):
        view = vis.view(u)
        for v in sorted(vis.neighbors(u)):
            pairs += 1
            if local_edge_oracle(view, v, args.frame) != th.has_edge(u, v):
                mismatches += 1
                print(f"mismatch u={u} v={v} theta6={th.has_edge(u, v)}")
    print(f"pairs={pairs} mismatches={mismatches}")
    return EXIT_CHECK if mismatches else EXIT_OK


def _lowerbound_one(job: tuple) -> dict:
    kind, n, rho, mode, frame = job
    f = Frame(*frame)
    if kind == "zigzag":
        chk = zigzag_check(n, rho)
        rep = ratio_report(gen_zigzag(n, rho), mode, f)
        return {"kind": kind, "n": n, "check": chk.to_json(), "report": rep.to_json()}
    chk = grid_check(n, mode, f)
    rep = ratio_report(gen_grid(n), mode, f)
    return {"kind": kind, "n": n, "check": chk.to_json(), "report": rep.to_json()}


def cmd_lowerbound(args: argparse.Namespace) -> int:
    if args.kind == "random":
        raise _Usage("lowerbound needs --kind grid or zigzag")
    jobs = [(args.kind, n, args.rho, args.mode, args.frame.as_tuple()) for n in args.n]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            results = list(ex.map(_lowerbound_one, jobs))
    else:
        results = [_lowerbound_one(j) for j in jobs]
    ok = True
    for r in results:
        c = r["check"]
        ok &= c["ok"]
        if r["kind"] == "zigzag":
            print(f"zigzag n={r['n']} rho={c['rho']} free={c['free']:.6f} < {c['free_bound']:.6f} "
                  f"[{'ok' if c['free_ok'] else 'FAIL'}{'' if c['free_ok_without_eps'] else ', needs eps term'}] restricted={c['restricted']:.6f} >= "
                  f"{c['restricted_bound']:.6f} [{'ok' if c['restricted_ok'] else 'FAIL'}] "
                  f"ratio={c['ratio']:.4f} target={c['ratio_target']:.4f} [{'ok' if c['ratio_ok'] else 'FAIL'}]")
        else:
            print(f"grid n={r['n']} shortest_hops={c['shortest_hops']} routed_hops={c['routed_hops']} "
                  f"trimmed={c['trimmed_vertices']} (c={c['trim_factor']:.2f}) replay="
                  f"{'ok' if c['replay_ok'] and c['views_ok'] else 'FAIL'} trimmed_hops={c['trimmed_hops']}")
    out = results[0] if len(results) == 1 else results
    if args.report:
        _write(args.report, json.dumps(out, indent=2) + "\n")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_render(args: argparse.Namespace) -> int:
    from .render import write_svg

    inst = _load(args.input)
    edges: list[tuple[int, int]] = []
    if args.mode != "none":
        _check_frame(inst, args.frame)
        _, g = _graph(inst, Mode(args.mode), args.frame)
        edges = [(u, v) for u, v, _ in g.edges()]
    trace = None
    if args.trace:
        try:
            with open(args.trace, encoding="utf-8") as fh:
                trace = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read trace {args.trace}: {exc}") from None
        if any(not 0 <= s["vertex"] < inst.n for s in trace.get("steps", [])):
            raise DataError("trace refers to vertices outside the instance")
    write_svg(args.svg, inst, edges, trace)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


class _Usage(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="visroute", description="Local routing on constrained visibility graphs.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser, needs_input: bool = True) -> None:
        if needs_input:
            sp.add_argument("-i", "--input", required=True, help="instance file")
        sp.add_argument("--frame", type=_frame, default=CANONICAL, metavar="DX,DY",
                        help="direction bisecting cone 0 (default 0,1)")

    sp = sub.add_parser("validate", help="report structural and general-position problems")
    common(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("gen", help="write a generated instance")
    sp.add_argument("--kind", choices=("random", "grid", "zigzag"), default="random")
    sp.add_argument("-n", type=int, required=True, help="points (random, zigzag) or rows (grid)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--density", type=_density, default=0.3)
    sp.add_argument("--rho", type=int, default=1000)
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("build", help="write the visibility or Theta-6 adjacency as JSON")
    common(sp)
    sp.add_argument("--mode", choices=("vis", "theta6"), default="vis")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_build)

    sp = sub.add_parser("route", help="route one message, or every pair when -s/-t are omitted")
    common(sp)
    sp.add_argument("-s", "--source", type=int)
    sp.add_argument("-t", "--target", type=int)
    sp.add_argument("--mode", choices=("vis", "theta6"), default="vis")
    sp.add_argument("--max-steps", type=int, default=None, help="step cap (default n^2)")
    sp.add_argument("--trace", help="write the trace JSON here")
    sp.add_argument("--svg", help="draw the route here")
    sp.add_argument("--report", help="all-pairs run: write per-pair outcomes here")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_route)

    sp = sub.add_parser("oracle-check", help="compare the local edge test with the global Theta-6 graph")
    common(sp)
    sp.set_defaults(func=cmd_oracle_check)

    sp = sub.add_parser("lowerbound", help="evaluate the grid or zig-zag family")
    common(sp, needs_input=False)
    sp.add_argument("--kind", choices=("grid", "zigzag", "random"), required=True)
    sp.add_argument("-n", type=int, nargs="+", required=True)
    sp.add_argument("--rho", type=int, default=1_000_000)
    sp.add_argument("--mode", choices=("vis", "theta6"), default="vis")
    sp.add_argument("--report", help="write the report JSON here")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_lowerbound)

    sp = sub.add_parser("render", help="draw an instance, a graph and optionally a trace as SVG")
    common(sp)
    sp.add_argument("--mode", choices=("vis", "theta6", "none"), default="vis", help="graph drawn thin")
    sp.add_argument("--trace", help="trace JSON to overlay")
    sp.add_argument("--svg", required=True)
    sp.set_defaults(func=cmd_render)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except (_Usage, InputError) as exc:
        parser.print_usage(sys.stderr)
        print(f"visroute: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FrameRejected, GenerationError, ConstructionError, GeometryError) as exc:
        print(f"visroute: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
