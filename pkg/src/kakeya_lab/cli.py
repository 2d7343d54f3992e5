"""Command-line front door: every experiment as a reproducible run.

Each subcommand writes CSV and/or JSON whose body is byte-identical across
re-runs with the same configuration and seed; timestamps appear only in the
leading metadata comment line.  Exit codes: 0 success, 1 no-solution
outcomes, 2 input/usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import raster, slices, sumsets
from .curves import CurveFamily, TubeSpec, hairbrush_claim_check, locus_dichotomy_test, tubes_from_json
from .errors import KakeyaLabError, NoSolution
from .exact import RationalMatrix


def fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _meta_line(config: dict) -> str:
    cfg = json.dumps(config, sort_keys=True, default=str)
    return f"# config: {cfg} generated: {time.strftime('%Y-%m-%dT%H:%M:%S')}"


def write_csv(path: str | None, config: dict, header: list[str], rows: list[list]):
    lines = [_meta_line(config), ",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def write_json(path: str | None, config: dict, payload: dict):
    doc = {"config": config, "result": payload}
    text = json.dumps(doc, indent=2, default=str) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _load_matrix(arg: str) -> RationalMatrix:
    p = Path(arg)
    if p.exists():
        return RationalMatrix.from_json(json.loads(p.read_text()))
    return RationalMatrix.from_json(json.loads(arg))


def _parse_ks(arg: str) -> list[int]:
    return [int(s) for s in arg.split(",") if s]


def _parse_vec(arg: str) -> tuple:
    return tuple(Fraction(s) for s in arg.split(","))


def _config(args: argparse.Namespace) -> dict:
    skip = {"func", "out"}
    return {k: v for k, v in vars(args).items() if k not in skip and v is not None}


# ------------------------------------------------------------------ commands

def _sweep_output(args, ks: list[int], cells_by_k: dict, n: int) -> int:
    rows = [[k, cs.cell_count, cs.volume(), -k, np.log2(cs.volume())]
            for k, cs in cells_by_k.items()]
    fit = raster.box_dimension(lambda k: cells_by_k[k].volume(), ks, n=n)
    cfg = _config(args)
    write_csv(args.out, cfg, ["k", "cell_count", "volume", "log2_delta", "log2_volume"], rows)
    write_json(None, cfg, {"slope": fit.slope, "fit_residual": fit.fit_residual})
    return 0


def cmd_worstcase(args) -> int:
    from .exact import companion

    C = _load_matrix(args.matrix) if args.matrix else companion([0] * (args.n - 1))
    ks = _parse_ks(args.ks)
    cells = {k: raster.rasterize(raster.build_worstcase_kakeya(C, k), k) for k in ks}
    return _sweep_output(args, ks, cells, C.dim + 1)


def cmd_dimension(args) -> int:
    family = CurveFamily.from_json(json.loads(Path(args.family).read_text()))
    raw = tubes_from_json(json.loads(Path(args.tubes).read_text()))
    ks = _parse_ks(args.ks)
    cells = {}
    for k in ks:
        tubes = [TubeSpec(params=t.params, delta=2.0**-k) for t in raw]
        cells[k] = raster.rasterize(raster.TubeFamilySpec(family=family, tubes=tubes), k)
    return _sweep_output(args, ks, cells, family.n)


def cmd_sumset(args) -> int:
    A, B, G = sumsets.load_instance(args.instance)
    Xs = [_load_matrix(s) for s in args.xs.split(";")] if args.xs else []
    rep = sumsets.check_ratio(A, B, G, Xs, Fraction(args.eps))
    cfg = _config(args)
    write_csv(
        args.out, cfg,
        ["size_A", "size_B", "size_diff", "max_side", "holds", "achieved_exponent"],
        [[rep.size_A, rep.size_B, rep.size_diff, rep.max_side, int(rep.holds),
          rep.achieved_exponent if rep.achieved_exponent is not None else ""]],
    )
    return 0


def cmd_counterexample(args) -> int:
    cfg = _config(args)
    if args.mode == "line":
        X = _load_matrix(args.matrix)
        A, B, G = sumsets.gen_line_counterexample(X, args.M)
        sizes = {
            "A": A.size,
            "B": B.size,
            "sum": sumsets.x_sumset(A, B, G, X).size,
            "diff": sumsets.difference_set(A, B, G).size,
        }
        write_json(args.out, cfg, {"sizes": sizes, "expected_sum": 2 * args.M - 1,
                                   "expected_diff": args.M**2})
        return 0
    if args.mode == "secular":
        fracs = [Fraction(s) for s in args.fracs.split(",")]
        v = tuple(int(c) for c in args.v.split(","))
        w = tuple(int(c) for c in args.w.split(","))
        A, B, G, predicted = sumsets.gen_secular_counterexample(v, w, fracs, args.M)
        measured = []
        d = len(v)
        for f in fracs:
            X = RationalMatrix([[f * w[i] * v[j] for j in range(d)] for i in range(d)])
            # X v = (sum v_j^2) f w; rescale so X v = f w exactly
            vv = sum(c * c for c in v)
            X = Fraction(1, vv) * X
            measured.append(sumsets.x_sumset(A, B, G, X).size)
        write_json(args.out, cfg, {
            "predicted": predicted,
            "measured": measured,
            "diff": sumsets.difference_set(A, B, G).size,
        })
        return 0
    raise KakeyaLabError(f"unknown counterexample mode {args.mode}")


def cmd_solve_heights(args) -> int:
    C = _load_matrix(args.matrix)
    cfg = _config(args)
    try:
        if args.mode == "nikodym3":
            sol = slices.solve_nikodym_three_slice(C)
        elif args.mode == "kakeya4":
            sol = slices.solve_kakeya_four_slice(C)
        else:
            print(f"unknown mode {args.mode}", file=sys.stderr)
            return 2
    except NoSolution as e:
        write_json(args.out, cfg, {"solution": None, "reason": e.reason, "detail": e.detail})
        return 1
    write_json(args.out, cfg, sol.to_json())
    return 0


def cmd_exponents(args) -> int:
    out = slices.genfail_exponents(args.n, args.k, args.tr_adj_zero, args.det_zero)
    write_json(args.out, _config(args), out.to_json())
    return 0


def cmd_hairbrush(args) -> int:
    family = CurveFamily.from_json(json.loads(Path(args.family).read_text()))
    tubes = tubes_from_json(json.loads(Path(args.tubes).read_text()))
    spec = raster.TubeFamilySpec(family=family, tubes=tubes)
    dec = raster.hairbrush_decompose(spec, args.threshold)
    write_json(args.out, _config(args), {
        "brushes": [list(b) for b in dec.brushes],
        "bad": list(dec.bad),
        "centrals": list(dec.centrals),
    })
    return 0


def cmd_claim_check(args) -> int:
    family = CurveFamily.from_json(json.loads(Path(args.family).read_text()))
    tubes = tubes_from_json(json.loads(Path(args.tubes).read_text()))
    if len(tubes) != 3:
        print("claim-check expects exactly three tubes (central, j, i)", file=sys.stderr)
        return 2
    rep = hairbrush_claim_check(family, tubes[0], tubes[1], tubes[2],
                                args.k, args.l, args.m, K=args.K)
    write_json(args.out, _config(args), {
        "dist_centres": rep.dist_centres,
        "dist_to_line": rep.dist_to_line,
        "k_centres": rep.k_centres,
        "k_line": rep.k_line,
        "pass": rep.passed,
    })
    return 0 if rep.passed else 1


def cmd_locus(args) -> int:
    C = _load_matrix(args.matrix)
    family = CurveFamily(n=C.dim + 1, C=C)
    rep = locus_dichotomy_test(family, _parse_vec(args.y0), float(Fraction(args.t0)),
                               trials=args.trials, seed=args.seed)
    write_json(args.out, _config(args), {
        "omega_one_param": rep.omega_one_param,
        "y_one_param": rep.y_one_param,
        "max_line_residual": rep.max_line_residual,
        "omega_offline_witness": rep.omega_offline_witness,
        "samples": rep.samples,
    })
    return 0


def cmd_iterate_eps(args) -> int:
    e = float(Fraction(args.start)) if "/" in args.start else float(args.start)
    rows = [[0, e]]
    for i in range(1, args.steps + 1):
        e = slices.iterate_epsilon(e)
        rows.append([i, e])
    cfg = _config(args)
    write_csv(args.out, cfg, ["step", "eps"], rows)
    write_json(None, cfg, {"final": e, "fixed_point": slices.iteration_fixed_point()})
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kakeya-lab",
                                description="desk-scale experiments on curved Kakeya/Nikodym sets")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("worstcase", help="small-volume construction and its box dimension")
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--matrix", help="companion-block matrix JSON (path or inline)")
    sp.add_argument("--ks", required=True, help="comma-separated resolutions, e.g. 5,6,7,8")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_worstcase)

    sp = sub.add_parser("dimension", help="box dimension of an explicit tube family")
    sp.add_argument("--family", required=True)
    sp.add_argument("--tubes", required=True)
    sp.add_argument("--ks", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_dimension)

    sp = sub.add_parser("sumset", help="sum/difference cardinality ratio check")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--xs", help="semicolon-separated matrix JSONs")
    sp.add_argument("--eps", default="1/6")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sumset)

    sp = sub.add_parser("counterexample", help="near-extremal sumset instances")
    sp.add_argument("--mode", choices=["line", "secular"], required=True)
    sp.add_argument("--matrix")
    sp.add_argument("--M", type=int, required=True)
    sp.add_argument("--fracs", help="comma-separated p/q list (secular)")
    sp.add_argument("--v", default="1,0")
    sp.add_argument("--w", default="0,1")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_counterexample)

    sp = sub.add_parser("solve-heights", help="three- or four-slice height solver")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--mode", choices=["nikodym3", "kakeya4"], default="nikodym3")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_solve_heights)

    sp = sub.add_parser("exponents", help="exponent thresholds of the small-set construction")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, default=0)
    sp.add_argument("--tr-adj-zero", action="store_true")
    sp.add_argument("--det-zero", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_exponents)

    sp = sub.add_parser("hairbrush", help="greedy hairbrush decomposition")
    sp.add_argument("--family", required=True)
    sp.add_argument("--tubes", required=True)
    sp.add_argument("--threshold", type=int, required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_hairbrush)

    sp = sub.add_parser("claim-check", help="quantitative hairbrush distance bounds")
    sp.add_argument("--family", required=True)
    sp.add_argument("--tubes", required=True, help="JSON with [central, tube_j, tube_i]")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--l", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--K", type=float, default=16.0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_claim_check)

    sp = sub.add_parser("locus", help="one-parameter dichotomy of the two-curve locus")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--y0", required=True, help="comma-separated direction, e.g. 0,1")
    sp.add_argument("--t0", required=True)
    sp.add_argument("--trials", type=int, default=300)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_locus)

    sp = sub.add_parser("iterate-eps", help="iterate the improvement map")
    sp.add_argument("--start", required=True)
    sp.add_argument("--steps", type=int, default=50)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_iterate_eps)

    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except NoSolution as e:
        print(f"no solution: {e}", file=sys.stderr)
        return 1
    except (KakeyaLabError, OSError, ValueError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
