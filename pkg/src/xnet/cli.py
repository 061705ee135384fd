"""Command-line front end.

Commands: ``mst``, ``smt``, ``fill``, ``deform``, ``variation``,
``scenario``.  Reports are JSON on stdout with every float printed to 12
significant digits and the tolerance set echoed.  Exit codes: 0 success,
1 structural error (bad input), 2 guard refusal.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .deformation import (
    SCENARIOS,
    make_family,
    right_flip_count,
    scenario_library,
    scene_from_dict,
    scene_hypothesis,
    stabilization_report,
    track_types,
)
from .errors import GuardError, StructuralError, XnetError
from .fillings import boundary_order, eremin_check, mf, mpf, parse_distance_matrix
from .functionals import mst, spanning_network
from .metric import pullback
from .steiner import classify_stability, smt
from .svg import network_svg, timeline_svg
from .tolerances import DEFAULT, Tolerances
from .topology import canonical_form
from .variation import SegmentDeformation, fd_oracle, length_derivatives_1param, length_partials_2param


def _round(x):
    if isinstance(x, float):
        # + 0.0 folds negative zero
        return float(f"{x:.12g}") + 0.0
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    if isinstance(x, np.floating):
        return float(f"{float(x):.12g}") + 0.0
    if isinstance(x, np.integer):
        return int(x)
    return x


def _dump(obj) -> str:
    return json.dumps(_round(obj), indent=2, sort_keys=False) + "\n"


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise StructuralError(f"{path}: {exc.strerror}") from None


def load_scene(source: str):
    """A scene from a JSON file, or ``scenario:NAME`` from the library."""
    if source.startswith("scenario:"):
        return scenario_library(source.split(":", 1)[1])
    text = _read_text(source)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructuralError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise StructuralError(f"{source}: scene must be a JSON object")
    try:
        return scene_from_dict(data)
    except StructuralError as exc:
        raise StructuralError(f"{source}: {exc}") from None


def _tolerances(args) -> Tolerances:
    return DEFAULT.with_(tie=args.tie, angle=args.angle_tol, grad=args.grad_tol, deg=args.deg_eps, margin=args.margin)


def _emit(args, name: str, content: str):
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(content)


def cmd_mst(args, tol) -> dict:
    scene = load_scene(args.scene)
    pts = scene.points(scene.t0)
    res = mst(pts, scene.kind, tol.tie)
    if args.out and scene.dimension == 2:
        _emit(args, "mst.svg", network_svg([spanning_network(pts, F, scene.kind) for F in res.types], "MST"))
    return {
        "command": "mst",
        "n": scene.n,
        "length": res.length,
        "exhaustive": res.exhaustive,
        "types": [F.label() for F in res.types],
    }


def cmd_smt(args, tol) -> dict:
    scene = load_scene(args.scene)
    if scene.kind.p != 2:
        raise StructuralError("smt is implemented for the Euclidean metric only")
    pts = scene.points(scene.t0)
    res = smt(pts, tol)
    verdicts = classify_stability(pts, tol, res)
    types = []
    for (T, tr), i, rep in zip(res.minimizers, res.type_indices, res.angle_reports):
        sol = res.solves[i]
        types.append({
            "binary_type": canonical_form(T),
            "trace_type": canonical_form(tr.tree),
            "length": sol.length,
            "degenerate_edges": len(sol.degenerate_edges),
            "converged": sol.converged,
            "min_hessian_eigenvalue": sol.min_hessian_eigenvalue,
            "angles_ok": rep.ok,
        })
    if args.out and scene.dimension == 2:
        _emit(args, "smt.svg", network_svg([tr for _, tr in res.minimizers], "SMT"))
    return {
        "command": "smt",
        "n": scene.n,
        "length": res.length,
        "types": types,
        "stability": [{"trace_type": v.trace_type, "stable": v.stable, "reasons": list(v.reasons)} for v in verdicts],
    }


def _load_space(source: str):
    if source.endswith(".json") or source.startswith("scenario:"):
        scene = load_scene(source)
        return pullback(scene.points(scene.t0), scene.kind)
    return parse_distance_matrix(_read_text(source), source)


def cmd_fill(args, tol) -> dict:
    r = _load_space(args.input)
    res = mf(r, tol.tie)
    out = {
        "command": "fill",
        "n": r.n,
        "mf": res.weight,
        "mf_exact": res.exact,
        "types": [canonical_form(T) for T in res.types],
    }
    per_type = []
    for T, v in zip(res.candidates, res.values):
        row = {"type": canonical_form(T), "mpf_signed": v, "mpf": mpf(r, T, signed=False).exact}
        per_type.append(row)
    out["per_type"] = per_type
    if args.k_max and r.n >= 3:
        checks = []
        for T in res.types:
            rep = eremin_check(r, T, args.k_max)
            checks.append({
                "type": canonical_form(T),
                "status": rep.status,
                "lp_value": rep.lp_value,
                "max_multi_perimeter": rep.max_perimeter,
                "tours": rep.tour_count,
                "weak_duality": rep.weak_duality_ok,
            })
        out["minimax_check"] = {"k_max": args.k_max, "results": checks}
    return out


def cmd_deform(args, tol) -> dict:
    scene = load_scene(args.scene)
    if args.samples:
        scene = scene.with_samples(args.samples)
    fam = make_family(args.family, scene.n, tol)
    tl = track_types(scene, fam, tol=tol)
    rep = stabilization_report(tl)
    csv_text = tl.to_csv()
    if args.out:
        _emit(args, "timeline.csv", csv_text)
        _emit(args, "timeline.svg", timeline_svg(tl, rep.flip_locations, f"{scene.name} / {args.family}"))
    elif args.csv:
        sys.stdout.write(csv_text)
        return None

    def fmt(s):
        return s if isinstance(s, str) else sorted(s)

    return {
        "command": "deform",
        "scene": scene.name,
        "family": args.family,
        "samples": scene.samples,
        "hypothesis": scene_hypothesis(scene, tol),
        "base_set": sorted(rep.base_set),
        "right_set": fmt(rep.right_set),
        "left_set": fmt(rep.left_set),
        "right_tail_level": rep.right.level,
        "left_tail_level": rep.left.level,
        "contained_in_base": rep.contained_in_base,
        "flip_count": rep.flip_count,
        "flip_count_right_window": right_flip_count(tl, scene.window),
        "flip_locations": list(rep.flip_locations),
        "claim2_applicable": rep.claim2_applicable,
        "claim2_holds": rep.claim2_holds,
        "window_constant": rep.window_constant,
        "excluded_samples": rep.excluded,
    }


def _vec(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise StructuralError(f"cannot parse vector {text!r}; use comma-separated numbers") from None


def cmd_variation(args, tol) -> dict:
    d = SegmentDeformation(_vec(args.A), _vec(args.B), _vec(args.u), _vec(args.v))
    ell, d1, d2 = length_derivatives_1param(d, args.t)
    sv = length_partials_2param(d)
    fd1 = fd_oracle(d, 1)
    fd2 = fd_oracle(d, 2)
    return {
        "command": "variation",
        "t": args.t,
        "length": ell,
        "dl_dt": d1,
        "d2l_dt2": d2,
        "partials_at_origin": {
            "dl_dt": sv.dl_dt,
            "dl_ds": sv.dl_ds,
            "d2l_dt2": sv.d2l_dt2,
            "d2l_dsdt": sv.d2l_dsdt,
            "d2l_ds2": sv.d2l_ds2,
        },
        "finite_differences": {
            "h": fd1.h,
            "first": [fd1.value_h, fd1.value_h2],
            "first_order": fd1.order,
            "second": [fd2.value_h, fd2.value_h2],
            "second_order": fd2.order,
        },
    }


def cmd_scenario(args, tol) -> dict | None:
    scene = scenario_library(args.name, args.samples) if args.samples else scenario_library(args.name)
    text = json.dumps(scene.to_dict(), indent=2) + "\n"
    if args.out:
        _emit(args, f"{args.name}.json", text)
        return {"command": "scenario", "name": args.name, "file": str(Path(args.out) / f"{args.name}.json")}
    sys.stdout.write(text)
    return None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xnet", description="Extreme networks and their deformations.")
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tie", type=float, help="relative tie band for I_min (default 1e-9)")
    common.add_argument("--angle-tol", type=float, help="angle tolerance in radians (default 1e-6)")
    common.add_argument("--grad-tol", type=float, help="gradient tolerance relative to diameter (default 1e-10)")
    common.add_argument("--deg-eps", type=float, help="degenerate-edge threshold relative to diameter (default 1e-9)")
    common.add_argument("--margin", type=float, help="stability angle margin in radians (default 1e-6)")
    common.add_argument("--out", help="directory for CSV/SVG/JSON artifacts")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("mst", parents=[common], help="minimal spanning trees of a scene at t0")
    s.add_argument("scene", help="scene JSON file or scenario:NAME")
    s.set_defaults(func=cmd_mst)

    s = sub.add_parser("smt", parents=[common], help="Steiner minimal trees of a planar/Euclidean scene")
    s.add_argument("scene")
    s.set_defaults(func=cmd_smt)

    s = sub.add_parser("fill", parents=[common], help="minimal filling of a distance file or scene")
    s.add_argument("input", help="distance matrix file, scene JSON or scenario:NAME")
    s.add_argument("--k-max", type=int, default=2, help="multiplicity bound for the multi-tour check (0 skips)")
    s.set_defaults(func=cmd_fill)

    s = sub.add_parser("deform", parents=[common], help="track optimal types along a deformation")
    s.add_argument("scene")
    s.add_argument("--family", choices=["mst", "smt", "fill"], default="mst")
    s.add_argument("--samples", type=int, help="uniform fill count per side")
    s.add_argument("--csv", action="store_true", help="print the timeline CSV instead of the report")
    s.set_defaults(func=cmd_deform)

    s = sub.add_parser("variation", parents=[common], help="segment length derivatives")
    for name in ("A", "B", "u", "v"):
        s.add_argument(f"--{name}", required=True, help="comma-separated coordinates")
    s.add_argument("--t", type=float, default=0.0)
    s.set_defaults(func=cmd_variation)

    s = sub.add_parser("scenario", parents=[common], help="write a named scene file")
    s.add_argument("name", choices=SCENARIOS)
    s.add_argument("--samples", type=int)
    s.set_defaults(func=cmd_scenario)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    # XNET_SEED is reserved: no core path uses randomness
    try:
        tol = _tolerances(args)
        report = args.func(args, tol)
    except GuardError as exc:
        print(f"xnet: refused: {exc}", file=sys.stderr)
        return 2
    except (StructuralError, XnetError) as exc:
        print(f"xnet: error: {exc}", file=sys.stderr)
        return 1
    if report is not None:
        report["tolerances"] = tol.as_dict()
        text = _dump(report)
        sys.stdout.write(text)
        _emit(args, f"{args.command}.json", text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
