"""Command-line front end.

Each subcommand reads JSON documents, prints a short human table to stdout
and, with ``--out``, writes a machine-readable JSON document. Exit codes:
0 success, 2 invalid input, 3 budget exhausted (a partial result is still
written and flagged), 1 any other failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import errors, schema
from .am import EXACT_LIMIT, am_distance
from .cantor import best_matching_lower_bound, cantor_match, conjugating_pair
from .discretize import finite_relation_approx
from .metric import SubsetIndex, hausdorff_distance
from .pipelines import (circle_rotation, genericity_report, interval_identity, manifold_cantor_approx,
                        power_map_regression, torus_cat_map)
from .quotient import DEFAULT_BUDGET, TAU_ISO, dgh_bracket, euclidean_dgh
from .relation import classify, ds_distance, spaces_equal
from .sft import embed_cylinders, sft_from_relation, shift_fiber_profile

COMMANDS = ("validate", "hausdorff", "ds", "discretize", "sft", "cantor-match", "conjugate-pair",
            "dgh", "am", "manifold-approx", "regress-power", "diagnose")

FIXTURES = {"circle": circle_rotation, "torus": torus_cat_map, "interval": interval_identity}


class _Budget(Exception):
    """Carries a partial result out of a command whose budget ran out."""

    def __init__(self, doc, lines):
        super().__init__("budget exhausted")
        self.doc, self.lines = doc, lines


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _table(rows):
    rows = [(str(k), schema.fmt(v) if isinstance(v, (float, np.floating)) else str(v)) for k, v in rows]
    w = max((len(k) for k, _ in rows), default=0)
    return [f"{k:<{w}}  {v}" for k, v in rows]


def _need_same_space(f, g):
    if not spaces_equal(f.space, g.space):
        raise errors.SpaceMismatch("--f and --g must live in the same metric space")


def _point_set(path):
    """A relation's carrier or an explicit {"space", "members"} subset."""
    doc = schema.read(path)
    if isinstance(doc, dict) and "pairs" in doc:
        f = schema.load_relation(path)
        return f.space, f.carrier
    space = schema.space_from_json(schema.require(doc, "space", str(path)), f"{path}.space", Path(path).parent)
    members = doc.get("members", list(range(space.n)))
    return space, members


# commands ----------------------------------------------------------------
def cmd_validate(a):
    doc = schema.read(a.input)
    if schema.is_relation_doc(doc):
        f = schema.load_relation(a.input)
        out = {"object": "relation", "points": f.space.n, "pairs": len(f), "class": classify(f).value}
    else:
        s = schema.load_space(a.input)
        out = {"object": "metric-space", "kind": s.kind, "points": s.n}
    out["valid"] = True
    return out, _table(out.items())


def cmd_hausdorff(a):
    sx, X = _point_set(a.f)
    sy, Y = _point_set(a.g)
    if not spaces_equal(sx, sy):
        raise errors.SpaceMismatch("both point sets must live in the same metric space")
    r = hausdorff_distance(SubsetIndex.of(sx, X), SubsetIndex.of(sx, Y))
    out = {"value": r.value, "point": r.point, "partner": r.partner, "direction": r.direction}
    return out, [schema.fmt(r.value)]


def cmd_ds(a):
    f, g = schema.load_relation(a.f), schema.load_relation(a.g)
    _need_same_space(f, g)
    r = ds_distance(f, g)
    return {"value": r.value, "witness": r.witness.as_json()}, [schema.fmt(r.value)]


def cmd_discretize(a):
    f = schema.load_relation(a.input)
    ap = finite_relation_approx(f, a.eps)
    cert = {"eps": ap.eps, "distance": ap.distance, "witness": ap.witness.as_json(),
            "net": list(ap.net.members), "certified": ap.certified}
    if a.certificate:
        schema.write({"certificate": cert}, a.certificate)
    out = {**schema.relation_to_json(ap.relation), "certificate": cert}
    return out, _table([("net size", len(ap.net)), ("pairs", len(ap.relation)), ("distance", ap.distance),
                        ("eps", ap.eps)])


def cmd_sft(a):
    g = schema.load_relation(a.input)
    T = sft_from_relation(g)
    E = embed_cylinders(T, g, a.depth, a.eps, a.bits, a.budget or 200_000)
    fiber, inv_fiber = shift_fiber_profile(E)
    sym = list(T.symbols)
    out = {
        "symbols": sym,
        "transition": T.matrix,
        "words": [[sym[i] for i in w] for w in E.words],
        "points": [{"word": [sym[i] for i in w], "bits": list(b), "index": int(p), "offset": float(o)}
                   for (w, b), p, o in zip(E.cylinders, E.points, E.offsets)],
        "relation": schema.relation_to_json(E.relation),
        "certificate": {"eps": E.eps, "radius": E.radius, "distance": E.distance,
                        "witness": E.witness.as_json(), "fiber_diameter": fiber,
                        "inverse_fiber_diameter": inv_fiber},
    }
    return out, _table([("symbols", T.k), ("cylinders", len(E.cylinders)), ("distance", E.distance),
                        ("eps", E.eps), ("fiber diameter", fiber)])


def cmd_cantor_match(a):
    A, B = schema.load_tree(a.f), schema.load_tree(a.g)
    m = cantor_match(A, B, a.delta)
    out = {"pairs": m.pairs, "multiplicity": m.multiplicity, "displacement": m.displacement,
           "hausdorff": m.hausdorff, "delta": m.delta, "levels": list(m.levels), "bijection": m.is_bijection}
    rows = [("pairs", len(m.pairs)), ("displacement", m.displacement), ("hausdorff", m.hausdorff),
            ("bijection", m.is_bijection)]
    if A.n_leaves == B.n_leaves:
        lb = best_matching_lower_bound(A, B)
        out["best_bijection"] = lb
        rows.append(("best bijection", lb))
    return out, _table(rows)


def cmd_conjugate_pair(a):
    g, j = schema.load_relation(a.f), schema.load_relation(a.g)
    p = conjugating_pair(g, j, a.delta)
    out = {"h1": sorted(p.h1.items()), "h2": sorted(p.h2.items()), "displacement1": p.displacement1,
           "displacement2": p.displacement2, "graph_displacement": p.graph_displacement, "method": p.method}
    return out, _table([("displacement h1", p.displacement1), ("displacement h2", p.displacement2),
                        ("method", p.method)])


def cmd_dgh(a):
    f, g = schema.load_relation(a.f), schema.load_relation(a.g)
    b = dgh_bracket(f, g, a.budget or DEFAULT_BUDGET)
    up, lo = b.upper, b.lower
    upper, source = up.value, "gluing"
    witness = {"correspondence": [list(p) for p in up.correspondence], "distortion": up.distortion,
               "glue_eps": up.eps, "glued": up.witness.as_json(),
               "lower_carrier": [list(p) for p in lo.carrier_correspondence],
               "lower_graph": [list(p) for p in lo.graph_correspondence]}
    partial = up.budget_exhausted or not lo.exact_search
    if a.euclidean:
        e = euclidean_dgh(f, g)
        witness["euclidean"] = {"value": e.value, "rotation": e.rotation, "translation": e.translation}
        if e.value < upper:
            upper, source = e.value, "euclidean"
    exact = abs(upper - lo.value) <= TAU_ISO
    out = {"lower": lo.value, "upper": upper, "exact": exact, "upper_source": source,
           "budget_exhausted": partial, "witness": witness}
    lines = _table([("lower", lo.value), ("upper", upper), ("exact", str(exact).lower())])
    if partial:
        raise _Budget(out, lines)
    return out, lines


def cmd_am(a):
    f, g = schema.load_relation(a.f), schema.load_relation(a.g)
    r = am_distance(f, g, a.budget or EXACT_LIMIT)
    out = {"value": r.value, "mode": r.mode, "phi": sorted(r.phi.items()), "psi": sorted(r.psi.items()),
           "phi_defects": list(r.phi_defects), "psi_defects": list(r.psi_defects)}
    return out, _table([("value", r.value), ("mode", r.mode)])


def cmd_manifold_approx(a):
    kw = {"n": a.grid} if a.grid else {}
    m = FIXTURES[a.fixture](**kw)
    c = manifold_cantor_approx(m, a.eps, a.depth, a.bits, a.budget or 200_000)
    cert = {"eps": c.eps, "delta": c.delta, "density_defect": c.density_defect, "closeness": c.closeness,
            "closeness_method": c.closeness_method, "distance_to_f": c.distance_to_f, "net_size": c.net_size,
            "points": c.n_points, "depth": c.depth, "bits": c.bits, "ok": c.ok}
    out = {"fixture": m.name, "relation": schema.relation_to_json(c.relation), "certificate": cert}
    return out, _table([("fixture", m.name), ("eps", c.eps), ("density defect", c.density_defect),
                        ("closeness", c.closeness), ("points", c.n_points)])


def cmd_regress_power(a):
    rows = power_map_regression(_ints(a.n), a.grid or 1001)
    table = [{"n": r["n"], "D": r["D"], "witness": r["witness"].as_json()} for r in rows]
    return {"grid": a.grid or 1001, "table": table}, _table([(f"n={r['n']}", r["D"]) for r in rows])


def cmd_diagnose(a):
    f = schema.load_relation(a.input)
    rep = genericity_report(f, _floats(a.eps_list), _floats(a.r_list))
    d = rep.as_dict()
    rows = [("fiber diameter", rep.fiber_diameter), ("inverse fiber diameter", rep.inverse_fiber_diameter)]
    rows += [(f"mesh r={k}", v) for k, v in d["component_mesh"].items()]
    rows += [(f"isolated eps={k}", v) for k, v in d["isolated"].items()]
    return d, _table(rows)


HANDLERS = {name: globals()["cmd_" + name.replace("-", "_")] for name in COMMANDS}


# parser ------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dsmetric", description="Distances between finite dynamical systems.")
    sub = p.add_subparsers(dest="command", metavar="command")

    def add(name, help, *flags):
        s = sub.add_parser(name, help=help)
        s.add_argument("--out", help="write the JSON result here")
        s.add_argument("--seed", type=int, default=0, help="accepted for scripting; never changes a result")
        for fl in flags:
            fl(s)
        return s

    inp = lambda s: s.add_argument("--input", required=True)                       # noqa: E731
    fg = lambda s: (s.add_argument("--f", required=True), s.add_argument("--g", required=True))  # noqa: E731
    eps = lambda s: s.add_argument("--eps", type=float, required=True)            # noqa: E731
    budget = lambda s: s.add_argument("--budget", type=int)                        # noqa: E731
    delta = lambda s: s.add_argument("--delta", type=float, required=True)        # noqa: E731

    add("validate", "check a metric space or relation document", inp)
    add("hausdorff", "Hausdorff distance of two point sets", fg)
    add("ds", "distance D between two relations on one space", fg)
    add("discretize", "coarse-grain a relation onto an eps-net", inp, eps,
        lambda s: s.add_argument("--certificate"))
    add("sft", "embed the shift lift of a finite relation", inp, eps, budget,
        lambda s: s.add_argument("--depth", type=int, default=1),
        lambda s: s.add_argument("--bits", type=int, default=0))
    add("cantor-match", "match the leaves of two trees (--f, --g are tree files)", fg, delta)
    add("conjugate-pair", "near-identity bijections conjugating --f to --g", fg, delta)
    add("dgh", "bracket the distance up to isometric conjugacy", fg, budget,
        lambda s: s.add_argument("--euclidean", action="store_true"))
    add("am", "C0 Gromov-Hausdorff distance of two maps", fg, budget)
    add("manifold-approx", "certified Cantor approximation of a sampled manifold map", eps, budget,
        lambda s: s.add_argument("--fixture", choices=sorted(FIXTURES), required=True),
        lambda s: s.add_argument("--grid", type=int),
        lambda s: s.add_argument("--depth", type=int, default=1),
        lambda s: s.add_argument("--bits", type=int, default=0))
    add("regress-power", "D between x^n samples and their limit graph",
        lambda s: s.add_argument("--n", default="1,4,20,100,200"),
        lambda s: s.add_argument("--grid", type=int))
    add("diagnose", "fiber, component and isolated-point diagnostics", inp,
        lambda s: s.add_argument("--eps-list", default=""),
        lambda s: s.add_argument("--r-list", default=""))
    return p


def _error_doc(exc):
    doc = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    if getattr(exc, "violations", None):
        doc["error"]["violations"] = exc.violations
    if getattr(exc, "path", ""):
        doc["error"]["path"] = exc.path
    return doc


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and not argv[0].startswith("-") and argv[0] not in COMMANDS:
        print(f"error: UnknownCommand: {argv[0]!r} (choose from {', '.join(COMMANDS)})", file=sys.stderr)
        return errors.UnknownCommand.exit_code
    parser = build_parser()
    a = parser.parse_args(argv)
    if a.command is None:
        parser.print_help()
        return errors.UnknownCommand.exit_code
    try:
        doc, lines = HANDLERS[a.command](a)
        code = 0
    except _Budget as b:
        doc, lines, code = b.doc, b.lines + ["budget exhausted: result is a partial bracket"], 3
    except errors.DsMetricError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        if a.out:
            schema.write(_error_doc(exc), a.out)
        return exc.exit_code
    print("\n".join(lines))
    if a.out:
        schema.write({"command": a.command, **doc}, a.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
