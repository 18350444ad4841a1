"""Command-line surface: scenario builders, JSON files, and SVG rendering.

Every file format is JSON with one object per file and a ``schema_version``
field so fixtures stay diffable.  SVG output uses a fixed canvas and
6-decimal coordinates, which makes renders byte-stable and hashable.

Exit codes: 0 success (and report passed), 1 verification failed, 2 parse
failure, 3 validation failure, 4 perturbation failure, 5 budget violation.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from fractions import Fraction

import numpy as np

from .complexes import (
    SimplicialComplex,
    SubdivisionMap,
    barycentric_subdivide,
    build_complex,
    crystalline_subdivide,
)
from .engine import (
    JigglingConfig,
    JigglingOutcome,
    jiggle_euclidean,
    jiggle_relative,
    jiggle_subdivision,
    jiggle_tower,
)
from .errors import (
    BudgetViolation,
    CollarTooSmall,
    EmbeddingLost,
    JiggleKitError,
    LevelExhausted,
    PerturbationFailed,
    PreconditionViolated,
    SkeletonViolation,
    UnsupportedDimension,
    VolumeMismatch,
)
from .grassmann import Plane
from .plmaps import PLMap
from .transversality import (
    Distribution,
    TransversalityReport,
    general_position,
    sample_points,
    simplex_transverse,
    stratified_transverse,
    transversality_report,
)

SCHEMA_VERSION = 1

EXIT_FAIL = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_PERTURBATION = 4
EXIT_BUDGET = 5


# ---------------------------------------------------------------------------
# builtin complexes
# ---------------------------------------------------------------------------

def unit_square_grid(n: int) -> SimplicialComplex:
    """The unit square cut into an n x n grid, two triangles per cell."""
    if n < 1:
        raise PreconditionViolated("unit_square_grid needs n >= 1")
    verts = [(i / n, j / n) for j in range(n + 1) for i in range(n + 1)]
    tris = []
    for j in range(n):
        for i in range(n):
            a = j * (n + 1) + i
            b = a + 1
            c = a + n + 1
            d = c + 1
            tris += [(a, b, d), (a, d, c)]
    return build_complex(2, verts, tris)


def standard_simplex(m: int) -> SimplicialComplex:
    """The simplex spanned by the origin and the unit vectors of R^m."""
    if not 1 <= m <= 8:
        raise PreconditionViolated("standard_simplex needs 1 <= m <= 8")
    verts = np.vstack([np.zeros(m), np.eye(m)])
    return build_complex(m, verts, [tuple(range(m + 1))])


def strip(n: int) -> SimplicialComplex:
    """A row of n unit squares with alternating diagonal directions.

    Even cells use the rising diagonal, odd cells the falling one, so a
    constant diagonal field is tangent to some interior edges but never to
    the leftmost cell; that makes the left boundary edge a usable
    stratified-transverse anchor.
    """
    if n < 1:
        raise PreconditionViolated("strip needs n >= 1")
    verts = [(float(i), 0.0) for i in range(n + 1)]
    verts += [(float(i), 1.0) for i in range(n + 1)]
    tris = []
    for i in range(n):
        a, b, c, d = i, i + 1, n + 1 + i, n + 2 + i
        if i % 2 == 0:
            tris += [(a, b, c), (b, d, c)]
        else:
            tris += [(a, b, d), (a, d, c)]
    return build_complex(2, verts, tris)


def box_grid(n: int) -> SimplicialComplex:
    """n^3 unit cubes, each cut into the six tetrahedra of the Kuhn chain."""
    if n < 1:
        raise PreconditionViolated("box_grid needs n >= 1")
    idx = {}
    verts = []
    for z in range(n + 1):
        for y in range(n + 1):
            for x in range(n + 1):
                idx[(x, y, z)] = len(verts)
                verts.append((float(x), float(y), float(z)))
    tets = []
    import itertools
    for cell in itertools.product(range(n), repeat=3):
        for perm in itertools.permutations(range(3)):
            chain = [cell]
            for axis in perm:
                p = list(chain[-1])
                p[axis] += 1
                chain.append(tuple(p))
            tets.append(tuple(idx[p] for p in chain))
    return build_complex(3, verts, tets)


_COMPLEX_BUILDERS = {
    "unit_square_grid": unit_square_grid,
    "standard_simplex": standard_simplex,
    "strip": strip,
    "box_grid": box_grid,
}

_NAME_RE = re.compile(r"^([a-z_]+)(?:\((.*)\))?$")


def builtin_complex(name: str) -> SimplicialComplex:
    m = _NAME_RE.match(name.strip())
    if not m or m.group(1) not in _COMPLEX_BUILDERS:
        raise PreconditionViolated(f"unknown builtin complex {name!r}")
    if m.group(2) is None:
        raise PreconditionViolated(f"builtin complex {name!r} needs a size")
    try:
        arg = int(m.group(2))
    except ValueError as exc:
        raise PreconditionViolated(f"bad builtin parameter in {name!r}") from exc
    return _COMPLEX_BUILDERS[m.group(1)](arg)


# ---------------------------------------------------------------------------
# builtin plane fields
# ---------------------------------------------------------------------------

def planar_rotor(omega: float) -> Distribution:
    """Horizontal line field in R^3 rotating about e3 at rate omega per unit z."""

    def at(p):
        ang = omega * p[2]
        return Plane(np.array([[math.cos(ang), math.sin(ang), 0.0]]))

    return Distribution(3, 1, "builtin", at, name=f"planar_rotor({omega!r})")


def vertical_twist() -> Distribution:
    """Line field in R^2 that starts vertical and turns with x at unit rate."""

    def at(p):
        return Plane(np.array([[-math.sin(p[0]), math.cos(p[0])]]))

    return Distribution(2, 1, "builtin", at, name="vertical_twist")


def contact_like() -> Distribution:
    """Rank-2 field in R^3 spanned by (1, 0, y) and (0, 1, 0) at (x, y, z)."""

    def at(p):
        return Plane(np.array([[1.0, 0.0, p[1]], [0.0, 1.0, 0.0]]))

    return Distribution(3, 2, "builtin", at, name="contact_like")


def builtin_distribution(name: str) -> Distribution:
    m = _NAME_RE.match(name.strip())
    if not m:
        raise PreconditionViolated(f"unknown builtin field {name!r}")
    kind, arg = m.group(1), m.group(2)
    if kind == "planar_rotor":
        if arg is None:
            raise PreconditionViolated("planar_rotor needs a rate, e.g. planar_rotor(0.25)")
        try:
            return planar_rotor(float(arg))
        except ValueError as exc:
            raise PreconditionViolated(f"bad rate in {name!r}") from exc
    if kind == "vertical_twist" and arg is None:
        return vertical_twist()
    if kind == "contact_like" and arg is None:
        return contact_like()
    raise PreconditionViolated(f"unknown builtin field {name!r}")


def sampled_distribution(points, planes, name: str = "samples") -> Distribution:
    """Nearest-neighbor interpolation of a finite plane table."""
    pts = np.asarray(points, dtype=float)
    table = [p if isinstance(p, Plane) else Plane(np.asarray(p, dtype=float))
             for p in planes]
    if len(table) != pts.shape[0] or not table:
        raise PreconditionViolated("sample points and planes must align")

    def at(p):
        return table[int(np.argmin(np.linalg.norm(pts - p, axis=1)))]

    dist = Distribution(pts.shape[1], table[0].rank, "sampled", at, name=name)
    dist.sample_sites = pts
    dist.sample_planes = table
    return dist


# ---------------------------------------------------------------------------
# JSON formats
# ---------------------------------------------------------------------------

def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def save_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        fh.write(canonical_json(obj))


def load_json(path: str):
    with open(path) as fh:
        return json.load(fh)


class _Schema(PreconditionViolated):
    """A JSON object is syntactically fine but structurally wrong."""


def _expect(obj, key, kinds):
    if not isinstance(obj, dict) or key not in obj:
        raise _Schema(f"missing field {key!r}")
    val = obj[key]
    if not isinstance(val, kinds):
        raise _Schema(f"field {key!r} has the wrong type")
    return val


def complex_to_dict(complex_: SimplicialComplex) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "complex",
        "ambient_dim": complex_.ambient_dim,
        "vertices": [list(map(float, v)) for v in complex_.vertices],
        "top_simplices": [list(s) for s in complex_.top_simplices],
    }


def complex_from_dict(obj: dict) -> SimplicialComplex:
    dim = _expect(obj, "ambient_dim", int)
    verts = _expect(obj, "vertices", list)
    tops = _expect(obj, "top_simplices", list)
    return build_complex(dim, verts, [tuple(s) for s in tops])


def plmap_to_dict(f: PLMap) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "plmap",
        "domain": complex_to_dict(f.domain),
        "images": [list(map(float, row)) for row in f.images],
    }


def plmap_from_dict(obj: dict) -> PLMap:
    # outcome bundles carry their map as out_complex + images; accept them
    # directly so `jiggle` output feeds straight into `verify --map`
    if obj.get("kind") == "outcome":
        domain = complex_from_dict(_expect(obj, "out_complex", dict))
    else:
        domain = complex_from_dict(_expect(obj, "domain", dict))
    images = np.asarray(_expect(obj, "images", list), dtype=float)
    return PLMap(domain, images)


def distribution_to_dict(xi: Distribution) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "kind": "distribution"}
    if xi.kind == "constant":
        out["type"] = "constant"
        out["basis"] = [list(map(float, row))
                        for row in xi.plane_at(np.zeros(xi.ambient_dim)).basis]
    elif xi.kind == "builtin":
        out["type"] = "builtin"
        out["name"] = xi.name
    elif xi.kind == "sampled" and hasattr(xi, "sample_sites"):
        out["type"] = "samples"
        out["points"] = [list(map(float, p)) for p in xi.sample_sites]
        out["planes"] = [[list(map(float, row)) for row in p.basis]
                         for p in xi.sample_planes]
    else:
        raise PreconditionViolated(f"distribution {xi!r} is not serializable")
    return out


def distribution_from_dict(obj: dict) -> Distribution:
    typ = _expect(obj, "type", str)
    if typ == "constant":
        basis = np.asarray(_expect(obj, "basis", list), dtype=float)
        return Distribution.constant(Plane(basis))
    if typ == "builtin":
        return builtin_distribution(_expect(obj, "name", str))
    if typ == "samples":
        return sampled_distribution(_expect(obj, "points", list),
                                    _expect(obj, "planes", list))
    raise _Schema(f"unknown distribution type {typ!r}")


def subdivision_to_dict(smap: SubdivisionMap) -> dict:
    support = {
        str(vid): [[gid, [w.numerator, w.denominator]] for gid, w in entries]
        for vid, entries in smap.vertex_support.items()
    }
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "subdivision",
        "vertex_support": support,
    }


def subdivision_from_dict(obj: dict, parent: SimplicialComplex,
                          child: SimplicialComplex) -> SubdivisionMap:
    raw = _expect(obj, "vertex_support", dict)
    support = {
        int(vid): tuple((int(gid), Fraction(num, den))
                        for gid, (num, den) in entries)
        for vid, entries in raw.items()
    }
    return SubdivisionMap(parent=parent, child=child, vertex_support=support)


def config_from_dict(obj: dict) -> JigglingConfig:
    allowed = {"gamma", "level", "seed", "margin_floor", "epsilon_vertex",
               "samples", "sample_depth", "level_max"}
    unknown = set(obj) - allowed
    if unknown:
        raise _Schema(f"unknown config fields {sorted(unknown)}")
    if "gamma" not in obj:
        raise _Schema("config needs a gamma")
    return JigglingConfig(**obj)


def outcome_to_dict(out: JigglingOutcome, mode: str) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "outcome",
        "mode": mode,
        "level": out.level,
        "d_c0": out.d_c0,
        "d_c1": out.d_c1,
        "eta": out.eta,
        "margin_target": out.margin_target,
        "moved_count": out.moved_count,
        "config": out.config.to_json(),
        "out_complex": complex_to_dict(out.out_complex),
        "images": [list(map(float, row)) for row in out.plmap.images],
        "subdivision": subdivision_to_dict(out.subdivision),
        "report": out.report.to_json(),
    }


def outcome_from_dict(obj: dict) -> dict:
    """Rehydrate the loadable parts of an outcome bundle.

    Returns a dict with the output complex, the jiggled PLMap, and the raw
    report payload; the engine-internal fields stay as plain numbers.
    """
    child = complex_from_dict(_expect(obj, "out_complex", dict))
    images = np.asarray(_expect(obj, "images", list), dtype=float)
    return {
        "mode": _expect(obj, "mode", str),
        "level": _expect(obj, "level", int),
        "d_c0": float(obj["d_c0"]),
        "d_c1": float(obj["d_c1"]),
        "moved_count": _expect(obj, "moved_count", int),
        "out_complex": child,
        "plmap": PLMap(child, images),
        "report": _expect(obj, "report", dict),
    }


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

def resolve_complex_ref(ref) -> SimplicialComplex:
    if isinstance(ref, str):
        return builtin_complex(ref)
    if isinstance(ref, dict):
        return complex_from_dict(ref)
    raise _Schema("complex reference must be a builtin name or an object")


def load_scenario(obj: dict) -> dict:
    """Resolve a scenario file into live objects.

    Returns a dict with keys complex, distribution, config, map (PLMap or
    None), and the relative/subdivision extras (a, b, v_radius, refinement,
    levels) when present.
    """
    complex_ = resolve_complex_ref(_expect(obj, "complex", (str, dict)))
    dist = distribution_from_dict(_expect(obj, "distribution", dict))
    config = config_from_dict(_expect(obj, "config", dict))
    out = {"complex": complex_, "distribution": dist, "config": config}
    out["map"] = (plmap_from_dict(obj["map"]) if "map" in obj
                  else PLMap.identity(complex_))
    if "refinement" in obj:
        out["refinement"] = resolve_complex_ref(obj["refinement"])
    if "a" in obj:
        out["a"] = [tuple(s) for s in obj["a"]]
    if "b" in obj:
        out["b"] = [tuple(s) for s in obj["b"]]
    if "v_radius" in obj:
        out["v_radius"] = float(obj["v_radius"])
    if "levels" in obj:
        out["levels"] = [int(l) for l in obj["levels"]]
    return out


# ---------------------------------------------------------------------------
# SVG rendering
# ---------------------------------------------------------------------------

_CANVAS = 640.0
_MARGIN = 40.0
_GLYPH_GRID = 12


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def render_svg(complex_: SimplicialComplex, images: np.ndarray | None = None,
               distribution: Distribution | None = None,
               failing=()) -> str:
    """Draw a 2D complex (optionally through a map) as a deterministic SVG.

    Triangles become polygons, edges thin strokes; ``distribution`` adds a
    regular grid of short direction glyphs; simplices listed in ``failing``
    (as sorted vertex-id tuples) are filled in the alarm color.
    """
    if complex_.ambient_dim != 2:
        raise UnsupportedDimension(
            f"rendering needs ambient dimension 2, got {complex_.ambient_dim}"
        )
    pts = np.asarray(images if images is not None else complex_.vertices,
                     dtype=float)
    if pts.size:
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
    else:
        lo = np.zeros(2)
        hi = np.ones(2)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))
    scale = (_CANVAS - 2 * _MARGIN) / span

    def to_px(p):
        x = _MARGIN + (p[0] - lo[0]) * scale
        y = _CANVAS - _MARGIN - (p[1] - lo[1]) * scale
        return x, y

    bad = {tuple(sorted(s)) for s in failing}
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(_CANVAS)}" '
        f'height="{int(_CANVAS)}" viewBox="0 0 {int(_CANVAS)} {int(_CANVAS)}">',
        f'<rect width="{int(_CANVAS)}" height="{int(_CANVAS)}" fill="#ffffff"/>',
    ]
    tris = sorted(s for s in complex_.top_simplices if len(s) == 3)
    for s in tris:
        fill = "#f2b8b5" if tuple(sorted(s)) in bad else "#dbe9f6"
        coords = " ".join(
            f"{_fmt(x)},{_fmt(y)}" for x, y in (to_px(pts[v]) for v in s)
        )
        parts.append(f'<polygon points="{coords}" fill="{fill}" '
                     f'stroke="#46627f" stroke-width="1.0"/>')
    edges = sorted({tuple(sorted((s[i], s[j])))
                    for s in complex_.top_simplices
                    for i in range(len(s)) for j in range(i + 1, len(s))})
    for u, v in edges:
        color = "#b3261e" if (u, v) in bad else "#46627f"
        (x1, y1), (x2, y2) = to_px(pts[u]), to_px(pts[v])
        parts.append(f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" '
                     f'y2="{_fmt(y2)}" stroke="{color}" stroke-width="1.0"/>')
    if distribution is not None:
        if distribution.ambient_dim != 2:
            raise UnsupportedDimension("glyphs need a plane field on R^2")
        half = 0.5 * span / _GLYPH_GRID * 0.7
        for gj in range(_GLYPH_GRID):
            for gi in range(_GLYPH_GRID):
                cx = lo[0] + (gi + 0.5) / _GLYPH_GRID * span
                cy = lo[1] + (gj + 0.5) / _GLYPH_GRID * span
                plane = distribution.plane_at(np.array([cx, cy]))
                for row in plane.basis:
                    (x1, y1) = to_px((cx - half * row[0], cy - half * row[1]))
                    (x2, y2) = to_px((cx + half * row[0], cy + half * row[1]))
                    parts.append(
                        f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" '
                        f'x2="{_fmt(x2)}" y2="{_fmt(y2)}" stroke="#2e7d32" '
                        f'stroke-width="1.2"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _read_complex_arg(ref: str) -> SimplicialComplex:
    if _NAME_RE.match(ref) and ref.split("(")[0] in _COMPLEX_BUILDERS:
        return builtin_complex(ref)
    return complex_from_dict(load_json(ref))


def _read_distribution_arg(ref: str) -> Distribution:
    if os.path.exists(ref):
        return distribution_from_dict(load_json(ref))
    return builtin_distribution(ref)


def cmd_subdivide(args) -> int:
    complex_ = _read_complex_arg(args.input)
    if args.scheme == "crystalline":
        child, smap = crystalline_subdivide(complex_, args.levels)
    else:
        child, smap = crystalline_subdivide(complex_, 0)
        for _ in range(args.levels):
            child, step = barycentric_subdivide(child)
            from .complexes import compose_subdivisions
            smap = compose_subdivisions(smap, step)
    save_json(args.output, {
        "schema_version": SCHEMA_VERSION,
        "kind": "subdivision_result",
        "scheme": args.scheme,
        "levels": args.levels,
        "complex": complex_to_dict(child),
        "subdivision": subdivision_to_dict(smap),
    })
    return 0


def cmd_jiggle(args) -> int:
    scenario = load_scenario(load_json(args.scenario))
    cfg = scenario["config"]
    if args.gamma is not None:
        cfg = JigglingConfig(**{**cfg.to_json(), "gamma": args.gamma})
    if args.seed is not None:
        cfg = JigglingConfig(**{**cfg.to_json(), "seed": args.seed})
    env_seed = os.environ.get("JIGGLEKIT_SEED")
    if env_seed:
        cfg = JigglingConfig(**{**cfg.to_json(), "seed": int(env_seed)})
    complex_ = scenario["complex"]
    dist = scenario["distribution"]
    if args.mode == "euclidean":
        out = jiggle_euclidean(scenario["map"], complex_, dist, cfg)
        bundle = outcome_to_dict(out, args.mode)
    elif args.mode == "tower":
        levels = scenario.get("levels", [2, 3, 4])
        outs = jiggle_tower(scenario["map"], complex_, dist, cfg, levels)
        bundle = {
            "schema_version": SCHEMA_VERSION,
            "kind": "outcome_tower",
            "outcomes": [outcome_to_dict(o, "euclidean") for o in outs],
        }
    elif args.mode == "subdivision":
        refinement = scenario.get("refinement", complex_)
        out = jiggle_subdivision(complex_, refinement, dist, cfg)
        bundle = outcome_to_dict(out, args.mode)
    else:
        out = jiggle_relative(
            scenario["map"], complex_, dist, cfg.gamma,
            a=scenario.get("a", []), b=scenario.get("b", []),
            v_radius=scenario.get("v_radius", 0.0), config=cfg,
        )
        bundle = outcome_to_dict(out, args.mode)
    save_json(args.output, bundle)
    return 0


def cmd_verify(args) -> int:
    complex_ = _read_complex_arg(args.complex)
    f = (plmap_from_dict(load_json(args.map)) if args.map
         else PLMap.identity(complex_))
    xi = _read_distribution_arg(args.distribution)
    images = f.images
    if args.notion == "report":
        report = transversality_report(f.domain, images, xi)
        payload = report.to_json()
        payload["schema_version"] = SCHEMA_VERSION
        payload["kind"] = "report"
        ok = report.passed
    else:
        checks = []
        for top in f.domain.top_simplices:
            pts = images[list(top)]
            if xi.kind == "constant":
                probes = pts[:1]
            else:
                probes = sample_points(pts, xi_depth(args))
            if args.notion == "transverse":
                ok_top = all(simplex_transverse(pts, xi.plane_at(x))
                             for x in probes)
            elif args.notion == "stratified":
                ok_top = all(stratified_transverse(pts, xi.plane_at(x))
                             for x in probes)
            else:
                ok_top, _ = general_position(pts, xi)
            checks.append({"simplex": list(top), "ok": bool(ok_top)})
        ok = all(c["ok"] for c in checks)
        payload = {
            "schema_version": SCHEMA_VERSION,
            "kind": "verify",
            "notion": args.notion,
            "checks": checks,
            "pass": bool(ok),
        }
    if args.output:
        save_json(args.output, payload)
    else:
        sys.stdout.write(canonical_json(payload))
    return 0 if ok else EXIT_FAIL


def xi_depth(args) -> int:
    return getattr(args, "sample_depth", None) or 3


def cmd_render(args) -> int:
    complex_ = _read_complex_arg(args.complex)
    images = None
    if args.map:
        f = plmap_from_dict(load_json(args.map))
        complex_ = f.domain
        images = f.images
    xi = _read_distribution_arg(args.distribution) if args.distribution else None
    failing = []
    if args.report:
        payload = load_json(args.report)
        for rec in payload.get("records", []):
            bad = rec.get("transverse") is False or \
                rec.get("general_position") is False
            if bad:
                failing.append(tuple(rec["simplex"]))
    elif xi is not None:
        pts = images if images is not None else complex_.vertices
        for top in complex_.top_simplices:
            ok, _ = general_position(np.asarray(pts)[list(top)], xi)
            if not ok:
                failing.append(top)
    svg = render_svg(complex_, images=images, distribution=xi, failing=failing)
    with open(args.svg, "w") as fh:
        fh.write(svg)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jigglekit",
        description="subdivide, jiggle, verify, and render simplicial complexes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("subdivide", help="subdivide a complex")
    p.add_argument("input", help="complex JSON file or builtin like unit_square_grid(2)")
    p.add_argument("--levels", type=int, default=1)
    p.add_argument("--scheme", choices=("crystalline", "barycentric"),
                   default="crystalline")
    p.add_argument("output")
    p.set_defaults(func=cmd_subdivide)

    p = sub.add_parser("jiggle", help="run a jiggling scenario")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("--mode", choices=("euclidean", "tower", "relative",
                                      "subdivision"), default="euclidean")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("output")
    p.set_defaults(func=cmd_jiggle)

    p = sub.add_parser("verify", help="check a map against a plane field")
    p.add_argument("complex", help="complex JSON file or builtin name")
    p.add_argument("distribution", help="distribution JSON file or builtin name")
    p.add_argument("--map", default=None, help="PLMap JSON file (default identity)")
    p.add_argument("--notion", choices=("transverse", "stratified",
                                        "general-position", "report"),
                   default="report")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("render", help="render a 2D complex to SVG")
    p.add_argument("complex", help="complex JSON file or builtin name")
    p.add_argument("--map", default=None)
    p.add_argument("--distribution", default=None)
    p.add_argument("--report", default=None,
                   help="report JSON whose failing simplices get highlighted")
    p.add_argument("--svg", required=True)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except json.JSONDecodeError as exc:
        print(f"parse error: {exc.msg} at line {exc.lineno} column {exc.colno}",
              file=sys.stderr)
        return EXIT_PARSE
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except BudgetViolation as exc:
        print(f"budget violation: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (PerturbationFailed, EmbeddingLost, CollarTooSmall, LevelExhausted,
            SkeletonViolation, VolumeMismatch) as exc:
        print(f"jiggling failed: {exc}", file=sys.stderr)
        return EXIT_PERTURBATION
    except JiggleKitError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (KeyError, TypeError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
