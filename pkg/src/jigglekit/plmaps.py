"""Piecewise-linear and sampled maps on polyhedra.

A :class:`PLMap` is determined by the image of every domain vertex and
extends affinely over each simplex.  A :class:`SampledMap` wraps a black-box
evaluator (optionally with an analytic Jacobian).  Distances between maps are
measured over a common refinement, simplex by simplex: sup-distance for order
zero, sup-distance plus Jacobian operator-norm distance for order one.
"""

from __future__ import annotations

import itertools

import numpy as np

from .complexes import (
    SimplicialComplex,
    barycentric_coordinates,
    crystalline_subdivide,
    find_interior_overlap,
    shape_stats,
    simplex_volume,
)
from .errors import (
    CollarTooSmall,
    DegenerateSimplex,
    DomainMismatch,
    NotOpposingFaces,
    QueryNotInComplex,
)
from .transversality import barycentric_lattice

FD_STEP_FACTOR = 1e-6
SAMPLE_DEPTH = 3


class PLMap:
    """A piecewise-linear map |K| -> R^n given by vertex images."""

    def __init__(self, domain: SimplicialComplex, images: np.ndarray):
        self.domain = domain
        self.images = np.array(images, dtype=float)
        self.images.setflags(write=False)
        if self.images.shape[0] != domain.num_vertices:
            raise DomainMismatch("one image point per domain vertex required")
        self.target_dim = self.images.shape[1]
        self._jac_cache: dict[tuple[int, ...], np.ndarray] = {}

    @classmethod
    def from_function(cls, domain: SimplicialComplex, fn) -> "PLMap":
        return cls(domain, np.array([fn(v) for v in domain.vertices]))

    @classmethod
    def identity(cls, domain: SimplicialComplex) -> "PLMap":
        return cls(domain, domain.vertices)

    def image_coords(self, simplex) -> np.ndarray:
        return self.images[list(simplex)]

    def jacobian(self, simplex) -> np.ndarray:
        """The constant derivative matrix on one simplex (zero off its span)."""
        key = tuple(simplex)
        jac = self._jac_cache.get(key)
        if jac is None:
            dom = self.domain.coords(simplex)
            img = self.image_coords(simplex)
            a = (dom[1:] - dom[0]).T
            y = (img[1:] - img[0]).T
            jac = y @ np.linalg.pinv(a)
            self._jac_cache[key] = jac
        return jac

    def evaluate(self, point, hint=None):
        p = np.asarray(point, dtype=float)
        simplex = None
        if hint is not None:
            b, defect = barycentric_coordinates(self.domain.coords(hint), p)
            if defect <= 1e-9 and float(np.min(b)) >= -1e-9:
                simplex = hint
        if simplex is None:
            simplex = self.domain.containing_top_simplex(p)
        b, _ = barycentric_coordinates(self.domain.coords(simplex), p)
        return b @ self.image_coords(simplex)

    def derivative_at(self, point, hint=None) -> np.ndarray:
        simplex = hint if hint is not None else self.domain.containing_top_simplex(point)
        return self.jacobian(simplex)


class SampledMap:
    """A map given by a point evaluator, with optional analytic Jacobian.

    The evaluator may be vectorized (accepting an (m, N) array); a plain
    point evaluator is lifted automatically.  Finite differences (central,
    step 1e-6 times the local simplex size) stand in for a missing Jacobian.
    """

    def __init__(self, domain: SimplicialComplex, evaluator, jacobian=None,
                 name: str = ""):
        self.domain = domain
        self.target_dim = None
        self.name = name
        self._eval = evaluator
        self._jac = jacobian
        probe = self.evaluate_batch(domain.vertices[:1])
        self.target_dim = probe.shape[1]

    def evaluate_batch(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        try:
            out = np.asarray(self._eval(pts), dtype=float)
            if out.shape[0] == pts.shape[0] and out.ndim == 2:
                return out
        except Exception:
            pass
        return np.array([np.atleast_1d(self._eval(p)) for p in pts], dtype=float)

    def evaluate(self, point, hint=None):
        return self.evaluate_batch(np.asarray(point)[None, :])[0]

    def derivative_at(self, point, hint=None, scale: float = 1.0) -> np.ndarray:
        p = np.asarray(point, dtype=float)
        if self._jac is not None:
            return np.asarray(self._jac(p), dtype=float)
        h = FD_STEP_FACTOR * max(scale, 1e-3)
        n = p.shape[0]
        probes = np.vstack([p + h * np.eye(n), p - h * np.eye(n)])
        vals = self.evaluate_batch(probes)
        return ((vals[:n] - vals[n:]) / (2.0 * h)).T


# ---------------------------------------------------------------------------
# linearization
# ---------------------------------------------------------------------------

def _as_evaluator(f):
    if isinstance(f, PLMap):
        return lambda pts: np.array([f.evaluate(p) for p in np.atleast_2d(pts)])
    return f.evaluate_batch


def linearize(f, complex_: SimplicialComplex, levels: int,
              restrict_to=None, collar: float | None = None):
    """Replace f by its piecewise-linear interpolation on the level-``levels``
    crystalline subdivision.

    With ``restrict_to`` (a list of simplices of the input complex) only the
    region they carry is linearized; the map transitions back to f across one
    shell of simplices, blended along the join parameter (the PL extension of
    the inside-indicator on vertices).  ``collar`` bounds how far the
    transition shell may extend from the linearized region; a violation
    raises CollarTooSmall.

    Returns ``(map, child_complex, subdivision_map)``; ``map`` is a PLMap for
    the full linearization and a SampledMap hybrid for the restricted one.
    """
    child, smap = crystalline_subdivide(complex_, levels)
    evaluator = _as_evaluator(f)
    images = evaluator(child.vertices)
    full = PLMap(child, images)
    if restrict_to is None:
        return full, child, smap

    inside_faces = set()
    for s in restrict_to:
        t = tuple(sorted(s))
        if t not in complex_._membership:
            raise QueryNotInComplex(f"restrict_to simplex {t} not in the complex")
        for r in range(1, len(t) + 1):
            inside_faces.update(itertools.combinations(t, r))
    weights = np.zeros(child.num_vertices)
    for vid in range(child.num_vertices):
        carrier = tuple(sorted({g for g, _ in smap.vertex_support[vid]}))
        if carrier in inside_faces:
            weights[vid] = 1.0

    if collar is not None:
        region_pts = child.vertices[weights == 1.0]
        for top in child.top_simplices:
            w = weights[list(top)]
            if w.max() == 1.0 and w.min() == 0.0:
                far = max(
                    float(np.min(np.linalg.norm(region_pts - v, axis=1)))
                    for v in child.coords(top)
                )
                if far > collar:
                    raise CollarTooSmall(
                        f"transition simplex {top} reaches {far:.3g} from the "
                        f"linearized region, collar is {collar:.3g}"
                    )

    def hybrid(points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        fx = evaluator(pts)
        out = np.array(fx, dtype=float)
        for i, p in enumerate(pts):
            simplex = child.containing_top_simplex(p)
            b, _ = barycentric_coordinates(child.coords(simplex), p)
            t = float(np.clip(b @ weights[list(simplex)], 0.0, 1.0))
            if t > 0.0:
                lin = b @ full.image_coords(simplex)
                out[i] = t * lin + (1.0 - t) * fx[i]
        return out

    hyb = SampledMap(child, hybrid, name="partial-linearization")
    hyb.blend_weights = weights
    hyb.full_linearization = full
    return hyb, child, smap


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------

def _common_refinement(f, g) -> SimplicialComplex:
    domains = [m.domain for m in (f, g) if m.domain is not None]
    if not domains:
        raise DomainMismatch("neither map carries a domain complex")
    fine = max(domains, key=lambda d: d.num_vertices)
    if len(domains) == 2 and domains[0] is not domains[1]:
        vols = [sum(simplex_volume(d.coords(s)) for s in d.top_simplices)
                for d in domains]
        if abs(vols[0] - vols[1]) > 1e-6 * max(vols[0], vols[1], 1e-300):
            raise DomainMismatch(
                f"domains cover different volume: {vols[0]:.6g} vs {vols[1]:.6g}"
            )
    return fine


def _eval_on(m, pts: np.ndarray, simplex, own: bool) -> np.ndarray:
    if isinstance(m, PLMap):
        if own:
            b = barycentric_lattice(len(simplex), SAMPLE_DEPTH)
            return b @ m.image_coords(simplex)
        return np.array([m.evaluate(p) for p in pts])
    return m.evaluate_batch(pts)


def _derivative_on(m, pts: np.ndarray, simplex, own: bool, scale: float):
    if isinstance(m, PLMap):
        if own:
            return [m.jacobian(simplex)]
        center = pts.mean(axis=0)
        parent = m.domain.containing_top_simplex(center)
        return [m.jacobian(parent)]
    return [m.derivative_at(p, scale=scale) for p in pts]


def distance(f, g, order: int = 0) -> float:
    """C0 or C1 distance over a common refinement of the two domains.

    Order one returns the per-simplex maximum of (sup-distance + Jacobian
    operator-norm distance), maximized over simplices, per the sup-plus-
    derivative convention.
    """
    fine = _common_refinement(f, g)
    worst = 0.0
    for simplex in fine.top_simplices:
        dom = fine.coords(simplex)
        b = barycentric_lattice(len(simplex), SAMPLE_DEPTH)
        pts = b @ dom
        f_own = isinstance(f, PLMap) and f.domain is fine
        g_own = isinstance(g, PLMap) and g.domain is fine
        fv = _eval_on(f, pts, simplex, f_own)
        gv = _eval_on(g, pts, simplex, g_own)
        d0 = float(np.max(np.linalg.norm(fv - gv, axis=1)))
        val = d0
        if order >= 1:
            scale = float(np.max(np.linalg.norm(dom - dom[0], axis=1)))
            fj = _derivative_on(f, pts, simplex, f_own, scale)
            gj = _derivative_on(g, pts, simplex, g_own, scale)
            if len(fj) == 1 and len(gj) > 1:
                fj = fj * len(gj)
            if len(gj) == 1 and len(fj) > 1:
                gj = gj * len(fj)
            d1 = max(float(np.linalg.norm(a - c, 2)) for a, c in zip(fj, gj))
            val = d0 + d1
        worst = max(worst, val)
    return worst


# ---------------------------------------------------------------------------
# interpolation and joins over face decompositions
# ---------------------------------------------------------------------------

def _check_opposing(num_vertices: int, face_a, face_b):
    sa, sb = set(face_a), set(face_b)
    if not sa or not sb or (sa & sb) or (sa | sb) != set(range(num_vertices)):
        raise NotOpposingFaces(
            f"faces {sorted(sa)} and {sorted(sb)} do not decompose the simplex"
        )


def interpolate(coords: np.ndarray, face_a, face_b, s_a, s_b):
    """Blend two maps along the join parameter of Delta = A * B.

    The parameter t is the barycentric mass on A; the blend equals s_a on A
    (t = 1 there) and s_b on B.  Returns a point-to-point callable.
    """
    pts = np.asarray(coords, dtype=float)
    _check_opposing(pts.shape[0], face_a, face_b)
    a_idx = list(face_a)

    def blended(x):
        b, _ = barycentric_coordinates(pts, np.asarray(x, dtype=float))
        t = float(np.clip(np.sum(b[a_idx]), 0.0, 1.0))
        return t * np.asarray(s_a(x), dtype=float) \
            + (1.0 - t) * np.asarray(s_b(x), dtype=float)

    return blended


def join_map(coords: np.ndarray, face_a, face_b, s_a, s_b):
    """The unique affine map on Delta restricting to s_a on A and s_b on B.

    ``s_a`` and ``s_b`` are affine maps on their faces, given as callables;
    they are read off at the face vertices only.
    """
    pts = np.asarray(coords, dtype=float)
    _check_opposing(pts.shape[0], face_a, face_b)
    values = [None] * pts.shape[0]
    for i in face_a:
        values[i] = np.atleast_1d(np.asarray(s_a(pts[i]), dtype=float))
    for i in face_b:
        values[i] = np.atleast_1d(np.asarray(s_b(pts[i]), dtype=float))
    table = np.array(values, dtype=float)

    def affine(x):
        b, _ = barycentric_coordinates(pts, np.asarray(x, dtype=float))
        return b @ table

    return affine


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def complex_subdivides(parent: SimplicialComplex, child: SimplicialComplex,
                       tol: float = 1e-9) -> bool:
    """Geometric carrier check: child simplices tile parent simplices."""
    if parent.ambient_dim != child.ambient_dim:
        return False
    parent_vols = {s: simplex_volume(parent.coords(s)) for s in parent.top_simplices}
    sums = {s: 0.0 for s in parent.top_simplices}
    for cell in child.top_simplices:
        pts = child.coords(cell)
        center = pts.mean(axis=0)
        carrier = None
        for s in parent.top_simplices:
            b, defect = barycentric_coordinates(parent.coords(s), center)
            if defect <= tol and float(np.min(b)) >= -tol:
                contained = True
                for p in pts:
                    bb, dd = barycentric_coordinates(parent.coords(s), p)
                    if dd > tol or float(np.min(bb)) < -1e-7:
                        contained = False
                        break
                if contained:
                    carrier = s
                    break
        if carrier is None:
            return False
        sums[carrier] += simplex_volume(pts)
    for s, vol in parent_vols.items():
        if vol > 0 and abs(sums[s] - vol) > 1e-6 * vol:
            return False
    return True


def verify_jiggling(f, complex_: SimplicialComplex, g, out_complex: SimplicialComplex,
                    epsilon: float):
    """Is (g, out_complex) an epsilon-jiggling of (f, complex_)?

    True iff out_complex subdivides complex_ and the C1 distance between the
    maps is below epsilon.  Returns ``(ok, details)``.
    """
    subdivides = out_complex is complex_ or complex_subdivides(complex_, out_complex)
    d1 = distance(f, g, order=1) if subdivides else np.inf
    ok = bool(subdivides and d1 < epsilon)
    return ok, {"subdivides": subdivides, "d_C1": float(d1), "epsilon": epsilon}


def is_piecewise_embedding(f: PLMap, tol: float = 1e-9) -> bool:
    """Non-degenerate image simplices plus global injectivity on |K|.

    Injectivity is checked pairwise: the images of two simplices may only
    meet along the image of their shared face, i.e. no two distinct
    simplices have intersecting relative interiors in the image.
    """
    for s in f.domain.top_simplices:
        if len(s) < 2:
            continue
        img = f.image_coords(s)
        try:
            stats = shape_stats(img)
        except DegenerateSimplex:
            return False
        if stats.rmin <= tol * stats.rmax:
            return False
    overlap = find_interior_overlap(f.domain.all_simplices(), f.images, tol)
    return overlap is None
