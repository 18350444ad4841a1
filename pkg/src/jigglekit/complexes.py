"""Ordered simplicial complexes in R^N and their subdivisions.

Vertices carry a global order (their index into the vertex table) and every
simplex is stored as a strictly increasing tuple of vertex ids.  Complexes are
face closed: storing a top simplex stores all of its faces.

The two subdivision operators, crystalline and barycentric, both return the
child complex together with a :class:`SubdivisionMap` that remembers exact
rational barycentric supports for every child vertex.  Exactness is what makes
subdivision well defined on shared faces: a child vertex produced from two
different parent simplices gets the same support key and therefore the same
id and the same floating point coordinates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from .errors import (
    AmbientMismatch,
    DegenerateSimplex,
    DomainMismatch,
    FaceIntersectionViolation,
    QueryNotInComplex,
)

DEGENERACY_REL_TOL = 1e-12
_INTERIOR_TOL = 1e-9


# ---------------------------------------------------------------------------
# basic simplex geometry
# ---------------------------------------------------------------------------

def simplex_volume(coords: np.ndarray) -> float:
    """Unsigned m-volume of the simplex spanned by the rows of ``coords``."""
    pts = np.asarray(coords, dtype=float)
    m = pts.shape[0] - 1
    if m == 0:
        return 0.0
    edges = pts[1:] - pts[0]
    gram = edges @ edges.T
    det = float(np.linalg.det(gram))
    if det < 0.0:
        det = 0.0
    vol = np.sqrt(det)
    for i in range(2, m + 1):
        vol /= i
    return float(vol)


def point_to_affine_span(point: np.ndarray, coords: np.ndarray) -> float:
    """Distance from ``point`` to the affine span of the rows of ``coords``."""
    pts = np.asarray(coords, dtype=float)
    base = pts[0]
    rel = np.asarray(point, dtype=float) - base
    if pts.shape[0] == 1:
        return float(np.linalg.norm(rel))
    dirs = pts[1:] - base
    q, _ = np.linalg.qr(dirs.T, mode="reduced")
    proj = q @ (q.T @ rel)
    return float(np.linalg.norm(rel - proj))


@dataclass(frozen=True)
class ShapeStats:
    """Shape numbers of a single simplex: rmin, rmax and the coefficient
    amplification factor lam (how large barycentric-direction coefficients can
    get for a unit displacement)."""

    rmin: float
    rmax: float
    lam: float


def shape_stats(coords: np.ndarray) -> ShapeStats:
    """Compute :class:`ShapeStats` for a simplex of dimension >= 1.

    ``lam`` is the maximum over coefficient vectors lambda with
    ``|sum_i lambda_i (v_i - v_0)| = 1`` of ``max_i |lambda_i|``; for a
    non-degenerate simplex this equals the largest Euclidean row norm of the
    pseudo-inverse of the edge matrix.
    """
    pts = np.asarray(coords, dtype=float)
    m = pts.shape[0] - 1
    if m < 1:
        raise DegenerateSimplex("shape_stats needs a simplex of dimension >= 1")
    rmax = 0.0
    for i in range(m + 1):
        for j in range(i + 1, m + 1):
            rmax = max(rmax, float(np.linalg.norm(pts[i] - pts[j])))
    rmin = np.inf
    for i in range(m + 1):
        others = np.delete(pts, i, axis=0)
        rmin = min(rmin, point_to_affine_span(pts[i], others))
    if not (rmin > DEGENERACY_REL_TOL * rmax) or rmax == 0.0:
        raise DegenerateSimplex(
            f"simplex is degenerate (rmin={rmin:.3e}, rmax={rmax:.3e})"
        )
    edges = (pts[1:] - pts[0]).T  # N x m
    pinv = np.linalg.pinv(edges)
    lam = float(np.max(np.linalg.norm(pinv, axis=1)))
    return ShapeStats(rmin=float(rmin), rmax=rmax, lam=lam)


# ---------------------------------------------------------------------------
# the complex itself
# ---------------------------------------------------------------------------

class SimplicialComplex:
    """A finite simplicial complex embedded in R^N.

    Construct through :func:`build_complex`; the raw constructor trusts its
    input (used by the subdivision code, which is correct by construction).
    """

    def __init__(self, ambient_dim: int, vertices: np.ndarray,
                 top_simplices: list[tuple[int, ...]]):
        self.ambient_dim = int(ambient_dim)
        self.vertices = np.array(vertices, dtype=float)
        self.vertices.setflags(write=False)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != self.ambient_dim:
            raise AmbientMismatch(
                f"vertex table has shape {self.vertices.shape}, expected "
                f"(*, {self.ambient_dim})"
            )
        by_dim: dict[int, set[tuple[int, ...]]] = {}
        for simplex in top_simplices:
            s = tuple(sorted(simplex))
            if len(set(s)) != len(s):
                raise FaceIntersectionViolation(f"repeated vertex in simplex {simplex}")
            if s and (s[0] < 0 or s[-1] >= len(self.vertices)):
                raise QueryNotInComplex(f"vertex id out of range in {simplex}")
            for r in range(1, len(s) + 1):
                for face in itertools.combinations(s, r):
                    by_dim.setdefault(r - 1, set()).add(face)
        self._simplices: dict[int, tuple[tuple[int, ...], ...]] = {
            d: tuple(sorted(faces)) for d, faces in sorted(by_dim.items())
        }
        self._membership = {s for faces in self._simplices.values() for s in faces}
        tops = []
        covered: set[tuple[int, ...]] = set()
        for d in sorted(self._simplices, reverse=True):
            for s in self._simplices[d]:
                if s in covered:
                    continue
                tops.append(s)
                for r in range(1, len(s)):
                    covered.update(itertools.combinations(s, r))
        self._tops = tuple(sorted(tops, key=lambda s: (-len(s), s)))
        self._vertex_to_simplices: dict[int, tuple[tuple[int, ...], ...]] | None = None

    # -- queries ----------------------------------------------------------

    @property
    def dim(self) -> int:
        return max(self._simplices) if self._simplices else -1

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def top_simplices(self) -> tuple[tuple[int, ...], ...]:
        """Maximal simplices, sorted by decreasing dimension then id order."""
        return self._tops

    def simplices_of_dim(self, d: int) -> tuple[tuple[int, ...], ...]:
        return self._simplices.get(d, ())

    def all_simplices(self) -> list[tuple[int, ...]]:
        out: list[tuple[int, ...]] = []
        for d in sorted(self._simplices):
            out.extend(self._simplices[d])
        return out

    def __contains__(self, simplex) -> bool:
        return tuple(sorted(simplex)) in self._membership

    def coords(self, simplex) -> np.ndarray:
        return self.vertices[list(simplex)]

    def _incident(self, vid: int) -> tuple[tuple[int, ...], ...]:
        if self._vertex_to_simplices is None:
            table: dict[int, list[tuple[int, ...]]] = {}
            for s in self.all_simplices():
                for v in s:
                    table.setdefault(v, []).append(s)
            self._vertex_to_simplices = {v: tuple(ss) for v, ss in table.items()}
        return self._vertex_to_simplices.get(vid, ())

    def containing_top_simplex(self, point, tol: float = 1e-9):
        """Locate a top simplex containing ``point`` (barycentric test)."""
        p = np.asarray(point, dtype=float)
        best = None
        best_defect = np.inf
        for s in self._tops:
            b, defect = barycentric_coordinates(self.coords(s), p)
            worst = max(defect, -min(float(np.min(b)), 0.0))
            if worst < best_defect:
                best, best_defect = s, worst
            if worst <= tol:
                return s
        if best is not None and best_defect <= 1e-6:
            return best
        raise QueryNotInComplex(f"point {p.tolist()} is not in the complex")


def barycentric_coordinates(coords: np.ndarray, point: np.ndarray):
    """Barycentric coordinates of ``point`` w.r.t. simplex ``coords``.

    Returns ``(b, defect)`` where ``defect`` is the residual distance between
    ``point`` and the barycentric combination (nonzero when the point is off
    the simplex's affine span).
    """
    pts = np.asarray(coords, dtype=float)
    p = np.asarray(point, dtype=float)
    m = pts.shape[0] - 1
    if m == 0:
        return np.array([1.0]), float(np.linalg.norm(p - pts[0]))
    edges = (pts[1:] - pts[0]).T
    sol, *_ = np.linalg.lstsq(edges, p - pts[0], rcond=None)
    b = np.empty(m + 1)
    b[1:] = sol
    b[0] = 1.0 - float(np.sum(sol))
    defect = float(np.linalg.norm(edges @ sol - (p - pts[0])))
    return b, defect


# ---------------------------------------------------------------------------
# validation helpers
# ---------------------------------------------------------------------------

def relative_interiors_intersect(a: np.ndarray, b: np.ndarray,
                                 tol: float = _INTERIOR_TOL) -> bool:
    """Decide whether the relative interiors of two simplices intersect.

    Solved as a small LP: find barycentric weights for both simplices that
    meet in one point while keeping every weight at least ``t``; the interiors
    intersect iff the optimal ``t`` is positive.
    """
    pa = np.asarray(a, dtype=float)
    pb = np.asarray(b, dtype=float)
    shift = np.mean(np.vstack([pa, pb]), axis=0)
    scale = max(
        float(np.max(np.abs(pa - shift))),
        float(np.max(np.abs(pb - shift))),
        1.0,
    )
    pa = (pa - shift) / scale
    pb = (pb - shift) / scale
    na, nb = pa.shape[0], pb.shape[0]
    dim = pa.shape[1]
    nvar = na + nb + 1
    c = np.zeros(nvar)
    c[-1] = -1.0
    a_eq = np.zeros((dim + 2, nvar))
    a_eq[:dim, :na] = pa.T
    a_eq[:dim, na:na + nb] = -pb.T
    a_eq[dim, :na] = 1.0
    a_eq[dim + 1, na:na + nb] = 1.0
    b_eq = np.zeros(dim + 2)
    b_eq[dim] = 1.0
    b_eq[dim + 1] = 1.0
    a_ub = np.zeros((na + nb, nvar))
    a_ub[:na, :na] = -np.eye(na)
    a_ub[na:, na:na + nb] = -np.eye(nb)
    a_ub[:, -1] = 1.0
    b_ub = np.zeros(na + nb)
    bounds = [(0.0, 1.0)] * (na + nb) + [(None, 1.0)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    if not res.success:
        return False
    return float(res.x[-1]) > tol


def _bboxes(coord_list):
    lo = np.array([np.min(c, axis=0) for c in coord_list])
    hi = np.array([np.max(c, axis=0) for c in coord_list])
    return lo, hi


def _facet_pair_disjoint(shared: list[int], si: tuple, sj: tuple,
                         coords_i: np.ndarray, coords_j: np.ndarray,
                         tol: float):
    """Decide relint-disjointness for two same-dim simplices sharing a facet.

    Returns True (disjoint), False (overlap), or None (inconclusive, caller
    falls back to the LP).  The decision: if the free apexes leave the shared
    facet's span in independent directions the interiors cannot meet; if the
    pair is coplanar the apexes must sit on opposite sides of the facet.
    """
    m = len(si) - 1
    if len(sj) != len(si) or len(shared) != m:
        return None
    apex_i = coords_i[[k for k, v in enumerate(si) if v not in shared][0]]
    apex_j = coords_j[[k for k, v in enumerate(sj) if v not in shared][0]]
    facet = coords_i[[k for k, v in enumerate(si) if v in shared]]
    base = facet[0]
    scale = max(1.0, float(np.max(np.abs(facet - base))))
    if facet.shape[0] > 1:
        q, _ = np.linalg.qr((facet[1:] - base).T, mode="reduced")
    else:
        q = np.zeros((facet.shape[1], 0))
    vi = (apex_i - base) - q @ (q.T @ (apex_i - base))
    vj = (apex_j - base) - q @ (q.T @ (apex_j - base))
    ni, nj = np.linalg.norm(vi), np.linalg.norm(vj)
    if ni <= tol * scale or nj <= tol * scale:
        return None
    cosang = float(vi @ vj) / (ni * nj)
    if cosang < -tol:
        return True
    if cosang > tol:
        # same side only overlaps when the two simplices are coplanar
        residual = np.linalg.norm(vj - (vj @ vi) / (ni * ni) * vi)
        if residual > tol * scale:
            return True
        return False
    return None


def _sat_group(pa: np.ndarray, pb: np.ndarray, tol: float) -> np.ndarray:
    """Vectorized separating-axis test over a batch of simplex pairs.

    ``pa`` has shape (m, ka, n) and ``pb`` shape (m, kb, n).  The candidate
    axes per pair are the base-point difference, the combined edge
    directions, and the edge normals (2D) or pairwise edge cross products
    (3D); for full-dimensional pairs the latter are the facet normals of
    the Minkowski difference, so the candidate set is complete, and the
    extra directions cover the collinear and coplanar configurations a
    structured mesh produces in bulk.

    Strict separation along any axis keeps even the closures apart.  Weak
    separation certifies too, provided one simplex has positive extent
    along the axis: a linear functional attaining its extremum at a
    relative interior point is constant, so touching is then confined to
    boundaries.  Returns a boolean per pair; False is not a verdict, the
    caller must still run the exact test.
    """
    m, ka, n = pa.shape
    kb = pb.shape[1]
    scale = np.maximum(
        1.0,
        np.maximum(np.abs(pa).max(axis=(1, 2)), np.abs(pb).max(axis=(1, 2))),
    )
    gap = (tol * scale)[:, None]
    ra, sa = np.triu_indices(ka, 1)
    rb, sb = np.triu_indices(kb, 1)
    edges = np.concatenate([pa[:, sa] - pa[:, ra], pb[:, sb] - pb[:, rb]],
                           axis=1)
    if n == 2:
        normals = np.stack([-edges[..., 1], edges[..., 0]], axis=-1)
    else:
        i, j = np.triu_indices(edges.shape[1], 1)
        normals = np.cross(edges[:, i], edges[:, j])
    axes = np.concatenate([pa[:, :1] - pb[:, :1], edges, normals], axis=1)
    norms = np.linalg.norm(axes, axis=2)
    keep = norms > 1e-14 * scale[:, None]
    axes = axes / np.where(keep, norms, 1.0)[..., None]
    da = np.einsum("mkn,man->mka", pa, axes)
    db = np.einsum("mkn,man->mka", pb, axes)
    a0, a1 = da.min(axis=1), da.max(axis=1)
    b0, b1 = db.min(axis=1), db.max(axis=1)
    strict = (a1 <= b0 - gap) | (b1 <= a0 - gap)
    extent = (a1 - a0 > gap) | (b1 - b0 > gap)
    weak = (a1 <= b0 + gap) | (b1 <= a0 + gap)
    return ((strict | (extent & weak)) & keep).any(axis=1)


def _sat_disjoint(pa: np.ndarray, pb: np.ndarray, tol: float) -> bool:
    """Certify relint-disjointness of one simplex pair by separation."""
    if pa.shape[1] not in (2, 3):
        return False
    return bool(_sat_group(pa[None], pb[None], tol)[0])


_SAT_CHUNK = 4096


def _sat_disjoint_many(pairs, coords, tol: float) -> np.ndarray:
    """Run the separating-axis certificate over indexed candidate pairs.

    ``pairs`` holds (i, j) indices into ``coords``; pairs are grouped by
    their vertex-count signature so each group runs as one batch.
    """
    out = np.zeros(len(pairs), dtype=bool)
    if not pairs or coords[pairs[0][0]].shape[1] not in (2, 3):
        return out
    groups: dict[tuple[int, int], list[int]] = {}
    for t, (i, j) in enumerate(pairs):
        key = (coords[i].shape[0], coords[j].shape[0])
        groups.setdefault(key, []).append(t)
    for ts in groups.values():
        for lo_t in range(0, len(ts), _SAT_CHUNK):
            chunk = ts[lo_t:lo_t + _SAT_CHUNK]
            pa = np.stack([coords[pairs[t][0]] for t in chunk])
            pb = np.stack([coords[pairs[t][1]] for t in chunk])
            out[chunk] = _sat_group(pa, pb, tol)
    return out


def find_interior_overlap(simplices: list[tuple[int, ...]],
                          vertex_coords: np.ndarray,
                          tol: float = _INTERIOR_TOL):
    """Find a pair of simplices whose relative interiors intersect.

    ``simplices`` index into ``vertex_coords`` (which need not be the
    complex's own table: image coordinates reuse this for embedding checks).
    Pairs in a face relation are skipped.  Returns the offending pair or
    None.
    """
    sims = list(simplices)
    coords = [vertex_coords[list(s)] for s in sims]
    if not sims:
        return None
    lo, hi = _bboxes(coords)
    pad = tol * max(1.0, float(np.max(hi - lo)))
    sets = [set(s) for s in sims]
    candidates = []
    for i in range(len(sims)):
        overlap = np.all(lo[i] <= hi + pad, axis=1) & np.all(lo <= hi[i] + pad, axis=1)
        for j in range(i + 1, len(sims)):
            if not overlap[j]:
                continue
            if sets[i] <= sets[j] or sets[j] <= sets[i]:
                continue
            shared = sorted(sets[i] & sets[j])
            if len(shared) == len(sims[i]) - 1 and len(sims[i]) == len(sims[j]):
                verdict = _facet_pair_disjoint(shared, sims[i], sims[j],
                                               coords[i], coords[j], tol)
                if verdict is True:
                    continue
                if verdict is False:
                    return sims[i], sims[j]
            candidates.append((i, j))
    certified = _sat_disjoint_many(candidates, coords, tol)
    for (i, j), ok in zip(candidates, certified):
        if ok:
            continue
        if relative_interiors_intersect(coords[i], coords[j], tol):
            return sims[i], sims[j]
    return None


def validate_complex(complex_: SimplicialComplex, tol: float = _INTERIOR_TOL):
    """Check the two geometric complex invariants.

    Raises :class:`DegenerateSimplex` when a maximal simplex is flat and
    :class:`FaceIntersectionViolation` when two simplices meet in a set that
    is not a common face (equivalently: their relative interiors intersect
    although they are not the same simplex).
    """
    for s in complex_.top_simplices:
        if len(s) >= 2:
            shape_stats(complex_.coords(s))  # raises DegenerateSimplex
    bad = find_interior_overlap(complex_.all_simplices(), complex_.vertices, tol)
    if bad is not None:
        raise FaceIntersectionViolation(
            f"simplices {bad[0]} and {bad[1]} overlap in a non-face"
        )


def build_complex(ambient_dim: int, vertices, simplices,
                  validate: bool = True) -> SimplicialComplex:
    """Build a face-closed complex from a vertex table and simplex id lists."""
    cx = SimplicialComplex(ambient_dim, np.asarray(vertices, dtype=float),
                           [tuple(s) for s in simplices])
    if validate:
        validate_complex(cx)
    return cx


# ---------------------------------------------------------------------------
# adjacency
# ---------------------------------------------------------------------------

def _as_simplex_list(complex_: SimplicialComplex, query) -> list[tuple[int, ...]]:
    if isinstance(query, (int, np.integer)):
        query = [(int(query),)]
    elif isinstance(query, tuple) and query and isinstance(query[0], (int, np.integer)):
        query = [query]
    out = []
    for s in query:
        t = tuple(sorted(int(v) for v in s))
        if t not in complex_._membership:
            raise QueryNotInComplex(f"simplex {t} is not in the complex")
        out.append(t)
    return out


def closure(complex_: SimplicialComplex, simplices) -> tuple[tuple[int, ...], ...]:
    """Smallest subcomplex containing the given simplices."""
    seed = _as_simplex_list(complex_, simplices)
    out = set()
    for s in seed:
        for r in range(1, len(s) + 1):
            out.update(itertools.combinations(s, r))
    return tuple(sorted(out, key=lambda s: (len(s), s)))


def star(complex_: SimplicialComplex, query, times: int = 1) -> tuple[tuple[int, ...], ...]:
    """All simplices adjacent to the query (sharing a face) plus their faces.

    ``times`` iterates the operator: ``star(star(...))``.
    """
    current = set(_as_simplex_list(complex_, query))
    for _ in range(times):
        verts = {v for s in current for v in s}
        touched = set()
        for v in verts:
            touched.update(complex_._incident(v))
        current = set(closure(complex_, sorted(touched)))
    return tuple(sorted(current, key=lambda s: (len(s), s)))


def ring(complex_: SimplicialComplex, query) -> tuple[tuple[int, ...], ...]:
    """Closure of the star members that do not touch the query's vertices."""
    st = star(complex_, query)
    qverts = {v for s in _as_simplex_list(complex_, query) for v in s}
    outer = [s for s in st if not qverts.intersection(s)]
    if not outer:
        return ()
    return closure(complex_, outer)


def link(complex_: SimplicialComplex, vertex: int) -> tuple[tuple[int, ...], ...]:
    """Simplices s with vertex not in s and s + vertex in the complex."""
    v = int(vertex)
    if (v,) not in complex_._membership:
        raise QueryNotInComplex(f"vertex {v} is not in the complex")
    out = []
    for s in complex_._incident(v):
        reduced = tuple(u for u in s if u != v)
        if reduced:
            out.append(reduced)
    return tuple(sorted(set(out), key=lambda s: (len(s), s)))


def vlink(complex_: SimplicialComplex, vertex: int) -> tuple[int, ...]:
    """Vertices of the link: the edge neighbors of ``vertex``."""
    return tuple(sorted({s[0] for s in link(complex_, vertex) if len(s) == 1}))


def adjacency(complex_: SimplicialComplex, query, kind: str, times: int = 1):
    """String-dispatched adjacency query used by the CLI."""
    kinds = {
        "star": lambda: star(complex_, query, times),
        "ring": lambda: ring(complex_, query),
        "closure": lambda: closure(complex_, query),
        "link": lambda: link(complex_, query),
        "vlink": lambda: vlink(complex_, query),
    }
    if kind not in kinds:
        raise ValueError(f"unknown adjacency kind {kind!r}")
    return kinds[kind]()


# ---------------------------------------------------------------------------
# subdivision maps
# ---------------------------------------------------------------------------

Support = tuple[tuple[int, Fraction], ...]


@dataclass
class SubdivisionMap:
    """Exact bookkeeping for a subdivision step.

    ``vertex_support`` maps every child vertex id onto its barycentric support
    in parent vertices; the support determines the minimal parent carrier face
    of any child simplex (the union of its vertices' supports).
    """

    parent: SimplicialComplex
    child: SimplicialComplex
    vertex_support: dict[int, Support]

    def carrier_face(self, child_simplex) -> tuple[int, ...]:
        gids: set[int] = set()
        for v in child_simplex:
            gids.update(g for g, _ in self.vertex_support[int(v)])
        return tuple(sorted(gids))

    def children_by_parent_top(self) -> dict[tuple[int, ...], list[tuple[int, ...]]]:
        groups: dict[tuple[int, ...], list[tuple[int, ...]]] = {
            t: [] for t in self.parent.top_simplices
        }
        carrier_cache: dict[tuple[int, ...], tuple[int, ...]] = {}
        for cell in self.child.top_simplices:
            carrier = self.carrier_face(cell)
            if carrier in groups:
                groups[carrier].append(cell)
                continue
            # carrier is a proper face: attach to the first parent top holding it
            if carrier not in carrier_cache:
                for t in self.parent.top_simplices:
                    if set(carrier) <= set(t):
                        carrier_cache[carrier] = t
                        break
            groups[carrier_cache[carrier]].append(cell)
        return groups

    def volume_defect(self) -> float:
        """Largest relative defect between a parent volume and the sum of its
        children's volumes."""
        worst = 0.0
        for parent_top, cells in self.children_by_parent_top().items():
            pv = simplex_volume(self.parent.coords(parent_top))
            cv = sum(simplex_volume(self.child.coords(c)) for c in cells)
            if pv > 0:
                worst = max(worst, abs(pv - cv) / pv)
        return worst


class _VertexInterner:
    """Dedup table for subdivision vertices keyed by exact rational support."""

    def __init__(self, parent: SimplicialComplex):
        self.parent = parent
        self.coords: list[np.ndarray] = [parent.vertices[i] for i in range(parent.num_vertices)]
        self.support: dict[int, Support] = {
            i: ((i, Fraction(1)),) for i in range(parent.num_vertices)
        }
        self._table: dict[Support, int] = {
            ((i, Fraction(1)),): i for i in range(parent.num_vertices)
        }

    def intern(self, support: Support) -> int:
        vid = self._table.get(support)
        if vid is not None:
            return vid
        point = np.zeros(self.parent.ambient_dim)
        for gid, frac in support:
            point = point + float(frac) * self.parent.vertices[gid]
        vid = len(self.coords)
        self.coords.append(point)
        self.support[vid] = support
        self._table[support] = vid
        return vid

    def build(self, child_tops: list[tuple[int, ...]]) -> tuple[SimplicialComplex, dict[int, Support]]:
        child = SimplicialComplex(self.parent.ambient_dim,
                                  np.array(self.coords), child_tops)
        return child, dict(self.support)


# ---------------------------------------------------------------------------
# crystalline subdivision
# ---------------------------------------------------------------------------

def _identity_subdivision(complex_: SimplicialComplex) -> SubdivisionMap:
    support = {i: ((i, Fraction(1)),) for i in range(complex_.num_vertices)}
    return SubdivisionMap(parent=complex_, child=complex_, vertex_support=support)


def compose_subdivisions(first: SubdivisionMap, second: SubdivisionMap) -> SubdivisionMap:
    """Chain two subdivision steps into one exact map.

    ``second`` must subdivide ``first.child``; the result maps
    ``second.child`` vertices onto supports over ``first.parent`` with exact
    rational weights.
    """
    if second.parent is not first.child:
        raise DomainMismatch("subdivision maps do not chain")
    support: dict[int, Support] = {}
    for vid, outer in second.vertex_support.items():
        acc: dict[int, Fraction] = {}
        for mid, w in outer:
            for gid, inner_w in first.vertex_support[mid]:
                acc[gid] = acc.get(gid, Fraction(0)) + w * inner_w
        support[vid] = tuple(sorted(acc.items()))
    return SubdivisionMap(parent=first.parent, child=second.child,
                          vertex_support=support)


def crystalline_subdivide(complex_: SimplicialComplex, levels: int):
    """Crystalline subdivision at dyadic depth ``levels``.

    Each ordered m-simplex is included into the unit m-cube as the region
    ``0 <= y_1 <= ... <= y_m <= 1`` (vertex j of the simplex goes to the 0/1
    vector with j zeros).  The cube is cut into ``2**(levels*m)`` subcubes and
    each subcube into ``m!`` permutation cells; the cells lying inside the
    simplex's region (decided exactly by integer barycenter comparisons) pull
    back to the children.  ``levels = 0`` returns the complex unchanged.

    Returns ``(child_complex, SubdivisionMap)``.
    """
    if levels < 0:
        raise ValueError("levels must be >= 0")
    if levels == 0:
        return complex_, _identity_subdivision(complex_)
    scale = 2 ** levels
    interner = _VertexInterner(complex_)
    child_tops: list[tuple[int, ...]] = []
    seen: set[tuple[int, ...]] = set()
    for top in sorted(complex_.top_simplices):
        m = len(top) - 1
        if m == 0:
            child_tops.append(top)
            continue
        for z in itertools.product(range(scale), repeat=m):
            for chain in itertools.permutations(range(m)):
                # staircase vertices of the permutation cell, integer coords
                cube_vertices = [list(z)]
                for t in range(m):
                    nxt = list(cube_vertices[-1])
                    nxt[chain[m - 1 - t]] += 1
                    cube_vertices.append(nxt)
                csum = [sum(v[i] for v in cube_vertices) for i in range(m)]
                if any(csum[i] >= csum[i + 1] for i in range(m - 1)):
                    continue
                ids = []
                for u in cube_vertices:
                    ns = (0, *u, scale)
                    support = tuple(
                        (top[j], Fraction(ns[j + 1] - ns[j], scale))
                        for j in range(m + 1)
                        if ns[j + 1] != ns[j]
                    )
                    ids.append(interner.intern(support))
                cell = tuple(sorted(ids))
                if cell not in seen:
                    seen.add(cell)
                    child_tops.append(cell)
    child, support = interner.build(child_tops)
    return child, SubdivisionMap(parent=complex_, child=child, vertex_support=support)


# ---------------------------------------------------------------------------
# barycentric subdivision
# ---------------------------------------------------------------------------

def barycentric_subdivide(complex_: SimplicialComplex):
    """One barycentric subdivision; every m-simplex becomes (m+1)! children."""
    interner = _VertexInterner(complex_)

    def face_barycenter(face: tuple[int, ...]) -> int:
        frac = Fraction(1, len(face))
        return interner.intern(tuple((g, frac) for g in face))

    child_tops: list[tuple[int, ...]] = []
    seen: set[tuple[int, ...]] = set()
    for top in sorted(complex_.top_simplices):
        if len(top) == 1:
            child_tops.append(top)
            continue
        for perm in itertools.permutations(top):
            chain_ids = []
            for r in range(1, len(perm) + 1):
                chain_ids.append(face_barycenter(tuple(sorted(perm[:r]))))
            cell = tuple(sorted(chain_ids))
            if cell not in seen:
                seen.add(cell)
                child_tops.append(cell)
    child, support = interner.build(child_tops)
    return child, SubdivisionMap(parent=complex_, child=child, vertex_support=support)


# ---------------------------------------------------------------------------
# model classes, niceness, summaries
# ---------------------------------------------------------------------------

def model_classes(complex_: SimplicialComplex, levels: int,
                  decimals: int = 9) -> dict[tuple, int]:
    """Translation classes of the top cells of the level-``levels`` crystalline
    subdivision after rescaling by ``2**levels``.

    Returns a dict mapping canonical shape keys to how often they occur; the
    number of keys is the model class count.
    """
    child, _ = crystalline_subdivide(complex_, levels)
    classes: dict[tuple, int] = {}
    for cell in child.top_simplices:
        pts = child.coords(cell) * float(2 ** levels)
        rows = sorted(tuple(np.round(p, decimals)) for p in pts)
        base = np.array(rows[0])
        key = tuple(
            tuple(float(x) for x in np.round(np.array(r) - base, decimals))
            for r in rows
        )
        classes[key] = classes.get(key, 0) + 1
    return classes


def is_nice(complex_: SimplicialComplex, subcomplex) -> bool:
    """True when every star simplex meets the subcomplex in a single face.

    ``subcomplex`` is a list of simplices of ``complex_`` (face closure is
    taken automatically).
    """
    sub = set(closure(complex_, subcomplex))
    sub_vertices = {s[0] for s in sub if len(s) == 1}
    for s in star(complex_, sorted(sub)):
        shared = tuple(sorted(set(s) & sub_vertices))
        if not shared:
            continue
        if shared not in sub:
            return False
    return True


def complex_shape_extremes(complex_: SimplicialComplex) -> dict[str, float]:
    """Shape summary over the top simplices (used for the scaling laws)."""
    max_rmax = 0.0
    min_rmin = np.inf
    max_lam = 0.0
    max_product = 0.0
    for s in complex_.top_simplices:
        if len(s) < 2:
            continue
        st = shape_stats(complex_.coords(s))
        max_rmax = max(max_rmax, st.rmax)
        min_rmin = min(min_rmin, st.rmin)
        max_lam = max(max_lam, st.lam)
        max_product = max(max_product, st.rmax * st.lam)
    return {
        "max_rmax": max_rmax,
        "min_rmin": float(min_rmin),
        "max_lam": max_lam,
        "max_rmax_lam": max_product,
    }
