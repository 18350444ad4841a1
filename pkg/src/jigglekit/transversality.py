"""Transversality predicates and quantitative margins.

Everything here measures one thing: how far a simplex (or a join with a
movable apex) is from failing transversality against a constant foliation
F(V) or a varying plane distribution xi.  Margins come in two currencies:

* ``semitrans_margin``: a length; how far the apex of a join may move.
* ``eps_margin``: a Grassmannian distance; how far the simplex's plane may
  move.  The value returned is a certified lower bound (smallest principal
  angle), never an estimate from sampling.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateSimplex,
    NotTransverse,
    PreconditionViolated,
)
from .grassmann import (
    AffineFlat,
    Plane,
    affine_span,
    d_proj,
    is_transverse_planes,
    plane_from_spanning,
    point_flat_distance,
    project_along,
)

DEFAULT_SAMPLE_DEPTH = 3


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------

class Distribution:
    """A field of k-planes on R^n.

    ``kind`` is one of ``constant``, ``builtin``, ``sampled``; constant
    fields unlock cheap verification paths (one evaluation suffices).
    """

    def __init__(self, ambient_dim: int, rank: int, kind: str, evaluator,
                 name: str = ""):
        self.ambient_dim = int(ambient_dim)
        self.rank = int(rank)
        self.kind = kind
        self.name = name
        self._eval = evaluator

    def plane_at(self, point) -> Plane:
        plane = self._eval(np.asarray(point, dtype=float))
        if plane.rank != self.rank or plane.ambient_dim != self.ambient_dim:
            raise PreconditionViolated(
                "distribution evaluator returned a plane of wrong rank or dim"
            )
        return plane

    @staticmethod
    def constant(plane: Plane, name: str = "constant") -> "Distribution":
        return Distribution(plane.ambient_dim, plane.rank, "constant",
                            lambda _p: plane, name=name)

    def __repr__(self) -> str:
        return f"Distribution({self.name or self.kind}, n={self.ambient_dim}, k={self.rank})"


# ---------------------------------------------------------------------------
# sampling helpers
# ---------------------------------------------------------------------------

def barycentric_lattice(num_vertices: int, depth: int) -> np.ndarray:
    """All barycentric weight vectors with denominators ``depth``.

    Includes the vertices themselves; ``depth=0`` gives the barycenter only.
    """
    if depth <= 0:
        return np.full((1, num_vertices), 1.0 / num_vertices)
    combos = []
    for cuts in itertools.combinations(range(depth + num_vertices - 1),
                                       num_vertices - 1):
        prev = -1
        parts = []
        for c in (*cuts, depth + num_vertices - 1):
            parts.append(c - prev - 1)
            prev = c
        combos.append(parts)
    return np.array(combos, dtype=float) / depth


def sample_points(coords: np.ndarray, depth: int) -> np.ndarray:
    weights = barycentric_lattice(coords.shape[0], depth)
    return weights @ coords


# ---------------------------------------------------------------------------
# plane of a simplex, basic predicates
# ---------------------------------------------------------------------------

def simplex_plane(coords: np.ndarray) -> Plane:
    """The direction plane Gr of a simplex of dimension >= 1."""
    pts = np.asarray(coords, dtype=float)
    if pts.shape[0] < 2:
        raise DegenerateSimplex("a 0-simplex has no direction plane")
    try:
        return plane_from_spanning(pts[1:] - pts[0])
    except Exception as exc:
        raise DegenerateSimplex(f"simplex directions are dependent: {exc}") from exc


def _faces_of_dim(num_vertices: int, d: int):
    return itertools.combinations(range(num_vertices), d + 1)


def simplex_transverse(coords: np.ndarray, v: Plane, tol: float = 1e-9) -> bool:
    """Transversality of a simplex to the constant foliation F(V).

    Dimension at most n-k: the direction planes must be transverse.  Above
    n-k it suffices that one (n-k)-dimensional face is transverse.
    """
    pts = np.asarray(coords, dtype=float)
    dim = pts.shape[0] - 1
    free = v.ambient_dim - v.rank
    if dim == 0:
        return True
    if dim <= free:
        return is_transverse_planes(simplex_plane(pts), v, tol)
    if free == 0:
        return False
    return any(
        is_transverse_planes(simplex_plane(pts[list(face)]), v, tol)
        for face in _faces_of_dim(pts.shape[0], free)
    )


def eps_margin(coords: np.ndarray, v: Plane) -> float:
    """Certified radius of transversality in the d_proj metric.

    Any plane within this d_proj distance of the simplex's plane is still
    transverse to V.  Computed as the sine of the smallest principal angle
    between the two subspaces: for a unit vector w in D cap V one has
    d_proj(Gr, D) >= dist(w, Gr) >= sin(theta_min).  Returns infinity for
    0-simplices (nothing can fail).
    """
    pts = np.asarray(coords, dtype=float)
    dim = pts.shape[0] - 1
    if dim == 0:
        return np.inf
    if dim > v.ambient_dim - v.rank:
        raise PreconditionViolated(
            "eps_margin expects dim <= n-k; use faces for larger simplices"
        )
    gr = simplex_plane(pts)
    if not is_transverse_planes(gr, v):
        raise NotTransverse("simplex plane is not transverse to V")
    rejected = gr.basis - (gr.basis @ v.basis.T) @ v.basis
    s = np.linalg.svd(rejected, compute_uv=False)
    return float(s[-1])


# ---------------------------------------------------------------------------
# joins with a movable apex
# ---------------------------------------------------------------------------

def _check_join_preconditions(p, coords, v: Plane):
    pts = np.atleast_2d(np.asarray(coords, dtype=float))
    dim = pts.shape[0] - 1
    free = v.ambient_dim - v.rank
    if dim + 1 > free:
        raise PreconditionViolated(
            f"join dimension {dim + 1} exceeds n-k = {free}"
        )
    if not simplex_transverse(pts, v):
        raise PreconditionViolated("base simplex is not transverse to F(V)")
    return np.asarray(p, dtype=float), pts


def join_transverse_by_projection(p, coords, v: Plane, tol: float = 1e-9) -> bool:
    """Transversality of the join <p, Delta> decided by projection criteria.

    Two equivalent criteria are evaluated and cross-checked: the image of p
    under the quotient by V must avoid the projected affine span of Delta,
    and symmetrically p's image under the quotient by Delta's directions
    must avoid the projected V (anchored at a vertex of Delta).
    """
    point, pts = _check_join_preconditions(p, coords, v)

    proj_p = project_along(v, point)
    proj_span = project_along(v, pts)
    flat_v = affine_span(proj_span) if pts.shape[0] > 1 else AffineFlat(proj_span[0], None)
    crit_v = point_flat_distance(proj_p, flat_v) > tol * _scale(point, pts)

    if pts.shape[0] == 1:
        # quotient by a 0-dimensional span: nothing to quotient, compare
        # p against V anchored at the single vertex
        crit_d = point_flat_distance(point, AffineFlat(pts[0], v)) > tol * _scale(point, pts)
    else:
        gr = simplex_plane(pts)
        qp = project_along(gr, point)
        base = project_along(gr, pts[0])
        vbasis_q = project_along(gr, v.basis)
        nz = np.linalg.norm(vbasis_q, axis=1)
        keep = vbasis_q[nz > tol]
        if len(keep) == 0:
            flat_d = AffineFlat(base, None)
        else:
            flat_d = AffineFlat(base, plane_from_spanning(keep))
        crit_d = point_flat_distance(qp, flat_d) > tol * _scale(point, pts)

    direct = simplex_transverse(np.vstack([point[None, :], pts]), v, tol) \
        if not _apex_degenerate(point, pts, tol) else False
    if crit_v != crit_d:
        # the two criteria agree mathematically; numerical disagreement is a
        # borderline configuration, resolved by the direct rank test
        return direct
    return crit_v


def _apex_degenerate(point, pts, tol) -> bool:
    flat = affine_span(pts)
    return point_flat_distance(point, flat) <= tol * _scale(point, pts)


def _scale(point, pts) -> float:
    return max(1.0, float(np.max(np.abs(pts))), float(np.max(np.abs(point))))


def semitrans_margin(p, coords, v: Plane) -> float:
    """The exact distance from pi_V(p) to pi_V(ASpan Delta).

    The apex can move anywhere within this distance (in ambient space, since
    the quotient projection is 1-Lipschitz) while the join <p', Delta> stays
    non-degenerate and transverse to F(V).
    """
    point, pts = _check_join_preconditions(p, coords, v)
    proj_p = project_along(v, point)
    proj_span = project_along(v, pts)
    flat = affine_span(proj_span) if pts.shape[0] > 1 else AffineFlat(proj_span[0], None)
    return point_flat_distance(proj_p, flat)


# ---------------------------------------------------------------------------
# stratified transversality and general position
# ---------------------------------------------------------------------------

def stratified_transverse(coords: np.ndarray, v: Plane, tol: float = 1e-9) -> bool:
    """All faces of the simplex are transverse to F(V)."""
    pts = np.asarray(coords, dtype=float)
    for d in range(1, pts.shape[0]):
        for face in _faces_of_dim(pts.shape[0], d):
            if not simplex_transverse(pts[list(face)], v, tol):
                return False
    return True


def general_position(coords: np.ndarray, xi: Distribution,
                     sample_depth: int = DEFAULT_SAMPLE_DEPTH,
                     tol: float = 1e-9):
    """Sampled check of general position of one simplex against xi.

    Every face must be transverse to the frozen plane xi(x) for each sample
    point x of the simplex (barycentric lattice of the given depth).  Returns
    ``(ok, margin)`` where margin is the smallest certified eps_margin seen
    over faces of dimension <= n-k; the check is exact for constant fields
    and sampled otherwise.
    """
    pts = np.asarray(coords, dtype=float)
    free = xi.ambient_dim - xi.rank
    if xi.kind == "constant":
        samples = pts[:1]
    else:
        samples = sample_points(pts, sample_depth)
    margin = np.inf
    for x in samples:
        plane = xi.plane_at(x)
        for d in range(1, pts.shape[0]):
            for face in _faces_of_dim(pts.shape[0], d):
                fpts = pts[list(face)]
                if not simplex_transverse(fpts, plane, tol):
                    return False, 0.0
                if d <= free:
                    margin = min(margin, eps_margin(fpts, plane))
    return True, float(margin)


def oscillation(xi: Distribution, region, radius: float,
                sample_depth: int = DEFAULT_SAMPLE_DEPTH) -> float:
    """Largest d_proj(xi_x, xi_y) over sampled pairs at distance <= radius.

    ``region`` is either an array of points or a simplex coordinate array
    (then the barycentric lattice is used as the sample set).
    """
    if xi.kind == "constant":
        return 0.0
    pts = np.atleast_2d(np.asarray(region, dtype=float))
    if pts.shape[0] >= 2 and pts.shape[1] == xi.ambient_dim:
        samples = sample_points(pts, sample_depth) if pts.shape[0] <= xi.ambient_dim + 1 \
            else pts
    else:
        samples = pts
    planes = [xi.plane_at(x) for x in samples]
    beta = 0.0
    for i in range(len(samples)):
        for j in range(i + 1, len(samples)):
            if np.linalg.norm(samples[i] - samples[j]) <= radius:
                beta = max(beta, d_proj(planes[i], planes[j]))
    return beta


# ---------------------------------------------------------------------------
# margin transfer arithmetic
# ---------------------------------------------------------------------------

def transfer_margins(kind: str, gamma: float = 0.0, beta: float = 0.0,
                     r: float = 0.0, shape=None, delta: float = 0.0,
                     c: float = 1.0) -> float:
    """Pure arithmetic converting margins between settings.

    kinds:
      fol_change      margin surviving a foliation change of oscillation beta
                      over radius r: gamma - beta*r
      simplex_change  margin surviving moving the whole simplex within r:
                      gamma - 2*beta*r
      zeta            join margin from a semitransversality margin delta and
                      shape stats: c * min(delta, rmin, delta/(lam*rmax))
      eps_from_zeta   Grassmannian margin from a join margin zeta = delta:
                      c * delta / rmax
    All results clamp at zero.
    """
    if kind == "fol_change":
        out = gamma - beta * r
    elif kind == "simplex_change":
        out = gamma - 2.0 * beta * r
    elif kind == "zeta":
        if shape is None:
            raise ValueError("zeta transfer needs shape stats")
        out = c * min(delta, shape.rmin,
                      delta / (shape.lam * shape.rmax))
    elif kind == "eps_from_zeta":
        if shape is None:
            raise ValueError("eps_from_zeta transfer needs shape stats")
        out = c * delta / shape.rmax
    else:
        raise ValueError(f"unknown transfer kind {kind!r}")
    return max(out, 0.0)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class SimplexRecord:
    simplex: tuple
    dim: int
    transverse: bool
    eps_margin: float
    semitrans_margin: float | None = None
    general_position: bool | None = None
    certified: bool = False

    def to_json(self) -> dict:
        return {
            "simplex": list(self.simplex),
            "dim": self.dim,
            "transverse": self.transverse,
            "eps_margin": None if np.isinf(self.eps_margin) else self.eps_margin,
            "semitrans_margin": self.semitrans_margin,
            "general_position": self.general_position,
            "certified": self.certified,
        }


@dataclass
class TransversalityReport:
    records: list[SimplexRecord] = field(default_factory=list)
    min_eps_margin: float = np.inf
    min_semitrans_margin: float | None = None
    margin_tol: float = 0.0
    sampled: bool = True
    passed: bool = False

    def to_json(self) -> dict:
        return {
            "records": [r.to_json() for r in self.records],
            "min_eps_margin": None if np.isinf(self.min_eps_margin) else self.min_eps_margin,
            "min_semitrans_margin": self.min_semitrans_margin,
            "margin_tol": self.margin_tol,
            "sampled": self.sampled,
            "pass": self.passed,
        }


def transversality_report(complex_, vertex_images: np.ndarray, xi: Distribution,
                          sample_depth: int = DEFAULT_SAMPLE_DEPTH,
                          margin_tol: float = 0.0,
                          simplex_filter=None,
                          certificates: dict | None = None) -> TransversalityReport:
    """Assemble per-simplex transversality records for a mapped complex.

    ``vertex_images`` is the image of each complex vertex (a PL map's data).
    ``simplex_filter`` restricts which top simplices are examined; faces of
    the surviving tops are always included.  ``certificates`` optionally
    carries semitransversality margins per simplex (from the perturbation
    search); records holding one are marked certified.
    """
    certificates = certificates or {}
    tops = [s for s in complex_.top_simplices
            if simplex_filter is None or simplex_filter(s)]
    wanted = set()
    for top in tops:
        for r in range(1, len(top) + 1):
            wanted.update(itertools.combinations(top, r))
    report = TransversalityReport(margin_tol=margin_tol,
                                  sampled=xi.kind != "constant")
    min_eps = np.inf
    min_semi = None
    all_ok = True
    for s in sorted(wanted, key=lambda t: (len(t), t)):
        pts = vertex_images[list(s)]
        ok, margin = general_position(pts, xi, sample_depth)
        cert = certificates.get(s)
        semi = None
        if cert is not None:
            semi = float(cert)
            min_semi = semi if min_semi is None else min(min_semi, semi)
        rec = SimplexRecord(
            simplex=s, dim=len(s) - 1, transverse=ok,
            eps_margin=margin if ok else 0.0,
            semitrans_margin=semi,
            general_position=ok if len(s) - 1 >= 1 else None,
            certified=cert is not None,
        )
        report.records.append(rec)
        if len(s) >= 2:
            min_eps = min(min_eps, rec.eps_margin)
        all_ok = all_ok and ok
    report.min_eps_margin = float(min_eps)
    report.min_semitrans_margin = min_semi
    report.passed = bool(all_ok and min_eps > margin_tol)
    return report
