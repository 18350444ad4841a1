import math

import numpy as np
import pytest

from jigglekit.cli import box_grid, planar_rotor, strip, unit_square_grid
from jigglekit.complexes import build_complex, point_to_affine_span, simplex_volume
from jigglekit.engine import (
    JigglingConfig,
    auto_level,
    jiggle_euclidean,
    jiggle_relative,
    jiggle_subdivision,
    jiggle_tower,
)
from jigglekit.errors import (
    BudgetViolation,
    CollarTooSmall,
    LevelExhausted,
    PerturbationFailed,
    PreconditionViolated,
)
from jigglekit.grassmann import Plane
from jigglekit.plmaps import PLMap
from jigglekit.transversality import Distribution, stratified_transverse

HORIZONTAL = Distribution.constant(Plane(np.array([[1.0, 0.0]])))
DIAGONAL = Distribution.constant(Plane(np.array([[1.0, 1.0]]) / math.sqrt(2.0)))
E1_3D = Distribution.constant(Plane(np.array([[1.0, 0.0, 0.0]])))


def grid_setup():
    grid = unit_square_grid(2)
    return grid, PLMap.identity(grid)


def test_config_validation():
    with pytest.raises(PreconditionViolated):
        JigglingConfig(gamma=-0.1)
    with pytest.raises(PreconditionViolated):
        JigglingConfig(gamma=0.2, margin_floor=0.0)
    with pytest.raises(PreconditionViolated):
        JigglingConfig(gamma=0.2, level=-1)
    assert JigglingConfig(gamma=0.2, level="auto").level == "auto"


def test_grid_auto_run_frozen_outcome():
    """The flagship scenario: 8 triangles against a horizontal line field."""
    grid, f = grid_setup()
    out = jiggle_euclidean(f, grid, HORIZONTAL,
                           JigglingConfig(gamma=0.2, level="auto", seed=7))
    assert out.level == 0  # constant field, exactly PL input
    assert out.report.passed
    assert out.moved_count == 3
    assert out.d_c0 == pytest.approx(0.009004954362095552, rel=1e-12)
    assert out.d_c1 == pytest.approx(0.04899121568569967, rel=1e-12)
    assert out.eta == pytest.approx(0.017728780776841913, rel=1e-12)
    assert out.report.min_eps_margin == pytest.approx(0.017118104447469546, rel=1e-12)
    assert out.report.min_semitrans_margin == pytest.approx(0.008605703810482979, rel=1e-12)


def test_grid_run_obeys_budgets_and_kills_horizontal_edges():
    grid, f = grid_setup()
    cfg = JigglingConfig(gamma=0.2, level=0, seed=7)
    out = jiggle_euclidean(f, grid, HORIZONTAL, cfg)
    assert out.d_c1 < 0.2
    assert out.d_c0 < 0.2 * 2.0 ** -out.level
    imgs = out.plmap.images
    for u, w in out.out_complex.simplices_of_dim(1):
        d = imgs[w] - imgs[u]
        assert abs(d[1]) > 1e-9 * np.linalg.norm(d)


def test_grid_determinism_and_idempotence():
    grid, f = grid_setup()
    cfg = JigglingConfig(gamma=0.2, level=0, seed=7)
    first = jiggle_euclidean(f, grid, HORIZONTAL, cfg)
    again = jiggle_euclidean(f, grid, HORIZONTAL, cfg)
    np.testing.assert_array_equal(first.plmap.images, again.plmap.images)
    # feeding the passed outcome back in moves nothing, bitwise
    rerun = jiggle_euclidean(first.plmap, first.out_complex, HORIZONTAL, cfg)
    assert rerun.moved_count == 0
    assert rerun.d_c0 == 0.0
    np.testing.assert_array_equal(rerun.plmap.images, first.plmap.images)


def test_grid_level_two_subdivides_and_passes():
    grid, f = grid_setup()
    out = jiggle_euclidean(f, grid, HORIZONTAL,
                           JigglingConfig(gamma=0.2, level=2, seed=7))
    assert out.out_complex.num_vertices == 81
    assert len(out.out_complex.top_simplices) == 8 * 16
    assert out.moved_count == 36
    assert out.d_c0 == pytest.approx(0.002493164972129321, rel=1e-12)
    assert out.report.passed


def test_gamma_zero_needs_an_already_clean_map():
    grid, f = grid_setup()
    with pytest.raises(BudgetViolation):
        jiggle_euclidean(f, grid, HORIZONTAL,
                         JigglingConfig(gamma=0.0, level=0, seed=1))
    tilt = Distribution.constant(Plane(np.array(
        [[math.cos(0.3), math.sin(0.3)]])))
    out = jiggle_euclidean(f, grid, tilt, JigglingConfig(gamma=0.0, level=0, seed=1))
    assert out.report.passed and out.moved_count == 0
    np.testing.assert_array_equal(out.plmap.images, grid.vertices)


def test_auto_level_is_zero_for_constant_fields_on_pl_input():
    grid, f = grid_setup()
    assert auto_level(f, grid, HORIZONTAL, 0.2) == 0


def test_auto_level_climbs_with_field_oscillation():
    box = box_grid(2)
    f = PLMap.identity(box)
    assert auto_level(f, box, planar_rotor(2.5e-4), 0.2, 1e-3, 8) == 1
    assert auto_level(f, box, planar_rotor(5e-4), 0.2, 1e-3, 8) == 2


def test_auto_level_gives_up_on_oscillation_floors():
    """Nearest-neighbor samples keep a fixed jump however deep we go."""
    box = box_grid(2)
    f = PLMap.identity(box)
    pts = np.array([[0.5, 1.0, 1.0], [1.5, 1.0, 1.0]])
    planes = [Plane(np.array([[1.0, 0.0, 0.0]])),
              Plane(np.array([[0.0, 1.0, 0.0]]))]
    wild = Distribution(3, 1, "samples",
                        lambda p: planes[int(np.argmin(
                            np.linalg.norm(pts - p, axis=1)))])
    with pytest.raises(LevelExhausted):
        auto_level(f, box, wild, 0.2, 1e-3, 8)


def test_tower_outcomes_frozen_margins():
    grid, f = grid_setup()
    outs = jiggle_tower(f, grid, HORIZONTAL, JigglingConfig(gamma=0.2, seed=3),
                        [2, 3])
    assert [o.level for o in outs] == [2, 3]
    assert all(o.report.passed for o in outs)
    assert outs[0].report.min_eps_margin == pytest.approx(0.01659848756602642, rel=1e-12)
    assert outs[1].report.min_eps_margin == pytest.approx(0.016602008663536214, rel=1e-12)
    assert outs[1].d_c0 < outs[0].d_c0


def test_box_complex_against_axis_field():
    box = box_grid(1)
    f = PLMap.identity(box)
    out = jiggle_euclidean(f, box, E1_3D, JigglingConfig(gamma=0.2, level=0, seed=2))
    assert out.report.passed
    assert out.moved_count == 4
    assert out.d_c0 == pytest.approx(0.016824467888473308, rel=1e-12)
    assert out.d_c1 == pytest.approx(0.04890061035604969, rel=1e-12)


def test_fast_turning_field_fails_honestly_at_low_level():
    box = box_grid(1)
    f = PLMap.identity(box)
    with pytest.raises(PerturbationFailed):
        jiggle_euclidean(f, box, planar_rotor(0.5),
                         JigglingConfig(gamma=0.2, level=0, seed=2))


# ---------------------------------------------------------------------------
# subdivision pipeline
# ---------------------------------------------------------------------------

def wedge_pair():
    parent = build_complex(2, [(0, 0), (2, 3), (4, 1)], [(0, 1, 2)])
    fan = build_complex(
        2,
        [(0, 0), (2, 3), (4, 1), (1, 1.5), (2, 1.5)],
        [(0, 3, 4), (1, 3, 4), (1, 2, 4), (0, 2, 4)],
    )
    return parent, fan


def test_subdivision_fan_scenario_frozen_outcome():
    parent, fan = wedge_pair()
    plane = HORIZONTAL.plane_at(np.zeros(2))
    assert stratified_transverse(parent.vertices[[0, 1, 2]], plane)
    assert not stratified_transverse(fan.vertices[[1, 3, 4]], plane)

    out = jiggle_subdivision(parent, fan, HORIZONTAL,
                             JigglingConfig(gamma=0.2, seed=3))
    assert out.report.passed
    assert out.level == 1
    assert out.moved_count == 5
    assert out.out_complex.num_vertices == 57
    assert out.d_c0 == pytest.approx(0.01899639825515754, rel=1e-12)
    assert out.report.min_eps_margin == pytest.approx(0.049928360918929104, rel=1e-12)


def test_subdivision_keeps_vertices_in_their_carriers():
    parent, fan = wedge_pair()
    out = jiggle_subdivision(parent, fan, HORIZONTAL,
                             JigglingConfig(gamma=0.2, seed=3))
    child, img = out.out_complex, out.plmap.images
    for cid in range(3):
        hits = [vid for vid in range(child.num_vertices)
                if np.array_equal(child.vertices[vid], parent.vertices[cid])]
        assert hits and all(np.array_equal(img[v], parent.vertices[cid])
                            for v in hits)
    worst = 0.0
    for vid in range(child.num_vertices):
        for e in ((0, 1), (1, 2), (0, 2)):
            wall = parent.vertices[list(e)]
            if point_to_affine_span(child.vertices[vid], wall) < 1e-12:
                worst = max(worst, point_to_affine_span(img[vid], wall))
    assert worst <= 1e-12


def test_subdivision_preserves_volume_and_transversality():
    parent, fan = wedge_pair()
    out = jiggle_subdivision(parent, fan, HORIZONTAL,
                             JigglingConfig(gamma=0.2, seed=3))
    img = out.plmap.images
    total = sum(simplex_volume(img[list(c)]) for c in out.out_complex.top_simplices)
    target = simplex_volume(parent.vertices[[0, 1, 2]])
    assert abs(total - target) / target <= 1e-9
    plane = HORIZONTAL.plane_at(np.zeros(2))
    assert all(stratified_transverse(img[list(c)], plane)
               for c in out.out_complex.top_simplices)


def test_subdivision_trivial_refinement_is_identity():
    parent, _ = wedge_pair()
    out = jiggle_subdivision(parent, parent, HORIZONTAL,
                             JigglingConfig(gamma=0.2, seed=3))
    assert out.moved_count == 0
    np.testing.assert_array_equal(out.plmap.images, out.out_complex.vertices)


# ---------------------------------------------------------------------------
# relative pipeline
# ---------------------------------------------------------------------------

def test_relative_strip_fixes_the_anchor_edge():
    S = strip(3)
    f = PLMap.identity(S)
    out = jiggle_relative(f, S, DIAGONAL, 0.2, a=[(0, 4)],
                          config=JigglingConfig(gamma=0.2, seed=5))
    assert out.report.passed
    assert out.level == 0
    assert out.moved_count == 1
    assert out.d_c0 == pytest.approx(0.01652473159595071, rel=1e-12)
    assert out.d_c1 == pytest.approx(0.03304946319190142, rel=1e-12)
    child, img = out.out_complex, out.plmap.images
    anchored = [v for v in range(child.num_vertices)
                if abs(child.vertices[v][0]) < 1e-12]
    assert len(anchored) >= 2
    assert all(np.array_equal(img[v], child.vertices[v]) for v in anchored)
    plane = DIAGONAL.plane_at(np.zeros(2))
    assert all(stratified_transverse(img[list(c)], plane)
               for c in child.top_simplices)


def test_relative_collar_raises_at_fixed_level():
    S = strip(3)
    f = PLMap.identity(S)
    with pytest.raises(CollarTooSmall):
        jiggle_relative(f, S, DIAGONAL, 0.2, a=[], b=[(3, 7)], v_radius=0.3,
                        config=JigglingConfig(gamma=0.2, seed=5, level=0))


def test_relative_collar_auto_raises_level_and_freezes_b():
    S = strip(3)
    f = PLMap.identity(S)
    out = jiggle_relative(f, S, DIAGONAL, 0.2, a=[], b=[(3, 7)], v_radius=0.3,
                          config=JigglingConfig(gamma=0.2, seed=5))
    assert out.level == 2
    assert out.moved_count == 10
    assert out.d_c0 == pytest.approx(0.005099030367707335, rel=1e-12)
    child, img = out.out_complex, out.plmap.images
    frozen = [v for v in range(child.num_vertices)
              if abs(child.vertices[v][0] - 3.0) < 1e-12]
    assert len(frozen) == 5
    assert all(np.array_equal(img[v], child.vertices[v]) for v in frozen)
