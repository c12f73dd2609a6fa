from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from homlab.geometry import JumpDatum, OrientedCube, RationalDirection, axis_cube, make_frame
from homlab.integrand import SurfaceIntegrand
from homlab.medium import constant, iid_cells, sample_medium
from homlab.surface_cell import (
    N4,
    N8,
    assemble_cut_graph,
    brute_force_min,
    brute_force_min_int,
    calibrate_metrication,
    get_neighborhood,
    rasterize,
    solve_min_cut,
    surface_cell_value,
)

E1 = RationalDirection.axis(0, 2)
E2 = RationalDirection.axis(1, 2)
TILTED = RationalDirection((3, 4), 5)
DIRS = [E1, E2, -E2, TILTED, -TILTED, RationalDirection((5, 12), 13)]


def perimeter(kind, seed=0):
    return SurfaceIntegrand(sample_medium(kind, seed))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(DIRS), st.sampled_from(["n4", "n8"]),
       st.integers(-2, 2), st.integers(-2, 2), st.sampled_from([5, 6]))
def test_flow_matches_enumeration(seed, nu, nb, hx, hy, side):
    kind = iid_cells((1, 2, 3, 4, 5), probs=(0.2,) * 5)
    g = perimeter(kind, seed)
    nb = get_neighborhood(nb, 1.0, 1.0)
    datum = JumpDatum((Fraction(hx, 2), Fraction(hy, 2)), (1.0,), nu)
    graph = assemble_cut_graph(g, datum, axis_cube((0, 0), side), nb, precision=1)
    res = solve_min_cut(graph)
    assert res.value_int == brute_force_min_int(graph)
    assert graph.cut_weight_int(res.labels) == res.value_int
    assert res.value_int <= graph.cut_weight_int(graph.datum_labels)


def test_irrational_weights_also_match_enumeration():
    g = perimeter(iid_cells((1, 3)), 4)
    graph = assemble_cut_graph(g, JumpDatum((0, 0), (1.0,), TILTED), axis_cube((0, 0), 6), N8)
    assert solve_min_cut(graph).value == brute_force_min(graph)


def test_ring_and_free_counts():
    cells = rasterize(axis_cube((0, 0), 4))
    assert cells.member.sum() == 16 and cells.ring.sum() == 12


@pytest.mark.parametrize("t", [4, 8, 32])
@pytest.mark.parametrize("nu", [E1, E2, -E1])
def test_constant_medium_axis_cut_is_flat(t, nu):
    g = perimeter(constant(2.5))
    cube = OrientedCube((0, 0), t, make_frame(nu))
    res = surface_cell_value(g, JumpDatum((0, 0), (1.0,), nu), cube)
    assert res.value == 2.5 * t and res.normalized == 2.5


def test_small_cubes_rejected():
    with pytest.raises(ValueError):
        surface_cell_value(perimeter(constant(1)), JumpDatum((0, 0), (1.0,), E2), axis_cube((0, 0), 3))


def test_flipped_datum_gives_identical_integer_value():
    g = perimeter(iid_cells((1, 3)), 9)
    for nu in (E2, TILTED):
        a = surface_cell_value(g, JumpDatum((0, 0), (1.0,), nu), OrientedCube((0, 0), 16, make_frame(nu)))
        b = surface_cell_value(g, JumpDatum((0, 0), (-1.0,), -nu), OrientedCube((0, 0), 16, make_frame(-nu)))
        assert a.value_int == b.value_int


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([1.0, 2.0, 4.0]))
def test_value_scales_with_coefficients(seed, lam):
    g = perimeter(iid_cells((1, 3)), seed)
    cube = OrientedCube((0, 0), 10, make_frame(TILTED))
    datum = JumpDatum((0, 0), (1.0,), TILTED)
    base = surface_cell_value(g, datum, cube)
    scaled = surface_cell_value(g.with_field(g.field.scaled(lam)), datum, cube)
    assert scaled.value_int == lam * base.value_int


def test_bracketed_by_constant_media():
    cube = OrientedCube((0, 0), 16, make_frame(TILTED))
    datum = JumpDatum((0, 0), (1.0,), TILTED)
    lo = surface_cell_value(perimeter(constant(1.0)), datum, cube).value
    hi = surface_cell_value(perimeter(constant(3.0)), datum, cube).value
    mid = surface_cell_value(perimeter(iid_cells((1, 3)), 2), datum, cube).value
    assert lo <= mid <= hi


def test_metrication_reference_values():
    assert calibrate_metrication(N4, E1) == 1.0
    assert calibrate_metrication(N4, E2) == 1.0
    # lattice cut of a (3,4)/5 line: (|3| + |4|) / 5 per unit length
    assert calibrate_metrication(N4, TILTED) == pytest.approx(1.4, rel=1e-6)
    assert calibrate_metrication(N4, RationalDirection((5, 12), 13)) == pytest.approx(17 / 13, rel=1e-6)
    assert calibrate_metrication(N8, E1) == pytest.approx(1.0, abs=1e-6)
    assert calibrate_metrication(N8, TILTED) < calibrate_metrication(N4, TILTED)


def test_metrication_rejects_short_strips():
    with pytest.raises(ValueError):
        calibrate_metrication(N4, E1, strip_length=8)


def test_overflow_guard():
    g = perimeter(constant(1000.0))
    with pytest.raises(OverflowError):
        surface_cell_value(g, JumpDatum((0, 0), (1.0,), E2), axis_cube((0, 0), 64), precision=2.0**30)
