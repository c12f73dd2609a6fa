import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from homlab.integrand import VolumeIntegrand
from homlab.medium import constant, iid_cells, laminate, sample_medium
from homlab.volume_cell import (
    assemble_volume_problem,
    energy,
    gradient_check,
    solve_volume_cell,
    subcube_centers,
)


def vol(kind, p=2.0, seed=0):
    return VolumeIntegrand(sample_medium(kind, seed), p=p)


def test_small_problem_layout():
    pr = assemble_volume_problem(vol(constant(1.0)), [[1.0, 2.0]], t=4, h=1.0)
    assert pr.n_nodes == 5 and pr.pinned.sum() == 16
    # |xi|^2 * t^2 = 5 * 16
    assert pr.affine_energy() == pytest.approx(80.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.sampled_from([4, 8]), st.sampled_from([1.0, 0.5]))
def test_constant_medium_affine_is_optimal(a, b, t, h):
    pr = assemble_volume_problem(vol(constant(1.5)), [[a, b]], t=t, h=h)
    res = solve_volume_cell(pr)
    assert res.normalized == pytest.approx(1.5 * (a * a + b * b), abs=1e-9)


def test_laminate_harmonic_and_arithmetic():
    f = vol(laminate(axis=0, period=2, values=(1.0, 4.0)))
    across = solve_volume_cell(assemble_volume_problem(f, [[1.0, 0.0]], t=16, h=0.25)).normalized
    along = solve_volume_cell(assemble_volume_problem(f, [[0.0, 1.0]], t=16, h=0.25)).normalized
    assert abs(across - 1.6) / 1.6 < 0.05
    assert along == pytest.approx(2.5, abs=1e-9)


@pytest.mark.parametrize("p", [2.0, 3.0, 1.5])
def test_analytic_gradient(p):
    pr = assemble_volume_problem(vol(iid_cells((1, 4)), p=p, seed=3), [[0.7, -0.2]], t=6, h=0.5)
    rng = np.random.default_rng(0)
    u = pr.u0 + 0.1 * rng.normal(size=pr.u0.shape) * ~pr.pinned
    assert gradient_check(pr, u, probe_count=20) < 1e-5


def test_energy_history_is_monotone_and_below_affine():
    pr = assemble_volume_problem(vol(iid_cells((1, 4)), seed=5), [[1.0, 0.0]], t=8, h=0.5)
    res = solve_volume_cell(pr)
    assert res.value <= pr.affine_energy()
    assert all(b <= a + 1e-9 * abs(a) for a, b in zip(res.energies, res.energies[1:]))


def test_nonquadratic_descent_improves_on_affine():
    pr = assemble_volume_problem(vol(iid_cells((1, 4)), p=3.0, seed=1), [[1.0, 0.0]], t=8, h=0.5)
    res = solve_volume_cell(pr, tol=1e-12)
    assert res.value < pr.affine_energy()
    assert energy(pr, res.minimizer) == res.value


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000), st.sampled_from([0.5, 2.0, 3.0]))
def test_homogeneity_in_xi(seed, s):
    f = vol(iid_cells((1, 4)), seed=seed)
    a = solve_volume_cell(assemble_volume_problem(f, [[1.0, 0.5]], t=4, h=0.5), tol=1e-12).value
    b = solve_volume_cell(assemble_volume_problem(f, [[s, 0.5 * s]], t=4, h=0.5), tol=1e-12).value
    assert b == pytest.approx(s * s * a, rel=1e-8)


def test_bad_grid_rejected():
    with pytest.raises(ValueError):
        assemble_volume_problem(vol(constant(1.0)), [[1.0, 0.0]], t=5, h=2.0)
    with pytest.raises(ValueError):
        assemble_volume_problem(vol(constant(1.0)), [[1.0, 0.0, 0.0]], t=4)


def test_subcubes_tile_the_cube():
    centers = subcube_centers((0, 0), 8, 2, k=2)
    assert sorted(tuple(float(c) for c in x) for x in centers) == [(-2, -2), (-2, 2), (2, -2), (2, 2)]


def test_dyadic_pasting_in_a_single_realization():
    f = vol(iid_cells((1, 4)), seed=2)
    big = solve_volume_cell(assemble_volume_problem(f, [[1.0, 0.0]], t=8, h=0.5)).value
    small = sum(solve_volume_cell(assemble_volume_problem(f, [[1.0, 0.0]], center=c, t=4, h=0.5)).value
                for c in subcube_centers((0, 0), 8, 2))
    assert big <= small + 1e-9
