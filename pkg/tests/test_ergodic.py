from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from homlab import ergodic as E
from homlab.geometry import Interval1, RationalDirection
from homlab.integrand import SurfaceIntegrand, VolumeIntegrand
from homlab.medium import constant, iid_cells, mixture, sample_medium
from homlab.parallel import pmap, workers_from_env
from homlab.surface_cell import N4, calibrate_metrication

E2 = RationalDirection.axis(1, 2)
TILTED = RationalDirection((3, 4), 5)


def surf(kind, family="perimeter"):
    return SurfaceIntegrand(sample_medium(kind, 0), family=family)


def iv(a, b):
    return Interval1(Fraction(a), Fraction(b))


def test_mu_flat_constant_medium():
    spec = E.surface_spec(surf(constant(2.0)), (1.0,), E2)
    for t in (2, 5, 12):
        assert E.mu_eval(spec, 0, iv(0, t)) == 2.0 * t


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([E2, TILTED]), st.integers(-10, 10), st.integers(2, 8))
def test_mu_bounds(seed, nu, a, length):
    g = surf(iid_cells((1, 3)), family="amplitude")
    spec = E.surface_spec(g, (1.5,), nu)
    interval = iv(Fraction(a, spec.frame.M), Fraction(a + length, spec.frame.M))
    mu = E.mu_eval(spec, seed, interval)
    kappa = calibrate_metrication(N4, nu)
    # ring-pinned boundary can add at most a few cells on each end
    slack = g.c5 * (1 + 1.5) * 4 / spec.frame.M
    assert 0 <= mu <= g.c5 * (1 + 1.5) * float(interval.length) * kappa + slack


def test_constant_axis_subadditivity_is_tight():
    spec = E.surface_spec(surf(constant(1.0)), (1.0,), E2)
    rep = E.check_subadditivity(spec, 0, iv(0, 8), [2, 5])
    assert rep.slack == 0.0 and rep.passed


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([E2, TILTED]), st.integers(-20, 20),
       st.lists(st.integers(2, 12), min_size=2, max_size=3))
def test_subadditivity_property(seed, nu, a, pieces):
    spec = E.surface_spec(surf(iid_cells((1, 3))), (1.0,), nu)
    M = spec.frame.M
    pts = np.concatenate([[a], a + np.cumsum(pieces)])
    rep = E.check_subadditivity(spec, seed, iv(Fraction(int(pts[0]), M), Fraction(int(pts[-1]), M)),
                                [Fraction(int(p), M) for p in pts[1:-1]])
    assert rep.slack >= 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([E2, TILTED]), st.integers(-5, 5), st.integers(-10, 10))
def test_covariance_property(seed, nu, zp, a):
    spec = E.surface_spec(surf(iid_cells((1, 3))), (1.0,), nu)
    rep = E.check_covariance(spec, seed, iv(a, a + 2), zp)
    assert rep.passed and rep.shifted_interval_value == rep.shifted_field_value


def test_misaligned_or_outside_cuts_rejected():
    spec = E.surface_spec(surf(iid_cells((1, 3))), (1.0,), TILTED)
    with pytest.raises(ValueError):
        E.check_subadditivity(spec, 0, iv(0, 2), [Fraction(1, 3)])
    with pytest.raises(ValueError):
        E.check_subadditivity(spec, 0, iv(0, 2), [3])
    with pytest.raises(ValueError):
        E.mu_eval(spec, 0, iv(0, Fraction(1, 5)))


def test_estimate_ghom_constant_exact():
    s = E.estimate_ghom(E.surface_spec(surf(constant(2.0)), (1.0,), E2), (8, 16, 32), 3)
    assert np.all(s.normalized == 2.0) and s.point_estimate == 2.0 and s.error_bar == 0.0


def test_schedule_must_increase():
    with pytest.raises(ValueError):
        E.estimate_ghom(E.surface_spec(surf(constant(2.0)), (1.0,), E2), (16, 8), 2)


def test_budget_returns_flagged_partial_series():
    s = E.estimate_ghom(E.surface_spec(surf(iid_cells((1, 3))), (1.0,), E2), (8, 16, 32), 2, max_seconds=0.0)
    assert s.partial and s.completed == 1


def test_mixture_estimates_do_not_concentrate():
    s = E.estimate_ghom(E.surface_spec(surf(mixture(constant(1.0), constant(3.0))), (1.0,), E2), (8, 32), 20)
    assert set(np.unique(s.normalized)) == {1.0, 3.0}
    assert s.std[-1] == pytest.approx(s.std[0])


def test_constant_medium_gaps_vanish():
    spec = E.surface_spec(surf(constant(1.5)), (1.0,), TILTED)
    assert E.check_shift_invariance(spec, (3, 2), 16, 2).mean_gap[-1] == 0.0
    rep = E.check_center_independence(spec, (1, 0), (8, 16), 2)
    assert np.all(rep.mean_gap == 0.0) and rep.passed


def test_birkhoff_iid_and_mixture():
    avg = E.birkhoff_average(sample_medium(iid_cells((1.0, 4.0)), 3), z=(1, 0), k_max=10_000)
    # CLT band for a {1,4} coin: std 1.5
    assert abs(avg[-1] - 2.5) <= 3 * 1.5 / np.sqrt(10_000)
    for seed in range(6):
        tail = E.birkhoff_average(sample_medium(mixture(constant(1.0), constant(3.0)), seed), k_max=50)
        assert tail[-1] in (1.0, 3.0)
    const = E.birkhoff_average(sample_medium(constant(2.0), 0), k_max=20)
    assert np.all(const == 2.0)


def test_volume_expectation_is_monotone_under_tiling():
    f = VolumeIntegrand(sample_medium(iid_cells((1.0, 4.0)), 0))
    ex = E.ergodic_expectation_volume(f, [[1.0, 0.0]], (4, 8, 16), 3, h=0.5)
    assert ex.monotone and ex.within.all()


def test_surface_expectation_stays_below_flat_cut():
    spec = E.surface_spec(surf(iid_cells((1, 3))), (1.0,), E2)
    ex = E.ergodic_expectation_surface(spec, (8, 16), 6)
    assert ex.within.all()


def test_surface_table_symmetry_and_brackets():
    g = surf(iid_cells((1, 3)), family="amplitude")
    table = E.surface_table(g, [(2.0, TILTED)], (8, 16), 3)
    a, b = table.entries
    assert a.estimate == b.estimate and table.brackets_ok()


def test_summary_statistics_use_sample_std():
    s = E.EstimateSeries((1, 2), (0, 1, 2), np.zeros((3, 2)), np.array([[1.0, 2.0], [2.0, 2.0], [3.0, 2.0]]))
    assert s.mean.tolist() == [2.0, 2.0] and s.std.tolist() == [1.0, 0.0]
    assert s.concentration_ratio == 0.0


def _square(x):
    return x * x


def test_pmap_order_and_workers(monkeypatch):
    assert pmap(_square, [(i,) for i in range(7)], workers=2) == [i * i for i in range(7)]
    monkeypatch.setenv("HOMLAB_WORKERS", "3")
    assert workers_from_env() == 3
    monkeypatch.setenv("HOMLAB_WORKERS", "many")
    with pytest.raises(ValueError):
        workers_from_env()


def test_parallel_estimates_are_identical():
    spec = E.surface_spec(surf(iid_cells((1, 3))), (1.0,), TILTED)
    a = E.estimate_ghom(spec, (8, 16), 4, workers=1)
    b = E.estimate_ghom(spec, (8, 16), 4, workers=2)
    assert np.array_equal(a.normalized, b.normalized) and a.point_estimate == b.point_estimate
