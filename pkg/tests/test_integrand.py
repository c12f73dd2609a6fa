import numpy as np
import pytest

from homlab.integrand import (
    SurfaceIntegrand,
    VolumeIntegrand,
    eval_surface,
    eval_volume,
    validate_surface_axioms,
    validate_volume_axioms,
)
from homlab.medium import constant, iid_cells, laminate, sample_medium


@pytest.mark.parametrize("family", ["perimeter", "amplitude"])
@pytest.mark.parametrize("kind", [iid_cells((1, 3)), laminate(values=(1, 3)), constant(2.0)])
def test_surface_axioms_hold(family, kind):
    g = SurfaceIntegrand(sample_medium(kind, 3), family=family)
    margins = validate_surface_axioms(g, n_samples=5000)
    assert all(v <= 1e-12 for v in margins.values()), margins


def test_surface_axiom_violation_is_detected():
    g = SurfaceIntegrand(sample_medium(iid_cells((1, 3)), 0), c4=2.0)
    assert validate_surface_axioms(g, n_samples=2000)["g5"] > 0


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_volume_axioms_hold(p):
    f = VolumeIntegrand(sample_medium(iid_cells((1, 4)), 1), p=p)
    m = validate_volume_axioms(f, n_samples=5000)
    assert m["f3"] <= 1e-9 and m["f4"] <= 1e-9


def test_point_evaluation():
    f = VolumeIntegrand(sample_medium(constant(2.0), 0), p=3)
    assert eval_volume(f, (0.3, 0.2), [[1.0, 1.0]]) == pytest.approx(2.0 * 2 ** 1.5)
    g = SurfaceIntegrand(sample_medium(constant(2.0), 0), family="amplitude", z_cap=4.0)
    assert eval_surface(g, (0.1, 0.1), [10.0], (0.0, 1.0)) == 2.0 * 5.0
    assert eval_surface(g, (0.1, 0.1), [-1.0], (0.6, -0.8)) == eval_surface(g, (0.1, 0.1), [1.0], (-0.6, 0.8))


def test_surface_evaluation_rejects_bad_input():
    g = SurfaceIntegrand(sample_medium(constant(1.0), 0))
    with pytest.raises(ValueError):
        eval_surface(g, (0, 0), [0.0], (0, 1))
    with pytest.raises(ValueError):
        eval_surface(g, (0, 0), [1.0], (0, 2))


def test_default_constants_follow_medium():
    g = SurfaceIntegrand(sample_medium(iid_cells((1, 3)), 0), family="amplitude", z_cap=2.0)
    assert (g.c3, g.c4, g.c5) == (3.0, 1.0, 3.0)
    assert np.allclose(g.amplitude([0.5, 10.0]), [1.5, 3.0])
