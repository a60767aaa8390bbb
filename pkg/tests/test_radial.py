import numpy as np
import pytest

from sphadi.radial import RadialGrid


@pytest.mark.parametrize("d", [2, 3, 4])
def test_unit_constant_integrates_to_ball_factor(d):
    g = RadialGrid.graded(7.3, d, panel=0.4)
    assert g.integrate(np.ones(g.size)) == pytest.approx(7.3**d / d, rel=1e-10)
    assert np.all(g.nodes > 0) and np.all(g.nodes <= g.R_max) and np.all(g.weights > 0)


def test_geometric_grid_log_integral():
    g = RadialGrid.geometric(1e-6, 1e6, 3)
    # int_{1e-6}^{1e6} dr / r = log(1e12)
    assert g.integrate(1 / g.nodes, power=0) == pytest.approx(np.log(1e12), rel=1e-12)


def test_derivative_exact_for_polynomials():
    g = RadialGrid.graded(3.0, 2, panel=0.5)
    r = g.nodes
    assert np.allclose(g.derivative(r**5 - 2 * r**2), 5 * r**4 - 4 * r, atol=1e-9)
    # deep grading amplifies rounding (panel width 1e-11); use a mild one here
    g = RadialGrid.graded(3.0, 2, panel=0.5, levels=3)
    r = g.nodes
    vals = np.vstack([np.sin(r), np.cos(r)])
    d = g.derivative(vals)
    assert np.allclose(d[0], np.cos(r), atol=1e-12) and np.allclose(d[1], -np.sin(r), atol=1e-12)


def test_refined_interpolation_and_weights():
    g = RadialGrid.graded(4.0, 3, panel=0.5)
    pieces = np.arange(g.n_panels) % 3 + 1
    nodes, dr, apply = g.refined(pieces, 8)
    assert dr.sum() == pytest.approx(4.0, rel=1e-13)
    f = np.exp(-g.nodes) * np.cos(2 * g.nodes)
    assert np.allclose(apply(f), np.exp(-nodes) * np.cos(2 * nodes), atol=1e-11)


def test_invalid_breaks():
    with pytest.raises(ValueError):
        RadialGrid(np.array([0.0, 1.0, 0.5]), 8, 2)


def test_grid_roundtrip():
    g = RadialGrid.graded(2.0, 3)
    h = RadialGrid.from_dict(g.to_dict())
    assert np.array_equal(g.nodes, h.nodes) and np.array_equal(g.weights, h.weights)
