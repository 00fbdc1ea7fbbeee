"""Sphere quadrature rules, inverse-power integrals and co-area densities."""
import math

import numpy as np
import pytest

from fiberasym import (Germ, InputError, build_rule, coarea_density,
                       coarea_derivative_at_zero, inverse_power_integral,
                       surface_area)
from fiberasym.errors import UnsupportedCaseError

CONICAL = Germ(n=2, k=2, monomials=((1.0, (2, 0)), (-1.0, (0, 2))))
ELLIPTIC13 = Germ(n=2, k=2, monomials=((1.0, (2, 0)), (3.0, (0, 2))))
ROUND3 = Germ(n=3, k=2, monomials=((1.0, (2, 0, 0)), (1.0, (0, 2, 0)),
                                   (1.0, (0, 0, 2))))


def test_surface_area_values():
    assert surface_area(2) == pytest.approx(2.0 * math.pi, rel=1e-14)
    assert surface_area(3) == pytest.approx(4.0 * math.pi, rel=1e-14)
    assert surface_area(4) == pytest.approx(2.0 * math.pi ** 2, rel=1e-14)


@pytest.mark.parametrize("n,kind", [(2, "uniform-circle"), (3, "product-gauss"),
                                    (4, "monte-carlo")])
def test_rule_weights_sum_to_surface_area(n, kind):
    rule = build_rule(n, 32, kind=kind, seed=1)
    assert rule.weights.sum() == pytest.approx(surface_area(n), rel=1e-12)
    norms = np.linalg.norm(rule.nodes, axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-12)


def test_rule_input_validation():
    with pytest.raises(InputError):
        build_rule(1, 16)
    with pytest.raises(InputError):
        build_rule(2, 0)
    with pytest.raises(UnsupportedCaseError):
        build_rule(3, 16, kind="uniform-circle")
    with pytest.raises(UnsupportedCaseError):
        build_rule(2, 16, kind="no-such-rule")


def test_product_rule_degree_exactness():
    # moments of monomials over S^2: x^2 -> 4pi/3, x^4 -> 4pi/5, x^2 y^2 -> 4pi/15
    rule = build_rule(3, 20, kind="product-gauss")
    x, y, z = rule.nodes.T
    w = rule.weights
    assert np.dot(w, x ** 2) == pytest.approx(4 * math.pi / 3, abs=1e-10)
    assert np.dot(w, z ** 4) == pytest.approx(4 * math.pi / 5, abs=1e-10)
    assert np.dot(w, x ** 2 * y ** 2) == pytest.approx(4 * math.pi / 15, abs=1e-10)
    assert np.dot(w, x * y * z) == pytest.approx(0.0, abs=1e-10)


def test_inverse_power_definite_closed_form():
    # int (cos^2 + 3 sin^2)^{-1} dtheta = 2 pi / sqrt(3)
    val = inverse_power_integral(ELLIPTIC13, 1.0, "all")
    assert val == pytest.approx(2.0 * math.pi / math.sqrt(3.0), rel=1e-9)


def test_inverse_power_region_additivity():
    plus = inverse_power_integral(CONICAL, 0.5, "+")
    minus = inverse_power_integral(CONICAL, 0.5, "-")
    both = inverse_power_integral(CONICAL, 0.5, "all")
    assert plus + minus == pytest.approx(both, rel=1e-9)
    # f and -f swap the two regions
    neg = Germ(n=2, k=2, monomials=((-1.0, (2, 0)), (1.0, (0, 2))))
    assert inverse_power_integral(neg, 0.5, "+") == pytest.approx(minus, rel=1e-9)


def test_inverse_power_rotation_invariance():
    base = inverse_power_integral(CONICAL, 0.5, "all")
    for phi in (0.3, 1.1):
        c, s = math.cos(phi), math.sin(phi)
        R = np.array([[c, -s], [s, c]])
        A = R.T @ np.diag([1.0, -1.0]) @ R
        rot = Germ(n=2, k=2, monomials=((A[0, 0], (2, 0)),
                                        (2.0 * A[0, 1], (1, 1)),
                                        (A[1, 1], (0, 2))))
        val = inverse_power_integral(rot, 0.5, "all")
        assert val == pytest.approx(base, rel=1e-8)


def test_inverse_power_s2_round_sphere():
    # |theta|^2 = 1 on the sphere, so the integrand is 1 for any alpha
    rule = build_rule(3, 40, kind="product-gauss")
    val = inverse_power_integral(ROUND3, 1.5, "all", rule)
    assert val == pytest.approx(4.0 * math.pi, rel=1e-8)


def test_inverse_power_rejects_bad_region():
    with pytest.raises(InputError):
        inverse_power_integral(CONICAL, 0.5, "both")


def test_coarea_density_total_mass():
    # the pushforward density integrates to the sphere measure
    grid = np.linspace(-1.3, 1.3, 1201)
    density = coarea_density(CONICAL, grid)
    total = np.trapezoid(density.values, grid)
    assert total == pytest.approx(2.0 * math.pi, rel=0.01)
    assert density.sample_range[0] == pytest.approx(-1.0, abs=1e-6)
    assert density.sample_range[1] == pytest.approx(1.0, abs=1e-6)


def test_coarea_zero_crossing_sum_exact():
    # |grad_theta (x^2 - y^2)| = 2 at each of the four diagonal zeros
    grid = np.linspace(-1.3, 1.3, 801)
    density = coarea_density(CONICAL, grid)
    assert density.zero_crossing_sum == pytest.approx(2.0, rel=1e-10)


def test_coarea_value_at_zero_matches_crossing_sum():
    grid = np.linspace(-1.3, 1.3, 1601)
    density = coarea_density(CONICAL, grid, rule=build_rule(2, 8192))
    fitted = coarea_derivative_at_zero(density, 0)
    assert fitted == pytest.approx(density.zero_crossing_sum, rel=0.01)


def test_coarea_grid_validation():
    with pytest.raises(InputError):
        coarea_density(CONICAL, np.array([0.0, 1.0]))
    with pytest.raises(InputError):
        coarea_density(CONICAL, np.array([0.0, 1.0, 0.5, 2.0]))
    with pytest.raises(InputError):
        coarea_density(CONICAL, np.linspace(-1, 1, 10), bandwidth=-0.1)


def test_coarea_warns_on_short_grid():
    density = coarea_density(CONICAL, np.linspace(-0.5, 0.5, 101))
    assert density.warnings


def test_derivative_fit_validation():
    grid = np.linspace(-1.3, 1.3, 801)
    density = coarea_density(CONICAL, grid)
    with pytest.raises(InputError):
        coarea_derivative_at_zero(density, -1)
    with pytest.raises(InputError):
        coarea_derivative_at_zero(density, 2, degree=3)


def test_rule_csv_round_trip(tmp_path):
    from fiberasym.sphere import rule_to_csv
    rule = build_rule(2, 16)
    path = tmp_path / "rule.csv"
    rule_to_csv(rule, path)
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    assert data.shape == (16, 3)
    np.testing.assert_allclose(data[:, :2], rule.nodes)
    np.testing.assert_allclose(data[:, 2], rule.weights)
