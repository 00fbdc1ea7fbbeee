"""Brute-force fiber-integral oracle and asymptotic least-squares fits."""
import math
from fractions import Fraction

import numpy as np
import pytest

from fiberasym import (InputError, OracleSample, fit_asymptotics, get_fixture,
                       integrate_fiber, make_symbol, sample_curve)
from fiberasym.oracle import fit_basis_from_schedule
from fiberasym.expansion import pole_schedule


def gauss_sum_sq(x):
    return np.sum(np.asarray(x) ** 2, axis=-1)


def test_integrate_fiber_closed_form_2d():
    # f = |x|^2, g = e^{-t} 1_{t>=0} e^{-|x|^2}: I(z) = pi / (z + 1)
    sym = make_symbol("exp-decay", "gaussian")
    for z in (1e2, 1e4, 1e6):
        s = integrate_fiber(gauss_sum_sq, sym, z, 4.0)
        want = math.pi / (z + 1.0)
        assert s.value == pytest.approx(want, rel=1e-9)
        assert not s.flagged
        assert abs(s.value - want) <= 10.0 * s.error + 1e-15 * want


def test_integrate_fiber_closed_form_3d():
    # same germ in three variables: I(z) = (pi / (z + 1))^{3/2}
    sym = make_symbol("exp-decay", "gaussian", x0=(0.0, 0.0, 0.0))
    z = 100.0
    s = integrate_fiber(gauss_sum_sq, sym, z, (4.0, 3))
    assert s.value == pytest.approx((math.pi / (z + 1.0)) ** 1.5, rel=1e-6)


def test_integrate_fiber_qmc_high_dimension():
    # n >= 4 falls back to quasi-random sampling: low accuracy by design,
    # so only coarse agreement plus a nonzero error proxy are checked
    sym = make_symbol("exp-decay", "gaussian", x0=(0.0,) * 4)
    z = 10.0
    s = integrate_fiber(gauss_sum_sq, sym, z, (2.5, 4))
    assert s.value == pytest.approx((math.pi / (z + 1.0)) ** 2, rel=0.25)
    assert s.error > 0.0


def test_integrate_fiber_rejects_nonpositive_z():
    sym = make_symbol("exp-decay", "gaussian")
    with pytest.raises(InputError):
        integrate_fiber(gauss_sum_sq, sym, 0.0, 4.0)


def test_oracle_linearity_in_symbol():
    cauchy = make_symbol("cauchy", "gaussian")
    expd = make_symbol("exp-decay", "gaussian")
    both = make_symbol("cauchy", "gaussian")
    combined = type(cauchy)(
        func=lambda t, x: cauchy.func(t, x) + expd.func(t, x),
        x0=(0.0, 0.0), t_decay=("power", 2.0), x_decay=("gaussian", 1.0))
    f = lambda x: np.asarray(x)[..., 0] ** 2 - np.asarray(x)[..., 1] ** 2
    z = 1e3
    a = integrate_fiber(f, cauchy, z, 5.0)
    b = integrate_fiber(f, expd, z, 5.0)
    c = integrate_fiber(f, combined, z, 5.0)
    assert c.value == pytest.approx(a.value + b.value, rel=1e-8)


def test_oracle_rotation_invariance():
    # integrand and Gaussian envelope are rotation covariant, so I(z) is too
    sym = make_symbol("cauchy", "gaussian")
    f = lambda x: np.asarray(x)[..., 0] ** 2 - np.asarray(x)[..., 1] ** 2
    phi = 0.7
    c, s = math.cos(phi), math.sin(phi)

    def f_rot(x):
        x = np.asarray(x)
        u = c * x[..., 0] - s * x[..., 1]
        v = s * x[..., 0] + c * x[..., 1]
        return u ** 2 - v ** 2

    z = 1e3
    a = integrate_fiber(f, sym, z, 5.0)
    b = integrate_fiber(f_rot, sym, z, 5.0)
    tol = 3.0 * (a.error + b.error) + 1e-12 * abs(a.value)
    assert abs(a.value - b.value) <= tol


def test_sample_curve_sorts_grid():
    sym = make_symbol("exp-decay", "gaussian")
    samples = sample_curve(gauss_sum_sq, sym, [1e4, 1e2, 1e3], 4.0)
    assert [s.z for s in samples] == [1e2, 1e3, 1e4]
    assert all(isinstance(s, OracleSample) for s in samples)


def test_fit_basis_from_schedule_log_companion():
    basis = fit_basis_from_schedule(pole_schedule(2, 2, 3), 3)
    assert (Fraction(1), 1) in basis and (Fraction(1), 0) in basis
    assert (Fraction(3, 2), 0) in basis


def _synthetic_samples(model, zs):
    return [OracleSample(z=z, value=model(z), error=1e-14 * abs(model(z)),
                         evals=1) for z in zs]


def test_fit_recovers_synthetic_coefficients():
    model = lambda z: 2.0 * math.log(z) / z + 3.0 / z + 0.5 * z ** -1.5
    zs = np.geomspace(1e2, 1e6, 12)
    fit = fit_asymptotics(_synthetic_samples(model, zs),
                          [(1, 1), (1, 0), (Fraction(3, 2), 0)], 3)
    c_log, _ = fit.coefficient_for(1, 1)
    c_lin, _ = fit.coefficient_for(1, 0)
    c_frac, _ = fit.coefficient_for(Fraction(3, 2), 0)
    assert c_log == pytest.approx(2.0, rel=1e-8)
    assert c_lin == pytest.approx(3.0, rel=1e-8)
    assert c_frac == pytest.approx(0.5, rel=1e-6)


def test_fit_stability_under_grid_doubling():
    model = lambda z: 2.0 * math.log(z) / z + 3.0 / z + 0.5 * z ** -1.5
    coarse = fit_asymptotics(_synthetic_samples(model, np.geomspace(1e2, 1e6, 9)),
                             [(1, 1), (1, 0), (Fraction(3, 2), 0)], 3)
    fine = fit_asymptotics(_synthetic_samples(model, np.geomspace(1e2, 1e6, 18)),
                           [(1, 1), (1, 0), (Fraction(3, 2), 0)], 3)
    a, sa = coarse.coefficient_for(1, 1)
    b, sb = fine.coefficient_for(1, 1)
    assert abs(a - b) <= max(sa + sb, 1e-10)


def test_fit_refuses_underdetermined_and_degenerate():
    model = lambda z: 1.0 / z
    samples = _synthetic_samples(model, np.geomspace(1e2, 1e4, 4))
    with pytest.raises(InputError):
        fit_asymptotics(samples, [(1, 0), (2, 0), (3, 0)], 3)
    many = _synthetic_samples(model, np.geomspace(1e2, 1e6, 10))
    with pytest.raises(InputError):
        fit_asymptotics(many, [(1, 0), (1, 0)], 2)   # duplicate column


def test_coefficient_for_missing_term():
    model = lambda z: 1.0 / z
    fit = fit_asymptotics(_synthetic_samples(model, np.geomspace(1e2, 1e6, 8)),
                          [(1, 0), (2, 0)], 2)
    with pytest.raises(InputError):
        fit.coefficient_for(Fraction(5, 2), 0)


def test_fixture_oracle_against_exact_value():
    # gamma-p2 fixture: I(z) = pi / (z + 1) exactly
    fx = get_fixture("gamma-p2")
    s = integrate_fiber(fx.f_full, fx.symbol, 1e3, fx.box)
    assert s.value == pytest.approx(math.pi / 1001.0, rel=1e-9)


def test_samples_to_csv(tmp_path):
    from fiberasym.oracle import samples_to_csv
    sym = make_symbol("exp-decay", "gaussian")
    samples = sample_curve(gauss_sum_sq, sym, [1e2, 1e3], 4.0)
    path = tmp_path / "samples.csv"
    samples_to_csv(samples, path)
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    assert data.shape == (2, 4)
    np.testing.assert_allclose(data[:, 0], [1e2, 1e3])
