"""Half-line power brackets, finite parts and Mellin transforms."""
import cmath
import math

import numpy as np
import pytest

from fiberasym import (InputError, SmoothFunction1D, Symbol, canonical_constant,
                       finite_part_bracket, gamma, make_symbol,
                       mellin_oscillatory, mellin_transform, t_power_bracket)
from fiberasym.brackets import power_weighted_integral, smooth_from_callable
from fiberasym.errors import DivergenceError, WrongCaseError


def test_gamma_special_values():
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    assert gamma(1.0) == pytest.approx(1.0, rel=1e-13)
    assert gamma(5.0) == pytest.approx(24.0, rel=1e-13)
    assert gamma(1.25) == pytest.approx(math.gamma(1.25), rel=1e-13)


def test_gamma_recurrence():
    rng = np.random.default_rng(11)
    for _ in range(50):
        x = 0.1 + 10.0 * rng.random()
        assert gamma(x + 1.0) == pytest.approx(x * gamma(x), rel=1e-12)


def test_symbol_validation():
    with pytest.raises(InputError):
        Symbol(func=lambda t, x: 0.0, x0=(0.0,), t_decay=("power", 0.5),
               x_decay=("none",))
    with pytest.raises(InputError):
        Symbol(func=lambda t, x: 0.0, x0=(0.0,), t_decay=("cubic", 1.0),
               x_decay=("none",))


def test_symbol_decay_spot_check():
    sym = make_symbol("cauchy", "gaussian")
    assert sym.check_t_decay() == []


def test_exp_weight_closed_form():
    # int_0^inf t^alpha e^{-t} dt = Gamma(1 + alpha)
    sym = make_symbol("exp-decay", "none", x0=(0.0, 0.0))
    for alpha in (-0.5, 0.0, 0.5, 2.0):
        res = t_power_bracket(sym, alpha, "+")
        assert res.value == pytest.approx(math.gamma(1.0 + alpha), rel=1e-9)
        assert abs(res.value - math.gamma(1.0 + alpha)) <= 10 * res.error + 1e-12


def test_one_sided_profile_vanishes_on_minus_side():
    sym = make_symbol("exp-decay", "none", x0=(0.0, 0.0))
    res = t_power_bracket(sym, 0.5, "-")
    assert abs(res.value) < 1e-12


def test_cauchy_weight_closed_form():
    # int_0^inf t^alpha / (1 + t^2) dt = (pi/2) sec(pi alpha / 2), |alpha| < 1
    sym = make_symbol("cauchy", "none", x0=(0.0, 0.0))
    for alpha in (-0.5, 0.0, 0.5):
        want = (math.pi / 2.0) / math.cos(math.pi * alpha / 2.0)
        res = t_power_bracket(sym, alpha, "+")
        assert res.value == pytest.approx(want, rel=1e-7)


def test_bracket_scaling_covariance():
    # <t^alpha, h(ct)> = c^{-alpha-1} <t^alpha, h>
    alpha = 0.5
    base = power_weighted_integral(lambda t: math.exp(-t), alpha, ("exp", 1.0))[0]
    for c in (0.5, 2.0, 7.0):
        scaled = power_weighted_integral(lambda t: math.exp(-c * t), alpha,
                                         ("exp", c))[0]
        assert scaled == pytest.approx(c ** (-alpha - 1.0) * base, rel=1e-8)


def test_bracket_divergence_refusals():
    sym = make_symbol("exp-decay", "none", x0=(0.0, 0.0))
    with pytest.raises(DivergenceError):
        t_power_bracket(sym, -1.0, "+")
    cau = make_symbol("cauchy", "none", x0=(0.0, 0.0))
    with pytest.raises(DivergenceError):
        t_power_bracket(cau, 1.5, "+")   # t^{1.5}/(1+t^2) not integrable
    with pytest.raises(InputError):
        t_power_bracket(sym, 0.5, "pm")


def test_canonical_constant_value():
    # C_{3,2} = (1/2) prod_{j=1..3} (-1)/(j - 3/2) = 4/3
    assert canonical_constant(3, 2) == pytest.approx(4.0 / 3.0, rel=1e-14)


def _exp_phi():
    return SmoothFunction1D(
        value=lambda w: math.exp(-w),
        derivs_at_zero=tuple((-1.0) ** j for j in range(9)),
        decay=("exp", 1.0),
        nth_derivative=lambda j: (lambda w, s=(-1.0) ** j: s * math.exp(-w)))


def test_finite_part_exponential_closed_form():
    # (1/k) FP int w^{-3/2} e^{-w} dw = Gamma(-1/2)/2 = -sqrt(pi)
    res = finite_part_bracket(_exp_phi(), 3, 2, "+")
    assert res.value == pytest.approx(-math.sqrt(math.pi), rel=1e-8)


def test_finite_part_taylor_vs_derivative_path():
    phi = _exp_phi()
    a = finite_part_bracket(phi, 3, 2, "+", method="taylor")
    b = finite_part_bracket(phi, 3, 2, "+", method="derivative")
    assert a.value == pytest.approx(b.value, rel=1e-6)


def test_finite_part_order_independence():
    phi = _exp_phi()
    lo = finite_part_bracket(phi, 3, 2, "+", order=1)
    hi = finite_part_bracket(phi, 3, 2, "+", order=2)
    assert lo.value == pytest.approx(hi.value, rel=1e-6)


def test_finite_part_reduces_to_plain_integral():
    # phi vanishing near 0: FP == ordinary integral, subtraction terms inert

    def shifted(w):
        return math.exp(-((w - 1.0) / 0.2) ** 2) if w > 0.4 else 0.0

    phi = SmoothFunction1D(value=shifted, derivs_at_zero=(0.0,) * 9,
                           support=3.0, breakpoints=(0.4,))
    res = finite_part_bracket(phi, 3, 2, "+")
    from scipy.integrate import quad
    direct, _ = quad(lambda w: w ** -1.5 * shifted(w), 0.4, 3.0,
                     epsabs=1e-13, epsrel=1e-13)
    assert res.value == pytest.approx(direct / 2.0, rel=1e-8)


def test_finite_part_refusals():
    phi = _exp_phi()
    with pytest.raises(WrongCaseError):
        finite_part_bracket(phi, 4, 2, "+")   # n/k integer: logarithmic case
    with pytest.raises(InputError):
        finite_part_bracket(phi, 3, 2, "+", order=0)
    bare = SmoothFunction1D(value=lambda w: math.exp(-w),
                            derivs_at_zero=(1.0, -1.0), decay=("exp", 1.0))
    with pytest.raises(InputError):
        finite_part_bracket(bare, 3, 2, "+", method="derivative")


def test_mellin_gamma_identity():
    for xi in (0.3, 0.7, 1.6, 2.5):
        got = mellin_transform(lambda t: math.exp(-t), xi, ("exp", 1.0))
        assert abs(got - math.gamma(xi)) < 1e-9 * math.gamma(xi)


def test_mellin_cauchy_closed_form():
    # M[1/(1+t^2)](xi) = (pi/2) / sin(pi xi / 2) on 0 < xi < 2
    for xi in (0.5, 1.0, 1.5):
        got = mellin_transform(lambda t: 1.0 / (1.0 + t * t), xi, ("power", 2.0))
        want = (math.pi / 2.0) / math.sin(math.pi * xi / 2.0)
        assert abs(got - want) < 1e-8 * abs(want)


def test_mellin_strip_refusals():
    with pytest.raises(DivergenceError):
        mellin_transform(lambda t: math.exp(-t), -0.2, ("exp", 1.0))
    with pytest.raises(DivergenceError):
        mellin_transform(lambda t: 1.0 / (1.0 + t * t), 2.5, ("power", 2.0))


def test_mellin_oscillatory_identity():
    for xi in (0.5, 1.5):
        for sign, s in (("+", 1.0), ("-", -1.0)):
            got = mellin_oscillatory(xi, sign)
            want = cmath.exp(1j * s * math.pi * xi / 2.0) * math.gamma(xi)
            assert abs(got - want) < 1e-3


def test_smooth_from_callable_builds_derivatives():
    phi = smooth_from_callable(lambda w: math.exp(-w),
                               lambda j: (-1.0) ** j, decay=("exp", 1.0))
    assert phi.deriv0(3) == -1.0
    with pytest.raises(InputError):
        phi.deriv0(20)
