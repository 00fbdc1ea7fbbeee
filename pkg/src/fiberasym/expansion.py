"""Prediction engine: exponent/log schedules and leading-term coefficients.

Covers the extremum case, the three principal-type regimes (non-integrable,
logarithmic, integrable with finite parts), the 1-D radial expansion and the
regular-fiber leading term.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import roots_legendre

from . import germ as germ_mod
from . import sphere as sphere_mod
from .brackets import (BracketResult, SmoothFunction1D, Symbol,
                       finite_part_bracket, power_weighted_integral,
                       t_power_bracket)
from .errors import (ConvergenceError, InputError, UnsupportedCaseError,
                     WrongCaseError)


# -- expansion terms and schedules -----------------------------------------

@dataclass(frozen=True)
class ExpansionTerm:
    exponent: Fraction
    logpower: int
    coefficient: float = None
    pole_order: int = 1

    def __post_init__(self):
        if (self.logpower == 1) != (self.pole_order == 2):
            raise InputError(
                f"term {self.exponent}: logpower={self.logpower} inconsistent "
                f"with pole_order={self.pole_order}",
                module="expansion", operation="ExpansionTerm")
        if self.logpower == 1 and self.exponent.denominator != 1:
            raise InputError(
                f"logarithmic term at non-integer exponent {self.exponent}",
                module="expansion", operation="ExpansionTerm")

    def to_json(self):
        obj = {"num": self.exponent.numerator, "den": self.exponent.denominator,
               "logpower": self.logpower, "pole_order": self.pole_order}
        if self.coefficient is not None:
            obj["coeff"] = self.coefficient
        return obj


@dataclass(frozen=True)
class Prediction:
    case: str
    terms: tuple
    remainder_exponent: Fraction
    remainder_logpower: int
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        with_coeff = [t for t in self.terms if t.coefficient is not None]
        if with_coeff:
            # order terms by (exponent, -logpower): a z^{-e} remainder comes
            # strictly after a z^{-e} log(z) term
            last = max((t.exponent, -t.logpower) for t in with_coeff)
            if (self.remainder_exponent, -self.remainder_logpower) <= last:
                raise InputError(
                    "remainder order must exceed the last computed term",
                    module="expansion", operation="Prediction")

    @property
    def leading(self):
        return self.terms[0]

    def to_json(self):
        return {
            "schema": 1,
            "case": self.case,
            "terms": [t.to_json() for t in self.terms],
            "remainder": {"num": self.remainder_exponent.numerator,
                          "den": self.remainder_exponent.denominator,
                          "logpower": self.remainder_logpower},
            "provenance": self.provenance,
        }


def bernstein_value(xi, n, k, weighted=False):
    """Bernstein-Sato polynomial b_k(xi), or its weighted variant.

    b_k(xi) = (1-xi) prod_{j=1}^k (j - k xi); the weighted form replaces
    (j - k xi) by (j - k xi + n - 1).
    """
    shift = (n - 1) if weighted else 0
    val = 1.0 - xi
    for j in range(1, k + 1):
        val *= j - k * xi + shift
    return float(val)


def pole_schedule(n, k, count):
    """First `count` exponents of the pole lattice {p + (j+n-1)/k}, from n/k up.

    Integer exponents carry a logarithm (double pole); entries below the first
    effective pole n/k never contribute and are discarded.
    """
    if count < 1:
        raise InputError("count must be >= 1",
                         module="expansion", operation="pole_schedule")
    first = Fraction(n, k)
    found = set()
    p = 0
    while len([e for e in found if e >= first]) < count + k:
        for j in range(1, k + 1):
            found.add(p + Fraction(j + n - 1, k))
        p += 1
    exps = sorted(e for e in found if e >= first)[:count]
    terms = []
    for e in exps:
        is_int = e.denominator == 1
        terms.append(ExpansionTerm(exponent=e, logpower=1 if is_int else 0,
                                   pole_order=2 if is_int else 1))
    return terms


# -- leading-term prediction ------------------------------------------------

@dataclass
class GeometryConfig:
    """Sphere-rule and co-area settings consumed by predict_leading."""

    rule: object = None
    w_grid: np.ndarray = None
    bandwidth: float = None
    fit_window_mult: float = 8.0
    fp_order: int = None        # finite-part subtraction order override
    quad_rel_tol: float = 1e-9


def _default_geometry(germ, geometry):
    geo = geometry or GeometryConfig()
    if geo.rule is None:
        geo.rule = sphere_mod.build_rule(
            germ.n, 4096 if germ.n == 2 else 160, kind="auto", seed=0)
    return geo


def _coarea_for(germ, geo):
    samples = germ.eval_fk(geo.rule.nodes)
    lo, hi = float(samples.min()), float(samples.max())
    span = hi - lo
    if geo.w_grid is None:
        pad = 0.05 * span
        geo.w_grid = np.linspace(lo - pad, hi + pad, 801)
    return sphere_mod.coarea_density(germ, geo.w_grid, geo.rule, geo.bandwidth)


def _lvol_side(density, side, max_order=6, window_mult=8.0):
    """SmoothFunction1D view of LVol on one side of w=0 (reflected for '-').

    Inside the fit window the value comes from the same local polynomial that
    supplies the derivatives at 0: the raw kernel estimate carries sampling
    noise at the rule's resolution scale, and a singular finite-part weight
    amplifies any value/derivative mismatch near w=0 without bound.
    """
    grid = density.w_grid
    vals = density.values
    sgn = 1.0 if side == "+" else -1.0
    from scipy.interpolate import CubicSpline
    spline = CubicSpline(grid, vals, extrapolate=False)
    wmax = float(max(abs(grid[0]), abs(grid[-1])))
    window = window_mult * density.bandwidth
    degree = max_order + 2
    mask = np.abs(grid) <= window
    if int(mask.sum()) < degree + 1:
        raise InputError(
            f"fit window (+-{window}) holds {int(mask.sum())} grid points, "
            f"need at least {degree + 1}",
            module="expansion", operation="predict_leading")
    coeffs = np.polynomial.polynomial.polyfit(grid[mask], vals[mask], degree)

    def value(w):
        if w <= window:
            return float(np.polynomial.polynomial.polyval(sgn * w, coeffs))
        v = spline(sgn * w)
        return float(np.nan_to_num(v, nan=0.0))

    derivs = tuple((sgn ** j) * math.factorial(j) * coeffs[j]
                   for j in range(max_order + 1))
    bps = tuple(sorted({window} |
                       {abs(g) for g in grid if window < abs(g) <= wmax}))
    return SmoothFunction1D(value=value, derivs_at_zero=derivs,
                            support=wmax, breakpoints=bps)


def predict_leading(germ, symbol, classification=None, geometry=None):
    """Leading asymptotic term (plus exponent schedule) for the singular part.

    Dispatches on the classification: extremum, principal type with k>n,
    n = kp (logarithmic) or n > k with n/k non-integer (finite parts).
    """
    if classification is None:
        classification = germ_mod.classify(germ)
    case = classification.case
    if case == germ_mod.REGULAR_FIBER:
        raise WrongCaseError("fiber is regular; use regular_leading",
                             module="expansion", operation="predict_leading")
    if case == germ_mod.UNSUPPORTED:
        raise UnsupportedCaseError("germ classified Unsupported",
                                   module="expansion", operation="predict_leading")
    n, k = germ.n, germ.k
    geo = _default_geometry(germ, geometry)
    lead_exp = Fraction(n, k)
    provenance = {"classification": case, "rule_kind": geo.rule.kind,
                  "rule_order": geo.rule.order}

    if classification.is_extremum:
        sign = "+" if case == germ_mod.EXTREMUM_MIN else "-"
        bracket = t_power_bracket(symbol, (n - k) / k, sign)
        sphere_int = sphere_mod.inverse_power_integral(
            germ, n / k, "all", geo.rule, rel_tol=geo.quad_rel_tol)
        coeff = bracket.value * sphere_int / k
        provenance.update({
            "t_bracket": {"value": bracket.value, "error": bracket.error,
                          "sign": sign, "alpha": (n - k) / k},
            "sphere_integral": sphere_int,
        })
        terms = (ExpansionTerm(lead_exp, 0, coefficient=coeff),) + \
            tuple(_extremum_tail_terms(n, k, 3))
        return Prediction(case=case, terms=terms,
                          remainder_exponent=Fraction(n + 1, k),
                          remainder_logpower=0, provenance=provenance)

    # principal type
    if k > n:
        bp = t_power_bracket(symbol, n / k - 1.0, "+")
        bm = t_power_bracket(symbol, n / k - 1.0, "-")
        ip = sphere_mod.inverse_power_integral(germ, n / k, "+", geo.rule,
                                               rel_tol=geo.quad_rel_tol)
        im = sphere_mod.inverse_power_integral(germ, n / k, "-", geo.rule,
                                               rel_tol=geo.quad_rel_tol)
        coeff = (bp.value * ip + bm.value * im) / k
        provenance.update({
            "t_bracket_plus": bp.value, "t_bracket_minus": bm.value,
            "sphere_integral_plus": ip, "sphere_integral_minus": im,
        })
        rem = Fraction(n + 1, k)
        rem_log = 1 if rem.denominator == 1 else 0
        terms = (ExpansionTerm(lead_exp, 0, coefficient=coeff),) + \
            tuple(pole_schedule(n, k, 4)[1:])
        return Prediction(case=case, terms=terms, remainder_exponent=rem,
                          remainder_logpower=rem_log, provenance=provenance)

    if n % k == 0:
        p = n // k
        density = _coarea_for(germ, geo)
        if p == 1 and density.zero_crossing_sum is not None:
            lvol_der = density.zero_crossing_sum
            provenance["lvol_derivative_source"] = "exact-zero-sum"
        else:
            lvol_der = sphere_mod.coarea_derivative_at_zero(
                density, p - 1, window_mult=geo.fit_window_mult)
            provenance["lvol_derivative_source"] = "local-fit"
        bp = t_power_bracket(symbol, float(p - 1), "+")
        bm = t_power_bracket(symbol, float(p - 1), "-")
        t_int = bp.value + bm.value
        coeff = lvol_der * t_int / k
        provenance.update({
            "lvol_derivative": lvol_der, "t_abs_integral": t_int,
            "bandwidth": density.bandwidth,
        })
        terms = (ExpansionTerm(lead_exp, 1, coefficient=coeff, pole_order=2),
                 ExpansionTerm(lead_exp, 0, pole_order=1)) + \
            tuple(pole_schedule(n, k, 4)[1:])
        return Prediction(case=case, terms=terms,
                          remainder_exponent=lead_exp, remainder_logpower=0,
                          provenance=provenance)

    # n > k, n/k not an integer: finite-part pairing against LVol
    density = _coarea_for(germ, geo)
    max_order = max(6, (geo.fp_order or 0) + 1)
    phi_plus = _lvol_side(density, "+", max_order, geo.fit_window_mult)
    phi_minus = _lvol_side(density, "-", max_order, geo.fit_window_mult)
    bp = t_power_bracket(symbol, n / k - 1.0, "+")
    bm = t_power_bracket(symbol, n / k - 1.0, "-")
    fpp = finite_part_bracket(phi_plus, n, k, "+", order=geo.fp_order)
    fpm = finite_part_bracket(phi_minus, n, k, "-", order=geo.fp_order)
    coeff = bp.value * fpp.value + bm.value * fpm.value
    provenance.update({
        "t_bracket_plus": bp.value, "t_bracket_minus": bm.value,
        "finite_part_plus": fpp.value, "finite_part_minus": fpm.value,
        "fp_order": geo.fp_order, "bandwidth": density.bandwidth,
    })
    rem = Fraction(n + 1, k)
    terms = (ExpansionTerm(lead_exp, 0, coefficient=coeff),) + \
        tuple(pole_schedule(n, k, 4)[1:])
    return Prediction(case=case, terms=terms, remainder_exponent=rem,
                      remainder_logpower=1 if rem.denominator == 1 else 0,
                      provenance=provenance)


def _extremum_tail_terms(n, k, count):
    """Schedule-only tail exponents (n+j)/k, logless, for the extremum case."""
    return [ExpansionTerm(Fraction(n + j, k), 0, pole_order=1)
            for j in range(1, count + 1)]


# -- radial expansion (1-D model problem) -----------------------------------

@dataclass(frozen=True)
class RadialAmplitude:
    """Amplitude a(tau, u) with u-derivative access at u=0.

    u_deriv(j) returns a callable tau -> d^j_u a(tau, 0); tau_decay declares
    the tail envelope used for truncation.
    """

    func: object
    u_deriv: object
    tau_decay: tuple

    def __call__(self, tau, u):
        return self.func(tau, u)


def radial_expansion(a, k, jmax):
    """Coefficients d_j = (1/k)(1/j!) int_0^inf tau^{(j+1-k)/k} d^j_u a(tau,0) dtau."""
    out = []
    for j in range(jmax + 1):
        alpha = (j + 1 - k) / k
        h = a.u_deriv(j)
        val, err, _ = power_weighted_integral(lambda t: float(h(t)),
                                              alpha, a.tau_decay)
        out.append(val / (k * math.factorial(j)))
    return out


# -- regular fiber -----------------------------------------------------------

def _t_integral_on_grid(symbol, points):
    """int_R g(t, x) dt for a batch of points, by truncated composite Gauss."""
    if symbol.t_integral is not None:
        return np.asarray(symbol.t_integral(points), dtype=float)
    kind, val = symbol.t_decay
    T = 40.0 / val if kind == "exp" else 1e4
    x16, w16 = roots_legendre(16)
    edges = np.concatenate([-np.geomspace(T, 1e-3, 24), [0.0],
                            np.geomspace(1e-3, T, 24)])
    total = np.zeros(len(points))
    for a, b in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        for xi, wi in zip(x16, w16):
            total += half * wi * np.asarray(
                symbol.func(mid + half * xi, points), dtype=float)
    return total


def regular_leading(f, symbol, eps_seq=(0.2, 0.1, 0.05), box=2.5,
                    cells_across=40, n=2):
    """Leray-measure integral int_S int_R g(t,x) dt d_S(x) over the fiber f=0.

    Realized as the thin-shell limit (1/2 eps) int_{|f|<eps} (int g dt) dx on
    the declared eps sequence, Richardson-extrapolated (shell error ~ eps^2).
    """
    if n != 2:
        raise UnsupportedCaseError(
            "regular_leading thin-shell grids are implemented for n=2",
            module="expansion", operation="regular_leading")
    eps_seq = sorted(eps_seq, reverse=True)
    shells = []
    for eps in eps_seq:
        h = eps / cells_across
        m = int(math.ceil(2.0 * box / h))
        xs = -box + (np.arange(m) + 0.5) * (2.0 * box / m)
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        fv = np.asarray(f(pts), dtype=float)
        mask = np.abs(fv) < eps
        if not np.any(mask):
            raise ConvergenceError(f"no shell mass at eps={eps}",
                                   module="expansion", operation="regular_leading")
        gv = _t_integral_on_grid(symbol, pts[mask])
        cell = (2.0 * box / m) ** 2
        shells.append(float(gv.sum()) * cell / (2.0 * eps))
    diffs = [abs(b - a) for a, b in zip(shells[:-1], shells[1:])]
    if len(diffs) >= 2 and diffs[-1] > diffs[-2] * 1.5:
        raise ConvergenceError(
            f"shell values not converging: {shells}",
            module="expansion", operation="regular_leading")
    # Richardson on the eps^2 error term, assuming a geometric eps sequence
    vals = list(shells)
    level = 1
    while len(vals) > 1:
        r = (eps_seq[0] / eps_seq[1]) ** (2 * level)
        vals = [(r * vals[i + 1] - vals[i]) / (r - 1.0)
                for i in range(len(vals) - 1)]
        level += 1
    return vals[0]
