"""Built-in symbols and end-to-end example problems.

Symbols form a closed registry: the decay envelopes must be trustworthy for
truncation bounds, so user-supplied evaluators are added here in source, not
at runtime from the CLI.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .brackets import Symbol
from .errors import InputError
from .germ import Germ

# -- x envelopes -------------------------------------------------------------

def _x_gaussian(rate=1.0):
    return lambda x: np.exp(-rate * np.sum(np.asarray(x) ** 2, axis=-1)), \
        ("gaussian", rate)


def _x_bump(r_flat=1.5, r_zero=2.5):
    """Smooth radial bump: 1 for |x| <= r_flat, 0 for |x| >= r_zero."""

    def bump(x):
        r = np.sqrt(np.sum(np.asarray(x, dtype=float) ** 2, axis=-1))
        s = np.clip((np.atleast_1d(r) - r_flat) / (r_zero - r_flat), 0.0, 1.0)
        # C^inf transition exp(-1/(1-s)) / (exp(-1/(1-s)) + exp(-1/s))
        out = np.ones_like(s)
        out[s >= 1.0] = 0.0
        mid = (s > 0.0) & (s < 1.0)
        a = np.exp(-1.0 / (1.0 - s[mid]))
        b = np.exp(-1.0 / s[mid])
        out[mid] = a / (a + b)
        return out if np.ndim(r) else float(out[0])

    return bump, ("compact", r_zero)


def _x_none():
    def one(x):
        x = np.asarray(x)
        return np.ones(x.shape[:-1]) if x.ndim > 1 else 1.0

    return one, ("none",)


_X_ENVELOPES = {
    "gaussian": _x_gaussian,
    "bump": _x_bump,
    "none": _x_none,
}

# -- t profiles --------------------------------------------------------------

def _t_exp_onesided():
    return lambda t: np.exp(-np.clip(t, 0.0, 700.0)) * (np.asarray(t) >= 0), \
        ("exp", 1.0), lambda: 1.0


def _t_cauchy():
    return lambda t: 1.0 / (1.0 + np.asarray(t) ** 2), ("power", 2.0), \
        lambda: math.pi


def _t_gauss():
    return lambda t: np.exp(-np.clip(np.asarray(t, dtype=float) ** 2, 0, 700.0)), \
        ("exp", 1.0), lambda: math.sqrt(math.pi)


_T_PROFILES = {
    "exp-decay": _t_exp_onesided,
    "cauchy": _t_cauchy,
    "gauss": _t_gauss,
}


def make_symbol(t_kind, x_kind="gaussian", x0=(0.0, 0.0), x_params=None):
    """Assemble a registry symbol g(t,x) = T(t) * X(x)."""
    if t_kind not in _T_PROFILES:
        raise InputError(f"unknown t profile {t_kind!r}; known: "
                         f"{sorted(_T_PROFILES)}",
                         module="fixtures", operation="make_symbol")
    if x_kind not in _X_ENVELOPES:
        raise InputError(f"unknown x envelope {x_kind!r}; known: "
                         f"{sorted(_X_ENVELOPES)}",
                         module="fixtures", operation="make_symbol")
    tfun, t_decay, t_total = _T_PROFILES[t_kind]()
    xfun, x_decay = _X_ENVELOPES[x_kind](**(x_params or {}))

    def func(t, x):
        return tfun(t) * xfun(x)

    def t_integral(points):
        return t_total() * xfun(points)

    return Symbol(func=func, x0=tuple(x0), t_decay=t_decay, x_decay=x_decay,
                  name=f"{t_kind}*{x_kind}", t_integral=t_integral)


# -- fixtures ----------------------------------------------------------------

@dataclass(frozen=True)
class Fixture:
    name: str
    germ: Germ
    symbol: Symbol
    f_full: object                 # full evaluator used by the oracle
    box: float
    z_grid: tuple
    kind: str                      # "singular" or "regular"
    expected_leading: float = None
    note: str = ""


def _poly_f(germ):
    return lambda x: germ.eval_fk(np.asarray(x) - np.asarray(germ.x0))


def _build_fixtures():
    out = {}

    g_p2 = Germ(n=2, k=2, monomials=((1.0, (2, 0)), (1.0, (0, 2))))
    out["gamma-p2"] = Fixture(
        name="gamma-p2", germ=g_p2,
        symbol=make_symbol("exp-decay", "gaussian"),
        f_full=_poly_f(g_p2), box=4.0,
        z_grid=tuple(np.geomspace(1e2, 1e6, 9)),
        kind="singular", expected_leading=math.pi,
        note="sum-of-squares minimum; exact value pi/(z+1)")

    g_p4 = Germ(n=2, k=4, monomials=((1.0, (4, 0)), (1.0, (0, 4))))
    out["gamma-p4"] = Fixture(
        name="gamma-p4", germ=g_p4,
        symbol=make_symbol("exp-decay", "gaussian"),
        f_full=_poly_f(g_p4), box=4.0,
        z_grid=tuple(np.geomspace(1e2, 1e6, 9)),
        kind="singular",
        expected_leading=4.0 * math.gamma(1.25) ** 2,
        note="quartic minimum; leading (2 Gamma(5/4))^2 z^{-1/2}")

    g_con = Germ(n=2, k=2, monomials=((1.0, (2, 0)), (-1.0, (0, 2))))
    out["conical"] = Fixture(
        name="conical", germ=g_con,
        symbol=make_symbol("cauchy", "gaussian"),
        f_full=_poly_f(g_con), box=5.0,
        z_grid=tuple(np.geomspace(1e2, 1e6, 9)),
        kind="singular", expected_leading=math.pi,
        note="conical singularity; leading pi log(z)/z")

    g_quartic = Germ(n=2, k=4, monomials=((1.0, (4, 0)), (-1.0, (0, 4))))
    out["quartic"] = Fixture(
        name="quartic", germ=g_quartic,
        symbol=make_symbol("cauchy", "gaussian"),
        f_full=_poly_f(g_quartic), box=5.0,
        z_grid=tuple(np.geomspace(1e2, 1e6, 9)),
        kind="singular",
        expected_leading=math.sqrt(math.pi) * math.gamma(0.25) ** 2 / 4.0,
        note="degree-4 principal type; leading ~ 5.8251 z^{-1/2}")

    circle = lambda x: np.sum(np.asarray(x) ** 2, axis=-1) - 1.0
    out["regular-circle"] = Fixture(
        name="regular-circle", germ=g_p2,   # germ unused for the regular case
        symbol=make_symbol("gauss", "bump"),
        f_full=circle, box=3.0,
        z_grid=tuple(np.geomspace(1e2, 1e6, 9)),
        kind="regular",
        expected_leading=math.sqrt(math.pi) * math.pi,
        note="regular fiber (unit circle); leading sqrt(pi)*pi/z")

    return out


FIXTURES = _build_fixtures()


def get_fixture(name):
    if name not in FIXTURES:
        raise InputError(f"unknown fixture {name!r}; known: {sorted(FIXTURES)}",
                         module="fixtures", operation="get_fixture")
    return FIXTURES[name]
