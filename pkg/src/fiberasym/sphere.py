"""Quadrature on S^{n-1}, singular integrals |f_k|^{-alpha}, co-area density.

n=2 uses equally spaced angles (spectral for periodic smooth integrands) and
an interval-splitting power substitution across the zeros of f_k.  n=3 uses
the Gauss-Legendre x uniform-longitude product rule on the (cos-latitude,
longitude) chart, on which the surface measure is exactly dt dlambda.
n>=4 is Monte Carlo only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from .errors import DivergenceError, InputError, UnsupportedCaseError
from . import germ as germ_mod


def surface_area(n):
    """Surface area of the unit sphere S^{n-1}."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass(frozen=True)
class SphereRule:
    n: int
    nodes: np.ndarray          # (m, n) unit vectors
    weights: np.ndarray        # (m,) positive
    kind: str
    order: int
    seed: int = None
    grid_shape: tuple = None   # (nlat, nlon) for the n=3 product rule


def build_rule(n, order, kind="auto", seed=None):
    """Build a quadrature rule on S^{n-1}.

    kind: "uniform-circle" (n=2), "product-gauss" (n=3), "monte-carlo" (any n).
    "auto" picks the deterministic rule for n<=3 and Monte Carlo above.
    """
    if n < 2 or order < 1:
        raise InputError(f"need n>=2 and order>=1, got n={n}, order={order}",
                         module="sphere", operation="build_rule")
    if kind == "auto":
        kind = {2: "uniform-circle", 3: "product-gauss"}.get(n, "monte-carlo")
    if kind == "uniform-circle":
        if n != 2:
            raise UnsupportedCaseError("uniform-circle rule requires n=2",
                                       module="sphere", operation="build_rule")
        ang = 2.0 * math.pi * np.arange(order) / order
        nodes = np.column_stack([np.cos(ang), np.sin(ang)])
        weights = np.full(order, 2.0 * math.pi / order)
        return SphereRule(2, nodes, weights, kind, order)
    if kind == "product-gauss":
        if n != 3:
            raise UnsupportedCaseError(
                "product-gauss rule implemented for n=3 only; use monte-carlo",
                module="sphere", operation="build_rule")
        t, wt = roots_legendre(order)
        nlon = 2 * order
        lam = 2.0 * math.pi * np.arange(nlon) / nlon
        st = np.sqrt(np.clip(1.0 - t ** 2, 0.0, None))
        x = np.outer(st, np.cos(lam)).ravel()
        y = np.outer(st, np.sin(lam)).ravel()
        z = np.repeat(t, nlon)
        nodes = np.column_stack([x, y, z])
        weights = np.repeat(wt, nlon) * (2.0 * math.pi / nlon)
        return SphereRule(3, nodes, weights, kind, order, grid_shape=(order, nlon))
    if kind == "monte-carlo":
        rng = np.random.default_rng(seed)
        pts = rng.standard_normal((order, n))
        nodes = pts / np.linalg.norm(pts, axis=1, keepdims=True)
        weights = np.full(order, surface_area(n) / order)
        return SphereRule(n, nodes, weights, kind, order, seed=seed)
    raise UnsupportedCaseError(f"unknown rule kind {kind!r}",
                               module="sphere", operation="build_rule")


def integrate_on_sphere(func, rule):
    """Plain weighted node sum of func(nodes)."""
    return float(np.dot(rule.weights, func(rule.nodes)))


# -- inverse power integrals -----------------------------------------------

_GL32 = roots_legendre(32)


def _gl_panel(func, a, b, gl=_GL32):
    x, w = gl
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * float(np.dot(w, func(mid + half * x)))


def _circle_point(theta):
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def _circle_zero_angles(germ, order=None):
    zeros, _, _ = germ_mod.locate_sphere_zeros(germ, order)
    return sorted(math.atan2(z[1], z[0]) % (2.0 * math.pi) for z in zeros)


def _integrate_circle_smooth(func, rel_tol=1e-12):
    """Doubling trapezoid sum over [0, 2pi); spectral for smooth periodic func."""
    m = 64
    prev = None
    for _ in range(12):
        th = 2.0 * math.pi * np.arange(m) / m
        val = 2.0 * math.pi * float(np.mean(func(th)))
        if prev is not None and abs(val - prev) <= rel_tol * (1.0 + abs(val)):
            return val
        prev = val
        m *= 2
    return prev


def _integrate_interval_singular(func, a, b, alpha, rel_tol=1e-11):
    """Integrate func over [a,b] where func ~ dist^{-alpha} at both endpoints.

    Split at the midpoint; on each half substitute the distance from the
    singular endpoint as s = L*u^{1/(1-alpha)}, which flattens the power
    singularity exactly, then composite Gauss panels with doubling.
    """
    q = 1.0 / (1.0 - alpha)
    mid = 0.5 * (a + b)

    def half_integral(end, other):
        L = abs(other - end)
        sgn = 1.0 if other > end else -1.0

        def g(u):
            s = L * u ** q
            return func(end + sgn * s) * L * q * u ** (q - 1.0)

        npanels = 4
        prev = None
        for _ in range(8):
            edges = np.linspace(0.0, 1.0, npanels + 1)
            total = sum(_gl_panel(g, edges[i], edges[i + 1])
                        for i in range(npanels))
            if prev is not None and abs(total - prev) <= rel_tol * (1.0 + abs(total)):
                return total
            prev = total
            npanels *= 2
        return prev

    return half_integral(a, mid) + half_integral(b, mid)


def inverse_power_integral(germ, alpha, region="all", rule=None, rel_tol=1e-9,
                           classification=None):
    """Integral of |f_k(theta)|^{-alpha} over a sign region of the sphere.

    region: '+', '-' or 'all'.  Requires alpha < 1 when the region touches the
    zero set of f_k; any alpha for a definite f_k.
    """
    if region not in ("+", "-", "all"):
        raise InputError(f"unknown region {region!r}",
                         module="sphere", operation="inverse_power_integral")
    if classification is not None and classification.case == germ_mod.UNSUPPORTED:
        raise UnsupportedCaseError("germ classified Unsupported",
                                   module="sphere", operation="inverse_power_integral")
    n = germ.n
    if n == 2:
        return _inverse_power_circle(germ, alpha, region, rel_tol)
    if n == 3:
        return _inverse_power_s2(germ, alpha, region, rule, rel_tol)
    if rule is None or rule.kind != "monte-carlo":
        rule = build_rule(n, 1 << 16, kind="monte-carlo", seed=0)
    vals = germ.eval_fk(rule.nodes)
    if region == "+":
        mask = vals > 0
    elif region == "-":
        mask = vals < 0
    else:
        mask = np.abs(vals) > 0
    if np.any(np.abs(vals[mask]) == 0.0):
        mask &= np.abs(vals) > 0
    return float(np.dot(rule.weights[mask], np.abs(vals[mask]) ** (-alpha)))


def _inverse_power_circle(germ, alpha, region, rel_tol):
    zeros = _circle_zero_angles(germ)
    f = lambda th: germ.eval_fk(_circle_point(th))
    if not zeros:
        sgn = 1.0 if f(np.array([0.0]))[0] > 0 else -1.0
        matches = (region == "all" or (region == "+" and sgn > 0)
                   or (region == "-" and sgn < 0))
        if not matches:
            return 0.0
        return _integrate_circle_smooth(lambda th: np.abs(f(th)) ** (-alpha))
    if alpha >= 1.0:
        raise DivergenceError(
            f"alpha={alpha} >= 1 with a nonempty zero set in the region",
            module="sphere", operation="inverse_power_integral")
    # intervals between consecutive zeros (wrapping around the circle)
    total = {"+": 0.0, "-": 0.0}
    m = len(zeros)
    for i in range(m):
        a = zeros[i]
        b = zeros[(i + 1) % m]
        if i == m - 1:
            b += 2.0 * math.pi
        if b - a < 1e-13:
            continue
        sgn = "+" if f(np.array([0.5 * (a + b)]))[0] > 0 else "-"
        val = _integrate_interval_singular(
            lambda th: np.abs(f(th)) ** (-alpha), a, b, alpha, rel_tol)
        total[sgn] += val
    if region == "all":
        # sum of the per-sign results, so region additivity is exact
        return total["+"] + total["-"]
    return total[region]


def _inverse_power_s2(germ, alpha, region, rule, rel_tol):
    """n=3: adaptive quadrature on the (t, lambda) chart where dtheta = dt dlam."""

    def point(t, lam):
        st = np.sqrt(np.clip(1.0 - t ** 2, 0.0, None))
        return np.stack([st * np.cos(lam), st * np.sin(lam), t], axis=-1)

    def integrand(t, lam):
        v = germ.eval_fk(point(t, lam))
        av = np.abs(v)
        with np.errstate(divide="ignore"):
            out = np.where(av > 0, av ** (-alpha), 0.0)
        if region == "+":
            out = np.where(v > 0, out, 0.0)
        elif region == "-":
            out = np.where(v < 0, out, 0.0)
        return out

    cls = germ_mod.classify(germ)
    definite = cls.is_extremum
    if definite:
        sgn = "+" if cls.case == germ_mod.EXTREMUM_MIN else "-"
        if region not in ("all", sgn):
            return 0.0
        order = 24
        prev = None
        for _ in range(6):
            r = build_rule(3, order, kind="product-gauss")
            val = float(np.dot(r.weights,
                               np.abs(germ.eval_fk(r.nodes)) ** (-alpha)))
            if prev is not None and abs(val - prev) <= rel_tol * (1.0 + abs(val)):
                return val
            prev = val
            order *= 2
        return prev
    if alpha >= 1.0:
        raise DivergenceError(
            f"alpha={alpha} >= 1 with a nonempty zero set in the region",
            module="sphere", operation="inverse_power_integral")

    gl8 = roots_legendre(8)
    gl16 = roots_legendre(16)

    def cell_value(t0, t1, l0, l1, gl):
        xt, wt = gl
        tm, th = 0.5 * (t0 + t1), 0.5 * (t1 - t0)
        lm, lh = 0.5 * (l0 + l1), 0.5 * (l1 - l0)
        T = tm + th * xt
        L = lm + lh * xt
        TT, LL = np.meshgrid(T, L, indexing="ij")
        vals = integrand(TT.ravel(), LL.ravel()).reshape(len(xt), len(xt))
        return th * lh * float(wt @ vals @ wt)

    # worst-first cell subdivision with a fixed budget
    import heapq
    cells = []
    counter = 0
    t_edges = np.linspace(-1.0, 1.0, 5)
    l_edges = np.linspace(0.0, 2.0 * math.pi, 9)
    for i in range(4):
        for j in range(8):
            c = (t_edges[i], t_edges[i + 1], l_edges[j], l_edges[j + 1])
            coarse = cell_value(*c, gl8)
            fine = cell_value(*c, gl16)
            heapq.heappush(cells, (-abs(fine - coarse), counter, c, fine))
            counter += 1
    budget = 4000
    while counter < budget and -cells[0][0] > rel_tol * 0.01:
        _, _, (t0, t1, l0, l1), _ = heapq.heappop(cells)
        tm, lm = 0.5 * (t0 + t1), 0.5 * (l0 + l1)
        for sub in ((t0, tm, l0, lm), (t0, tm, lm, l1),
                    (tm, t1, l0, lm), (tm, t1, lm, l1)):
            coarse = cell_value(*sub, gl8)
            fine = cell_value(*sub, gl16)
            heapq.heappush(cells, (-abs(fine - coarse), counter, sub, fine))
            counter += 1
    return float(sum(item[3] for item in cells))


# -- co-area density --------------------------------------------------------

@dataclass(frozen=True)
class CoareaDensity:
    """Kernel-smoothed density of the sphere measure pushed forward by f_k."""

    w_grid: np.ndarray
    values: np.ndarray
    bandwidth: float
    sample_range: tuple
    zero_crossing_sum: float = None   # exact sum 1/|grad_theta f_k| at zeros (n=2)
    warnings: tuple = ()

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("w,lvol\n")
            for w, v in zip(self.w_grid, self.values):
                fh.write(f"{float(w)!r},{float(v)!r}\n")


def _biweight(u):
    out = np.zeros_like(u)
    m = np.abs(u) < 1.0
    out[m] = (15.0 / 16.0) * (1.0 - u[m] ** 2) ** 2
    return out


def coarea_density(germ, w_grid, rule=None, bandwidth=None):
    """Estimate LVol(w), the pushforward density of the sphere measure under f_k.

    Kernel smoothing of the weighted sample {(f_k(theta_i), w_i)} with a
    biweight kernel.  In n=2 the exact zero-crossing sum sum_z 1/|grad f_k(z)|
    is attached as a cross-check value of LVol(0).
    """
    w_grid = np.asarray(w_grid, dtype=float)
    if w_grid.ndim != 1 or len(w_grid) < 4 or np.any(np.diff(w_grid) <= 0):
        raise InputError("w_grid must be increasing with at least 4 points",
                         module="sphere", operation="coarea_density")
    if rule is None:
        rule = build_rule(germ.n, 2048 if germ.n == 2 else 200, kind="auto")
    samples = germ.eval_fk(rule.nodes)
    lo, hi = float(samples.min()), float(samples.max())
    if bandwidth is None:
        bandwidth = (hi - lo) / 50.0 if hi > lo else 1.0 / 50.0
    if bandwidth <= 0:
        raise InputError("bandwidth must be positive",
                         module="sphere", operation="coarea_density")
    warnings = ()
    if w_grid[0] > lo or w_grid[-1] < hi:
        warnings = (f"w_grid [{w_grid[0]}, {w_grid[-1]}] does not cover the "
                    f"sample range [{lo}, {hi}]; outside mass dropped",)
    values = np.empty_like(w_grid)
    for i0 in range(0, len(w_grid), 64):   # chunked: the full (grid, sample)
        chunk = w_grid[i0:i0 + 64]         # kernel matrix can be very large
        u = (chunk[:, None] - samples[None, :]) / bandwidth
        values[i0:i0 + 64] = (_biweight(u) @ rule.weights) / bandwidth
    zero_sum = None
    if germ.n == 2:
        zeros, _, _ = germ_mod.locate_sphere_zeros(germ)
        if zeros:
            zero_sum = float(sum(
                1.0 / np.linalg.norm(germ_mod.tangential_gradient(
                    germ, z / np.linalg.norm(z))) for z in zeros))
    return CoareaDensity(w_grid=w_grid, values=values, bandwidth=bandwidth,
                         sample_range=(lo, hi), zero_crossing_sum=zero_sum,
                         warnings=warnings)


def coarea_derivative_at_zero(density, order, window_mult=8.0, degree=None):
    """m-th derivative of LVol at w=0 from a local polynomial least-squares fit."""
    if order < 0:
        raise InputError("derivative order must be >= 0",
                         module="sphere", operation="coarea_derivative_at_zero")
    if degree is None:
        degree = order + 2
    if degree < order + 2:
        raise InputError("fit degree must be at least order + 2",
                         module="sphere", operation="coarea_derivative_at_zero")
    window = window_mult * density.bandwidth
    mask = np.abs(density.w_grid) <= window
    if int(mask.sum()) < degree + 1:
        raise InputError(
            f"fit window (+-{window}) holds {int(mask.sum())} grid points, "
            f"need at least {degree + 1}",
            module="sphere", operation="coarea_derivative_at_zero")
    coeffs = np.polynomial.polynomial.polyfit(
        density.w_grid[mask], density.values[mask], degree)
    return float(math.factorial(order) * coeffs[order])


def rule_to_csv(rule, path):
    with open(path, "w") as fh:
        cols = ",".join(f"x{i + 1}" for i in range(rule.n))
        fh.write(cols + ",weight\n")
        for node, w in zip(rule.nodes, rule.weights):
            fh.write(",".join(repr(float(v)) for v in node) + f",{float(w)!r}\n")
