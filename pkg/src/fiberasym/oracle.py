"""Ground-truth evaluation of I(z) = int g(z f(x), x) dx and asymptotic fits.

The n=2 integrator is a nested 1-D scheme: along each scanline the inner
integral is split at the points where |z f| is small (sign changes and local
minima of |f|), so the adaptive quadrature resolves the thin supporting
region near the fiber even at z ~ 1e6.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate as sp_integrate
from scipy.special import erfc

from .errors import InputError

DEFAULT_Z_GRID = tuple(np.geomspace(1e2, 1e7, 12))


@dataclass(frozen=True)
class OracleSample:
    z: float
    value: float
    error: float
    evals: int
    flagged: bool = False


@dataclass
class QuadConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-13
    limit: int = 400
    scan_points: int = 600
    seed: int = 0
    qmc_points: int = 1 << 16
    line_rel_tol: float = 1e-13   # refinement budget of the scanline integrals


def _tail_bound(symbol, box_halfwidth, n):
    """Crude bound on the integrand mass outside the truncation box."""
    kind = symbol.x_decay[0]
    if kind in ("compact", "none"):
        hw = symbol.x_decay[1] if kind == "compact" else 0.0
        return 0.0 if box_halfwidth >= hw else float("inf")
    rate = symbol.x_decay[1]
    one_dim = math.sqrt(math.pi / rate) * float(erfc(math.sqrt(rate) * box_halfwidth))
    full = math.sqrt(math.pi / rate)
    return n * one_dim * full ** (n - 1)


def _split_points(fvals, xs, fx, z, scan_threshold=100.0):
    """Sign changes (bisected) and near-zero minima of f along a scanline.

    fx maps an x array to f values on the line; the bisection runs on all
    crossings at once.
    """
    pts = []
    av = np.abs(fvals)
    exact = fvals == 0.0
    pts.extend(xs[exact])
    cross = np.flatnonzero(fvals[:-1] * fvals[1:] < 0.0)
    if len(cross):
        lo, hi = xs[cross].copy(), xs[cross + 1].copy()
        flo = fvals[cross].copy()
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            fm = np.asarray(fx(mid), dtype=float)
            left = flo * fm <= 0.0
            hi = np.where(left, mid, hi)
            lo = np.where(left, lo, mid)
            flo = np.where(left, flo, fm)
        pts.extend(0.5 * (lo + hi))
    # interior local minima of |f| in the supporting region |z f| small
    interior = np.flatnonzero(
        (av[1:-1] < av[:-2]) & (av[1:-1] <= av[2:]) &
        (z * av[1:-1] < scan_threshold)) + 1
    pts.extend(xs[interior])
    return sorted(set(float(p) for p in pts))


def integrate_fiber(f, symbol, z, box, quad=None):
    """One oracle sample of I(z) over the box [-L, L]^n.

    f maps points of shape (..., n) to values; symbol supplies g and the decay
    envelopes.  n=2 and n=3 use an adaptive outer quadrature over vectorized
    scanline integrals whose panels are graded toward the fiber crossings;
    n>=4 is seeded quasi-random.
    """
    if z <= 0:
        raise InputError(f"z={z} must be positive",
                         module="oracle", operation="integrate_fiber")
    quad = quad or QuadConfig()
    if np.isscalar(box):
        L, n = float(box), 2
    else:
        L, n = float(box[0]), int(box[1])
    counter = [0]
    tail = _tail_bound(symbol, L, n)
    if n == 2:
        value, qerr = _integrate_2d(f, symbol, z, L, quad, counter)
    elif n == 3:
        value, qerr = _integrate_3d(f, symbol, z, L, quad, counter)
    else:
        value, qerr = _integrate_qmc(f, symbol, z, L, n, quad, counter)
    flagged = not math.isfinite(value) or qerr > max(
        quad.rel_tol * abs(value) * 100.0, quad.abs_tol * 1e4)
    return OracleSample(z=float(z), value=value, error=qerr + tail,
                        evals=counter[0], flagged=flagged)


def _graded_edges(a, b, splits, levels=20, background=17):
    """Panel edges on [a, b], geometrically refined toward each split point."""
    pts = set(np.linspace(a, b, background))
    width = b - a
    for p in splits:
        for j in range(levels):
            h = width * 2.0 ** (-j)
            for e in (p - h, p + h):
                if a < e < b:
                    pts.add(e)
        pts.add(p)
    return np.array(sorted(pts))


def _panel_sums(gx, a, b, gl, counter):
    """Gauss panel values for the batch of intervals [a_i, b_i]."""
    gnodes, gw = gl
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    nodes = (mid[:, None] + half[:, None] * gnodes).ravel()
    gv = np.asarray(gx(nodes), dtype=float)
    counter[0] += nodes.size
    return half * (gv.reshape(len(a), len(gnodes)) @ gw)


def _line_integral(fx, gx, z, L, xs, gl, counter, rel_tol=1e-13, rounds=30):
    """Adaptive vectorized composite Gauss integral of gx(x) over [-L, L].

    fx maps an x array to f values on the line; gx maps an x array to the
    integrand values.  Initial panels are geometrically graded toward each
    point where the line crosses (or nearly touches) the fiber f = 0; panels
    are then bisected in vectorized rounds until the local refinement gain
    drops below the tolerance.
    """
    fvals = np.asarray(fx(xs), dtype=float)
    counter[0] += len(xs)
    splits = [p for p in _split_points(fvals, xs, fx, z) if -L < p < L]
    edges = _graded_edges(-L, L, splits)
    a, b = edges[:-1], edges[1:]
    vals = _panel_sums(gx, a, b, gl, counter)
    total = 0.0
    for _ in range(rounds):
        mid = 0.5 * (a + b)
        left = _panel_sums(gx, a, mid, gl, counter)
        right = _panel_sums(gx, mid, b, gl, counter)
        refined = left + right
        err = np.abs(refined - vals)
        scale = abs(total) + float(np.sum(np.abs(refined)))
        budget = max(rel_tol * scale, 1e-300)
        if float(np.sum(err)) <= budget or len(a) > 4000:
            return total + float(np.sum(refined))
        bad = err > budget / 50.0
        total += float(np.sum(refined[~bad]))
        if not np.any(bad):
            return total
        a = np.concatenate([a[bad], mid[bad]])
        b = np.concatenate([mid[bad], b[bad]])
        vals = np.concatenate([left[bad], right[bad]])
    return total + float(np.sum(vals))


_ORACLE_GL16 = tuple(np.polynomial.legendre.leggauss(16))
_ORACLE_GL32 = tuple(np.polynomial.legendre.leggauss(32))


def _outer_features(f, z, L, ngrid=241, threshold=100.0):
    """y-coordinates the outer quadrature must subdivide at.

    A coarse 2-D scan finds (a) the y-extent of the scanlines that cross the
    fiber and (b) local minima of |f| small enough that |z f| stays below the
    threshold -- isolated supporting regions the outer rule would otherwise
    step over entirely.
    """
    xs = np.linspace(-L, L, ngrid)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    F = np.asarray(f(pts), dtype=float).reshape(ngrid, ngrid)
    extents = set()
    crossing = np.any(F[:, :-1] * F[:, 1:] < 0.0, axis=1)
    if np.any(crossing):
        idx = np.flatnonzero(crossing)
        extents.add(float(xs[idx[0]]))
        extents.add(float(xs[idx[-1]]))
    A = np.abs(F)
    interior = A[1:-1, 1:-1]
    is_min = ((interior <= A[:-2, 1:-1]) & (interior <= A[2:, 1:-1]) &
              (interior <= A[1:-1, :-2]) & (interior <= A[1:-1, 2:]))
    # the grid only resolves |f| down to the cell scale; keep minima that are
    # small at that scale even if z|f| at the grid point overshoots
    cell = 2.0 * L / (ngrid - 1)
    small = interior < max(threshold / z, cell ** 2)
    iy, ix = np.nonzero(is_min & small)
    minima = set()
    for i, j in zip(iy + 1, ix + 1):
        patch = F[i - 1:i + 2, j - 1:j + 2]
        # transversal crossings (sign change in the patch) are resolved by the
        # scanline splits; only sign-definite touch points can be stepped over
        if np.all(patch >= 0.0) or np.all(patch <= 0.0):
            minima.add(float(xs[i]))
    # cluster grid-adjacent hits into one representative per feature
    clustered = []
    for p in sorted(minima):
        if not clustered or p - clustered[-1] > 2.5 * cell:
            clustered.append(p)
    return (sorted(p for p in extents if -L < p < L),
            [p for p in clustered if -L < p < L])


def _slice_2d(f, symbol, y):
    def fx(x_arr):
        pts = np.column_stack([x_arr, np.full(len(x_arr), y)])
        return np.asarray(f(pts), dtype=float)

    def gx_from_f(z):
        def gx(x_arr):
            pts = np.column_stack([x_arr, np.full(len(x_arr), y)])
            return np.asarray(
                symbol.func(z * np.asarray(f(pts), dtype=float), pts),
                dtype=float)
        return gx

    return fx, gx_from_f


def _integrate_2d(f, symbol, z, L, quad, counter):
    xs = np.linspace(-L, L, quad.scan_points)

    def line(y, gl):
        fx, gx_from_f = _slice_2d(f, symbol, y)
        return _line_integral(fx, gx_from_f(z), z, L, xs, gl, counter,
                              rel_tol=quad.line_rel_tol)

    extents, minima = _outer_features(f, z, L)
    points = set(extents)
    # bracket each isolated minimum with geometric rings so the outer rule
    # cannot step across a supporting region narrower than its panels; the
    # narrowest supporting width scales like 1/sqrt(z) for a quadratic germ,
    # and slower for higher-order germs, so grading to ~0.01/sqrt(z) suffices
    jmax = max(4, int(math.ceil(math.log2(100.0 * L * math.sqrt(z)))) + 2)
    for p in minima:
        points.add(p)
        for j in range(2, jmax):
            h = L * 2.0 ** (-j)
            for e in (p - h, p + h):
                if -L < e < L:
                    points.add(e)
    points = sorted(points)
    value, outer_err = sp_integrate.quad(
        lambda y: line(y, _ORACLE_GL16), -L, L,
        limit=max(quad.limit, 2 * len(points) + 10),
        points=points or None,
        epsabs=quad.abs_tol, epsrel=max(quad.rel_tol, 1e-9))
    # inner-rule error: GL16 vs GL32 spread spot-checked on scanlines that
    # include the detected features
    probes = sorted(set(extents) | set(minima) | {-0.5 * L, 0.0, 0.5 * L})
    spread = max(abs(line(y, _ORACLE_GL16) - line(y, _ORACLE_GL32))
                 for y in probes)
    return value, outer_err + spread * 2.0 * L


def _integrate_3d(f, symbol, z, L, quad, counter):
    xs = np.linspace(-L, L, max(quad.scan_points // 3, 100))

    def inner(y, w):
        def fx(x_arr):
            pts = np.column_stack([x_arr, np.full(len(x_arr), y),
                                   np.full(len(x_arr), w)])
            return np.asarray(f(pts), dtype=float)

        def gx(x_arr):
            pts = np.column_stack([x_arr, np.full(len(x_arr), y),
                                   np.full(len(x_arr), w)])
            return np.asarray(
                symbol.func(z * np.asarray(f(pts), dtype=float), pts),
                dtype=float)

        return _line_integral(fx, gx, z, L, xs, _ORACLE_GL16, counter,
                              rel_tol=quad.line_rel_tol)

    def mid(w):
        val, _ = sp_integrate.quad(lambda y: inner(y, w), -L, L,
                                   limit=quad.limit // 4,
                                   epsabs=quad.abs_tol * 1e3,
                                   epsrel=quad.rel_tol * 1e3)
        return val

    value, err = sp_integrate.quad(mid, -L, L, limit=quad.limit // 4,
                                   epsabs=quad.abs_tol * 1e4,
                                   epsrel=quad.rel_tol * 1e4)
    return value, err


def _integrate_qmc(f, symbol, z, L, n, quad, counter):
    from scipy.stats import qmc
    sampler = qmc.Sobol(d=n, scramble=True, seed=quad.seed)
    pts = qmc.scale(sampler.random(quad.qmc_points), [-L] * n, [L] * n)
    vals = np.asarray(symbol.func(z * np.asarray(f(pts), dtype=float), pts),
                      dtype=float)
    counter[0] += len(pts)
    vol = (2.0 * L) ** n
    value = vol * float(vals.mean())
    # split-half spread as the error proxy
    half = len(vals) // 2
    v1 = vol * float(vals[:half].mean())
    v2 = vol * float(vals[half:].mean())
    return value, abs(v1 - v2)


def sample_curve(f, symbol, z_grid, box, quad=None):
    """Oracle samples on an increasing z grid."""
    z_grid = sorted(float(z) for z in z_grid)
    return [integrate_fiber(f, symbol, z, box, quad) for z in z_grid]


# -- least-squares asymptotic fit -------------------------------------------

@dataclass(frozen=True)
class FitResult:
    basis: tuple                 # ((exponent, logpower), ...)
    coefficients: np.ndarray
    stderr: np.ndarray
    residual_norm: float
    condition: float

    def coefficient_for(self, exponent, logpower=0):
        target = (Fraction(exponent), logpower)
        for i, (e, lp) in enumerate(self.basis):
            if (Fraction(e), lp) == target:
                return float(self.coefficients[i]), float(self.stderr[i])
        raise InputError(f"basis has no term z^-{exponent} log^{logpower}",
                         module="oracle", operation="coefficient_for")

    def to_json(self):
        return {
            "schema": 1,
            "basis": [{"num": Fraction(e).numerator, "den": Fraction(e).denominator,
                       "logpower": lp} for e, lp in self.basis],
            "coefficients": [float(c) for c in self.coefficients],
            "stderr": [float(s) for s in self.stderr],
            "residual_norm": self.residual_norm,
            "condition": self.condition,
        }


def fit_basis_from_schedule(schedule, nterms):
    """Fit basis from schedule entries; each log entry also contributes the
    companion non-log power (the theory's free nuisance term)."""
    basis = []
    for term in schedule[:nterms]:
        e = term.exponent
        if term.logpower == 1:
            basis.append((e, 1))
            basis.append((e, 0))
        else:
            basis.append((e, 0))
    # dedupe, preserve order
    seen, out = set(), []
    for b in basis:
        if b not in seen:
            seen.add(b)
            out.append(b)
    return out


def fit_asymptotics(samples, schedule, nterms):
    """Weighted least squares of I(z) against {z^{-e} log(z)^l} basis terms.

    schedule may be a list of ExpansionTerm or of (exponent, logpower) pairs.
    """
    if hasattr(schedule[0], "exponent"):
        basis = fit_basis_from_schedule(schedule, nterms)
    else:
        basis = [(Fraction(e), int(lp)) for e, lp in schedule[:nterms]]
    if len(samples) < len(basis) + 2:
        raise InputError(
            f"{len(samples)} samples insufficient for {len(basis)} basis terms",
            module="oracle", operation="fit_asymptotics")
    zs = np.array([s.z for s in samples])
    ys = np.array([s.value for s in samples])
    errs = np.array([max(s.error, 1e-14 * abs(s.value), 1e-300) for s in samples])
    w = 1.0 / errs
    cols = []
    for e, lp in basis:
        cols.append(zs ** (-float(e)) * np.log(zs) ** lp)
    A = np.column_stack(cols)
    Aw = A * w[:, None]
    yw = ys * w
    sv = np.linalg.svd(Aw, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    if cond > 1e12:
        names = ", ".join(f"z^-{e}" + ("*log" if lp else "")
                          for e, lp in basis)
        raise InputError(f"rank-deficient design (cond={cond:.2e}); basis: {names}",
                         module="oracle", operation="fit_asymptotics")
    coeffs, res, rank, _ = np.linalg.lstsq(Aw, yw, rcond=None)
    resid = yw - Aw @ coeffs
    residual_norm = float(np.linalg.norm(resid))
    dof = max(len(samples) - len(basis), 1)
    s2 = residual_norm ** 2 / dof
    cov = np.linalg.inv(Aw.T @ Aw) * max(s2, 1.0)
    stderr = np.sqrt(np.diag(cov))
    return FitResult(basis=tuple(basis), coefficients=coeffs, stderr=stderr,
                     residual_norm=residual_norm, condition=cond)


def samples_to_csv(samples, path):
    with open(path, "w") as fh:
        fh.write("z,value,error,evals\n")
        for s in samples:
            fh.write(f"{s.z!r},{s.value!r},{s.error!r},{s.evals}\n")
