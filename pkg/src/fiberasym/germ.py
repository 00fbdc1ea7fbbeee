"""Singularity germs f = f_k + O(|x - x0|^{k+1}) and critical-point classification.

The homogeneous part f_k is stored as an explicit monomial list so that
evaluation, gradients and homogeneity are exact; only the optional remainder
is a black-box evaluator.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

# Registry of named remainder evaluators usable in serialized germs.
REMAINDER_REGISTRY: dict = {}


def register_remainder(name, func):
    REMAINDER_REGISTRY[name] = func


@dataclass(frozen=True)
class Germ:
    """Degree-k homogeneous germ in n variables plus optional higher-order rest.

    monomials: tuple of (coefficient, exponent-tuple) pairs; every exponent
    vector must sum to exactly k.  remainder, if given, is a callable r(x)
    declared (not verified) to be O(|x - x0|^{k+1}).
    """

    n: int
    k: int
    monomials: tuple
    remainder: object = None
    x0: tuple = None
    remainder_name: str = None

    def __post_init__(self):
        if self.n < 2:
            raise InputError(f"dimension n={self.n} must be >= 2",
                             module="germ", operation="Germ")
        if self.k < 2:
            raise InputError(f"degree k={self.k} must be >= 2",
                             module="germ", operation="Germ")
        monos = tuple((float(c), tuple(int(e) for e in exps))
                      for c, exps in self.monomials)
        object.__setattr__(self, "monomials", monos)
        if not any(c != 0.0 for c, _ in monos):
            raise InputError("f_k is identically zero",
                             module="germ", operation="Germ")
        for c, exps in monos:
            if len(exps) != self.n:
                raise InputError(f"monomial exponent vector {exps} has wrong length",
                                 module="germ", operation="Germ")
            if any(e < 0 for e in exps):
                raise InputError(f"negative exponent in {exps}",
                                 module="germ", operation="Germ")
            if sum(exps) != self.k:
                raise InputError(
                    f"monomial {exps} has degree {sum(exps)}, expected {self.k}",
                    module="germ", operation="Germ")
        x0 = self.x0 if self.x0 is not None else (0.0,) * self.n
        x0 = tuple(float(v) for v in x0)
        if len(x0) != self.n:
            raise InputError("x0 has wrong length", module="germ", operation="Germ")
        object.__setattr__(self, "x0", x0)
        # cached coefficient/exponent arrays for vectorized evaluation
        object.__setattr__(self, "_coeffs",
                           np.array([c for c, _ in monos], dtype=float))
        object.__setattr__(self, "_exps",
                           np.array([e for _, e in monos], dtype=np.int64))

    # -- evaluation ---------------------------------------------------------

    def eval_fk(self, x):
        """Evaluate f_k at x (shape (n,) or (..., n)); exact monomial sum."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise InputError(f"point has dimension {x.shape[-1]}, germ has n={self.n}",
                             module="germ", operation="eval_fk")
        powers = x[..., None, :] ** self._exps          # (..., m, n)
        return powers.prod(axis=-1) @ self._coeffs

    def grad_fk(self, x):
        """Analytic gradient of f_k; each monomial differentiates exactly."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise InputError(f"point has dimension {x.shape[-1]}, germ has n={self.n}",
                             module="germ", operation="grad_fk")
        out = np.zeros(x.shape, dtype=float)
        for d in range(self.n):
            e_d = self._exps[:, d]
            coeffs = self._coeffs * e_d
            exps = self._exps.copy()
            exps[:, d] = np.maximum(e_d - 1, 0)         # e_d=0 terms killed by coeff
            powers = x[..., None, :] ** exps
            out[..., d] = powers.prod(axis=-1) @ coeffs
        return out

    def eval_full(self, x):
        """f_k(x - x0) plus the declared remainder, if any."""
        x = np.asarray(x, dtype=float)
        y = x - np.asarray(self.x0)
        val = self.eval_fk(y)
        if self.remainder is not None:
            val = val + self.remainder(x)
        return val


def eval_fk(germ, x):
    return germ.eval_fk(x)


def tangential_gradient(germ, theta):
    """Gradient of f_k at a unit vector, with the radial component projected out."""
    theta = np.asarray(theta, dtype=float)
    nrm = np.linalg.norm(theta)
    if abs(nrm - 1.0) > 1e-12:
        raise InputError(f"theta has norm {nrm!r}, expected a unit vector",
                         module="germ", operation="tangential_gradient")
    g = germ.grad_fk(theta)
    return g - np.dot(g, theta) * theta


# -- classification ---------------------------------------------------------

EXTREMUM_MIN = "ExtremumMin"
EXTREMUM_MAX = "ExtremumMax"
PRINCIPAL_TYPE = "PrincipalType"
REGULAR_FIBER = "RegularFiber"
UNSUPPORTED = "Unsupported"


@dataclass(frozen=True)
class Classification:
    case: str
    min_abs_fk: float
    min_tangential_grad: float
    zeros: tuple                 # located zeros of f_k on the sphere (unit vectors)
    eps_def: float
    eps_grad: float
    sample_order: int
    note: str = ""

    @property
    def is_extremum(self):
        return self.case in (EXTREMUM_MIN, EXTREMUM_MAX)

    def to_json(self):
        return {
            "schema": 1,
            "case": self.case,
            "diagnostics": {
                "min_abs_fk": self.min_abs_fk,
                "min_tangential_grad": self.min_tangential_grad,
                "zeros": [list(z) for z in self.zeros],
                "eps_def": self.eps_def,
                "eps_grad": self.eps_grad,
                "sample_order": self.sample_order,
                "note": self.note,
            },
        }


def _slerp(a, b, t):
    """Geodesic interpolation between unit vectors a and b."""
    dot = np.clip(np.dot(a, b), -1.0, 1.0)
    ang = np.arccos(dot)
    if ang < 1e-6:
        # arccos near 1 only carries ~sqrt(eps) precision; the normalized
        # chord point is exact for t=1/2 and O(ang^2) close otherwise
        v = (1.0 - t) * a + t * b
        return v / np.linalg.norm(v)
    sa = np.sin((1.0 - t) * ang) / np.sin(ang)
    sb = np.sin(t * ang) / np.sin(ang)
    v = sa * a + sb * b
    return v / np.linalg.norm(v)


def _bisect_zero(germ, a, b, iters=60):
    """Sign-change bisection for f_k along the geodesic from a to b."""
    fa = germ.eval_fk(a)
    for _ in range(iters):
        m = _slerp(a, b, 0.5)
        fm = germ.eval_fk(m)
        if fa * fm <= 0.0:
            b = m
        else:
            a, fa = m, fm
    return _slerp(a, b, 0.5)


def _sample_nodes(germ, sample_order, seed=0):
    """Sphere sample with adjacency pairs for zero location."""
    from .sphere import build_rule  # local import avoids a module cycle

    n, k = germ.n, germ.k
    if n == 2:
        order = sample_order if sample_order else max(64, 8 * k)
        rule = build_rule(2, order, kind="uniform-circle")
        m = len(rule.weights)
        pairs = [(i, (i + 1) % m) for i in range(m)]
        return rule.nodes, pairs, order
    if n == 3:
        order = sample_order if sample_order else max(24, 4 * k)
        rule = build_rule(3, order, kind="product-gauss")
        nlat, nlon = rule.grid_shape
        idx = lambda i, j: i * nlon + j
        pairs = []
        for i in range(nlat):
            for j in range(nlon):
                pairs.append((idx(i, j), idx(i, (j + 1) % nlon)))
                if i + 1 < nlat:
                    pairs.append((idx(i, j), idx(i + 1, j)))
        return rule.nodes, pairs, order
    order = sample_order if sample_order else 4096
    rule = build_rule(n, order, kind="monte-carlo", seed=seed)
    nodes = rule.nodes
    # pair each node with its nearest opposite-sign neighbor (built lazily below)
    return nodes, None, order


def locate_sphere_zeros(germ, sample_order=None, seed=0):
    """Locate the zero set of f_k on the unit sphere by sign-change bisection."""
    nodes, pairs, order = _sample_nodes(germ, sample_order, seed)
    vals = germ.eval_fk(nodes)
    zeros = []
    if pairs is None:
        # Monte Carlo fallback: bisect between opposite-sign sample pairs.
        pos = nodes[vals > 0]
        neg = nodes[vals <= 0]
        rng = np.random.default_rng(seed)
        npairs = min(200, len(pos), len(neg))
        for _ in range(npairs):
            a = pos[rng.integers(len(pos))]
            b = neg[rng.integers(len(neg))]
            zeros.append(_bisect_zero(germ, a, b))
    else:
        for i, j in pairs:
            if vals[i] == 0.0:
                zeros.append(nodes[i])
            elif vals[i] * vals[j] < 0.0:
                zeros.append(_bisect_zero(germ, nodes[i], nodes[j]))
    return zeros, vals, order


def classify(germ, eps_def=1e-8, eps_grad=1e-6, sample_order=None, seed=0):
    """Classify the germ into the extremum / principal-type / unsupported regimes.

    Samples f_k on a sphere grid; a sample bounded away from zero means a
    definite form (extremum), otherwise the zero set is located and the
    tangential gradient checked at every located zero.
    """
    zeros, vals, order = locate_sphere_zeros(germ, sample_order, seed)
    min_abs = float(np.min(np.abs(vals)))
    if min_abs > eps_def and not zeros:
        if germ.k % 2 != 0:
            # f_k(-theta) = -f_k(theta) for odd k: a definite-looking sample
            # can only mean the grid missed the zero set.
            return Classification(UNSUPPORTED, min_abs, float("nan"), (),
                                  eps_def, eps_grad, order,
                                  note="odd degree cannot be definite; grid too coarse")
        case = EXTREMUM_MIN if vals[0] > 0 else EXTREMUM_MAX
        return Classification(case, min_abs, float("inf"), (),
                              eps_def, eps_grad, order)
    if not zeros:
        return Classification(UNSUPPORTED, min_abs, float("nan"), (),
                              eps_def, eps_grad, order,
                              note="small |f_k| values but no sign change located")
    grads = [np.linalg.norm(tangential_gradient(germ, z)) for z in zeros]
    min_grad = float(min(grads))
    ztuple = tuple(tuple(z) for z in zeros)
    if min_grad > eps_grad:
        return Classification(PRINCIPAL_TYPE, min_abs, min_grad, ztuple,
                              eps_def, eps_grad, order)
    return Classification(UNSUPPORTED, min_abs, min_grad, ztuple,
                          eps_def, eps_grad, order,
                          note="tangential gradient vanishes on the zero set")


# -- serialization ----------------------------------------------------------

def germ_to_json(germ):
    obj = {
        "n": germ.n,
        "k": germ.k,
        "monomials": [[c, list(e)] for c, e in germ.monomials],
        "x0": list(germ.x0),
    }
    if germ.remainder_name:
        obj["remainder"] = germ.remainder_name
    return obj


def germ_from_json(obj):
    if isinstance(obj, str):
        obj = json.loads(obj)
    remainder = None
    name = obj.get("remainder")
    if name is not None:
        if name not in REMAINDER_REGISTRY:
            raise InputError(f"unknown remainder {name!r}",
                             module="germ", operation="germ_from_json")
        remainder = REMAINDER_REGISTRY[name]
    return Germ(n=int(obj["n"]), k=int(obj["k"]),
                monomials=tuple((c, tuple(e)) for c, e in obj["monomials"]),
                remainder=remainder, remainder_name=name,
                x0=tuple(obj.get("x0", [0.0] * int(obj["n"]))))
