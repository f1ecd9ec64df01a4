"""Fixed point of the period-doubling operator and a cascade oracle.

The fixed point g solves

    g(x) = -alpha * g(g(-x / alpha)),   g(0) = 1,   alpha = -1 / g(1)

and is represented as an even polynomial p(x) = sum_k c_k x^(2k).  Newton's
method runs on c_1..c_m with alpha re-derived from the current iterate at
every step.

The oracle side (``cascade_oracle``) never touches the polynomial: it locates
superstable parameters of t - (1 + t) x^2 and reads alpha and delta off the
scaling of the cascade.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import (
    ConcavityViolation,
    DomainExceeded,
    NonConvergence,
    OutOfRange,
    RootBracketFailure,
)

SCHEMA_VERSION = "1.0"
EVAL_MARGIN = 0.05


@dataclass(frozen=True)
class EvenPolynomial:
    """p(x) = sum_k c_k x^(2k), evaluated by Horner's rule in x^2."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float).ravel()
        if c.size == 0:
            raise ValueError("need at least one coefficient")
        if c.size > 1 and c[-1] == 0.0:
            raise ValueError("leading coefficient is zero")
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)

    @property
    def degree(self) -> int:
        return 2 * (self.coefficients.size - 1)

    def _horner_t(self, c, t):
        r = np.full_like(t, c[-1])
        for ck in c[-2::-1]:
            r = r * t + ck
        return r

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self._horner_t(self.coefficients, x * x)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        c = self.coefficients
        if c.size == 1:
            return np.zeros_like(x)
        k = np.arange(1, c.size)
        return x * self._horner_t(2.0 * k * c[1:], x * x)

    def second(self, x):
        x = np.asarray(x, dtype=float)
        c = self.coefficients
        if c.size == 1:
            return np.zeros_like(x)
        k = np.arange(1, c.size)
        # d2/dx2 of x^(2k) = 2k(2k-1) x^(2k-2)
        return self._horner_t(2.0 * k * (2.0 * k - 1.0) * c[1:], x * x)

    def in_t(self, t):
        """Evaluate as a polynomial in t = x^2."""
        return self._horner_t(self.coefficients, np.asarray(t, dtype=float))

    def in_t_deriv(self, t):
        c = self.coefficients
        k = np.arange(1, c.size)
        return self._horner_t(k * c[1:], np.asarray(t, dtype=float))


@dataclass(frozen=True)
class RenormFixedPoint:
    g: EvenPolynomial
    alpha: float
    residual: float
    check_grid_size: int
    newton_iterations: int = field(default=0, compare=False)

    @property
    def degree(self) -> int:
        return self.g.degree

    @property
    def g1(self) -> float:
        """g(1) = -1/alpha."""
        return float(self.g(1.0))

    def to_json(self) -> str:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "degree": self.degree,
            "coefficients": [repr(float(c)) for c in self.g.coefficients],
            "alpha": repr(self.alpha),
            "residual": repr(self.residual),
            "check_grid_size": self.check_grid_size,
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RenormFixedPoint":
        doc = json.loads(text)
        check_schema(doc)
        g = EvenPolynomial(np.array([float(s) for s in doc["coefficients"]]))
        if g.degree != int(doc["degree"]):
            raise ValueError("degree does not match coefficient count")
        alpha = -1.0 / float(g(1.0))
        return cls(g=g, alpha=alpha, residual=float(doc["residual"]),
                   check_grid_size=int(doc.get("check_grid_size", 0)))


def check_schema(doc: dict, expected: str = SCHEMA_VERSION) -> None:
    version = str(doc.get("schema_version", ""))
    if version.split(".")[0] != expected.split(".")[0]:
        raise ValueError(f"unsupported schema_version {version!r}")


# ---------------------------------------------------------------------------
# solver


def _chebyshev_points_01(n):
    k = np.arange(n)
    return np.sort(np.cos(np.pi * (2 * k + 1) / (4 * n)))


def functional_residual(g: EvenPolynomial, x) -> np.ndarray:
    """g(x) + alpha g(g(-x/alpha)) with alpha = -1/g(1)."""
    alpha = -1.0 / float(g(1.0))
    x = np.asarray(x, dtype=float)
    return g(x) + alpha * g(g(-x / alpha))


def solve_fixed_point(degree: int = 40, tol: float = 1e-12,
                      max_newton_iters: int = 50,
                      oversample: int = 2) -> RenormFixedPoint:
    """Newton-collocation for the even polynomial fixed point of degree `degree`.

    Each step is a least-squares solve on `oversample * degree / 2`
    Chebyshev points of (0, 1]; the minimum-norm correction keeps the
    monomial coefficients out of the near-null directions of the Vandermonde
    system at high degree.  Raises NonConvergence if the residual on the
    dense check grid ends above `tol`.
    """
    if degree < 2 or degree % 2:
        raise ValueError("degree must be a positive even integer")
    if not tol >= 1e-14:
        raise ValueError("tol must be >= 1e-14")
    m = degree // 2
    x = _chebyshev_points_01(oversample * m)
    powers = np.arange(1, m + 1)
    c = np.zeros(m + 1)
    c[0], c[1] = 1.0, -1.5

    best = (math.inf, c.copy())
    stalls = 0
    it = 0
    for it in range(1, max_newton_iters + 1):
        g = EvenPolynomial(np.trim_zeros(c, "b"))
        alpha = -1.0 / float(g(1.0))
        y = x / alpha
        gy = g(y)
        ggy = g(gy)
        res = g(x) + alpha * ggy
        rnorm = float(np.max(np.abs(res)))
        if not np.isfinite(rnorm):
            break
        if rnorm < best[0] * 0.5:
            best = (rnorm, c.copy())
            stalls = 0
        else:
            if rnorm < best[0]:
                best = (rnorm, c.copy())
            stalls += 1
            if stalls >= 3:
                break
        gp_gy = g.deriv(gy)
        gp_y = g.deriv(y)
        # d alpha / d c_k = alpha^2; d y / d alpha = -y/alpha
        jac = (x[:, None] ** (2 * powers)
               + alpha * (gy[:, None] ** (2 * powers)
                          + gp_gy[:, None] * y[:, None] ** (2 * powers))
               + (alpha * alpha * (ggy - gp_gy * gp_y * y))[:, None])
        step = np.linalg.lstsq(jac, -res, rcond=None)[0]
        c = c.copy()
        c[1:] += step

    g = EvenPolynomial(np.trim_zeros(best[1], "b"))
    alpha = -1.0 / float(g(1.0))
    n_check = max(256, 8 * x.size)
    grid = np.linspace(-1.0, 1.0, n_check + 1)
    residual = float(np.max(np.abs(functional_residual(g, grid))))
    if not residual <= tol:
        raise NonConvergence(
            f"residual {residual:.3e} above tol {tol:.1e} at degree {degree} "
            f"after {it} Newton steps")
    concavity = g.second(np.linspace(-1.0, 1.0, 1024))
    if np.any(concavity >= 0.0):
        raise ConcavityViolation("g'' >= 0 on part of [-1, 1]: spurious root")
    return RenormFixedPoint(g=g, alpha=alpha, residual=residual,
                            check_grid_size=grid.size, newton_iterations=it)


def check_invariants(fp: RenormFixedPoint) -> dict:
    """Evaluate every structural property of a fixed point; returns name -> bool."""
    g, a = fp.g, fp.alpha
    grid = np.linspace(-1.0, 1.0, 1024)
    g1 = float(g(1.0))
    return {
        "normalized": abs(float(g(0.0)) - 1.0) <= 1e-12,
        "alpha_definition": a == -1.0 / g1,
        "concave": bool(np.all(g.second(grid) < 0.0)),
        "slope_at_one": abs(abs(float(g.deriv(1.0))) - a) <= 1e-8,
        "third_iterate": abs(float(g(g(g1))) - 1.0 / a**2) <= 1e-8,
        "alpha_gt_1_plus_sqrt2": a > 1.0 + math.sqrt(2.0),
    }


# ---------------------------------------------------------------------------
# pointwise access


def _check_domain(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + EVAL_MARGIN):
        raise DomainExceeded(f"|x| exceeds 1 + {EVAL_MARGIN}")
    return x


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def eval_g(fp: RenormFixedPoint, x):
    # g(|x|) so that evenness is bit-exact for any Horner ordering
    return _out(fp.g(np.abs(_check_domain(x))))


def eval_g_prime(fp: RenormFixedPoint, x):
    return _out(fp.g.deriv(_check_domain(x)))


def eval_g_second(fp: RenormFixedPoint, x):
    return _out(fp.g.second(np.abs(_check_domain(x))))


def invert_g(fp: RenormFixedPoint, y, max_iter: int = 100):
    """The x in [0, 1] with g(x) = y, for y in [g(1), 1].

    Works in t = x^2, where g is strictly monotone with nonzero slope at
    t = 0, by Newton steps clipped to a shrinking bisection bracket.
    """
    y = np.asarray(y, dtype=float)
    g1 = fp.g1
    slack = 1e-14
    if np.any(y > 1.0 + slack) or np.any(y < g1 - slack):
        raise OutOfRange(f"y outside [g(1), 1] = [{g1:.6g}, 1]")
    yc = np.clip(y, g1, 1.0)
    lo = np.zeros_like(yc)
    hi = np.ones_like(yc)
    c1 = fp.g.coefficients[1]
    t = np.clip((yc - 1.0) / c1, 0.0, 1.0)
    for _ in range(max_iter):
        f = fp.g.in_t(t) - yc
        # p is decreasing: f > 0 means the root lies right of t
        lo = np.where(f > 0.0, t, lo)
        hi = np.where(f < 0.0, t, hi)
        t_new = t - f / fp.g.in_t_deriv(t)
        outside = (t_new < lo) | (t_new > hi)
        t_new = np.where(outside, 0.5 * (lo + hi), t_new)
        t_new = np.where(f == 0.0, t, t_new)
        done = np.abs(t_new - t) <= 4e-16 * np.maximum(t, 1e-300)
        t = t_new
        if np.all(done | (f == 0.0)):
            break
    x = np.sqrt(np.clip(t, 0.0, 1.0)) + 0.0
    return _out(x)


# ---------------------------------------------------------------------------
# independent oracle


@dataclass(frozen=True)
class CascadeOracleResult:
    superstable_params: list
    delta_estimates: list
    alpha_estimates: list
    depth: int


def _orbit_value(t, steps):
    x = 0.0
    s = 1.0 + t
    for _ in range(steps):
        x = t - s * x * x
    return x


def cascade_oracle(depth: int = 10, initial_ratio: float = 4.0) -> CascadeOracleResult:
    """Superstable parameters t_0..t_depth of f_t(x) = t - (1 + t) x^2.

    t_n is the root of t -> f_t^(2^n)(0) following t_(n-1).  The bracket for
    t_n is placed around the geometric extrapolation from the two previous
    roots, using the latest ratio estimate (`initial_ratio` before there is
    one).  delta_n = (t_n - t_(n-1)) / (t_(n+1) - t_n); the alpha estimates are
    -d_n / d_(n+1), with d_n = f^(2^(n-1))(0) at t_n the closest return of the
    critical orbit.
    """
    if depth < 1 or depth > 16:
        raise ValueError("depth must lie in 1..16")
    # t_0: f_t(0) = t = 0.  t_1: t(1 - t - t^2) = 0 with t > 0.
    ts = [0.0, (math.sqrt(5.0) - 1.0) / 2.0]
    ratio = initial_ratio
    deltas = []
    for n in range(2, depth + 1):
        gap = (ts[-1] - ts[-2]) / ratio
        lo, hi = ts[-1] + 0.5 * gap, ts[-1] + 1.6 * gap
        steps = 2 ** n
        flo, fhi = _orbit_value(lo, steps), _orbit_value(hi, steps)
        if not (flo * fhi < 0.0):
            raise RootBracketFailure(f"no sign change bracketing t_{n}")
        tn = brentq(_orbit_value, lo, hi, args=(steps,), xtol=1e-300,
                    rtol=4 * np.finfo(float).eps, maxiter=500)
        if not (ts[-1] < tn) or tn - ts[-1] <= 64 * np.finfo(float).eps:
            raise RootBracketFailure(f"t_{n} not resolved in double precision")
        ts.append(tn)
        ratio = (ts[-2] - ts[-3]) / (ts[-1] - ts[-2])
        deltas.append(ratio)
    closest = [_orbit_value(ts[n], 2 ** (n - 1)) for n in range(1, len(ts))]
    alphas = [-closest[i] / closest[i + 1] for i in range(len(closest) - 1)]
    return CascadeOracleResult(superstable_params=ts, delta_estimates=deltas,
                               alpha_estimates=alphas, depth=depth)
