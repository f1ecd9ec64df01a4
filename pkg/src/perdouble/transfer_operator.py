"""The analytic induced operator on J, its collocation spectrum, and a toy model.

    (L v)(z) = -alpha v(-z/alpha) + sigma'(w) v(w),   w = preimage of z in J1

Collocation: nodal values at Chebyshev-Lobatto points of J, preimages
reached by barycentric interpolation.  The resulting (N+1)x(N+1) matrix
converges spectrally to L on analytic fields.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.special import comb

from .errors import EigensolveFailure
from .fixed_point import SCHEMA_VERSION, RenormFixedPoint, invert_g
from .induced_map import SigmaSystem, branch_inverse, sigma_prime


# ---------------------------------------------------------------------------
# pointwise operator


def apply_L(s: SigmaSystem, v, z):
    """Sum of sigma'(w) v(w) over both preimages w of z."""
    z = np.asarray(z, dtype=float)
    w0 = branch_inverse(s, 0, z)
    w1 = branch_inverse(s, 1, z)
    out = -s.alpha * np.asarray(v(w0)) + np.asarray(sigma_prime(s, w1)) * np.asarray(v(w1))
    return float(out) if np.ndim(out) == 0 else out


def known_eigenvector(fp: RenormFixedPoint, m: int):
    """v(y) = V(x) with g(x) = y, V(x) = g'(x) x^(2m-1) - g(x)^(2m-1).

    V is even, so either g-preimage of y gives the same value.
    Eigenvalue alpha^-(2m-2).
    """
    if not 1 <= m <= 4:
        raise ValueError("m must lie in 1..4")
    p = 2 * m - 1

    def v(y):
        x = np.asarray(invert_g(fp, y))
        return fp.g.deriv(x) * x ** p - fp.g(x) ** p

    return v


def known_eigenvalue(alpha: float, m: int) -> float:
    return alpha ** (-(2 * m - 2))


# ---------------------------------------------------------------------------
# collocation


def lobatto_nodes(N: int, a: float = -1.0, b: float = 1.0) -> np.ndarray:
    """N+1 Chebyshev-Lobatto points on [a, b], ascending."""
    x = -np.cos(np.pi * np.arange(N + 1) / N)
    return 0.5 * (a + b) + 0.5 * (b - a) * x


def _lobatto_weights(N: int) -> np.ndarray:
    w = (-1.0) ** np.arange(N + 1)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def interpolation_matrix(nodes: np.ndarray, points) -> np.ndarray:
    """Rows evaluate the interpolant through `nodes` at `points` (may be complex)."""
    N = len(nodes) - 1
    w = _lobatto_weights(N)
    pts = np.asarray(points)
    diff = pts[:, None] - nodes[None, :]
    exact = diff == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        c = w[None, :] / diff
        P = c / c.sum(axis=1, keepdims=True)
    hit = exact.any(axis=1)
    if np.any(hit):
        P[hit] = exact[hit].astype(P.dtype)
    return P


@dataclass(frozen=True)
class SpectralField:
    """Degree-N Chebyshev expansion on J (mapped to [-1, 1])."""

    poly: Chebyshev

    @classmethod
    def from_nodal(cls, nodes, values, domain):
        N = len(nodes) - 1
        poly = Chebyshev.fit(nodes, values, N, domain=list(domain))
        return cls(poly)

    @property
    def N(self) -> int:
        return self.poly.degree()

    @property
    def coefficients(self) -> np.ndarray:
        return self.poly.coef

    def __call__(self, y):
        return self.poly(np.asarray(y, dtype=float))


def collocation_matrix(s: SigmaSystem, N: int):
    nodes = lobatto_nodes(N, *s.J)
    w0 = branch_inverse(s, 0, nodes)
    w1 = branch_inverse(s, 1, nodes)
    M = (-s.alpha * interpolation_matrix(nodes, w0)
         + np.asarray(sigma_prime(s, w1))[:, None] * interpolation_matrix(nodes, w1))
    return nodes, M


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    N: int
    leading: float
    converged: bool
    leading_eigenfunction: SpectralField | None = None

    def to_json(self) -> str:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "N": self.N,
            "eigenvalues": [{"re": float(e.real), "im": float(e.imag)}
                            for e in self.eigenvalues],
            "leading": float(self.leading),
            "converged": bool(self.converged),
        }
        return json.dumps(doc, indent=2) + "\n"


def _sorted_eigs(M):
    try:
        ev, vec = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise EigensolveFailure(str(exc)) from exc
    if not np.all(np.isfinite(ev)):
        raise EigensolveFailure("non-finite eigenvalues")
    # modulus descending, ties by real then imaginary part for a stable order
    order = np.lexsort((-ev.imag, -ev.real, -np.round(np.abs(ev), 12)))
    return ev[order], vec[:, order]


def _leading(ev) -> float:
    top = ev[0]
    if abs(top.imag) > 1e-10 * abs(top) or top.real <= 0:
        raise EigensolveFailure(f"leading eigenvalue {top} is not real and positive")
    return float(top.real)


def collocation_spectrum(s: SigmaSystem, N: int = 40, check_step: int = 10) -> SpectrumResult:
    if not 10 <= N <= 100:
        raise ValueError("N must lie in 10..100")
    nodes, M = collocation_matrix(s, N)
    ev, vec = _sorted_eigs(M)
    lead = _leading(ev)
    converged = False
    if N - check_step >= 4:
        ev_ref, _ = _sorted_eigs(collocation_matrix(s, N - check_step)[1])
        converged = bool(abs(ev_ref[0] - lead) <= 1e-8)
    f = vec[:, 0].real
    f = f / f[-1]
    field = SpectralField.from_nodal(nodes, f, s.J)
    return SpectrumResult(eigenvalues=ev, N=N, leading=lead, converged=converged,
                          leading_eigenfunction=field)


def nearest_eigenvalue(spec: SpectrumResult, target: complex) -> float:
    return float(np.min(np.abs(spec.eigenvalues - target)))


# ---------------------------------------------------------------------------
# toy model


@dataclass(frozen=True)
class ToyModel:
    """Two affine branches with weights a e^(2 pi i t) and b.

    The first branch has derivative a e^(2 pi i t): orientation preserving at
    t = 0, reversing at t = 1/2, and a rotation-dilation of the complex
    plane in between.  Its inverse maps [-1, 1] around the centre of
    I0 = [-1, -1 + 2/a]; the second inverse maps [-1, 1] onto I1 = [1 - 2/b, 1].
    """

    a: float
    b: float
    t: float = 0.0

    def __post_init__(self):
        if not (self.b > self.a > 2.0):
            raise ValueError("need b > a > 2")
        if not (1.0 / self.a + 1.0 / self.b < 1.0):
            raise ValueError("branches overlap")
        if not 0.0 <= self.t <= 1.0:
            raise ValueError("t must lie in [0, 1]")

    @property
    def twist(self) -> complex:
        return cmath.exp(2j * math.pi * self.t)

    @property
    def I0(self):
        return (-1.0, -1.0 + 2.0 / self.a)

    @property
    def I1(self):
        return (1.0 - 2.0 / self.b, 1.0)

    def inverse_branches(self):
        """(centre, slope) of E0 and E1, each z -> centre + slope z."""
        c0 = -1.0 + 1.0 / self.a
        c1 = 1.0 - 1.0 / self.b
        return (c0, 1.0 / (self.a * self.twist)), (c1, 1.0 / self.b)

    def weights(self):
        return self.a * self.twist, complex(self.b)

    def apply(self, v, z):
        (c0, s0), (c1, s1) = self.inverse_branches()
        w0, w1 = self.weights()
        z = np.asarray(z)
        return w0 * v(c0 + s0 * z) + w1 * v(c1 + s1 * z)


def toy_spectrum_exact(model: ToyModel, n_max: int) -> list:
    """lambda_n = b^(1-n) + (e^(2 pi i t (n-1)) a^(n-1))^-1 for n = 0..n_max."""
    out = []
    for n in range(n_max + 1):
        out.append(complex(model.b ** (1 - n))
                   + 1.0 / (cmath.exp(2j * math.pi * model.t * (n - 1)) * model.a ** (n - 1)))
    return out


def toy_collocation_matrix(model: ToyModel, N: int) -> np.ndarray:
    nodes = lobatto_nodes(N)
    (c0, s0), (c1, s1) = model.inverse_branches()
    w0, w1 = model.weights()
    return (w0 * interpolation_matrix(nodes, c0 + s0 * nodes.astype(complex))
            + w1 * interpolation_matrix(nodes, c1 + s1 * nodes.astype(complex)))


def toy_monomial_matrix(model: ToyModel, N: int) -> np.ndarray:
    """Column k holds the monomial coefficients of L(z^k); upper triangular."""
    (c0, s0), (c1, s1) = model.inverse_branches()
    w0, w1 = model.weights()
    M = np.zeros((N + 1, N + 1), dtype=complex)
    for k in range(N + 1):
        j = np.arange(k + 1)
        binom = comb(k, j, exact=False)
        M[: k + 1, k] = binom * (w0 * c0 ** (k - j) * s0 ** j + w1 * c1 ** (k - j) * s1 ** j)
    return M


@dataclass(frozen=True)
class ToySpectrum:
    eigenvalues: np.ndarray
    N: int
    leading: complex


def toy_spectrum_numeric(model: ToyModel, N: int = 20, method: str = "monomial") -> ToySpectrum:
    """Eigenvalues of the toy operator on polynomials of degree <= N.

    The monomial matrix is triangular, so the eigensolver is exact to
    rounding.  Nodal collocation also works but, for t away from 0 and 1/2,
    the twisted branch evaluates the interpolant off the real axis and the
    small eigenvalues lose digits as N grows.
    """
    if method == "monomial":
        M = toy_monomial_matrix(model, N)
    elif method == "collocation":
        M = toy_collocation_matrix(model, N)
    else:
        raise ValueError(f"unknown method {method!r}")
    ev, _ = _sorted_eigs(M)
    return ToySpectrum(eigenvalues=ev, N=N, leading=complex(ev[0]))


def toy_max_deviation(model: ToyModel, N: int = 20, n_max: int = 5,
                      method: str = "monomial") -> float:
    """Largest distance from an exact eigenvalue (n <= n_max) to the numeric spectrum."""
    if N < n_max + 5:
        raise ValueError("N must be at least n_max + 5")
    ev = toy_spectrum_numeric(model, N, method).eigenvalues
    return max(float(np.min(np.abs(ev - lam))) for lam in toy_spectrum_exact(model, n_max))


def lambda0_is_leading(a: float, b: float, ts=None, N: int = 20) -> bool:
    """Whether b + a e^(2 pi i t) has the largest modulus for every tested t."""
    ts = np.linspace(0.0, 1.0, 21) if ts is None else ts
    for t in ts:
        model = ToyModel(a, b, float(t))
        lead = toy_spectrum_numeric(model, N).eigenvalues[0]
        lam0 = toy_spectrum_exact(model, 0)[0]
        if abs(lead - lam0) > 1e-9:
            return False
    return True
