"""The induced expanding map sigma on J0 u J1 and its symbolic structure.

With J = [g(1), 1], J0 = [g(1), g^3(1)] and J1 = [g^2(1), 1]:

    sigma(x) = -alpha x      on J0   (orientation reversing, slope -alpha)
    sigma(x) = -alpha g(x)   on J1   (orientation preserving, slope alpha |g'(x)|)

Both branches map onto J.  Everything here is built from the two inverse
branches, which are contractions, so no step ever iterates sigma forward
more than once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ContractionStall,
    DepthExceeded,
    GeometryViolation,
    OutOfRange,
    OutsideBranches,
)
from .fixed_point import RenormFixedPoint, eval_g, invert_g

MAX_PARTITION_LEVEL = 20
MAX_ORBIT_PERIOD = 14
_BRANCH_SLACK = 1e-12


@dataclass(frozen=True)
class SigmaSystem:
    fp: RenormFixedPoint
    J: tuple
    J0: tuple
    J1: tuple
    alpha: float


def build_sigma(fp: RenormFixedPoint) -> SigmaSystem:
    g1 = fp.g1
    g2 = eval_g(fp, g1)
    g3 = eval_g(fp, g2)
    s = SigmaSystem(fp=fp, J=(g1, 1.0), J0=(g1, g3), J1=(g2, 1.0), alpha=fp.alpha)
    a = s.alpha
    problems = []
    if not (g1 < g3 < g2 < 1.0):
        problems.append("J0 and J1 are not disjoint and ordered")
    # full branches: endpoints go to endpoints of J
    ends = [(-a * g1, 1.0), (-a * g3, g1), (-a * eval_g(fp, g2), g1), (-a * eval_g(fp, 1.0), 1.0)]
    if max(abs(u - v) for u, v in ends) > 1e-10:
        problems.append("a branch is not onto J")
    if abs(-a * g1 - 1.0) > 1e-12:
        problems.append("sigma(1) != 1")
    grid = np.linspace(g2, 1.0, 257)
    if np.min(np.abs(fp.g.deriv(grid))) < 1.0:
        problems.append("|sigma'| < alpha on J1")
    if problems:
        raise GeometryViolation("; ".join(problems))
    return s


def _branch_of(s: SigmaSystem, x):
    x = np.asarray(x, dtype=float)
    in0 = (x >= s.J0[0] - _BRANCH_SLACK) & (x <= s.J0[1] + _BRANCH_SLACK)
    in1 = (x >= s.J1[0] - _BRANCH_SLACK) & (x <= s.J1[1] + _BRANCH_SLACK)
    if not np.all(in0 | in1):
        raise OutsideBranches("point outside J0 u J1")
    return x, in1


def sigma_apply(s: SigmaSystem, x):
    x, in1 = _branch_of(s, x)
    out = np.where(in1, -s.alpha * s.fp.g(x), -s.alpha * x)
    return float(out) if out.ndim == 0 else out


def sigma_prime(s: SigmaSystem, x):
    x, in1 = _branch_of(s, x)
    out = np.where(in1, -s.alpha * s.fp.g.deriv(x), -s.alpha)
    return float(out) if out.ndim == 0 else out


def branch_inverse(s: SigmaSystem, branch: int, y):
    """Preimage of y in J under the given branch of sigma."""
    y = np.asarray(y, dtype=float)
    if np.any(y < s.J[0] - 1e-12) or np.any(y > s.J[1] + 1e-12):
        raise OutOfRange("y outside J")
    if branch == 0:
        out = -y / s.alpha
    elif branch == 1:
        out = np.asarray(invert_g(s.fp, np.clip(-y / s.alpha, s.J[0], 1.0)))
    else:
        raise ValueError("branch must be 0 or 1")
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# partitions


@dataclass(frozen=True)
class LevelPartition:
    """The 2^n intervals of sigma^-n(J), sorted left to right.

    ``coarse`` holds the level n-1 intervals (the cells of the level-n
    matrix); ``parent[k]`` is the coarse interval containing interval k and
    ``image[k]`` the coarse interval that sigma maps it onto.
    ``coarse_parent`` links each coarse interval to its level n-2 container.
    """

    level: int
    intervals: np.ndarray
    branch_codes: tuple
    betas: np.ndarray
    coarse: np.ndarray
    parent: np.ndarray
    image: np.ndarray
    coarse_parent: np.ndarray

    @property
    def half(self) -> int:
        return 2 ** (self.level - 1)


def _containing(outer: np.ndarray, inner: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Index of the interval of `outer` containing each interval of `inner`, or -1."""
    idx = np.searchsorted(outer[:, 0], inner[:, 0] + tol, side="right") - 1
    idx = np.clip(idx, 0, len(outer) - 1)
    ok = (outer[idx, 0] <= inner[:, 0] + tol) & (inner[:, 1] <= outer[idx, 1] + tol)
    return np.where(ok, idx, -1)


def _refine_once(s: SigmaSystem, ivs: np.ndarray, codes: tuple):
    left, right = ivs[:, 0], ivs[:, 1]
    a = s.alpha
    m = len(ivs)
    # branch 0 reverses orientation: parent order is reversed in J0
    b0 = np.column_stack([-right / a, -left / a])[::-1]
    b1 = np.column_stack([branch_inverse(s, 1, left), branch_inverse(s, 1, right)])
    new = np.vstack([b0, b1])
    image = np.concatenate([np.arange(m)[::-1], np.arange(m)])
    new_codes = tuple("0" + codes[j] for j in range(m - 1, -1, -1)) + tuple("1" + c for c in codes)
    return new, image, new_codes


def refine_partition(s: SigmaSystem, n: int) -> LevelPartition:
    if n < 1:
        raise ValueError("level must be >= 1")
    if n > MAX_PARTITION_LEVEL:
        raise DepthExceeded(f"level {n} > {MAX_PARTITION_LEVEL}: endpoints below double resolution")
    levels = [np.array([s.J])]
    codes = ("",)
    image = None
    for _ in range(n):
        ivs, image, codes = _refine_once(s, levels[-1], codes)
        levels.append(ivs)
    return _make_partition(s, n, levels[-1], levels[-2], levels[-3] if n >= 2 else None,
                           codes, image)


def iter_partitions(s: SigmaSystem, n_max: int):
    """Yield the partitions of levels 1..n_max, each refining the previous."""
    if n_max > MAX_PARTITION_LEVEL:
        raise DepthExceeded(f"level {n_max} > {MAX_PARTITION_LEVEL}")
    levels = [np.array([s.J])]
    codes = ("",)
    for n in range(1, n_max + 1):
        ivs, image, codes = _refine_once(s, levels[-1], codes)
        levels.append(ivs)
        yield _make_partition(s, n, ivs, levels[-2], levels[-3] if n >= 2 else None,
                              codes, image)
        if len(levels) > 3:
            levels.pop(0)


def _make_partition(s, n, ivs, coarse, coarser, codes, image):
    half = 2 ** (n - 1)
    parent = _containing(coarse, ivs, 1e-14)
    if np.any(parent < 0):
        raise GeometryViolation(f"level {n} interval not nested in level {n - 1}")
    if coarser is None:
        coarse_parent = np.zeros(1, dtype=int)
    else:
        coarse_parent = _containing(coarser, coarse, 1e-14)
        if np.any(coarse_parent < 0):
            raise GeometryViolation(f"level {n - 1} interval not nested in level {n - 2}")
    betas = np.abs(s.fp.g.deriv(ivs[half:, 1]))
    part = LevelPartition(level=n, intervals=ivs, branch_codes=codes, betas=betas,
                          coarse=coarse, parent=parent, image=image,
                          coarse_parent=coarse_parent)
    _validate_partition(s, part)
    return part


def _validate_partition(s: SigmaSystem, p: LevelPartition):
    ivs, n, half = p.intervals, p.level, p.half
    problems = []
    if not (np.all(ivs[:half, 1] <= s.J0[1] + 1e-12) and np.all(ivs[half:, 0] >= s.J1[0] - 1e-12)):
        problems.append("half split between J0 and J1 broken")
    if np.any(ivs[:, 1] <= ivs[:, 0]) or np.any(ivs[1:, 0] <= ivs[:-1, 1]):
        problems.append("intervals overlap or are degenerate")
    # sigma(left), sigma(right) against the image endpoints
    lo = sigma_apply(s, ivs[:, 0])
    hi = sigma_apply(s, ivs[:, 1])
    target = p.coarse[p.image]
    want_lo = np.where(np.arange(len(ivs)) < half, target[:, 1], target[:, 0])
    want_hi = np.where(np.arange(len(ivs)) < half, target[:, 0], target[:, 1])
    if max(np.max(np.abs(lo - want_lo)), np.max(np.abs(hi - want_hi))) > 1e-10:
        problems.append("sigma does not map intervals onto level n-1 intervals")
    b = p.betas
    if not (b[0] > 1.0 and np.all(np.diff(b) > 0.0) and abs(b[-1] - s.alpha) <= 1e-8):
        problems.append("betas not strictly increasing from above 1 up to alpha")
    width = s.J[1] - s.J[0]
    if np.max(ivs[:, 1] - ivs[:, 0]) > width * s.alpha ** (-n) * 1.01:
        problems.append("interval longer than the expansion bound allows")
    if problems:
        raise GeometryViolation(f"level {n}: " + "; ".join(problems))


# ---------------------------------------------------------------------------
# periodic orbits and pressure


@dataclass(frozen=True)
class PeriodicOrbitSet:
    """Fixed points of sigma^n, one per word in {0,1}^n (binary order).

    ``orbits[w]`` lists x, sigma(x), ..., sigma^(n-1)(x).  Multipliers and
    weight products coincide because the weight is sigma' itself.
    """

    period: int
    words: tuple
    points: np.ndarray
    orbits: np.ndarray
    multipliers: np.ndarray
    weight_products: np.ndarray
    shadow_defect: float


def _word_bits(n):
    w = np.arange(2 ** n)
    # bits[:, 0] is the first symbol (most significant)
    return ((w[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(bool)


def _apply_word(s, bits, x):
    """z_k for k = n..1 where z_n = b_{w_n}(x), z_k = b_{w_k}(z_{k+1})."""
    n = bits.shape[1]
    chain = np.empty((len(x), n))
    z = x
    for k in range(n - 1, -1, -1):
        z0 = -z / s.alpha
        z1 = np.asarray(invert_g(s.fp, np.clip(-z / s.alpha, s.J[0], 1.0)))
        z = np.where(bits[:, k], z1, z0)
        chain[:, k] = z
    return chain


def periodic_points(s: SigmaSystem, n: int, max_sweeps: int = 200) -> PeriodicOrbitSet:
    if not 1 <= n <= MAX_ORBIT_PERIOD:
        raise ValueError(f"period must lie in 1..{MAX_ORBIT_PERIOD}")
    bits = _word_bits(n)
    x = np.full(len(bits), 0.5 * (s.J[0] + s.J[1]))
    for _ in range(max_sweeps):
        chain = _apply_word(s, bits, x)
        x_new = chain[:, 0]
        change = np.max(np.abs(x_new - x))
        x = x_new
        if change <= 1e-15:
            break
    else:
        raise ContractionStall(f"period {n} fixed points did not settle")
    chain = _apply_word(s, bits, x)
    # cyclic one-step defect: sigma(z_k) = z_(k+1), sigma(z_n) = z_1
    nxt = np.roll(chain, -1, axis=1)
    defect = float(np.max(np.abs(sigma_apply(s, chain) - nxt)))
    slopes = np.abs(sigma_prime(s, chain))
    products = np.prod(slopes, axis=1)
    pts = chain[:, 0]
    if len(np.unique(pts)) != len(pts):
        raise ContractionStall("periodic points not distinct")
    words = tuple("".join("1" if b else "0" for b in row) for row in bits)
    return PeriodicOrbitSet(period=n, words=words, points=pts, orbits=chain,
                            multipliers=products, weight_products=products.copy(),
                            shadow_defect=defect)


def pressure_sum(s: SigmaSystem, n: int) -> float:
    """Sum over fix(sigma^n) of the product of |sigma'| along the orbit."""
    # fixed summation order (binary word order) for reproducibility
    return float(math.fsum(periodic_points(s, n).weight_products))


def pressure_estimate(s: SigmaSystem, n: int) -> float:
    return math.log(pressure_sum(s, n)) / n


def pressure_bound(s: SigmaSystem, n: int) -> float:
    return (s.alpha ** 2 + s.alpha) ** n


def pressure_table(s: SigmaSystem, n_max: int) -> list:
    rows = []
    for n in range(1, n_max + 1):
        total = pressure_sum(s, n)
        est = math.log(total) / n
        bound = pressure_bound(s, n)
        rows.append({
            "n": n, "sum": total, "bound": bound, "estimate": est,
            "bound_ok": total <= bound * (1 + 1e-8),
            "a1_ok": math.exp(est) / s.alpha <= s.alpha + 1 + 1e-8,
        })
    return rows


# ---------------------------------------------------------------------------
# attractor


@dataclass(frozen=True)
class AttractorReport:
    orbit_len: int
    orbit: np.ndarray
    max_containment_violation: float
    max_conjugacy_violation: float
    branch_parity_ok: bool


def critical_orbit(fp: RenormFixedPoint, length: int) -> np.ndarray:
    """g^k(0) for k = 1..length."""
    out = np.empty(length)
    x = 0.0
    for k in range(length):
        x = float(fp.g(x))
        out[k] = x
    return out


def verify_attractor(s: SigmaSystem, orbit_len: int) -> AttractorReport:
    """Check that the critical orbit of g lives on J0 u J1 and that sigma acts on it.

    The fixed-point equation gives g^k = h^-1 o g^(2k) o h with h(x) = -x/alpha,
    so with x_j = g^j(0): sigma(x_j) = x_(ceil(j/2)), even j in J0, odd j in J1.
    """
    if not 1 <= orbit_len <= 10 ** 4:
        raise ValueError("orbit_len must lie in 1..10^4")
    orb = critical_orbit(s.fp, orbit_len)
    d0 = np.maximum(np.maximum(s.J0[0] - orb, orb - s.J0[1]), 0.0)
    d1 = np.maximum(np.maximum(s.J1[0] - orb, orb - s.J1[1]), 0.0)
    contain = float(np.max(np.minimum(d0, d1)))
    j = np.arange(1, orbit_len + 1)
    odd = j % 2 == 1
    parity_ok = bool(np.all(np.where(odd, d1, d0) <= 1e-9))
    img = np.where(odd, -s.alpha * s.fp.g(orb), -s.alpha * orb)
    target = orb[(j + 1) // 2 - 1]
    conj = float(np.max(np.abs(img - target)))
    return AttractorReport(orbit_len=orbit_len, orbit=orb,
                           max_containment_violation=contain,
                           max_conjugacy_violation=conj, branch_parity_ok=parity_ok)
