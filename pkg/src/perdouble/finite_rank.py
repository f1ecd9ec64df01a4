"""Finite-rank approximations A_n of the induced operator and the program built on them.

The cells at level n are the 2^(n-1) intervals of sigma^-(n-1)(J).  A field
that is constant on cells is mapped by

    (L_n v)(x) = -alpha v(y0) + alpha beta v(y1)

where y0, y1 are the two sigma-preimages of x and beta is |g'| at the right
end of the level-n interval holding y1.  Each row of A_n therefore has one
entry -alpha and one entry alpha*beta.  A_n keeps the cone of nonnegative
nondecreasing vectors invariant, so power iteration started inside the cone
finds the expanding eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CombinatoricsMismatch,
    ConeEscape,
    IncidenceMismatch,
    IterationLimit,
    RenormError,
)
from .fixed_point import RenormFixedPoint, cascade_oracle
from .induced_map import LevelPartition, SigmaSystem, _containing, iter_partitions

MAX_PROGRAM_LEVEL = 16


@dataclass(frozen=True)
class FiniteRankOperator:
    """Sparse A_n: row i holds -alpha at neg_col[i] and pos_val[i] at pos_col[i]."""

    level: int
    alpha: float
    neg_col: np.ndarray
    pos_col: np.ndarray
    pos_val: np.ndarray
    partition: LevelPartition | None = field(default=None, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.neg_col)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return -self.alpha * x[self.neg_col] + self.pos_val * x[self.pos_col]

    def dense(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim))
        rows = np.arange(self.dim)
        np.add.at(m, (rows, self.neg_col), -self.alpha)
        np.add.at(m, (rows, self.pos_col), self.pos_val)
        return m

    def rows(self) -> list:
        return [((int(a), -self.alpha), (int(b), float(v)))
                for a, b, v in zip(self.neg_col, self.pos_col, self.pos_val)]


def synthetic_operator(alpha: float, betas) -> FiniteRankOperator:
    """A_n with the displayed band pattern for arbitrary betas (len 2^(n-1)).

    Rows 2p and 2p+1 (0-based) carry -alpha in column half-1-p and
    alpha*beta in column half+p, half = len(betas)/2.  For one beta this is
    the 1x1 matrix [-alpha + alpha*beta].
    """
    betas = np.asarray(betas, dtype=float)
    dim = len(betas)
    if dim == 1:
        return FiniteRankOperator(1, alpha, np.zeros(1, int), np.zeros(1, int), alpha * betas)
    if dim & (dim - 1):
        raise ValueError("number of betas must be a power of two")
    half = dim // 2
    p = np.arange(dim) // 2
    level = int(math.log2(dim)) + 1
    return FiniteRankOperator(level, alpha, half - 1 - p, half + p, alpha * betas)


def assemble(partition: LevelPartition, alpha: float) -> FiniteRankOperator:
    """Build A_n from which cell contains each branch-preimage of each cell."""
    n, half = partition.level, partition.half
    dim = half
    cells = partition.coarse
    holder = _containing(cells, partition.intervals, 1e-14)
    if np.any(holder < 0):
        raise CombinatoricsMismatch(f"level {n}: a preimage straddles two cells")
    neg_col = np.full(dim, -1)
    pos_col = np.full(dim, -1)
    pos_val = np.zeros(dim)
    for k in range(len(partition.intervals)):
        row = partition.image[k]
        if k < half:
            if neg_col[row] != -1:
                raise CombinatoricsMismatch(f"cell {row} has two J0 preimages")
            neg_col[row] = holder[k]
        else:
            if pos_col[row] != -1:
                raise CombinatoricsMismatch(f"cell {row} has two J1 preimages")
            pos_col[row] = holder[k]
            pos_val[row] = alpha * partition.betas[k - half]
    if np.any(neg_col < 0) or np.any(pos_col < 0):
        raise CombinatoricsMismatch(f"level {n}: a cell lacks a preimage")
    return FiniteRankOperator(n, alpha, neg_col, pos_col, pos_val, partition)


# ---------------------------------------------------------------------------
# cone and power iteration


def in_cone(x, tol: float = 1e-12) -> bool:
    x = np.asarray(x, dtype=float)
    scale = max(float(np.max(np.abs(x))), 1e-300)
    return bool(np.all(x >= -tol * scale) and np.all(np.diff(x) >= -tol * scale))


@dataclass(frozen=True)
class ConeVector:
    """Nonnegative nondecreasing coordinates, normalized so the last one is 1."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        if e.size == 0 or e[-1] <= 0.0:
            raise ValueError("cone vector needs a positive last entry")
        e = e / e[-1]
        if not in_cone(e):
            raise ConeEscape("vector is not nonnegative and nondecreasing")
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class PowerResult:
    lam: float
    v: ConeVector
    iterations: int
    shift: float
    residual: float
    lambda_from_last_row: float
    lambda_from_ratio: float
    lambda_text_formula: float


def power_iterate(A: FiniteRankOperator, v0, tol: float = 1e-13,
                  max_iters: int = 10_000) -> PowerResult:
    """Normalized power iteration inside the cone.

    Stops when the sup-norm change of the normalized iterate is below `tol`
    and ||A v - lam v||_inf <= tol * lam.  With v_last = 1 the last row reads
    lam = alpha beta_last - alpha v_1.  For a real partition beta_last = alpha,
    so ``lambda_from_last_row`` also records alpha (alpha - v_1); the direct
    ratio (A v)_last / v_last is returned alongside.
    """
    v = np.array(v0.entries if isinstance(v0, ConeVector) else v0, dtype=float)
    if v.shape != (A.dim,):
        raise ValueError("start vector has the wrong dimension")
    if not in_cone(v) or v[-1] <= 0.0:
        raise ConeEscape("start vector outside the cone")
    v = v / v[-1]
    a = A.alpha
    last = A.dim - 1
    if A.neg_col[last] != 0 or A.pos_col[last] != last:
        raise ValueError("last row must read -alpha at column 1 and alpha*beta on the diagonal")
    top = float(A.pos_val[last])
    shift = math.inf
    for it in range(1, max_iters + 1):
        w = A.matvec(v)
        if not w[-1] > 0.0:
            raise ConeEscape("iterate lost its positive last entry")
        w = w / w[-1]
        if not in_cone(w, 1e-12):
            raise ConeEscape(f"iterate left the cone at step {it}")
        shift = float(np.max(np.abs(w - v)))
        v = w
        lam = top - a * v[0]
        residual = float(np.max(np.abs(A.matvec(v) - lam * v)))
        if shift < tol and residual <= tol * lam:
            break
    else:
        raise IterationLimit(f"no convergence in {max_iters} steps (shift {shift:.2e})")
    av = A.matvec(v)
    return PowerResult(lam=lam, v=ConeVector(np.maximum(v, 0.0)), iterations=it, shift=shift,
                       residual=residual, lambda_from_last_row=a * (a - float(v[0])),
                       lambda_from_ratio=float(av[-1] / v[-1]),
                       lambda_text_formula=a * (a - float(av[0])))


def closed_form_lambda2(partition: LevelPartition, alpha: float | None = None):
    """Largest eigenvalue of A_2 and its eigenvector (t21, 1), in closed form."""
    if partition.level != 2:
        raise ValueError("closed form only applies at level 2")
    b21, b22 = partition.betas
    if alpha is None:
        alpha = float(b22)
    return lambda2_formula(alpha, b21, b22)


def lambda2_formula(alpha: float, b21: float, b22: float):
    root = math.sqrt((b22 - 1.0) ** 2 + 4.0 * (b22 - b21))
    lam = alpha * ((b22 - 1.0) + root) / 2.0
    # second row: -alpha t + alpha b22 = lam
    t21 = b22 - lam / alpha
    return lam, np.array([t21, 1.0])


def embed(v, partition: LevelPartition) -> ConeVector:
    """Carry a level n-1 cone vector to level n by duplicating onto child cells."""
    e = np.asarray(v.entries if isinstance(v, ConeVector) else v, dtype=float)
    cp = partition.coarse_parent
    if partition.level < 2 or len(e) != partition.half // 2 or np.any(cp < 0):
        raise IncidenceMismatch("vector does not live on the parent cells")
    counts = np.bincount(cp, minlength=len(e))
    if np.any(counts != 2):
        raise IncidenceMismatch("each parent cell must split into exactly two cells")
    return ConeVector(e[cp])


# ---------------------------------------------------------------------------
# the program


@dataclass
class LevelRecord:
    n: int
    lambda_n: float
    v: ConeVector
    iterations: int
    final_shift_norm: float
    residual: float
    lambda_from_last_row: float
    lambda_from_ratio: float
    lambda_text_formula: float


@dataclass
class ProgramTrace:
    alpha: float
    records: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    lambda_extrapolated: float = math.nan
    delta_reference: float = math.nan
    delta_reference_source: str = ""
    partitions: dict = field(default_factory=dict, repr=False)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([r.lambda_n for r in self.records])

    def check(self) -> dict:
        a = self.alpha
        lam = self.lambdas
        lo, hi = a * (a - 1.0), a * (a + 1.0)
        return {
            "lambda1_exact": bool(len(lam) and abs(lam[0] - lo) <= 1e-12),
            "strictly_increasing": bool(np.all(np.diff(lam) > 0.0)),
            "above_lower_bound": bool(np.all(lam > lo - 1e-12)),
            "below_upper_bound": bool(np.all(lam < hi + 1e-9)),
            "above_alpha_plus_one": bool(np.all(lam[1:] > a + 1.0)),
            "no_failures": not self.failures,
        }


def aitken(seq) -> float:
    x0, x1, x2 = (float(s) for s in seq[-3:])
    den = x2 - 2.0 * x1 + x0
    if den == 0.0:
        return x2
    return x2 - (x2 - x1) ** 2 / den


def run_program(s: SigmaSystem, n_max: int = 12, tol: float = 1e-13,
                max_iters: int = 10_000, reference: str | None = "collocation",
                reference_N: int = 40, keep_partitions: bool = False) -> ProgramTrace:
    """v_1 = 1, then for each level: assemble A_n, warm start from the embedded
    v_(n-1), power-iterate.  A failing level is recorded and ends the run;
    earlier levels are kept.
    """
    if not 1 <= n_max <= MAX_PROGRAM_LEVEL:
        raise ValueError(f"n_max must lie in 1..{MAX_PROGRAM_LEVEL}")
    trace = ProgramTrace(alpha=s.alpha)
    v = None
    try:
        for part in iter_partitions(s, n_max):
            n = part.level
            A = assemble(part, s.alpha)
            start = ConeVector(np.ones(1)) if n == 1 else embed(v, part)
            res = power_iterate(A, start, tol=tol, max_iters=max_iters)
            v = res.v
            trace.records.append(LevelRecord(
                n=n, lambda_n=res.lam, v=res.v, iterations=res.iterations,
                final_shift_norm=res.shift, residual=res.residual,
                lambda_from_last_row=res.lambda_from_last_row,
                lambda_from_ratio=res.lambda_from_ratio,
                lambda_text_formula=res.lambda_text_formula))
            if keep_partitions:
                trace.partitions[n] = part
    except RenormError as exc:
        trace.failures.append({"n": len(trace.records) + 1, "error": type(exc).__name__,
                               "message": str(exc)})
    if len(trace.records) >= 3:
        trace.lambda_extrapolated = aitken(trace.lambdas)
    elif trace.records:
        trace.lambda_extrapolated = trace.records[-1].lambda_n
    if reference == "collocation":
        from .transfer_operator import collocation_spectrum

        trace.delta_reference = collocation_spectrum(s, reference_N).leading
        trace.delta_reference_source = f"collocation N={reference_N}"
    elif reference == "cascade":
        trace.delta_reference = cascade_oracle(10).delta_estimates[-1]
        trace.delta_reference_source = "cascade depth=10"
    return trace


# ---------------------------------------------------------------------------
# eigenvector diagnostics and the expanding direction


def cell_lookup(partition: LevelPartition, y):
    """Index of the level n-1 cell holding each y, and whether y fell in a gap.

    Points in a gap go to the cell whose midpoint is nearest.
    """
    cells = partition.coarse
    y = np.atleast_1d(np.asarray(y, dtype=float))
    tol = 1e-12
    idx = np.clip(np.searchsorted(cells[:, 0], y + tol, side="right") - 1, 0, len(cells) - 1)
    inside = (cells[idx, 0] - tol <= y) & (y <= cells[idx, 1] + tol)
    mids = 0.5 * (cells[:, 0] + cells[:, 1])
    j = np.clip(np.searchsorted(mids, y), 1, len(cells) - 1) if len(cells) > 1 else np.zeros_like(idx)
    if len(cells) > 1:
        nearest = np.where(np.abs(y - mids[j - 1]) <= np.abs(y - mids[j]), j - 1, j)
    else:
        nearest = np.zeros_like(idx)
    return np.where(inside, idx, nearest), ~inside


def values_at(v, partition: LevelPartition, points) -> np.ndarray:
    e = np.asarray(v.entries if isinstance(v, ConeVector) else v, dtype=float)
    idx, _ = cell_lookup(partition, points)
    return e[idx]


@dataclass(frozen=True)
class DirectionField:
    x: np.ndarray
    values: np.ndarray
    gap_hits: np.ndarray
    level: int

    @property
    def gap_count(self) -> int:
        return int(np.count_nonzero(self.gap_hits))


def pushforward_direction(fp: RenormFixedPoint, v, partition: LevelPartition,
                          x_grid) -> DirectionField:
    """Sample (g_* v)(x) = v(g(x)) with v piecewise constant on the level n-1 cells."""
    x = np.asarray(x_grid, dtype=float)
    if np.any(np.abs(x) > 1.0):
        raise ValueError("grid must lie in [-1, 1]")
    e = np.asarray(v.entries if isinstance(v, ConeVector) else v, dtype=float)
    if len(e) != partition.half:
        raise ValueError("vector and partition levels differ")
    gx = fp.g(np.abs(x))
    idx, gap = cell_lookup(partition, gx)
    return DirectionField(x=x, values=e[idx], gap_hits=gap, level=partition.level)
