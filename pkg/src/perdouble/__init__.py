"""Numerical toolkit for the period-doubling renormalization fixed point.

Solves for the even fixed point g, builds the induced expanding map on
[g(1), 1], runs the finite-rank cone program whose leading eigenvalues
increase to delta, and cross-checks against a collocation spectrum and the
superstable cascade of the quadratic family.
"""

from .errors import *  # noqa: F401,F403
from .finite_rank import (
    ConeVector,
    FiniteRankOperator,
    ProgramTrace,
    aitken,
    assemble,
    closed_form_lambda2,
    power_iterate,
    pushforward_direction,
    run_program,
)
from .fixed_point import (
    EvenPolynomial,
    RenormFixedPoint,
    cascade_oracle,
    check_invariants,
    eval_g,
    eval_g_prime,
    invert_g,
    solve_fixed_point,
)
from .induced_map import (
    LevelPartition,
    SigmaSystem,
    branch_inverse,
    build_sigma,
    periodic_points,
    pressure_table,
    refine_partition,
    sigma_apply,
    verify_attractor,
)
from .transfer_operator import (
    ToyModel,
    apply_L,
    collocation_spectrum,
    toy_spectrum_exact,
    toy_spectrum_numeric,
)

__version__ = "0.1.0"
