"""Solver library for smooth nonconvex-concave min-max problems.

Finds approximate first-order Nash equilibria by inexact proximal-point
iterations on the primal variable, with accelerated gradient subsolvers that
tolerate inexact first-order information. Ships Moreau-envelope diagnostics
and a non-Euclidean (Bregman) geometry extension, plus a benchmark harness
and CLI.
"""

from __future__ import annotations

from .geometry import FeasibleSet, project, prox_map
from .stationarity import StationarityReport, fne_check, strong_measure, weak_measure
from .fgm import (
    FgmConfig,
    InexactOracle,
    fgm,
    prox_point_via_fgm,
    restart_fgm,
    restart_params_from_gap,
    restart_params_from_radius,
)
from .saddle import (
    ProblemSpec,
    SolverSchedule,
    SolveTrace,
    complexity_factors,
    compute_schedule,
    fne_search,
    solve_reg_dual,
)
from .moreau import (
    MoreauReport,
    constrained_concavity_check,
    epsilon_y_for_moreau,
    moreau_gradient,
)
from .bregman import (
    DgfGeometry,
    bregman_div,
    bregman_prox,
    bregman_prox_point,
    bregman_restart_fgm,
    euclidean_dgf,
    lp_dgf,
    strong_measure_bregman,
)
from .problems import ProblemInstance, build_problem, finite_diff_check
from .cli import run_cli

__version__ = "0.1.0"

__all__ = [
    "FeasibleSet",
    "project",
    "prox_map",
    "StationarityReport",
    "strong_measure",
    "weak_measure",
    "fne_check",
    "InexactOracle",
    "FgmConfig",
    "fgm",
    "restart_fgm",
    "restart_params_from_radius",
    "restart_params_from_gap",
    "prox_point_via_fgm",
    "ProblemSpec",
    "SolverSchedule",
    "SolveTrace",
    "compute_schedule",
    "solve_reg_dual",
    "fne_search",
    "complexity_factors",
    "MoreauReport",
    "moreau_gradient",
    "constrained_concavity_check",
    "epsilon_y_for_moreau",
    "DgfGeometry",
    "lp_dgf",
    "euclidean_dgf",
    "bregman_div",
    "bregman_prox",
    "strong_measure_bregman",
    "bregman_restart_fgm",
    "bregman_prox_point",
    "ProblemInstance",
    "build_problem",
    "finite_diff_check",
    "run_cli",
    "__version__",
]
