"""Focal and intense tES current patterns via the L1-L1 linear program.

The package assembles the LP from a split lead field, solves it with in-house
interior-point and simplex solvers (checked against an exhaustive oracle), and
searches the (alpha, epsilon) lattice for the most intense and most focal
patterns.
"""
from .assembler import L1L1Params, assemble_l1l1, objective_value, to_standard_primal
from .grp import backproject, grp_bipolar, grp_k_intensity
from .ip import IpSettings, solve_ip
from .kkt import certify, check_kkt
from .leadfield import (
    LeadField, SplitLeadField, TargetSpec, generate_synthetic_leadfield,
    split_and_project, target_for_point,
)
from .metrics import CurrentPattern, PatternMetrics, focality, intensity, nnz_thresholded
from .oracle import OracleLimits, solve_exact
from .problem import LpProblem, SolverId, SolverReport, Status
from .search import LatticeSpec, run_lattice, run_two_stage, taylor_whisker
from .simplex import SimplexSettings, dual_of, solve_simplex

__version__ = "0.1.0"
