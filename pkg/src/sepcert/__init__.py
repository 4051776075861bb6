"""Joint data completion and geometric separation with recovery certificates."""

__version__ = "0.1.0"

from .certificates import (Certificate, SupportPair, certify, compute_delta, error_bound,
                           joint_ratio, kappa_exact, kappa_lower_estimate, select_supports)
from .frames import (ParsevalFrame, analyze, dct_frame, haar_frame, identity_frame,
                     parse_frame_spec, random_tight_frame, synthesize, union_frame,
                     verify_parseval)
from .hilbert import (CoordinatePartition, make_partition, norm, project_known,
                      project_missing)
from .solver import (SolveOptions, SolveResult, feasibility_residual, objective,
                     project_constraint, soft_threshold, solve_iterative, solve_lp_exact)

__all__ = [
    "Certificate", "SupportPair", "certify", "compute_delta", "error_bound", "joint_ratio",
    "kappa_exact", "kappa_lower_estimate", "select_supports",
    "ParsevalFrame", "analyze", "dct_frame", "haar_frame", "identity_frame", "parse_frame_spec",
    "random_tight_frame", "synthesize", "union_frame", "verify_parseval",
    "CoordinatePartition", "make_partition", "norm", "project_known", "project_missing",
    "SolveOptions", "SolveResult", "feasibility_residual", "objective", "project_constraint",
    "soft_threshold", "solve_iterative", "solve_lp_exact",
]
