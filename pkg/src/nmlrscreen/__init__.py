"""Nuclear-norm regularized multivariate regression: dual ADMM solver,
proximal-gradient oracle and rank-certifying tuning-parameter rules."""

from .dual import AdmmConfig, DualSolution, recover_primal, solve_dual
from .linalg import (
    SolverError, frobenius_norm, nuclear_norm, project_spectral_ball, rank_eps,
    spectral_norm, svd, svt,
)
from .primal import KktReport, PgConfig, duality_gap, kkt_residuals, solve_primal
from .rules import (
    EstimateBall, ReferenceSolution, RuleCertificate, RuleKind, estimate_ball,
    lambda_max, psr_threshold, psri_threshold, psrfn_threshold, psrplus_threshold,
    reference_at_lambda_max, reference_from_admm, reference_from_primal,
    rule_certificate, v1, v2, v3,
)

__all__ = [
    "AdmmConfig", "DualSolution", "recover_primal", "solve_dual",
    "SolverError", "frobenius_norm", "nuclear_norm", "project_spectral_ball", "rank_eps",
    "spectral_norm", "svd", "svt",
    "KktReport", "PgConfig", "duality_gap", "kkt_residuals", "solve_primal",
    "EstimateBall", "ReferenceSolution", "RuleCertificate", "RuleKind", "estimate_ball",
    "lambda_max", "psr_threshold", "psri_threshold", "psrfn_threshold", "psrplus_threshold",
    "reference_at_lambda_max", "reference_from_admm", "reference_from_primal",
    "rule_certificate", "v1", "v2", "v3",
]
