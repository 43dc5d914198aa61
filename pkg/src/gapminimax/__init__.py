"""Pollution-free gap eigenvalues of form-perturbed Hermitian pencils."""
__version__ = "0.1.0"

from .forms import (
    AlphaMetric,
    ConditionCheck,
    ConditionReport,
    FormPair,
    SplitSpace,
    alpha_gram,
    build_V_alpha,
    check_all,
    check_decoupling,
    check_sign_conditions,
    check_spectral_split_consistency,
    check_U_plus_V_invertible,
    form_bound_constant,
    to_block_coordinates,
)
from .minimax import (
    MinimaxResult,
    SchurReduction,
    SForm,
    assemble_s,
    brute_force_minimax,
    full_pencil_eigenvalues,
    level_g_k,
    level_l_k,
    monotonicity_certificate,
    multiplicity,
    schur_reduce,
    solve_all,
    solve_lambda_k,
)

__all__ = [
    "AlphaMetric", "ConditionCheck", "ConditionReport", "FormPair", "SplitSpace",
    "alpha_gram", "build_V_alpha", "check_all", "check_decoupling", "check_sign_conditions",
    "check_spectral_split_consistency", "check_U_plus_V_invertible", "form_bound_constant",
    "to_block_coordinates", "MinimaxResult", "SchurReduction", "SForm", "assemble_s",
    "brute_force_minimax", "full_pencil_eigenvalues", "level_g_k", "level_l_k", "monotonicity_certificate",
    "multiplicity", "schur_reduce", "solve_all", "solve_lambda_k",
]
