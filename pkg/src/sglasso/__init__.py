"""Sparse group Lasso solvers: semismooth Newton augmented Lagrangian and ADMM."""
from .model import (DesignMatrix, GroupPartition, SglProblem, PrimalDualPoint, SolveReport,
                    primal_objective, dual_objective, eta_metrics, nnz_estimate, kkt_residual,
                    lambda_max, lambdas_from_strategy, make_problem)
from .prox import (soft_threshold, group_shrink, project_l2_ball, prox_p,
                   prox_conjugate_residual, dual_feasibility_gap)
from .jacobian import ProxDerivativeInfo, derivative_info, apply_M, assemble_dense_M
from .newton_system import NewtonSystem, Strategy, build_structured, apply_V
from .ssn import SsnParams, psi_value, psi_grad, ssn_minimize
from .alm import AlmParams, alm_solve, sigma_update
from .admm import AdmmParams, admm_solve

__version__ = "0.1.0"
