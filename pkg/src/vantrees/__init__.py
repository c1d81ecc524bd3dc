"""Van Trees, Cramer-Rao and local asymptotic minimax lower bounds for models that are only L2-differentiable."""

from .bounds import (cramer_rao, bayes_risk, identity_target, van_trees_1d, van_trees_corollary,
                     van_trees_matrix)
from .errors import VanTreesError
from .families import FAMILIES
from .joint import build_joint, van_trees_as_cramer_rao
from .lam import LamInstance, lam_bound, local_minimax_risk
from .model import Model, fisher_information, product_model
from .prior import gaussian_prior, prior_information, quartic_bump, raised_cosine

__version__ = "0.1.0"

__all__ = [
    "FAMILIES", "LamInstance", "Model", "VanTreesError", "bayes_risk", "build_joint", "cramer_rao",
    "fisher_information", "gaussian_prior", "identity_target", "lam_bound", "local_minimax_risk",
    "prior_information", "product_model", "quartic_bump", "raised_cosine", "van_trees_1d",
    "van_trees_as_cramer_rao", "van_trees_corollary", "van_trees_matrix",
]
