"""CH and CHSH Bell inequalities for two qutrits."""

from .functionals import BellFunctional, by_name, evaluate, expand_marginals
from .prob_core import JointDistribution, check_no_signaling, pr_box_qutrit

__all__ = [
    "BellFunctional",
    "JointDistribution",
    "by_name",
    "check_no_signaling",
    "evaluate",
    "expand_marginals",
    "pr_box_qutrit",
]
