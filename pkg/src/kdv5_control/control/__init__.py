from kdv5_control.control.profile import (
    ControlProfile,
    bump_integral,
    make_profile,
    make_uniform_profile,
)
from kdv5_control.control.operators import (
    actuation_matrix,
    apply_g_op,
    feedback,
    feedback_matrix,
    g_op_block,
    galerkin_matrix,
    remainder_E,
)
from kdv5_control.control.identities import (
    commutator_constant,
    ctrl1_defect,
    ctrl2_defect,
)

__all__ = [
    "ControlProfile",
    "bump_integral",
    "make_profile",
    "make_uniform_profile",
    "apply_g_op",
    "feedback",
    "g_op_block",
    "galerkin_matrix",
    "feedback_matrix",
    "actuation_matrix",
    "remainder_E",
    "commutator_constant",
    "ctrl1_defect",
    "ctrl2_defect",
]
