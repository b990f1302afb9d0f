"""Finite-dimensional operator spaces, completely bounded maps and quantum channels."""

from .cbmaps import CBMap, Verdict, cb_norm_lower, is_complete_contraction, is_complete_isometry
from .chu import ChuMorphism, ChuObject, hs_object, morphism_valid, polarity_report, tensor_hs
from .exponential import FreeL1Element, promote, u_adjoint, u_apply, u_ctrl
from .hsduality import Channel, hs_correspondence_suite, transpose
from .numerics import NormEstimate, OptimizerConfig
from .opspace import OperatorSpace, matrix_space, trace_class
from .switch import build_switch, switch_mb_witness
from .tensors import BilinearMap, haagerup_norm, jcb_norm, mb_norm, projective_norm

__version__ = "0.1.0"

__all__ = [
    "BilinearMap", "CBMap", "Channel", "ChuMorphism", "ChuObject", "FreeL1Element", "NormEstimate",
    "OperatorSpace", "OptimizerConfig", "Verdict", "build_switch", "cb_norm_lower", "haagerup_norm",
    "hs_correspondence_suite", "hs_object", "is_complete_contraction", "is_complete_isometry", "jcb_norm",
    "matrix_space", "mb_norm", "morphism_valid", "polarity_report", "projective_norm", "promote",
    "switch_mb_witness", "tensor_hs", "trace_class", "transpose", "u_adjoint", "u_apply", "u_ctrl",
]
