"""Generalized Radon transforms along fixed-axis curve families.

The package provides forward transforms along the curve families
``y = s sign(X)|X|^alpha + u`` (Q), ``y = s|X|^alpha + u`` (P) and
``y^beta = s|X|^alpha + u`` (R), their reduction to the classical X-ray
transform, and principal-value inversion formulas for all three.
"""
from .core import (Grid2, GridFormatError, ParameterError, Sinogram, TransformParams,
                   XraySinogram, read_grid, read_sinogram, read_xray, validate_params,
                   write_grid, write_sinogram, write_xray)
from .forward import du_forward, forward, forward_grid, p_forward, q_forward, r_forward
from .inversion import HullError, InversionJob, invert, invert_p, invert_q, invert_r
from .phantoms import AnalyticField, check_membership, gaussian, make_phantom
from .quadrature import QuadSpec, QuadratureWarning, pv_integral
from .reduction import ReducedField, boundary_limit, recover, reduce, verify_reduction_identity
from .xray import xray_forward, xray_forward_grid, xray_invert, xray_invert_grid

__all__ = [
    "AnalyticField", "Grid2", "GridFormatError", "HullError", "InversionJob", "ParameterError",
    "QuadSpec", "QuadratureWarning", "ReducedField", "Sinogram", "TransformParams",
    "XraySinogram", "boundary_limit", "check_membership", "du_forward", "forward",
    "forward_grid", "gaussian", "invert", "invert_p", "invert_q", "invert_r", "make_phantom",
    "p_forward", "pv_integral", "q_forward", "r_forward", "read_grid", "read_sinogram",
    "read_xray", "recover", "reduce", "validate_params", "verify_reduction_identity",
    "write_grid", "write_sinogram", "write_xray", "xray_forward", "xray_forward_grid",
    "xray_invert", "xray_invert_grid",
]
