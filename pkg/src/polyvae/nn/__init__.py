"""Minimal dense-tensor math with reverse-mode autodiff."""

from . import kernels, ops
from .gradcheck import grad_check, grad_check_params
from .optim import Adam, load_checkpoint, save_checkpoint
from .ops import BatchNormState
from .tensor import NotScalar, Parameter, ShapeMismatch, Tensor, backward, zero_grads

__all__ = [
    "Adam",
    "BatchNormState",
    "NotScalar",
    "Parameter",
    "ShapeMismatch",
    "Tensor",
    "backward",
    "grad_check",
    "grad_check_params",
    "kernels",
    "load_checkpoint",
    "ops",
    "save_checkpoint",
    "zero_grads",
]
