"""Minimal numpy tensor library with reverse-mode differentiation."""
from . import functional
from .functional import ShapeError, softmax_cross_entropy
from .layers import BatchNorm1d, Conv1d, Linear, Module
from .optim import Adam, AdamState, adam_step
from .tensor import Function, Tensor, default_dtype, grad_enabled, no_grad, wide_precision

__all__ = [
    "functional", "ShapeError", "softmax_cross_entropy", "BatchNorm1d", "Conv1d", "Linear",
    "Module", "Adam", "AdamState", "adam_step", "Function", "Tensor", "default_dtype",
    "grad_enabled", "no_grad", "wide_precision",
]
