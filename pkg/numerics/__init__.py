"""
Dense tensors with reverse-mode differentiation
"""
from .tensor import Tensor, Function, no_grad, is_grad_enabled
from .gradcheck import GradCheckResult, gradient_check

__all__ = [
    'Tensor',
    'Function',
    'no_grad',
    'is_grad_enabled',
    'GradCheckResult',
    'gradient_check',
]
