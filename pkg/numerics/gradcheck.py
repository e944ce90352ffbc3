"""
Finite-difference gradient oracle
"""
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .tensor import Tensor, no_grad


@dataclass
class GradCheckResult:
    """Outcome of comparing an analytic gradient with central differences"""
    max_relative_error: float
    worst_coordinate: Tuple[int, ...]
    passed: bool
    tolerance: float


def analytic_gradient(f: Callable[[Tensor], Tensor], x: Tensor) -> np.ndarray:
    x.zero_grad()
    f(x).backward()
    return x.grad.copy()


def numeric_gradient(f: Callable[[Tensor], Tensor], x: Tensor, h: float = 1e-5) -> np.ndarray:
    """Central differences (f(x+h·e_i) - f(x-h·e_i)) / 2h, one coordinate at a time"""
    grad = np.zeros_like(x.data)
    with no_grad():
        for index in np.ndindex(*x.shape):
            original = x.data[index]
            x.data[index] = original + h
            upper = f(x).item()
            x.data[index] = original - h
            lower = f(x).item()
            x.data[index] = original
            grad[index] = (upper - lower) / (2.0 * h)
    return grad


def compare_gradients(analytic: np.ndarray, numeric: np.ndarray, tolerance: float) -> GradCheckResult:
    denominator = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    relative = np.abs(analytic - numeric) / denominator
    if relative.size == 0:
        return GradCheckResult(0.0, (), True, tolerance)
    worst = np.unravel_index(int(np.argmax(relative)), relative.shape)
    error = float(relative[worst])
    return GradCheckResult(
        max_relative_error=error,
        worst_coordinate=tuple(int(i) for i in worst),
        passed=error <= tolerance,
        tolerance=tolerance,
    )


def gradient_check(f: Callable[[Tensor], Tensor], x: Tensor, h: float = 1e-5,
                   tolerance: float = 1e-6, analytic: Optional[np.ndarray] = None) -> GradCheckResult:
    """
    Compare the autodiff gradient of a scalar function with central differences

    Failures are reported in the result, never raised.

    Args:
        f: deterministic function of x returning a scalar Tensor
        x: point of evaluation; must require grad
        h: finite-difference step
        tolerance: bound on the relative error, which is measured against
            max(1, |analytic|, |numeric|)
        analytic: gradient to test instead of running backward (fault injection)

    Returns:
        GradCheckResult
    """
    if h <= 0:
        raise ValueError(f"finite-difference step must be positive, got {h}")
    if analytic is None:
        analytic = analytic_gradient(f, x)
    return compare_gradients(analytic, numeric_gradient(f, x, h), tolerance)


def check_parameters(loss_fn: Callable[[], Tensor], parameters: Dict[str, Tensor],
                     h: float = 1e-5, tolerance: float = 1e-6) -> Dict[str, GradCheckResult]:
    """
    Gradient-check every named parameter of a closure-style loss

    One backward pass provides all analytic gradients; each parameter is then
    perturbed in place.
    """
    for param in parameters.values():
        param.zero_grad()
    loss_fn().backward()
    analytic = {name: param.grad.copy() for name, param in parameters.items()}

    results = {}
    for name, param in parameters.items():
        numeric = numeric_gradient(lambda _: loss_fn(), param, h)
        results[name] = compare_gradients(analytic[name], numeric, tolerance)
    return results
