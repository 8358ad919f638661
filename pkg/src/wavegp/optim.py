"""First-order ascent on smooth objectives.

Both the marginal-likelihood and ELBO fits use the same Adam loop: maximize a
differentiable objective, keep the best parameters ever evaluated, and stop
early once the objective stalls. Callers supply a function returning
``(value, gradient)`` at a parameter vector; any reparameterization (log
scales, positivity transforms) happens on the caller's side.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True, eq=False)
class AdamResult:
    """Outcome of one ascent run.

    ``x`` and ``value`` refer to the best parameters seen during the run, not
    necessarily the final iterate; re-evaluating the objective at ``x``
    reproduces ``value`` exactly.
    """

    x: np.ndarray
    value: float
    trace: np.ndarray
    n_iters: int
    converged: bool


def adam_maximize(
    value_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0: np.ndarray,
    lr: float = 0.01,
    max_iters: int = 300,
    rel_tol: float = 1e-7,
    patience: int = 10,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamResult:
    """Run Adam ascent from ``x0``.

    Stops at ``max_iters`` or once the objective changed by less than
    ``rel_tol`` (relative) over the last ``patience`` iterations. A non-finite
    objective or gradient ends the run; the best finite point seen is still
    returned. Raises FloatingPointError if not even the initial point
    evaluates to a finite value.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    best_x: np.ndarray | None = None
    best_val = -np.inf
    trace: list[float] = []
    converged = False

    for t in range(1, max_iters + 1):
        val, grad = value_and_grad(x)
        grad = np.asarray(grad, dtype=np.float64)
        if not np.isfinite(val) or not np.all(np.isfinite(grad)):
            break
        trace.append(float(val))
        if val > best_val:
            best_val = float(val)
            best_x = x.copy()
        if len(trace) > patience:
            prev = trace[-1 - patience]
            if abs(trace[-1] - prev) < rel_tol * max(1.0, abs(prev)):
                converged = True
                break
        m = beta1 * m + (1.0 - beta1) * grad
        v = beta2 * v + (1.0 - beta2) * grad**2
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        x = x + lr * m_hat / (np.sqrt(v_hat) + eps)

    if best_x is None:
        raise FloatingPointError("objective non-finite at the initial point")
    return AdamResult(
        x=best_x,
        value=best_val,
        trace=np.array(trace, dtype=np.float64),
        n_iters=len(trace),
        converged=converged,
    )
