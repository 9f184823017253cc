"""Adam with a piecewise-constant learning-rate schedule."""

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ..core.errors import NonFiniteGradientError, ValidationError

Schedule = Sequence[tuple[int, float]]


def check_schedule(schedule: Schedule) -> list[tuple[int, float]]:
    """Normalize (step, rate) breakpoints; steps must strictly increase."""
    if not schedule:
        raise ValidationError("learning-rate schedule is empty")
    checked: list[tuple[int, float]] = []
    for step, rate in schedule:
        step, rate = int(step), float(rate)
        if checked and step <= checked[-1][0]:
            raise ValidationError(
                f"schedule steps must strictly increase, got {step} after {checked[-1][0]}"
            )
        if step < 0 or not rate > 0:
            raise ValidationError(f"invalid schedule breakpoint ({step}, {rate})")
        checked.append((step, rate))
    return checked


@dataclass
class AdamState:
    """Moments per named parameter plus the step counter."""

    schedule: list[tuple[int, float]] = field(default_factory=lambda: [(0, 1e-3)])
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first: dict[str, np.ndarray] = field(default_factory=dict)
    second: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.schedule = check_schedule(self.schedule)

    def rate_at(self, iteration: int) -> float:
        """Rate of the last breakpoint at or before iteration (0-based)."""
        rate = self.schedule[0][1]
        for step, step_rate in self.schedule:
            if step > iteration:
                break
            rate = step_rate
        return rate


def adam_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    iteration: Optional[int] = None,
) -> dict[str, np.ndarray]:
    """One bias-corrected Adam update; returns new arrays, inputs untouched.

    The rate comes from the schedule at `iteration` (defaults to the number
    of steps taken so far). Non-finite gradients abort before any moment
    is updated.
    """
    iteration = state.step if iteration is None else iteration
    for name, grad in grads.items():
        if name not in params:
            raise ValidationError(f"gradient for unknown parameter '{name}'")
        if grad.shape != params[name].shape:
            raise ValidationError(
                f"gradient for '{name}' has shape {grad.shape}, parameter {params[name].shape}"
            )
        if not np.all(np.isfinite(grad)):
            raise NonFiniteGradientError(iteration, name)

    state.step += 1
    rate = state.rate_at(iteration)
    bias1 = 1.0 - state.beta1**state.step
    bias2 = 1.0 - state.beta2**state.step

    updated = {}
    for name, value in params.items():
        grad = grads.get(name)
        if grad is None:
            updated[name] = value
            continue
        m = state.first.get(name, np.zeros_like(value))
        v = state.second.get(name, np.zeros_like(value))
        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * (grad * grad)
        state.first[name] = m
        state.second[name] = v
        updated[name] = value - rate * (m / bias1) / (np.sqrt(v / bias2) + state.eps)
    return updated


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_by_global_norm(
    grads: Mapping[str, np.ndarray], max_norm: float
) -> dict[str, np.ndarray]:
    """Scale all gradients together so their joint L2 norm is at most max_norm."""
    norm = global_norm(grads)
    if norm <= max_norm or norm == 0.0:
        return dict(grads)
    scale = max_norm / norm
    return {name: g * scale for name, g in grads.items()}
