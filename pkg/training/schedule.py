"""
Learning-rate schedule: linear warmup, then cosine decay to zero
"""
import math


def learning_rate(step: int, total_steps: int, warmup_steps: int, base_lr: float) -> float:
    """
    Learning rate for a 0-based optimizer step

    Warmup steps ramp linearly to base_lr (step s gets base_lr·(s+1)/warmup);
    the remaining steps follow base_lr·½(1 + cos(π·progress)), progress
    running from 0 at the end of warmup towards 1 at the last step.
    """
    if step < warmup_steps:
        return base_lr * (step + 1) / warmup_steps
    progress = (step - warmup_steps) / max(1, total_steps - warmup_steps)
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * progress))
