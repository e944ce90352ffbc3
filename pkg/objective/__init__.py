"""
Coarse head and composite loss
"""
from .heads import coarse_scores
from .losses import LossBreakdown, coarse_loss, model_loss, total_loss

__all__ = [
    'coarse_scores',
    'coarse_loss',
    'total_loss',
    'model_loss',
    'LossBreakdown',
]
