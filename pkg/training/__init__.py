"""
Training, evaluation and multi-run experiments
"""
from .config import TRAIN_PRESETS, TrainConfig
from .trainer import TrainRunLog, evaluate, train
from .experiments import ExperimentTable, coarse_count_ablation, data_efficiency_protocol, position_sweep

__all__ = [
    'TrainConfig',
    'TRAIN_PRESETS',
    'TrainRunLog',
    'train',
    'evaluate',
    'ExperimentTable',
    'position_sweep',
    'data_efficiency_protocol',
    'coarse_count_ablation',
]
