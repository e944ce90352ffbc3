"""
Training hyperparameters and presets
"""
from dataclasses import asdict, dataclass, replace

import numpy as np


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 60
    batch_size: int = 64
    base_lr: float = 3e-3
    warmup_epochs: int = 5
    weight_decay: float = 0.05
    seed: int = 0
    deterministic: bool = True
    eval_every: int = 1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    flip: bool = False
    dtype: str = 'float32'
    track_absorption: bool = True
    eval_workers: int = 4

    def validate(self) -> None:
        """
        Raises:
            ValueError: describing the first invalid field
        """
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.base_lr <= 0:
            raise ValueError(f"base learning rate must be positive, got {self.base_lr}")
        if self.epochs and not 0 <= self.warmup_epochs < self.epochs:
            raise ValueError(f"warmup epochs ({self.warmup_epochs}) must be below epochs ({self.epochs})")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if self.weight_decay < 0:
            raise ValueError(f"weight decay must be >= 0, got {self.weight_decay}")
        if self.eval_every < 1:
            raise ValueError(f"eval_every must be >= 1, got {self.eval_every}")
        if self.eval_workers < 1:
            raise ValueError(f"eval_workers must be >= 1, got {self.eval_workers}")
        np.dtype(self.dtype)

    @property
    def numpy_dtype(self) -> np.dtype:
        return np.dtype(self.dtype)

    @property
    def workers(self) -> int:
        """Evaluation threads; deterministic runs stay on the calling thread"""
        return 1 if self.deterministic else self.eval_workers

    def to_dict(self) -> dict:
        return asdict(self)

    def with_seed(self, seed: int) -> 'TrainConfig':
        return replace(self, seed=seed)

    @classmethod
    def desk(cls, **overrides) -> 'TrainConfig':
        return cls(**overrides)

    @classmethod
    def full_scale(cls, **overrides) -> 'TrainConfig':
        """Full-scale schedule: 300 epochs, batch 1024, lr 1e-3, wd 0.05, 5 warmup epochs"""
        values = dict(epochs=300, batch_size=1024, base_lr=1e-3, warmup_epochs=5, weight_decay=0.05)
        values.update(overrides)
        return cls(**values)


TRAIN_PRESETS = {
    'desk': TrainConfig.desk,
    'full': TrainConfig.full_scale,
}
