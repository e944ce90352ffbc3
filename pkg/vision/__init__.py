"""
TransHP vision transformer
"""
from .config import ModelConfig, PromptingSpec, preset_config, desk_config
from .model import ForwardOutput, TransHPModel, assemble, build_model, count_params, make_variant, strip_prompting
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    'ModelConfig',
    'PromptingSpec',
    'preset_config',
    'desk_config',
    'ForwardOutput',
    'TransHPModel',
    'assemble',
    'build_model',
    'count_params',
    'make_variant',
    'strip_prompting',
    'load_checkpoint',
    'save_checkpoint',
]
