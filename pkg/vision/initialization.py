"""
Seeded parameter initialization

Base parameters come from one generator seeded with the model seed; each
prompting block draws from its own generator keyed by (seed, layer), so adding
or removing prompting blocks never shifts the backbone's draws.
"""
from typing import Dict, Tuple

import numpy as np

from .config import ModelConfig, PromptingSpec

EMBED_STD = 0.02


def truncated_normal(rng: np.random.Generator, shape: Tuple[int, ...], std: float = EMBED_STD) -> np.ndarray:
    """Normal(0, std) redrawn until every value lies within two standard deviations"""
    values = rng.normal(0.0, std, size=shape)
    outside = np.abs(values) > 2.0 * std
    while outside.any():
        values[outside] = rng.normal(0.0, std, size=int(outside.sum()))
        outside = np.abs(values) > 2.0 * std
    return values


def fan_in_uniform(rng: np.random.Generator, out_features: int, in_features: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(in_features)
    return rng.uniform(-bound, bound, size=(out_features, in_features))


def base_parameters(config: ModelConfig, seed: int) -> Dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    c, hidden = config.embed_dim, config.hidden_dim
    arrays = {
        'patch_embed.weight': fan_in_uniform(rng, c, config.patch_dim),
        'patch_embed.bias': np.zeros(c),
        'cls_token': truncated_normal(rng, (c,)),
        'pos_embed': truncated_normal(rng, (1 + config.patch_count, c)),
    }
    for layer in range(1, config.depth + 1):
        prefix = f'blocks.{layer}.'
        arrays.update({
            prefix + 'norm1.gain': np.ones(c),
            prefix + 'norm1.bias': np.zeros(c),
            prefix + 'attn.qkv.weight': fan_in_uniform(rng, 3 * c, c),
            prefix + 'attn.qkv.bias': np.zeros(3 * c),
            prefix + 'attn.proj.weight': fan_in_uniform(rng, c, c),
            prefix + 'attn.proj.bias': np.zeros(c),
            prefix + 'norm2.gain': np.ones(c),
            prefix + 'norm2.bias': np.zeros(c),
            prefix + 'mlp.fc1.weight': fan_in_uniform(rng, hidden, c),
            prefix + 'mlp.fc1.bias': np.zeros(hidden),
            prefix + 'mlp.fc2.weight': fan_in_uniform(rng, c, hidden),
            prefix + 'mlp.fc2.bias': np.zeros(c),
        })
    arrays.update({
        'norm.gain': np.ones(c),
        'norm.bias': np.zeros(c),
        'head.weight': fan_in_uniform(rng, config.fine_count, c),
        'head.bias': np.zeros(config.fine_count),
    })
    return arrays


def prompting_parameters(config: ModelConfig, spec: PromptingSpec, seed: int) -> Dict[str, np.ndarray]:
    rng = np.random.default_rng([seed, spec.layer_index])
    shape = (spec.coarse_count, config.embed_dim)
    prefix = f'prompting.{spec.layer_index}.'
    return {
        prefix + 'pool': truncated_normal(rng, shape),
        prefix + 'prototypes': truncated_normal(rng, shape),
    }
