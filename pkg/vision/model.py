"""
TransHP model - a ViT whose prompting blocks inject coarse-class prompt pools

Parameters live in a flat dict of named Tensors; ``forward`` threads a batch
through blocks 1..L, swapping in ``prompting_block_forward`` at every
prompting layer.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np

from hierarchy import LabelHierarchy
from numerics import Tensor
from numerics.functional import layer_norm, linear, matmul
from objective.heads import coarse_scores
from transhp.exceptions import ContractError
from .config import ModelConfig, PromptingSpec
from .initialization import base_parameters, prompting_parameters
from .layers import block_forward, block_params, patch_embed, prompting_block_forward

logger = logging.getLogger(__name__)

TRANSHP = 'transhp'
NO_PROMPTS = 'no_prompts'
NO_COARSE_LABELS = 'no_coarse_labels'
VARIANTS = (TRANSHP, NO_PROMPTS, NO_COARSE_LABELS)
BASELINE = 'baseline'
ARMS = (TRANSHP, BASELINE, NO_PROMPTS, NO_COARSE_LABELS)


@dataclass
class ForwardOutput:
    """
    Result of one forward pass

    ``coarse_logits`` and ``prompt_states`` are keyed by prompting layer;
    only supervised blocks have coarse logits. ``sequence_lengths[i]`` is the
    token count entering block i+1.
    """
    fine_logits: Tensor
    coarse_logits: Dict[int, Tensor] = field(default_factory=dict)
    prompt_states: Dict[int, Tensor] = field(default_factory=dict)
    attention: Dict[int, np.ndarray] = field(default_factory=dict)
    sequence_lengths: List[int] = field(default_factory=list)


class TransHPModel:
    """
    Parameter set plus forward logic for TransHP and its ablation variants

    ``variant`` selects the coarse supervision: ``transhp`` scores prompt
    outputs against prototypes; ``no_prompts`` has no pools and scores the
    class token leaving each prompting layer; ``no_coarse_labels`` keeps the
    pools but has neither prototypes nor coarse loss.
    """

    def __init__(self, config: ModelConfig, hierarchy: LabelHierarchy, params: Dict[str, Tensor],
                 variant: str = TRANSHP, seed: Optional[int] = None):
        if variant not in VARIANTS:
            raise ContractError(f"unknown model variant '{variant}', choose from {VARIANTS}")
        self.config = config
        self.hierarchy = hierarchy
        self.params = params
        self.variant = variant
        self.seed = seed

    def __repr__(self):
        return (f"TransHPModel(variant={self.variant!r}, depth={self.config.depth}, "
                f"prompt_layers={self.config.prompt_layers})")

    @property
    def dtype(self) -> np.dtype:
        return self.params['cls_token'].dtype

    @property
    def has_pools(self) -> bool:
        return self.variant != NO_PROMPTS and bool(self.config.prompting_specs)

    @property
    def supervised_specs(self) -> List[PromptingSpec]:
        """Prompting specs that produce coarse logits"""
        if self.variant == NO_COARSE_LABELS:
            return []
        return list(self.config.prompting_specs)

    def parameters(self) -> List[Tensor]:
        return list(self.params.values())

    def zero_grad(self) -> None:
        for param in self.params.values():
            param.zero_grad()

    def state_arrays(self) -> Dict[str, np.ndarray]:
        return {name: param.data for name, param in self.params.items()}

    def coarse_labels(self, fine_labels, spec: PromptingSpec) -> np.ndarray:
        parents = np.asarray(self.hierarchy.levels[spec.level_id].parent_of, dtype=np.int64)
        return parents[np.asarray(fine_labels, dtype=np.int64)]

    def forward(self, images: np.ndarray, retain_attention: bool = False) -> ForwardOutput:
        """
        Args:
            images: (H, W, 3) or (B, H, W, 3), values in [0, 1]
            retain_attention: keep every block's attention probabilities

        Returns:
            ForwardOutput; fine logits are (F,) or (B, F)
        """
        config = self.config
        tokens = patch_embed(images, self.params, config)
        output = ForwardOutput(fine_logits=None)

        for layer in range(1, config.depth + 1):
            block = block_params(self.params, layer)
            spec = config.spec_at(layer)
            output.sequence_lengths.append(tokens.shape[-2] + (spec.coarse_count if spec and self.has_pools else 0))
            if spec is not None and self.has_pools:
                tokens, states, attention = prompting_block_forward(
                    tokens, self.params[f'prompting.{layer}.pool'], block, config.heads,
                )
                output.prompt_states[layer] = states
                if self.variant == TRANSHP:
                    output.coarse_logits[layer] = coarse_scores(states, self.params[f'prompting.{layer}.prototypes'])
            else:
                tokens, attention = block_forward(tokens, block, config.heads)
                if spec is not None and self.variant == NO_PROMPTS:
                    cls_state = tokens[..., 0, :]
                    output.coarse_logits[layer] = matmul(
                        cls_state.reshape(-1, config.embed_dim),
                        self.params[f'prompting.{layer}.prototypes'].transpose(),
                    ).reshape(*cls_state.shape[:-1], spec.coarse_count)
            if retain_attention:
                output.attention[layer] = attention.data

        final = layer_norm(tokens, self.params['norm.gain'], self.params['norm.bias'])
        # head on a (..., 1, C) slice so a single image stays two-dimensional for matmul
        logits = linear(final[..., :1, :], self.params['head.weight'], self.params['head.bias'])
        output.fine_logits = logits.reshape(*final.shape[:-2], config.fine_count)
        return output

    __call__ = forward


def _to_tensors(arrays: Dict[str, np.ndarray], dtype) -> Dict[str, Tensor]:
    return {name: Tensor(array.astype(dtype), requires_grad=True, name=name) for name, array in arrays.items()}


def assemble(config: ModelConfig, hierarchy: LabelHierarchy, seed: int, dtype=np.float64) -> TransHPModel:
    """
    Build and initialize a TransHP model

    Equal seeds give bitwise-identical parameters. The backbone draws do not
    depend on the prompting specs, so a baseline and a TransHP model built
    from one seed share every backbone parameter.

    Raises:
        ImproperlyConfigured: if the config disagrees with the hierarchy
    """
    config.validate(hierarchy)
    arrays = base_parameters(config, seed)
    for spec in config.prompting_specs:
        arrays.update(prompting_parameters(config, spec, seed))
    model = TransHPModel(config, hierarchy, _to_tensors(arrays, dtype), seed=seed)
    logger.info(f"Assembled {model} with {count_params(model)['total']} parameters")
    return model


def strip_prompting(model: TransHPModel) -> TransHPModel:
    """Plain ViT sharing the backbone parameter Tensors of ``model``"""
    params = {name: p for name, p in model.params.items() if not name.startswith('prompting.')}
    return TransHPModel(model.config.with_specs(()), model.hierarchy, params, seed=model.seed)


def make_variant(model: TransHPModel, kind: str) -> TransHPModel:
    """
    Derive a no_prompts or no_coarse_labels ablation from a TransHP model

    The variant gets copies of the retained parameters, so training it leaves
    ``model`` untouched.

    Raises:
        ContractError: if the model has no prompting blocks or kind is unknown
    """
    if not model.config.prompting_specs:
        raise ContractError("variants need a model with at least one prompting block")
    if kind == NO_PROMPTS:
        dropped = '.pool'
        config = model.config
    elif kind == NO_COARSE_LABELS:
        dropped = '.prototypes'
        config = model.config.with_specs([replace(spec, balance=0.0) for spec in model.config.prompting_specs])
    else:
        raise ContractError(f"unknown variant '{kind}', choose from {NO_PROMPTS}, {NO_COARSE_LABELS}")

    params = {
        name: Tensor(p.data.copy(), requires_grad=True, name=name)
        for name, p in model.params.items()
        if not (name.startswith('prompting.') and name.endswith(dropped))
    }
    logger.info(f"Built {kind} variant of {model}")
    return TransHPModel(config, model.hierarchy, params, variant=kind, seed=model.seed)


def build_model(config: ModelConfig, hierarchy: LabelHierarchy, seed: int, variant: str = TRANSHP,
                dtype=np.float64) -> TransHPModel:
    """assemble, then strip or ablate for the requested training arm"""
    if variant == BASELINE:
        return assemble(config.with_specs(()), hierarchy, seed, dtype)
    model = assemble(config, hierarchy, seed, dtype)
    return model if variant == TRANSHP else make_variant(model, variant)


def count_params(model: TransHPModel) -> Dict[str, int]:
    """
    Returns:
        {'total': every learnable scalar, 'added_by_prompting': pools and prototypes}
    """
    total = sum(p.size for p in model.params.values())
    added = sum(p.size for name, p in model.params.items() if name.startswith('prompting.'))
    return {'total': int(total), 'added_by_prompting': int(added)}
