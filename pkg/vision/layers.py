"""
Transformer building blocks on numerics Tensors

Tokens are laid out as (..., T, C): any leading batch axes are carried
through unchanged. Block parameters are passed as a dict keyed by the
names below the ``blocks.<layer>.`` prefix.
"""
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from django.core.exceptions import ImproperlyConfigured

from numerics import Tensor
from numerics.functional import broadcast_to, concat, gelu, layer_norm, linear, matmul, softmax
from .config import ModelConfig

BlockParams = Dict[str, Tensor]


def block_params(params: Dict[str, Tensor], layer_index: int) -> BlockParams:
    prefix = f'blocks.{layer_index}.'
    return {name[len(prefix):]: value for name, value in params.items() if name.startswith(prefix)}


def patchify(images: np.ndarray, patch_size: int) -> np.ndarray:
    """
    Split (..., H, W, 3) images into (..., N, P·P·3) patch vectors

    Patches are taken row by row; inside a patch the flat index of pixel
    (p1, p2) channel c is (p1·P + p2)·3 + c.
    """
    *lead, height, width, channels = images.shape
    grid = height // patch_size
    blocks = images.reshape(*lead, grid, patch_size, grid, patch_size, channels)
    n = len(lead)
    axes = tuple(range(n)) + (n, n + 2, n + 1, n + 3, n + 4)
    return blocks.transpose(axes).reshape(*lead, grid * grid, patch_size * patch_size * channels)


def patch_embed(images: np.ndarray, params: Dict[str, Tensor], config: ModelConfig) -> Tensor:
    """
    Class token followed by linear patch embeddings, plus position embeddings

    Args:
        images: one (H, W, 3) image or a batch (B, H, W, 3)

    Returns:
        Tensor of shape (1+N, C) or (B, 1+N, C)

    Raises:
        ImproperlyConfigured: if the image size disagrees with the config
    """
    images = np.asarray(images)
    expected = (config.image_size, config.image_size, 3)
    if images.shape[-3:] != expected:
        raise ImproperlyConfigured(f"model expects images of shape {expected}, got {images.shape[-3:]}")
    dtype = params['patch_embed.weight'].dtype
    patches = Tensor(patchify(images.astype(dtype, copy=False), config.patch_size))
    embedded = linear(patches, params['patch_embed.weight'], params['patch_embed.bias'])
    lead = images.shape[:-3]
    cls = broadcast_to(params['cls_token'].reshape(1, config.embed_dim), lead + (1, config.embed_dim))
    return concat([cls, embedded], axis=-2) + params['pos_embed']


def _swap_last(ndim: int) -> Tuple[int, ...]:
    return tuple(range(ndim - 2)) + (ndim - 1, ndim - 2)


def multi_head_attention(x: Tensor, block: BlockParams, heads: int,
                         mask: Optional[np.ndarray] = None) -> Tuple[Tensor, Tensor]:
    """
    Scaled dot-product self-attention over the token axis

    Returns:
        (projected output (..., T, C), attention probabilities (..., h, T, T))
    """
    *lead, tokens, width = x.shape
    d = width // heads
    n = len(lead)
    qkv = linear(x, block['attn.qkv.weight'], block['attn.qkv.bias'])
    # (..., T, 3, h, d) -> (3, ..., h, T, d)
    qkv = qkv.reshape(*lead, tokens, 3, heads, d)
    qkv = qkv.transpose((n + 1,) + tuple(range(n)) + (n + 2, n, n + 3))
    q, k, v = qkv[0], qkv[1], qkv[2]
    scores = matmul(q, k.transpose(_swap_last(k.ndim))) * (1.0 / math.sqrt(d))
    attention = softmax(scores, axis=-1, mask=mask)
    mixed = matmul(attention, v)
    mixed = mixed.transpose(tuple(range(n)) + (n + 1, n, n + 2)).reshape(*lead, tokens, width)
    return linear(mixed, block['attn.proj.weight'], block['attn.proj.bias']), attention


def block_forward(tokens: Tensor, block: BlockParams, heads: int,
                  mask: Optional[np.ndarray] = None) -> Tuple[Tensor, Tensor]:
    """
    Pre-norm transformer block: x + MSA(LN(x)), then x + MLP(LN(x))

    Args:
        tokens: (..., T, C)
        block: parameters of one block
        heads: number of attention heads
        mask: optional boolean array broadcastable to (..., h, T, T); True
            excludes a key from a query's softmax

    Returns:
        (tokens out, attention (..., h, T, T))
    """
    attended, attention = multi_head_attention(
        layer_norm(tokens, block['norm1.gain'], block['norm1.bias']), block, heads, mask,
    )
    x = tokens + attended
    hidden = gelu(linear(layer_norm(x, block['norm2.gain'], block['norm2.bias']),
                         block['mlp.fc1.weight'], block['mlp.fc1.bias']))
    x = x + linear(hidden, block['mlp.fc2.weight'], block['mlp.fc2.bias'])
    return x, attention


def _with_prompts(tokens: Tensor, prompts: Tensor) -> Tensor:
    lead = tokens.shape[:-2]
    if prompts.ndim == 2 and lead:
        prompts = broadcast_to(prompts, lead + prompts.shape)
    return concat([tokens, prompts], axis=-2)


def prompting_block_forward(tokens: Tensor, pool: Tensor, block: BlockParams, heads: int,
                            mask_prompts: bool = False) -> Tuple[Tensor, Tensor, Tensor]:
    """
    Run one block over [x_cls, X, P_M] and split the result

    The first 1+N output rows continue through the network; the last M rows
    are the prompt output states, consumed only by the coarse head.

    Args:
        tokens: feature tokens (..., 1+N, C), carrying no prompt rows
        pool: prompt pool (M, C)
        mask_prompts: exclude prompt keys from every softmax, so prompts
            cannot influence the feature rows

    Returns:
        (features (..., 1+N, C), prompt states (..., M, C), attention (..., h, T, T))
    """
    n_feature = tokens.shape[-2]
    sequence = _with_prompts(tokens, pool)
    mask = None
    if mask_prompts and pool.shape[0]:
        total = sequence.shape[-2]
        mask = np.zeros((total, total), dtype=bool)
        mask[:, n_feature:] = True
    out, attention = block_forward(sequence, block, heads, mask)
    return out[..., :n_feature, :], out[..., n_feature:, :], attention


def generic_prompting_forward(tokens: Tensor, prompt: Tensor, blocks: Sequence[BlockParams],
                              heads: int) -> Tuple[Tensor, Tensor, List[Tensor]]:
    """
    Prompt-tuning forward: one prompt token rides along through every block

    Unlike ``prompting_block_forward`` the prompt output is forwarded into the
    next block and no pool or coarse head is involved.

    Returns:
        (features, final prompt state (..., 1, C), attention per block)
    """
    n_feature = tokens.shape[-2]
    sequence = _with_prompts(tokens, prompt.reshape(1, prompt.shape[-1]) if prompt.ndim == 1 else prompt)
    attentions = []
    for block in blocks:
        sequence, attention = block_forward(sequence, block, heads)
        attentions.append(attention)
    return sequence[..., :n_feature, :], sequence[..., n_feature:, :], attentions
