"""
Set-to-set coarse head

Each prompt output state is scored only against its own prototype:
S[i] = p̂_i · w_i, the diagonal of P̂ Wᵀ.
"""
from numerics import Tensor
from numerics.functional import diagonal, matmul
from transhp.exceptions import DimensionError


def coarse_scores(prompt_states: Tensor, prototypes: Tensor) -> Tensor:
    """
    Args:
        prompt_states: (M, C) or batched (B, M, C)
        prototypes: (M, C)

    Returns:
        scores of shape (M,) or (B, M)

    Raises:
        DimensionError: if M or C disagree
    """
    if prompt_states.shape[-2:] != prototypes.shape:
        raise DimensionError("prompt states and prototypes must have equal shape", prompt_states.shape,
                             prototypes.shape)
    return diagonal(matmul(prompt_states, prototypes.transpose()))
