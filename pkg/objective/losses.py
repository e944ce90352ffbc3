"""
Training objective - fine loss plus balanced coarse losses of every prompting block
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import numpy as np

from numerics import Tensor
from numerics.functional import cross_entropy
from transhp.exceptions import ContractError

logger = logging.getLogger(__name__)


def coarse_loss(scores: Tensor, y) -> Tensor:
    """
    Softmax cross-entropy over the M coarse scores

    The coarse likelihood is the usual exp(S_y) / Σ exp(S_i); there is no
    temperature on the scores.

    Raises:
        IndexError: if y falls outside [0, M)
    """
    return cross_entropy(scores, y)


@dataclass
class LossBreakdown:
    fine_loss: Tensor
    coarse_losses: Dict[int, Tensor] = field(default_factory=dict)
    lambdas: Dict[int, float] = field(default_factory=dict)
    total: Optional[Tensor] = None

    def as_floats(self) -> Dict[str, float]:
        values = {'fine_loss': self.fine_loss.item(), 'total': self.total.item()}
        for layer, loss in self.coarse_losses.items():
            values[f'coarse_loss.{layer}'] = loss.item()
        return values


def total_loss(output, fine_labels, coarse_labels: Mapping[int, np.ndarray],
               lambdas: Mapping[int, float]) -> LossBreakdown:
    """
    fine + Σ_l λ_l · coarse_l, accumulated block by block in layer order

    Args:
        output: a ForwardOutput; its ``coarse_logits`` keys name the supervised blocks
        fine_labels: fine class per image
        coarse_labels: per supervised layer, the coarse class per image
        lambdas: per supervised layer, the balance weight

    Raises:
        ContractError: if the labels or lambdas do not cover exactly the supervised blocks
    """
    layers = sorted(output.coarse_logits)
    if sorted(coarse_labels) != layers or sorted(lambdas) != layers:
        raise ContractError(
            f"coarse labels for {sorted(coarse_labels)} and lambdas for {sorted(lambdas)} "
            f"must match the prompting blocks {layers}"
        )
    fine = cross_entropy(output.fine_logits, fine_labels)
    breakdown = LossBreakdown(fine_loss=fine, lambdas={layer: float(lambdas[layer]) for layer in layers})
    total = fine
    for layer in layers:
        loss = coarse_loss(output.coarse_logits[layer], coarse_labels[layer])
        breakdown.coarse_losses[layer] = loss
        total = total + breakdown.lambdas[layer] * loss
    breakdown.total = total
    return breakdown


def model_loss(model, output, fine_labels) -> LossBreakdown:
    """total_loss with labels and lambdas derived from the model's hierarchy and specs"""
    specs = {spec.layer_index: spec for spec in model.supervised_specs}
    return total_loss(
        output,
        fine_labels,
        {layer: model.coarse_labels(fine_labels, spec) for layer, spec in specs.items()},
        {layer: spec.balance for layer, spec in specs.items()},
    )
