"""
Prompt absorption statistics

The absorption weight of feature token x on prompt i is the attention mass
x's query row places on prompt key i, averaged over heads. Rows are already
softmax-normalised over all T = 1+N+M keys, so no renormalisation happens.
"""
import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from numerics import Tensor
from numerics.batching import map_batches
from transhp.exceptions import ContractError, DimensionError

logger = logging.getLogger(__name__)

CLASS_TOKEN = 'class_token'
FEATURE_MEAN = 'feature_mean'
SCOPES = (CLASS_TOKEN, FEATURE_MEAN)
PREDICTED = 'predicted'
TRUE = 'true'

# top two prompt weights closer than this fraction of the top weight count as ambiguous
AMBIGUITY_MARGIN = 0.10

EVAL_BATCH_SIZE = 256


def absorption_weights(attention, n_feature: int, prompt_count: int, per_head: bool = False) -> np.ndarray:
    """
    Attention mass of every feature-token query on every prompt key

    Args:
        attention: (..., h, T, T) attention probabilities, T = n_feature + prompt_count
        n_feature: 1+N feature tokens (class token plus patches)
        prompt_count: M prompt tokens
        per_head: keep the head axis instead of averaging it

    Returns:
        (..., n_feature, M), or (..., h, n_feature, M) with per_head

    Raises:
        DimensionError: if T disagrees with n_feature + prompt_count
    """
    attention = attention.data if isinstance(attention, Tensor) else np.asarray(attention)
    tokens = attention.shape[-1]
    if attention.ndim < 3 or attention.shape[-2] != tokens or tokens != n_feature + prompt_count:
        raise DimensionError(
            f"attention cannot hold {n_feature} feature and {prompt_count} prompt tokens", attention.shape,
        )
    weights = attention[..., :n_feature, n_feature:]
    return weights if per_head else weights.mean(axis=-3)


def absorption_ratio(weights: Sequence[float], k: int) -> float:
    """
    Target weight over the largest non-target weight

    Raises:
        ContractError: with fewer than two prompts the ratio is undefined
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.size < 2:
        raise ContractError(f"absorption ratio needs at least two prompts, got {weights.size}")
    if not 0 <= k < weights.size:
        raise IndexError(f"target prompt {k} out of range [0, {weights.size})")
    # an all-zero row has no absorbing prompt and scores 0
    return float(weights[k] / max(np.delete(weights, k).max(), np.finfo(np.float64).tiny))


def selection_label(weights: Sequence[float], true_k: int, margin: float = AMBIGUITY_MARGIN) -> str:
    """'correct', 'ambiguous' or 'incorrect' prompt selection for one image"""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.size >= 2:
        top, second = np.sort(weights)[::-1][:2]
        if second >= (1.0 - margin) * top:
            return 'ambiguous'
    return 'correct' if int(np.argmax(weights)) == true_k else 'incorrect'


@dataclass
class AbsorptionReport:
    """Absorption of one image at one prompting block"""
    image_id: int
    layer: int
    true_coarse: int
    predicted_coarse: int
    class_token_weights: List[float]
    feature_mean_weights: List[float]
    per_head_class_token: List[List[float]] = field(default_factory=list)
    sequence_length: int = 0

    def weights(self, scope: str = CLASS_TOKEN) -> np.ndarray:
        return np.asarray(self.class_token_weights if scope == CLASS_TOKEN else self.feature_mean_weights)

    def target_index(self, target: str = PREDICTED) -> int:
        return self.predicted_coarse if target == PREDICTED else self.true_coarse

    def target_weight(self, scope: str = CLASS_TOKEN, target: str = PREDICTED) -> float:
        return float(self.weights(scope)[self.target_index(target)])

    def ratio(self, scope: str = CLASS_TOKEN, target: str = PREDICTED) -> Optional[float]:
        weights = self.weights(scope)
        if weights.size < 2:
            return None
        return absorption_ratio(weights, self.target_index(target))

    @property
    def selection(self) -> str:
        return selection_label(self.class_token_weights, self.true_coarse)

    def to_dict(self) -> Dict:
        values = asdict(self)
        values['selection'] = self.selection
        for scope in SCOPES:
            for target in (PREDICTED, TRUE):
                values[f'target_weight.{scope}.{target}'] = self.target_weight(scope, target)
                values[f'ratio.{scope}.{target}'] = self.ratio(scope, target)
        return values


def image_reports(model, images: np.ndarray, fine_labels: Sequence[int], image_ids: Optional[Sequence[int]] = None,
                  batch_size: int = EVAL_BATCH_SIZE, workers: int = 1) -> List[AbsorptionReport]:
    """
    Absorption reports for every image at every prompting block

    The predicted coarse class is the argmax of the block's coarse scores;
    blocks without a coarse head (the no-coarse-labels variant) use the
    prompt the class token absorbs most.

    Raises:
        ContractError: if the model has no prompt pools
    """
    if not model.has_pools:
        raise ContractError(f"{model} has no prompting blocks to analyse")
    images = np.asarray(images)
    fine_labels = np.asarray(fine_labels, dtype=np.int64)
    image_ids = list(range(len(images))) if image_ids is None else list(image_ids)
    n_feature = 1 + model.config.patch_count

    def analyse(start: int, stop: int) -> List[AbsorptionReport]:
        output = model.forward(images[start:stop].astype(model.dtype, copy=False), retain_attention=True)
        batch = []
        for spec in model.config.prompting_specs:
            layer = spec.layer_index
            attention = output.attention[layer]
            weights = absorption_weights(attention, n_feature, spec.coarse_count)
            cls_weights = weights[:, 0, :]
            feature_mean = weights.mean(axis=1)
            per_head = attention[:, :, 0, n_feature:]
            if layer in output.coarse_logits:
                predicted = np.argmax(output.coarse_logits[layer].data, axis=-1)
            else:
                predicted = np.argmax(cls_weights, axis=-1)
            true = model.coarse_labels(fine_labels[start:stop], spec)
            for row in range(len(cls_weights)):
                batch.append(AbsorptionReport(
                    image_id=int(image_ids[start + row]),
                    layer=layer,
                    true_coarse=int(true[row]),
                    predicted_coarse=int(predicted[row]),
                    class_token_weights=cls_weights[row].tolist(),
                    feature_mean_weights=feature_mean[row].tolist(),
                    per_head_class_token=per_head[row].tolist(),
                    sequence_length=attention.shape[-1],
                ))
        return batch

    return [report for batch in map_batches(analyse, len(images), batch_size, workers) for report in batch]


def summarize_reports(reports: Sequence[AbsorptionReport]) -> Dict[int, Dict[str, float]]:
    """
    Per-block means of the target weights and medians of the ratios

    Keys are ``target_weight.<scope>.<target>``, ``ratio.<scope>.<target>``,
    ``uniform_weight`` (1/T) and ``count``.
    """
    by_layer: Dict[int, List[AbsorptionReport]] = {}
    for report in reports:
        by_layer.setdefault(report.layer, []).append(report)

    summary = {}
    for layer, items in sorted(by_layer.items()):
        stats = {'count': float(len(items)), 'uniform_weight': 1.0 / items[0].sequence_length}
        for scope in SCOPES:
            for target in (PREDICTED, TRUE):
                stats[f'target_weight.{scope}.{target}'] = float(np.mean(
                    [r.target_weight(scope, target) for r in items]))
                ratios = [r.ratio(scope, target) for r in items]
                if all(value is not None for value in ratios):
                    stats[f'ratio.{scope}.{target}'] = float(np.median(ratios))
        stats['selection.correct'] = float(np.mean([r.selection == 'correct' for r in items]))
        summary[layer] = stats
    return summary


def track_absorption(model, images: np.ndarray, fine_labels: Sequence[int], epoch: int, split: str,
                     batch_size: int = EVAL_BATCH_SIZE, workers: int = 1) -> List[Dict]:
    """
    Per-epoch absorption statistics as run-log rows

    Returns:
        [{'type': 'absorption', 'epoch', 'split', 'block', 'statistic', 'value'}, ...]
    """
    summary = summarize_reports(image_reports(model, images, fine_labels, batch_size=batch_size, workers=workers))
    rows = []
    for layer, stats in summary.items():
        for statistic, value in stats.items():
            rows.append({'type': 'absorption', 'epoch': epoch, 'split': split, 'block': layer,
                         'statistic': statistic, 'value': value})
        logger.info(
            f"Epoch {epoch} {split} block {layer}: target weight "
            f"{stats['target_weight.class_token.predicted']:.4f} (uniform {stats['uniform_weight']:.4f})"
        )
    return rows
