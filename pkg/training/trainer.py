"""
Training loop and evaluation

One optimizer step per mini-batch: forward, composite loss, backward, AdamW
under the warmup + cosine schedule. Batch order comes from a generator seeded
by the run seed, so a run is reproducible from (model seed, config).
"""
import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from analysis.absorption import EVAL_BATCH_SIZE, track_absorption
from imagedata import ImageRecord, dataset_fingerprint, stack_records
from numerics.batching import map_batches
from objective import model_loss
from transhp.exceptions import ContractError, DivergenceError, NumericError
from .config import TrainConfig
from .optim import AdamW
from .schedule import learning_rate

logger = logging.getLogger(__name__)


@dataclass
class TrainRunLog:
    """
    Everything a training run reports

    ``records`` hold one entry per epoch; ``absorption`` holds the per-block
    statistics rows. Wall-clock is kept apart from the line-delimited log so
    that the log of a deterministic run is bitwise reproducible.
    """
    config: Dict
    model: Dict
    variant: str
    seed: Optional[int]
    dataset_fingerprint: str
    train_size: int
    val_size: int
    records: List[Dict] = field(default_factory=list)
    absorption: List[Dict] = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def final(self) -> Dict:
        return self.records[-1] if self.records else {}

    def lines(self) -> List[Dict]:
        header = {
            'type': 'run', 'config': self.config, 'model': self.model, 'variant': self.variant,
            'seed': self.seed, 'dataset_fingerprint': self.dataset_fingerprint,
            'train_size': self.train_size, 'val_size': self.val_size,
        }
        return [header, *self.records, *self.absorption]

    def to_jsonl(self) -> str:
        return ''.join(json.dumps(line, sort_keys=True) + '\n' for line in self.lines())

    def checksum(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode('utf-8')).hexdigest()

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_jsonl(), encoding='utf-8')
        return path

    def write_timing(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text(json.dumps({'wall_clock_seconds': self.wall_clock, 'checksum': self.checksum()}, indent=2))
        return path


def evaluate(model, records: Sequence[ImageRecord], batch_size: int = EVAL_BATCH_SIZE, workers: int = 1) -> Dict:
    """
    Top-1 accuracies on a split

    Args:
        workers: threads scoring batches concurrently; counts are summed in
            batch order, so the result does not depend on it

    Returns:
        {'fine_top1': float, 'coarse_top1': {layer: float}}; coarse entries
        exist for every block with a coarse head

    Raises:
        ContractError: on an empty split
    """
    if not records:
        raise ContractError("cannot evaluate on an empty split")
    images, labels = stack_records(records, dtype=model.dtype)
    specs = {spec.layer_index: spec for spec in model.supervised_specs}

    def score(start: int, stop: int):
        batch_labels = labels[start:stop]
        output = model(images[start:stop])
        fine = int(np.sum(np.argmax(output.fine_logits.data, axis=-1) == batch_labels))
        coarse = {
            layer: int(np.sum(np.argmax(logits.data, axis=-1) == model.coarse_labels(batch_labels, specs[layer])))
            for layer, logits in output.coarse_logits.items()
        }
        return fine, coarse

    fine_correct = 0
    coarse_correct: Dict[int, int] = {}
    for fine, coarse in map_batches(score, len(images), batch_size, workers):
        fine_correct += fine
        for layer, hits in coarse.items():
            coarse_correct[layer] = coarse_correct.get(layer, 0) + hits

    count = len(images)
    return {
        'fine_top1': fine_correct / count,
        'coarse_top1': {layer: hits / count for layer, hits in sorted(coarse_correct.items())},
    }


def _flip(images: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    mask = rng.random(len(images)) < 0.5
    flipped = images.copy()
    flipped[mask] = flipped[mask][:, :, ::-1, :]
    return flipped


def train(model, train_records: Sequence[ImageRecord], val_records: Sequence[ImageRecord], cfg: TrainConfig,
          on_epoch: Optional[Callable[[Dict], None]] = None):
    """
    Train a model in place

    Args:
        model: a TransHPModel (any variant, or a stripped baseline)
        train_records: training split
        val_records: validation split; may be empty
        cfg: hyperparameters
        on_epoch: called with each epoch record as it is appended

    Returns:
        (model, TrainRunLog)

    Raises:
        ValueError: on an invalid TrainConfig
        DivergenceError: when a loss turns non-finite; nothing is recovered
    """
    cfg.validate()
    log = TrainRunLog(
        config=cfg.to_dict(),
        model=model.config.to_dict(),
        variant=model.variant if model.config.prompting_specs else 'baseline',
        seed=model.seed,
        dataset_fingerprint=dataset_fingerprint(train_records),
        train_size=len(train_records),
        val_size=len(val_records),
    )
    if cfg.epochs == 0:
        return model, log
    if not train_records:
        raise ContractError("cannot train on an empty split")

    started = time.perf_counter()
    images, labels = stack_records(train_records, dtype=model.dtype)
    count = len(images)
    steps_per_epoch = math.ceil(count / cfg.batch_size)
    total_steps = cfg.epochs * steps_per_epoch
    warmup_steps = cfg.warmup_epochs * steps_per_epoch
    order_rng = np.random.default_rng(cfg.seed)
    flip_rng = np.random.default_rng([cfg.seed, 1])
    optimizer = AdamW(model.params, cfg.weight_decay, cfg.beta1, cfg.beta2, cfg.eps)
    logger.info(f"Training {model} on {count} images: {cfg.epochs} epochs x {steps_per_epoch} steps")

    step = 0
    for epoch in range(1, cfg.epochs + 1):
        order = order_rng.permutation(count)
        sums: Dict[str, float] = {}
        correct = 0
        coarse_hits: Dict[str, int] = {}
        lr = 0.0
        for batch in range(steps_per_epoch):
            index = order[batch * cfg.batch_size:(batch + 1) * cfg.batch_size]
            batch_images = _flip(images[index], flip_rng) if cfg.flip else images[index]
            try:
                output = model(batch_images)
                breakdown = model_loss(model, output, labels[index])
            except NumericError as exc:
                raise DivergenceError(epoch, batch, float('nan')) from exc
            value = breakdown.total.item()
            if not math.isfinite(value):
                raise DivergenceError(epoch, batch, value)

            optimizer.zero_grad()
            breakdown.total.backward()
            lr = learning_rate(step, total_steps, warmup_steps, cfg.base_lr)
            optimizer.step(lr)
            step += 1

            for key, loss in breakdown.as_floats().items():
                sums[key] = sums.get(key, 0.0) + loss * len(index)
            correct += int(np.sum(np.argmax(output.fine_logits.data, axis=-1) == labels[index]))
            for spec in model.supervised_specs:
                predicted = np.argmax(output.coarse_logits[spec.layer_index].data, axis=-1)
                hits = int(np.sum(predicted == model.coarse_labels(labels[index], spec)))
                key = str(spec.layer_index)
                coarse_hits[key] = coarse_hits.get(key, 0) + hits

        record = {
            'type': 'epoch',
            'epoch': epoch,
            'lr': lr,
            'loss': {key: total / count for key, total in sums.items()},
            'train_fine_top1': correct / count,
            'val_fine_top1': None,
            'coarse_top1': {'train': {layer: hits / count for layer, hits in coarse_hits.items()}},
        }
        if epoch % cfg.eval_every == 0 or epoch == cfg.epochs:
            _evaluate_epoch(model, train_records, val_records, cfg, epoch, record, log)
        log.records.append(record)
        logger.info(
            f"Epoch {epoch}/{cfg.epochs}: loss {record['loss']['total']:.4f}, "
            f"train top-1 {record['train_fine_top1']:.4f}, val top-1 {record['val_fine_top1']}"
        )
        if on_epoch is not None:
            on_epoch(record)

    log.wall_clock = time.perf_counter() - started
    return model, log


def _evaluate_epoch(model, train_records, val_records, cfg: TrainConfig, epoch: int, record: Dict,
                    log: TrainRunLog) -> None:
    splits = {'train': train_records}
    if val_records:
        splits['val'] = val_records
        metrics = evaluate(model, val_records, workers=cfg.workers)
        record['val_fine_top1'] = metrics['fine_top1']
        record['coarse_top1']['val'] = {str(layer): acc for layer, acc in metrics['coarse_top1'].items()}
    if cfg.track_absorption and model.has_pools:
        for split, records in splits.items():
            split_images, split_labels = stack_records(records, dtype=model.dtype)
            log.absorption.extend(track_absorption(model, split_images, split_labels, epoch, split,
                                                   workers=cfg.workers))
