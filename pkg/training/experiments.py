"""
Multi-run experiments: prompt-position sweep, data-efficiency protocol and
coarse-class-count ablation

Every run of an experiment uses the same seed(s), so rows differ only in the
factor being varied.
"""
import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
from django.core.exceptions import ImproperlyConfigured

from hierarchy import LabelHierarchy
from imagedata import ImageRecord, subsample_per_class
from vision import ModelConfig, PromptingSpec, build_model
from vision.model import BASELINE, TRANSHP
from .config import TrainConfig
from .trainer import train

logger = logging.getLogger(__name__)

SINGLE = 'single'
FROM_LAYER = 'from_layer'
SWEEP_MODES = (SINGLE, FROM_LAYER)


@dataclass
class ExperimentTable:
    columns: List[str]
    rows: List[Dict] = field(default_factory=list)

    def add(self, **values) -> Dict:
        row = {column: values.get(column) for column in self.columns}
        self.rows.append(row)
        return row

    def column(self, name: str) -> List:
        return [row[name] for row in self.rows]

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('w', newline='', encoding='utf-8') as handle:
            writer = csv.DictWriter(handle, fieldnames=self.columns)
            writer.writeheader()
            for row in self.rows:
                writer.writerow({key: '' if value is None else value for key, value in row.items()})
        return path


@dataclass
class RunResult:
    label: str
    config: ModelConfig
    fine_top1: Optional[float]
    coarse_top1: Dict[str, float]
    checksum: str


def run_arm(config: ModelConfig, hierarchy: LabelHierarchy, train_records: Sequence[ImageRecord],
            val_records: Sequence[ImageRecord], cfg: TrainConfig, variant: str = TRANSHP,
            label: str = '') -> RunResult:
    """Build, train and score one arm; the score is val top-1, or train top-1 without a val split"""
    model = build_model(config, hierarchy, cfg.seed, variant, dtype=cfg.numpy_dtype)
    _, log = train(model, train_records, val_records, cfg)
    final = log.final
    split = 'val' if val_records else 'train'
    fine = final.get(f'{split}_fine_top1')
    coarse = final.get('coarse_top1', {}).get(split, {})
    logger.info(f"Arm {label or variant}: fine top-1 {fine}")
    return RunResult(label or variant, model.config, fine, dict(coarse), log.checksum())


def _sweep_config(base: ModelConfig, candidate: int, mode: str) -> ModelConfig:
    if mode == SINGLE:
        if not base.prompting_specs:
            raise ImproperlyConfigured("a single-placement sweep needs a base config with a prompting block")
        return base.with_specs([replace(base.prompting_specs[0], layer_index=candidate)])
    return base.with_specs([spec for spec in base.prompting_specs if spec.layer_index >= candidate])


def position_sweep(base: ModelConfig, hierarchy: LabelHierarchy, candidates: Sequence[int],
                   train_records: Sequence[ImageRecord], val_records: Sequence[ImageRecord], cfg: TrainConfig,
                   mode: str = SINGLE, include_baseline: bool = True) -> ExperimentTable:
    """
    Train once per prompt placement

    ``single`` moves the first prompting block of ``base`` to each candidate
    layer. ``from_layer`` keeps the blocks of a multi-block preset at layers
    >= the candidate, so candidate n means "prompts from layer n onwards".

    Raises:
        ImproperlyConfigured: on an unknown mode or a candidate outside [1, depth];
            every config is checked before the first run
    """
    if mode not in SWEEP_MODES:
        raise ImproperlyConfigured(f"unknown sweep mode '{mode}', choose from {SWEEP_MODES}")
    for candidate in candidates:
        if not 1 <= candidate <= base.depth:
            raise ImproperlyConfigured(f"placement {candidate} outside [1, {base.depth}]")
    configs = [(candidate, _sweep_config(base, candidate, mode)) for candidate in candidates]
    for _, config in configs:
        config.validate(hierarchy)

    table = ExperimentTable(['placement', 'prompt_layers', 'fine_top1', 'coarse_top1', 'checksum'])
    if include_baseline:
        result = run_arm(base, hierarchy, train_records, val_records, cfg, BASELINE)
        table.add(placement=BASELINE, prompt_layers='', fine_top1=result.fine_top1, checksum=result.checksum)
    for candidate, config in configs:
        result = run_arm(config, hierarchy, train_records, val_records, cfg, label=f'layer {candidate}')
        table.add(
            placement=candidate,
            prompt_layers=' '.join(str(layer) for layer in config.prompt_layers),
            fine_top1=result.fine_top1,
            coarse_top1=' '.join(f'{layer}:{acc:.4f}' for layer, acc in result.coarse_top1.items()),
            checksum=result.checksum,
        )
    return table


def data_efficiency_protocol(config: ModelConfig, hierarchy: LabelHierarchy, train_records: Sequence[ImageRecord],
                             val_records: Sequence[ImageRecord], fractions: Sequence[float], seeds: Sequence[int],
                             cfg: TrainConfig, arms: Sequence[str] = (BASELINE, TRANSHP)) -> ExperimentTable:
    """
    Per-class subsampling of the training split, baseline against TransHP

    For each seed, the subset of a fraction is drawn with that seed and both
    arms train on it with that seed. Accuracies are medians over seeds; each
    arm's drop is its median accuracy at the largest fraction minus the
    accuracy at the row's fraction.

    Raises:
        ValueError: if a fraction is outside (0, 1] or no seed is given
    """
    if not seeds:
        raise ValueError("the protocol needs at least one seed")
    for fraction in fractions:
        if not 0.0 < fraction <= 1.0:
            raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    fractions = sorted(set(fractions), reverse=True)

    medians: Dict[float, Dict[str, float]] = {}
    for fraction in fractions:
        scores: Dict[str, List[float]] = {arm: [] for arm in arms}
        for seed in seeds:
            subset = subsample_per_class(train_records, fraction, seed)
            for arm in arms:
                result = run_arm(config, hierarchy, subset, val_records, cfg.with_seed(seed), arm,
                                 label=f'{arm} f={fraction} seed={seed}')
                scores[arm].append(result.fine_top1)
        medians[fraction] = {arm: float(np.median(values)) for arm, values in scores.items()}

    columns = ['fraction'] + [f'{arm}_top1' for arm in arms] + [f'{arm}_drop' for arm in arms]
    table = ExperimentTable(columns)
    reference = medians[fractions[0]]
    for fraction in fractions:
        values = {'fraction': fraction}
        for arm in arms:
            values[f'{arm}_top1'] = medians[fraction][arm]
            values[f'{arm}_drop'] = reference[arm] - medians[fraction][arm]
        table.add(**values)
    return table


def coarse_count_ablation(config: ModelConfig, hierarchies: Mapping[str, LabelHierarchy],
                          train_records: Sequence[ImageRecord], val_records: Sequence[ImageRecord], cfg: TrainConfig,
                          include_baseline: bool = True,
                          progress: Optional[Callable[[str], None]] = None) -> ExperimentTable:
    """
    Train TransHP once per hierarchy with the same placements

    Each hierarchy must share the fine classes of ``config``; its prompt pools
    are resized to the hierarchy's coarse counts.
    """
    runs = []
    for name, hierarchy in hierarchies.items():
        specs = [
            PromptingSpec(spec.layer_index, spec.level_id, hierarchy.levels[spec.level_id].coarse_count, spec.balance)
            for spec in config.prompting_specs
        ]
        runs.append((name, hierarchy, config.with_specs(specs)))
    for _, hierarchy, run_config in runs:
        run_config.validate(hierarchy)

    table = ExperimentTable(['hierarchy', 'coarse_count', 'fine_top1', 'checksum'])
    if include_baseline and runs:
        result = run_arm(config, runs[0][1], train_records, val_records, cfg, BASELINE)
        table.add(hierarchy=BASELINE, coarse_count=0, fine_top1=result.fine_top1, checksum=result.checksum)
    for name, hierarchy, run_config in runs:
        if progress is not None:
            progress(name)
        result = run_arm(run_config, hierarchy, train_records, val_records, cfg, label=name)
        counts = '/'.join(str(spec.coarse_count) for spec in run_config.prompting_specs)
        table.add(hierarchy=name, coarse_count=counts, fine_top1=result.fine_top1, checksum=result.checksum)
    return table
