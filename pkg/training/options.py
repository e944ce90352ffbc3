"""
Shared option handling for the training commands

Resolves data paths, the model preset with its overrides and the training
schedule into (records, hierarchy, ModelConfig, TrainConfig).
"""
import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Tuple

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

from hierarchy import LabelHierarchy
from imagedata import ImageRecord
from imagedata.storage import load_dataset
from runner.base import ExperimentCommand
from runner.options import parse_bool, parse_float_list, parse_int_list
from transhp.exceptions import ContractError
from vision import ModelConfig, preset_config
from vision.config import DESK_BACKBONE, FULL_BACKBONE, MODEL_PRESETS, specs_for_hierarchy
from vision.model import ARMS
from .config import TRAIN_PRESETS, TrainConfig

logger = logging.getLogger(__name__)

BACKBONE_FIELDS = ('patch_size', 'embed_dim', 'depth', 'heads', 'mlp_ratio')


def parse_variant(value: str) -> str:
    """Accepts hyphen or underscore spellings"""
    variant = str(value).strip().lower().replace('-', '_')
    if variant not in ARMS:
        raise ValueError(f"unknown variant '{value}', choose from {', '.join(ARMS)}")
    return variant


def build_model_config(resolved: Mapping[str, Any], hierarchy: LabelHierarchy, image_size: int) -> ModelConfig:
    """
    Preset placements, then backbone overrides, then --prompt-layer / --lambda

    A single --lambda value applies to every prompting block.

    Raises:
        ImproperlyConfigured: for a contradictory config, such as a prompting
            layer beyond the depth
    """
    if resolved['preset'] not in MODEL_PRESETS:
        raise ImproperlyConfigured(f"unknown preset '{resolved['preset']}', choose from {MODEL_PRESETS}")
    overrides = {name: resolved.get(name) for name in BACKBONE_FIELDS}
    overrides['image_size'] = image_size
    layers = resolved.get('prompt_layer')
    balances = resolved.get('balance') or []

    if layers is None:
        config = preset_config(resolved['preset'], hierarchy, **overrides)
        if balances:
            specs = config.prompting_specs
            config = config.with_specs([replace(spec, balance=b) for spec, b in zip(specs, _broadcast(balances, specs))])
    else:
        backbone = dict(DESK_BACKBONE if resolved['preset'] == 'desk' else FULL_BACKBONE)
        backbone.update({key: value for key, value in overrides.items() if value is not None})
        specs = ()
        if layers:
            specs = specs_for_hierarchy(hierarchy, list(zip(layers, _broadcast(balances or [1.0], layers))))
        config = ModelConfig(fine_count=hierarchy.fine_count, prompting_specs=specs, **backbone)
    config.validate(hierarchy)
    return config


def _broadcast(values: Sequence[float], targets: Sequence) -> List[float]:
    if len(values) == 1:
        return list(values) * len(targets)
    if len(values) != len(targets):
        raise ImproperlyConfigured(f"{len(values)} lambda values for {len(targets)} prompting blocks")
    return list(values)


def build_train_config(resolved: Mapping[str, Any]) -> TrainConfig:
    cfg = TrainConfig(
        epochs=resolved['epochs'],
        batch_size=resolved['batch_size'],
        base_lr=resolved['lr'],
        warmup_epochs=resolved['warmup_epochs'],
        weight_decay=resolved['weight_decay'],
        seed=resolved['seed'],
        deterministic=resolved['deterministic'],
        eval_every=resolved['eval_every'],
        flip=resolved['flip'],
        dtype=resolved['dtype'],
        track_absorption=resolved['track_absorption'],
        eval_workers=settings.TRANSHP_EVAL_WORKERS,
    )
    cfg.validate()
    return cfg


def check_compatible(config: ModelConfig, hierarchy: LabelHierarchy, records: Sequence[ImageRecord],
                     source: str = 'model') -> None:
    """
    Raises:
        ContractError: if the model cannot consume the records
    """
    if config.fine_count != hierarchy.fine_count:
        raise ContractError(
            f"{source} predicts {config.fine_count} fine classes, the data has {hierarchy.fine_count}"
        )
    if records and records[0].image_size != config.image_size:
        raise ContractError(
            f"{source} expects {config.image_size}px images, the data has {records[0].image_size}px"
        )


class TrainingCommand(ExperimentCommand):
    """Base for commands that build and train models from a dataset"""

    FIELDS = {
        'data': str,
        'val_data': str,
        'hierarchy': str,
        'preset': str,
        'variant': parse_variant,
        'prompt_layer': parse_int_list,
        'balance': parse_float_list,
        'patch_size': int,
        'embed_dim': int,
        'depth': int,
        'heads': int,
        'mlp_ratio': int,
        'epochs': int,
        'batch_size': int,
        'lr': float,
        'warmup_epochs': int,
        'weight_decay': float,
        'eval_every': int,
        'flip': parse_bool,
        'dtype': str,
        'track_absorption': parse_bool,
    }
    DEFAULTS = {
        'preset': 'desk',
        'variant': 'transhp',
        'seed': 0,
    }

    def add_experiment_arguments(self, parser):
        parser.add_argument('--data', help='Training dataset file (synthetic or CIFAR-100 binary)')
        parser.add_argument('--val-data', dest='val_data', help='Validation dataset file')
        parser.add_argument('--hierarchy', help='Hierarchy file overriding the one implied by the data')
        parser.add_argument('--preset', help=f"Model and schedule preset: {', '.join(MODEL_PRESETS)}")
        parser.add_argument('--variant', help=f"Training arm: {', '.join(ARMS)} (hyphens accepted)")
        parser.add_argument('--prompt-layer', dest='prompt_layer', help="Prompting layers, e.g. '5' or '3,5'")
        parser.add_argument('--lambda', dest='balance', help='Balance weight(s) of the coarse losses')
        parser.add_argument('--patch-size', dest='patch_size', type=int)
        parser.add_argument('--embed-dim', dest='embed_dim', type=int)
        parser.add_argument('--depth', type=int)
        parser.add_argument('--heads', type=int)
        parser.add_argument('--mlp-ratio', dest='mlp_ratio', type=int)
        parser.add_argument('--epochs', type=int)
        parser.add_argument('--batch-size', dest='batch_size', type=int)
        parser.add_argument('--lr', type=float, help='Base learning rate')
        parser.add_argument('--warmup-epochs', dest='warmup_epochs', type=int)
        parser.add_argument('--weight-decay', dest='weight_decay', type=float)
        parser.add_argument('--eval-every', dest='eval_every', type=int)
        parser.add_argument('--flip', help='Random horizontal flips (1/0)')
        parser.add_argument('--dtype', help='float32 or float64')
        parser.add_argument('--track-absorption', dest='track_absorption',
                            help='Per-epoch absorption statistics (1/0)')
        self.add_run_arguments(parser)

    def add_run_arguments(self, parser):
        pass

    def preset_values(self, name):
        schedule = TRAIN_PRESETS['desk' if name in (None, 'desk') else 'full']()
        return {
            'epochs': schedule.epochs,
            'batch_size': schedule.batch_size,
            'lr': schedule.base_lr,
            'warmup_epochs': schedule.warmup_epochs,
            'weight_decay': schedule.weight_decay,
            'eval_every': schedule.eval_every,
            'flip': schedule.flip,
            'dtype': settings.TRANSHP_DEFAULT_DTYPE,
            'track_absorption': schedule.track_absorption,
        }

    def load_splits(self, resolved: Mapping[str, Any]) -> Tuple[List[ImageRecord], List[ImageRecord], LabelHierarchy]:
        if not resolved.get('data'):
            raise ImproperlyConfigured('--data is required')
        train_records, hierarchy = load_dataset(resolved['data'], resolved.get('hierarchy'))
        val_records: List[ImageRecord] = []
        if resolved.get('val_data'):
            val_records, val_hierarchy = load_dataset(resolved['val_data'], resolved.get('hierarchy'))
            if val_hierarchy.fine_count != hierarchy.fine_count:
                raise ContractError(f"validation data has {val_hierarchy.fine_count} fine classes, "
                                    f"training data has {hierarchy.fine_count}")
        if not train_records:
            raise ContractError(f"{resolved['data']} holds no records")
        logger.info(f"Loaded {len(train_records)} train / {len(val_records)} val records")
        return train_records, val_records, hierarchy

    def input_paths(self, resolved: Mapping[str, Any]) -> List[Path]:
        return [Path(resolved[key]) for key in ('data', 'val_data', 'hierarchy') if resolved.get(key)]

    def prepare(self, resolved: Mapping[str, Any]):
        """Load data and resolve both configs; nothing is written yet"""
        train_records, val_records, hierarchy = self.load_splits(resolved)
        config = build_model_config(resolved, hierarchy, train_records[0].image_size)
        cfg = build_train_config(resolved)
        return train_records, val_records, hierarchy, config, cfg

    def summary(self, values: Dict[str, Any]) -> str:
        return ', '.join(f"{key} {value:.4f}" if isinstance(value, float) else f"{key} {value}"
                         for key, value in values.items())
