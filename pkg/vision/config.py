"""
Model configuration - backbone shape, prompting placement and named presets
"""
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from django.core.exceptions import ImproperlyConfigured

from hierarchy import LabelHierarchy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PromptingSpec:
    """
    One prompting block

    ``layer_index`` is 1-based; ``balance`` is the weight of this block's
    coarse loss in the composite objective.
    """
    layer_index: int
    level_id: int
    coarse_count: int
    balance: float = 1.0

    def to_text(self) -> str:
        return f"{self.layer_index}:{self.level_id}:{self.coarse_count}:{self.balance!r}"

    @classmethod
    def from_text(cls, text: str) -> 'PromptingSpec':
        layer, level, count, balance = text.split(':')
        return cls(int(layer), int(level), int(count), float(balance))


@dataclass(frozen=True)
class ModelConfig:
    image_size: int = 32
    patch_size: int = 4
    embed_dim: int = 64
    depth: int = 8
    heads: int = 4
    mlp_ratio: int = 4
    fine_count: int = 32
    prompting_specs: Tuple[PromptingSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, 'prompting_specs', tuple(self.prompting_specs))

    @property
    def grid_size(self) -> int:
        return self.image_size // self.patch_size

    @property
    def patch_count(self) -> int:
        return self.grid_size ** 2

    @property
    def patch_dim(self) -> int:
        return self.patch_size * self.patch_size * 3

    @property
    def head_dim(self) -> int:
        return self.embed_dim // self.heads

    @property
    def hidden_dim(self) -> int:
        return self.embed_dim * self.mlp_ratio

    @property
    def prompt_layers(self) -> List[int]:
        return [spec.layer_index for spec in self.prompting_specs]

    def spec_at(self, layer_index: int) -> Optional[PromptingSpec]:
        for spec in self.prompting_specs:
            if spec.layer_index == layer_index:
                return spec
        return None

    def with_specs(self, specs: Sequence[PromptingSpec]) -> 'ModelConfig':
        return replace(self, prompting_specs=tuple(specs))

    def validate(self, hierarchy: Optional[LabelHierarchy] = None) -> None:
        """
        Check shape arithmetic and prompting placement

        Raises:
            ImproperlyConfigured: on the first violated constraint
        """
        if min(self.image_size, self.patch_size, self.embed_dim, self.depth, self.heads,
               self.mlp_ratio, self.fine_count) < 1:
            raise ImproperlyConfigured(f"model dimensions must be positive: {self}")
        if self.image_size % self.patch_size:
            raise ImproperlyConfigured(
                f"image size {self.image_size} is not divisible by patch size {self.patch_size}"
            )
        if self.embed_dim % self.heads:
            raise ImproperlyConfigured(f"embed dim {self.embed_dim} is not divisible by {self.heads} heads")

        layers = self.prompt_layers
        for previous, current in zip(layers, layers[1:]):
            if current <= previous:
                raise ImproperlyConfigured(f"prompting layers must strictly increase, got {layers}")
        for spec in self.prompting_specs:
            if not 1 <= spec.layer_index <= self.depth:
                raise ImproperlyConfigured(
                    f"prompting layer {spec.layer_index} outside [1, {self.depth}]"
                )
            if spec.balance < 0:
                raise ImproperlyConfigured(f"balance at layer {spec.layer_index} is negative: {spec.balance}")
            if spec.coarse_count < 0:
                raise ImproperlyConfigured(f"coarse count at layer {spec.layer_index} is negative")

        if hierarchy is not None:
            if hierarchy.fine_count != self.fine_count:
                raise ImproperlyConfigured(
                    f"model predicts {self.fine_count} fine classes, hierarchy has {hierarchy.fine_count}"
                )
            for spec in self.prompting_specs:
                if not 0 <= spec.level_id < len(hierarchy.levels):
                    raise ImproperlyConfigured(
                        f"prompting layer {spec.layer_index} names level {spec.level_id}, "
                        f"hierarchy has {len(hierarchy.levels)}"
                    )
                expected = hierarchy.levels[spec.level_id].coarse_count
                if spec.coarse_count != expected:
                    raise ImproperlyConfigured(
                        f"prompting layer {spec.layer_index} declares M={spec.coarse_count}, "
                        f"level {spec.level_id} has {expected} coarse classes"
                    )

        self.check_placement()

    def check_placement(self) -> bool:
        """Warn when a coarser level sits above a finer one; returns True if the order is coarse-to-fine"""
        ordered = True
        specs = self.prompting_specs
        for lower, upper in zip(specs, specs[1:]):
            if upper.coarse_count < lower.coarse_count:
                ordered = False
                logger.warning(
                    f"Prompting layer {upper.layer_index} (M={upper.coarse_count}) is coarser than "
                    f"layer {lower.layer_index} (M={lower.coarse_count}); coarse levels usually go lower"
                )
        return ordered

    # -- key=value text form (checkpoints, manifests) ------------------------

    def to_dict(self) -> Dict[str, str]:
        values = asdict(self)
        values['prompting_specs'] = ','.join(spec.to_text() for spec in self.prompting_specs)
        return {key: str(value) for key, value in values.items()}

    def to_text(self) -> str:
        return ''.join(f"{key}={value}\n" for key, value in self.to_dict().items())

    @classmethod
    def from_dict(cls, values: Dict[str, str]) -> 'ModelConfig':
        specs_text = values.get('prompting_specs', '')
        specs = tuple(PromptingSpec.from_text(part) for part in specs_text.split(',') if part)
        numeric = {key: int(values[key]) for key in (
            'image_size', 'patch_size', 'embed_dim', 'depth', 'heads', 'mlp_ratio', 'fine_count',
        )}
        return cls(prompting_specs=specs, **numeric)

    @classmethod
    def from_text(cls, text: str) -> 'ModelConfig':
        values = {}
        for line in text.splitlines():
            if line.strip():
                key, _, value = line.partition('=')
                values[key.strip()] = value.strip()
        return cls.from_dict(values)


# Full-scale backbone: 12 blocks, 6 heads, width 384, 16-pixel patches
FULL_BACKBONE = dict(image_size=224, patch_size=16, embed_dim=384, depth=12, heads=6, mlp_ratio=4)

# Desk-scale backbone: 8x8 patch grid on 32-pixel images
DESK_BACKBONE = dict(image_size=32, patch_size=4, embed_dim=64, depth=8, heads=4, mlp_ratio=4)
DESK_PROMPT_LAYER = 5

# (1-based layer, balance) per prompting block; the final fine loss always has weight 1
BALANCE_PRESETS: Dict[str, Tuple[Tuple[int, float], ...]] = {
    'desk': ((DESK_PROMPT_LAYER, 1.0),),
    'cifar100': ((9, 1.0),),
    'deepfashion': ((7, 0.5), (9, 1.0)),
    'imagenet': tuple((layer, 0.1) for layer in range(1, 6))
                + tuple((layer, 0.15) for layer in range(6, 10))
                + ((10, 1.0), (11, 1.0)),
    'inaturalist': ((7, 1.0),),
}

MODEL_PRESETS = tuple(BALANCE_PRESETS)


def specs_for_hierarchy(hierarchy: LabelHierarchy,
                        placements: Sequence[Tuple[int, float]]) -> Tuple[PromptingSpec, ...]:
    """
    Pair placements with hierarchy levels, coarsest level at the lowest layer

    With one level and several placements every block prompts that level.
    """
    levels = hierarchy.levels
    placements = sorted(placements)
    if len(levels) == 1:
        level_ids = [0] * len(placements)
    elif len(levels) == len(placements):
        level_ids = list(range(len(levels)))
    else:
        raise ImproperlyConfigured(
            f"{len(placements)} prompting blocks cannot be matched to {len(levels)} hierarchy levels"
        )
    return tuple(
        PromptingSpec(layer, level_id, levels[level_id].coarse_count, balance)
        for (layer, balance), level_id in zip(placements, level_ids)
    )


def preset_config(name: str, hierarchy: LabelHierarchy, **overrides) -> ModelConfig:
    """
    Build a ModelConfig from a named preset

    ``desk`` uses the desk-scale backbone, every other name the full-scale
    backbone; keyword overrides replace backbone fields.
    """
    if name not in BALANCE_PRESETS:
        raise ImproperlyConfigured(f"unknown model preset '{name}', choose from {list(BALANCE_PRESETS)}")
    backbone = dict(DESK_BACKBONE if name == 'desk' else FULL_BACKBONE)
    backbone.update({key: value for key, value in overrides.items() if value is not None})
    config = ModelConfig(
        fine_count=hierarchy.fine_count,
        prompting_specs=specs_for_hierarchy(hierarchy, BALANCE_PRESETS[name]),
        **backbone,
    )
    config.validate(hierarchy)
    return config


def desk_config(hierarchy: LabelHierarchy, prompt_layers: Optional[Sequence[int]] = None,
                balance: float = 1.0) -> ModelConfig:
    """Desk-scale config; ``prompt_layers=[]`` gives the plain baseline"""
    layers = [DESK_PROMPT_LAYER] if prompt_layers is None else list(prompt_layers)
    config = ModelConfig(
        fine_count=hierarchy.fine_count,
        prompting_specs=specs_for_hierarchy(hierarchy, [(layer, balance) for layer in layers]) if layers else (),
        **DESK_BACKBONE,
    )
    config.validate(hierarchy)
    return config
