"""
Label hierarchy model - fine classes mapped to one coarse ancestor per level
Levels are ordered coarse-to-fine; every hierarchy is validated as a tree on construction
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from django.core.exceptions import ValidationError

from transhp.exceptions import ContractError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Level:
    """One coarse level: fine index -> coarse index in [0, coarse_count)"""
    name: str
    coarse_count: int
    parent_of: Tuple[int, ...]

    def members(self, coarse_index: int) -> List[int]:
        return [fine for fine, parent in enumerate(self.parent_of) if parent == coarse_index]


@dataclass(frozen=True)
class LabelHierarchy:
    """
    Immutable multi-level taxonomy over ``fine_count`` fine classes

    Raises:
        ValidationError: if any level is malformed or two consecutive levels
            are not tree-consistent
    """
    fine_count: int
    levels: Tuple[Level, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, 'levels', tuple(self.levels))
        self._validate()

    def _validate(self):
        if self.fine_count < 1:
            raise ValidationError(f"hierarchy needs at least one fine class, got {self.fine_count}")
        names = [level.name for level in self.levels]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate level names: {names}")

        for level in self.levels:
            if len(level.parent_of) != self.fine_count:
                raise ValidationError(
                    f"level '{level.name}' maps {len(level.parent_of)} fine classes, expected {self.fine_count}"
                )
            for fine, parent in enumerate(level.parent_of):
                if not 0 <= parent < level.coarse_count:
                    raise ValidationError(
                        f"level '{level.name}': fine class {fine} maps to coarse {parent}, "
                        f"outside [0, {level.coarse_count})"
                    )
            distinct = len(set(level.parent_of))
            if distinct != level.coarse_count:
                raise ValidationError(
                    f"level '{level.name}' declares M={level.coarse_count} but uses {distinct} coarse classes"
                )

        for coarser, finer in zip(self.levels, self.levels[1:]):
            if coarser.coarse_count > finer.coarse_count:
                raise ValidationError(
                    f"level '{coarser.name}' (M={coarser.coarse_count}) is finer than "
                    f"'{finer.name}' (M={finer.coarse_count}); levels must run coarse-to-fine"
                )
            witness: Dict[int, int] = {}
            for fine, parent in enumerate(finer.parent_of):
                first = witness.setdefault(parent, fine)
                if coarser.parent_of[first] != coarser.parent_of[fine]:
                    raise ValidationError(
                        f"fine classes {first} and {fine} share '{finer.name}' ancestor {parent} "
                        f"but have different '{coarser.name}' ancestors "
                        f"({coarser.parent_of[first]} vs {coarser.parent_of[fine]})"
                    )

    @property
    def level_names(self) -> List[str]:
        return [level.name for level in self.levels]

    def level_index(self, level) -> int:
        """Accept a level position or a level name"""
        if isinstance(level, str):
            try:
                return self.level_names.index(level)
            except ValueError:
                raise IndexError(f"unknown level '{level}', have {self.level_names}") from None
        if not 0 <= level < len(self.levels):
            raise IndexError(f"level {level} out of range [0, {len(self.levels)})")
        return level

    def level(self, level) -> Level:
        return self.levels[self.level_index(level)]

    def coarse_labels(self, fine_labels: Sequence[int], level) -> List[int]:
        parents = self.level(level).parent_of
        return [parents[fine] for fine in fine_labels]


@dataclass(frozen=True)
class MergeSpec:
    """Partition of a level's coarse indices into new coarse classes"""
    groups: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, 'groups', tuple(tuple(g) for g in self.groups))

    def validate(self, coarse_count: int) -> None:
        flat = [index for group in self.groups for index in group]
        if any(len(group) == 0 for group in self.groups):
            raise ContractError("merge groups must be non-empty")
        if sorted(flat) != list(range(coarse_count)):
            duplicates = sorted({i for i in flat if flat.count(i) > 1})
            missing = sorted(set(range(coarse_count)) - set(flat))
            raise ContractError(
                f"merge groups are not a partition of [0, {coarse_count}): "
                f"duplicated {duplicates}, missing {missing}, foreign {sorted(set(flat) - set(range(coarse_count)))}"
            )


def ancestor_of(h: LabelHierarchy, fine_index: int, level=0) -> int:
    """
    Coarse ancestor of a fine class at one level

    Raises:
        IndexError: fine index or level out of range
    """
    parents = h.level(level).parent_of
    if not 0 <= fine_index < h.fine_count:
        raise IndexError(f"fine index {fine_index} out of range [0, {h.fine_count})")
    return parents[fine_index]


def merge_coarse(h: LabelHierarchy, level, spec: MergeSpec, name: str = None) -> LabelHierarchy:
    """
    Coarsen one level by merging its coarse classes group-wise

    Args:
        h: source hierarchy
        level: level position or name
        spec: partition of the level's coarse indices; group g becomes coarse class g
        name: optional new level name (defaults to the old name)

    Returns:
        New, revalidated LabelHierarchy

    Raises:
        ContractError: if spec is not a partition of the level's coarse indices
    """
    index = h.level_index(level)
    old = h.levels[index]
    spec.validate(old.coarse_count)
    new_index_of = {coarse: group_id for group_id, group in enumerate(spec.groups) for coarse in group}
    merged = Level(
        name=name or old.name,
        coarse_count=len(spec.groups),
        parent_of=tuple(new_index_of[parent] for parent in old.parent_of),
    )
    levels = list(h.levels)
    levels[index] = merged
    logger.info(f"Merged level '{old.name}' from M={old.coarse_count} to M={merged.coarse_count}")
    return LabelHierarchy(fine_count=h.fine_count, levels=tuple(levels))
