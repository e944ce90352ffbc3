"""
Hierarchy text format

    # comments run from '#' to end of line; blank lines are ignored
    fine=<fine_count> levels=<level_count>
    level <name> M=<coarse_count>
    <fine_index> <coarse_index>
    ...                                  (one pair per fine class)
    level <name> M=<coarse_count>
    ...

Levels appear coarse-to-fine. Names contain no whitespace. Every fine index in
[0, fine_count) appears exactly once per level; pairs are whitespace-separated
decimal integers.
"""
import re
from pathlib import Path
from typing import Dict, List, Optional, Union

from django.core.exceptions import ValidationError

from transhp.exceptions import HierarchyParseError
from .label_hierarchy import LabelHierarchy, Level

HEADER_RE = re.compile(r'^fine=(\d+)\s+levels=(\d+)$')
LEVEL_RE = re.compile(r'^level\s+(\S+)\s+M=(\d+)$')
PAIR_RE = re.compile(r'^(-?\d+)\s+(-?\d+)$')


def loads_hierarchy(text: str) -> LabelHierarchy:
    """
    Parse hierarchy text

    Raises:
        HierarchyParseError: malformed line or out-of-range index (with line number)
        ValidationError: missing assignments or a non-tree hierarchy
    """
    fine_count: Optional[int] = None
    level_count = 0
    levels: List[Dict] = []
    last_line = 0

    for line_number, raw in enumerate(text.splitlines(), start=1):
        last_line = line_number
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue

        if fine_count is None:
            match = HEADER_RE.match(line)
            if not match:
                raise HierarchyParseError(f"expected header 'fine=<count> levels=<n>', got {line!r}", line_number)
            fine_count, level_count = int(match.group(1)), int(match.group(2))
            continue

        match = LEVEL_RE.match(line)
        if match:
            if len(levels) == level_count:
                raise HierarchyParseError(f"more than the declared {level_count} levels", line_number)
            levels.append({'name': match.group(1), 'M': int(match.group(2)), 'parents': {}})
            continue

        match = PAIR_RE.match(line)
        if not match:
            raise HierarchyParseError(f"expected 'fine_index coarse_index', got {line!r}", line_number)
        if not levels:
            raise HierarchyParseError("assignment before any 'level' line", line_number)
        fine, coarse = int(match.group(1)), int(match.group(2))
        current = levels[-1]
        if not 0 <= fine < fine_count:
            raise HierarchyParseError(f"unknown fine index {fine} (fine={fine_count})", line_number)
        if not 0 <= coarse < current['M']:
            raise HierarchyParseError(
                f"coarse index {coarse} outside [0, {current['M']}) for level '{current['name']}'", line_number
            )
        if fine in current['parents']:
            raise HierarchyParseError(
                f"fine index {fine} assigned twice in level '{current['name']}'", line_number
            )
        current['parents'][fine] = coarse

    if fine_count is None:
        raise HierarchyParseError("missing header", last_line)
    if len(levels) != level_count:
        raise HierarchyParseError(f"declared {level_count} levels, found {len(levels)}", last_line)

    built = []
    for entry in levels:
        missing = sorted(set(range(fine_count)) - set(entry['parents']))
        if missing:
            raise ValidationError(f"level '{entry['name']}' has no ancestor for fine classes {missing[:10]}")
        built.append(Level(
            name=entry['name'],
            coarse_count=entry['M'],
            parent_of=tuple(entry['parents'][fine] for fine in range(fine_count)),
        ))
    return LabelHierarchy(fine_count=fine_count, levels=tuple(built))


def load_hierarchy(source: Union[str, Path]) -> LabelHierarchy:
    return loads_hierarchy(Path(source).read_text(encoding='utf-8'))


def dumps_hierarchy(h: LabelHierarchy) -> str:
    lines = [f"fine={h.fine_count} levels={len(h.levels)}"]
    for level in h.levels:
        lines.append(f"level {level.name} M={level.coarse_count}")
        lines.extend(f"{fine} {parent}" for fine, parent in enumerate(level.parent_of))
    return '\n'.join(lines) + '\n'


def dump_hierarchy(h: LabelHierarchy, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_hierarchy(h), encoding='utf-8')
    return path
