"""
Per-class subsampling and splitting
"""
import math
from collections import defaultdict
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .records import ImageRecord


def _indices_by_class(records: Sequence[ImageRecord]) -> Dict[int, List[int]]:
    by_class: Dict[int, List[int]] = defaultdict(list)
    for index, record in enumerate(records):
        by_class[record.fine_label].append(index)
    return by_class


def subsample_per_class(records: Sequence[ImageRecord], fraction: float, seed: int) -> List[ImageRecord]:
    """
    Keep ceil(fraction · n_class) records of every fine class

    Selection within a class is uniform without replacement; survivors keep
    their original relative order. Pass only the training split.

    Raises:
        ValueError: unless 0 < fraction <= 1
    """
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    if fraction == 1:
        return list(records)

    rng = np.random.default_rng(seed)
    keep = []
    by_class = _indices_by_class(records)
    for label in sorted(by_class):
        members = by_class[label]
        quota = math.ceil(round(fraction * len(members), 9))
        chosen = rng.choice(len(members), size=quota, replace=False)
        keep.extend(members[i] for i in chosen)
    return [records[i] for i in sorted(keep)]


def split_per_class(records: Sequence[ImageRecord], holdout_per_class: int) -> Tuple[List[ImageRecord], List[ImageRecord]]:
    """First records of each class stay in the first split; the last holdout_per_class go to the second"""
    by_class = _indices_by_class(records)
    held = set()
    for members in by_class.values():
        if holdout_per_class >= len(members):
            raise ValueError(f"cannot hold out {holdout_per_class} of {len(members)} records")
        held.update(members[len(members) - holdout_per_class:] if holdout_per_class else [])
    first = [r for i, r in enumerate(records) if i not in held]
    second = [r for i, r in enumerate(records) if i in held]
    return first, second
