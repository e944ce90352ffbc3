"""
Dataset files on disk: synthetic (headered) or plain CIFAR-100 layout
"""
from pathlib import Path
from typing import List, Optional, Tuple, Union

from hierarchy import LabelHierarchy, load_hierarchy
from hierarchy.presets import cifar100_hierarchy
from .cifar import read_cifar100_file
from .records import ImageRecord
from .synthetic import SYNTHETIC_MAGIC, read_synthetic


def load_dataset(path: Union[str, Path], hierarchy_path: Optional[Union[str, Path]] = None
                 ) -> Tuple[List[ImageRecord], LabelHierarchy]:
    """
    Read a dataset file, choosing the decoder from its leading bytes

    An explicit hierarchy file overrides the hierarchy implied by the data
    (for example a merged CIFAR-100 taxonomy); its fine count must cover the labels.
    """
    path = Path(path)
    with path.open('rb') as handle:
        magic = handle.read(len(SYNTHETIC_MAGIC))
    if magic == SYNTHETIC_MAGIC:
        records, hierarchy = read_synthetic(path)
    else:
        records = read_cifar100_file(path)
        hierarchy = cifar100_hierarchy()

    if hierarchy_path is not None:
        override = load_hierarchy(hierarchy_path)
        if override.fine_count != hierarchy.fine_count:
            raise ValueError(
                f"hierarchy {hierarchy_path} has {override.fine_count} fine classes, "
                f"dataset {path} has {hierarchy.fine_count}"
            )
        hierarchy = override
    return records, hierarchy
