"""
Multi-level label hierarchies
"""
from .label_hierarchy import Level, LabelHierarchy, MergeSpec, ancestor_of, merge_coarse
from .file_format import load_hierarchy, loads_hierarchy, dump_hierarchy, dumps_hierarchy

__all__ = [
    'Level',
    'LabelHierarchy',
    'MergeSpec',
    'ancestor_of',
    'merge_coarse',
    'load_hierarchy',
    'loads_hierarchy',
    'dump_hierarchy',
    'dumps_hierarchy',
]
