"""
Labelled hierarchical image data
"""
from .records import ImageRecord, stack_records, dataset_fingerprint
from .cifar import parse_cifar100, read_cifar100_file, serialize_cifar100
from .synthetic import SyntheticConfig, generate_synthetic
from .sampling import subsample_per_class, split_per_class

__all__ = [
    'ImageRecord',
    'stack_records',
    'dataset_fingerprint',
    'parse_cifar100',
    'read_cifar100_file',
    'serialize_cifar100',
    'SyntheticConfig',
    'generate_synthetic',
    'subsample_per_class',
    'split_per_class',
]
