"""
Built-in hierarchies: the CIFAR-100 taxonomy and its coarse-class merge presets
"""
from typing import Dict, List

from .label_hierarchy import LabelHierarchy, Level, MergeSpec, merge_coarse

# Coarse classes in CIFAR-100 label order
CIFAR100_COARSE_NAMES = [
    'aquatic_mammals', 'fish', 'flowers', 'food_containers', 'fruit_and_vegetables',
    'household_electrical_devices', 'household_furniture', 'insects', 'large_carnivores',
    'large_man-made_outdoor_things', 'large_natural_outdoor_scenes',
    'large_omnivores_and_herbivores', 'medium_mammals', 'non-insect_invertebrates',
    'people', 'reptiles', 'small_mammals', 'trees', 'vehicles_1', 'vehicles_2',
]

CIFAR100_MEMBERS: Dict[str, List[str]] = {
    'aquatic_mammals': ['beaver', 'dolphin', 'otter', 'seal', 'whale'],
    'fish': ['aquarium_fish', 'flatfish', 'ray', 'shark', 'trout'],
    'flowers': ['orchid', 'poppy', 'rose', 'sunflower', 'tulip'],
    'food_containers': ['bottle', 'bowl', 'can', 'cup', 'plate'],
    'fruit_and_vegetables': ['apple', 'mushroom', 'orange', 'pear', 'sweet_pepper'],
    'household_electrical_devices': ['clock', 'keyboard', 'lamp', 'telephone', 'television'],
    'household_furniture': ['bed', 'chair', 'couch', 'table', 'wardrobe'],
    'insects': ['bee', 'beetle', 'butterfly', 'caterpillar', 'cockroach'],
    'large_carnivores': ['bear', 'leopard', 'lion', 'tiger', 'wolf'],
    'large_man-made_outdoor_things': ['bridge', 'castle', 'house', 'road', 'skyscraper'],
    'large_natural_outdoor_scenes': ['cloud', 'forest', 'mountain', 'plain', 'sea'],
    'large_omnivores_and_herbivores': ['camel', 'cattle', 'chimpanzee', 'elephant', 'kangaroo'],
    'medium_mammals': ['fox', 'porcupine', 'possum', 'raccoon', 'skunk'],
    'non-insect_invertebrates': ['crab', 'lobster', 'snail', 'spider', 'worm'],
    'people': ['baby', 'boy', 'girl', 'man', 'woman'],
    'reptiles': ['crocodile', 'dinosaur', 'lizard', 'snake', 'turtle'],
    'small_mammals': ['hamster', 'mouse', 'rabbit', 'shrew', 'squirrel'],
    'trees': ['maple_tree', 'oak_tree', 'palm_tree', 'pine_tree', 'willow_tree'],
    'vehicles_1': ['bicycle', 'bus', 'motorcycle', 'pickup_truck', 'train'],
    'vehicles_2': ['lawn_mower', 'rocket', 'streetcar', 'tank', 'tractor'],
}

# Fine labels are numbered in alphabetical order of their names
CIFAR100_FINE_NAMES = sorted(name for members in CIFAR100_MEMBERS.values() for name in members)

# Coarse-class merges: group g of a spec becomes coarse class g
CIFAR100_MERGES: Dict[int, MergeSpec] = {
    20: MergeSpec(groups=tuple((i,) for i in range(20))),
    10: MergeSpec(groups=((0, 1), (2, 17), (3, 4), (5, 6), (12, 16),
                          (8, 11), (14, 15), (9, 10), (7, 13), (18, 19))),
    5: MergeSpec(groups=((0, 1, 12, 16), (2, 17, 3, 4), (5, 6, 9, 10),
                         (8, 11, 18, 19), (7, 13, 14, 15))),
    2: MergeSpec(groups=((0, 1, 7, 8, 11, 12, 13, 14, 15, 16),
                         (2, 3, 4, 5, 6, 9, 10, 17, 18, 19))),
}


def cifar100_hierarchy() -> LabelHierarchy:
    """100 fine classes under one 20-class coarse level"""
    coarse_of_name = {
        name: CIFAR100_COARSE_NAMES.index(coarse)
        for coarse, members in CIFAR100_MEMBERS.items()
        for name in members
    }
    level = Level(
        name='coarse',
        coarse_count=len(CIFAR100_COARSE_NAMES),
        parent_of=tuple(coarse_of_name[name] for name in CIFAR100_FINE_NAMES),
    )
    return LabelHierarchy(fine_count=len(CIFAR100_FINE_NAMES), levels=(level,))


def cifar100_merged(coarse_count: int) -> LabelHierarchy:
    """
    CIFAR-100 with its coarse level merged to 20, 10, 5 or 2 classes

    Raises:
        KeyError: for a coarse count without a preset
    """
    if coarse_count not in CIFAR100_MERGES:
        raise KeyError(f"no CIFAR-100 merge preset for {coarse_count} classes, have {sorted(CIFAR100_MERGES)}")
    return merge_coarse(cifar100_hierarchy(), 0, CIFAR100_MERGES[coarse_count])


HIERARCHY_PRESETS = {
    'cifar100': cifar100_hierarchy,
    'cifar100-10': lambda: cifar100_merged(10),
    'cifar100-5': lambda: cifar100_merged(5),
    'cifar100-2': lambda: cifar100_merged(2),
}
