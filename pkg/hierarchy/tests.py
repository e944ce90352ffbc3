import random
from pathlib import Path

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from transhp.exceptions import ContractError, HierarchyParseError
from .file_format import dumps_hierarchy, load_hierarchy, loads_hierarchy
from .label_hierarchy import LabelHierarchy, Level, MergeSpec, ancestor_of, merge_coarse
from .presets import CIFAR100_FINE_NAMES, CIFAR100_MERGES, cifar100_hierarchy, cifar100_merged

SHIPPED_CIFAR100 = Path(__file__).resolve().parent / 'data' / 'cifar100.txt'

# coarse label of each fine label as distributed with the dataset
CIFAR100_COARSE_OF_FINE = [
    4, 1, 14, 8, 0, 6, 7, 7, 18, 3, 3, 14, 9, 18, 7, 11, 3, 9, 7, 11,
    6, 11, 5, 10, 7, 6, 13, 15, 3, 15, 0, 11, 1, 10, 12, 14, 16, 9, 11, 5,
    5, 19, 8, 8, 15, 13, 14, 17, 18, 10, 16, 4, 17, 4, 2, 0, 17, 4, 18, 17,
    10, 3, 2, 12, 12, 16, 12, 1, 9, 19, 2, 10, 0, 1, 16, 12, 9, 13, 15, 13,
    16, 19, 2, 4, 6, 19, 5, 5, 8, 19, 18, 1, 2, 15, 6, 0, 17, 8, 14, 13,
]


def two_level_text(level0_of_seven=1):
    lines = ['fine=8 levels=2', 'level top M=2']
    top = [0, 0, 0, 0, 1, 1, 1, level0_of_seven]
    lines += [f"{i} {c}" for i, c in enumerate(top)]
    lines.append('level mid M=4')
    lines += [f"{i} {i // 2}" for i in range(8)]
    return '\n'.join(lines) + '\n'


class LoadHierarchyTests(SimpleTestCase):

    def test_shipped_cifar100_file(self):
        h = load_hierarchy(SHIPPED_CIFAR100)
        self.assertEqual(h.fine_count, 100)
        self.assertEqual(len(h.levels), 1)
        self.assertEqual(h.levels[0].coarse_count, 20)
        goldfish_like = CIFAR100_FINE_NAMES.index('aquarium_fish')
        self.assertEqual(h.levels[0].parent_of[goldfish_like], 1)

    def test_shipped_file_matches_builtin_taxonomy(self):
        self.assertEqual(load_hierarchy(SHIPPED_CIFAR100), cifar100_hierarchy())
        self.assertEqual(list(cifar100_hierarchy().levels[0].parent_of), CIFAR100_COARSE_OF_FINE)

    def test_single_coarse_class(self):
        text = 'fine=3 levels=1\nlevel all M=1\n0 0\n1 0\n2 0\n'
        h = loads_hierarchy(text)
        self.assertEqual(h.levels[0].coarse_count, 1)

    def test_comments_and_blank_lines(self):
        text = '# header follows\n\nfine=2 levels=1  # two classes\nlevel c M=2\n0 1\n\n1 0 # swapped\n'
        self.assertEqual(loads_hierarchy(text).levels[0].parent_of, (1, 0))

    def test_consistent_two_level_file(self):
        h = loads_hierarchy(two_level_text())
        self.assertEqual(h.level_names, ['top', 'mid'])
        self.assertEqual(ancestor_of(h, 7, 'top'), 1)

    def test_tree_consistency_breach_names_pair(self):
        with self.assertRaises(ValidationError) as ctx:
            loads_hierarchy(two_level_text(level0_of_seven=0))
        self.assertIn('6 and 7', str(ctx.exception))

    def test_unknown_fine_index_reports_line(self):
        text = 'fine=2 levels=1\nlevel c M=1\n0 0\n5 0\n'
        with self.assertRaises(HierarchyParseError) as ctx:
            loads_hierarchy(text)
        self.assertEqual(ctx.exception.line_number, 4)

    def test_missing_assignment(self):
        with self.assertRaises(ValidationError):
            loads_hierarchy('fine=3 levels=1\nlevel c M=1\n0 0\n1 0\n')

    def test_declared_count_must_match_used(self):
        with self.assertRaises(ValidationError):
            loads_hierarchy('fine=2 levels=1\nlevel c M=3\n0 0\n1 1\n')

    def test_round_trip(self):
        for h in (cifar100_hierarchy(), loads_hierarchy(two_level_text())):
            self.assertEqual(loads_hierarchy(dumps_hierarchy(h)), h)


class MergeCoarseTests(SimpleTestCase):

    def test_merge_presets(self):
        for count in (20, 10, 5, 2):
            with self.subTest(count=count):
                merged = cifar100_merged(count)
                self.assertEqual(merged.levels[0].coarse_count, count)
                self.assertEqual(merged.fine_count, 100)

    def test_ten_class_mapping(self):
        merged = merge_coarse(cifar100_hierarchy(), 0, CIFAR100_MERGES[10])
        fish = CIFAR100_FINE_NAMES.index('trout')
        whale = CIFAR100_FINE_NAMES.index('whale')
        self.assertEqual(ancestor_of(merged, fish), ancestor_of(merged, whale))
        self.assertEqual(ancestor_of(merged, fish), 0)

    def test_identity_merge(self):
        h = cifar100_hierarchy()
        self.assertEqual(merge_coarse(h, 0, CIFAR100_MERGES[20]), h)

    def test_non_partition(self):
        with self.assertRaises(ContractError):
            merge_coarse(cifar100_hierarchy(), 0, MergeSpec(groups=((0, 1), (1, 2))))
        with self.assertRaises(ContractError):
            merge_coarse(cifar100_hierarchy(), 0, MergeSpec(groups=tuple((i,) for i in range(19))))

    def test_random_partitions_preserve_tree(self):
        rng = random.Random(0)
        h = loads_hierarchy(two_level_text())
        for _ in range(25):
            order = list(range(4))
            rng.shuffle(order)
            cut = sorted(rng.sample(range(1, 4), rng.randint(0, 2)))
            groups = [tuple(order[a:b]) for a, b in zip([0] + cut, cut + [4])]
            try:
                merged = merge_coarse(h, 'mid', MergeSpec(groups=tuple(groups)))
            except ValidationError:
                # merging mid-level classes across different top classes breaks the tree
                continue
            self.assertEqual(merged.fine_count, h.fine_count)
            self.assertEqual(merged.levels[0], h.levels[0])

    def test_random_partitions_of_single_level(self):
        rng = random.Random(1)
        h = cifar100_hierarchy()
        for _ in range(20):
            order = list(range(20))
            rng.shuffle(order)
            cut = sorted(rng.sample(range(1, 20), rng.randint(1, 10)))
            groups = tuple(tuple(order[a:b]) for a, b in zip([0] + cut, cut + [20]))
            merged = merge_coarse(h, 0, MergeSpec(groups=groups))
            self.assertEqual(merged.fine_count, 100)
            self.assertEqual(merged.levels[0].coarse_count, len(groups))


class AncestorTests(SimpleTestCase):

    def test_single_class_hierarchy(self):
        h = LabelHierarchy(4, (Level('all', 1, (0, 0, 0, 0)),))
        self.assertEqual([ancestor_of(h, i) for i in range(4)], [0, 0, 0, 0])

    def test_cifar_fish(self):
        h = cifar100_hierarchy()
        for name in ('aquarium_fish', 'flatfish', 'ray', 'shark', 'trout'):
            self.assertEqual(ancestor_of(h, CIFAR100_FINE_NAMES.index(name)), 1)

    def test_block_construction(self):
        K = 3
        h = LabelHierarchy(12, (Level('c', 4, tuple(f // K for f in range(12))),))
        for c in range(4):
            for k in range(K):
                self.assertEqual(ancestor_of(h, c * K + k), c)

    def test_out_of_range(self):
        h = cifar100_hierarchy()
        with self.assertRaises(IndexError):
            ancestor_of(h, 100)
        with self.assertRaises(IndexError):
            ancestor_of(h, 0, 1)
