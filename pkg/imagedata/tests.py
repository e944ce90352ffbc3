import tempfile
from collections import Counter
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from hierarchy import ancestor_of
from hierarchy.presets import cifar100_hierarchy
from transhp.exceptions import ConsistencyError, RecordLengthError
from .cifar import RECORD_BYTES, decode_cifar100, parse_cifar100, serialize_cifar100
from .records import ImageRecord, dataset_fingerprint, stack_records
from .sampling import split_per_class, subsample_per_class
from .storage import load_dataset
from .synthetic import SyntheticConfig, generate_synthetic, read_synthetic, write_synthetic


def crafted_cifar_bytes():
    """Two records: fine 1 (fish) with a byte ramp, fine 0 (fruit) with a constant plane per channel"""
    ramp = bytes(i % 256 for i in range(3072))
    planes = bytes([10] * 1024 + [128] * 1024 + [255] * 1024)
    return bytes((1, 1)) + ramp + bytes((4, 0)) + planes


class CifarFormatTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def write(self, name, data):
        path = self.dir / name
        path.write_bytes(data)
        return path

    def test_crafted_records(self):
        data = crafted_cifar_bytes()
        train = self.write('train.bin', data)
        test = self.write('test.bin', data[:RECORD_BYTES])
        splits, hierarchy = parse_cifar100(train, test, expected_counts=None)
        first, second = splits['train']
        self.assertEqual((first.fine_label, second.fine_label), (1, 0))
        self.assertEqual(splits['test'][0].image_id, 2)

        raw = np.frombuffer(data[2:RECORD_BYTES], dtype=np.uint8).reshape(3, 32, 32)
        expected = raw.transpose(1, 2, 0).astype(np.float32) / np.float32(255)
        np.testing.assert_array_equal(first.pixels, expected)
        self.assertEqual(first.pixels[0, 1, 0], np.float32(1) / np.float32(255))
        self.assertEqual(second.pixels[5, 7].tolist(), [np.float32(10) / np.float32(255), np.float32(128) / np.float32(255), 1.0])
        self.assertEqual(hierarchy.levels[0].coarse_count, 20)

    def test_round_trip_is_bit_exact(self):
        data = crafted_cifar_bytes()
        records = decode_cifar100(data, cifar100_hierarchy())
        self.assertEqual(serialize_cifar100(records), data)

    def test_empty_file(self):
        with self.assertRaises(RecordLengthError) as ctx:
            decode_cifar100(b'', cifar100_hierarchy())
        self.assertEqual(ctx.exception.actual, 0)

    def test_truncated_file(self):
        with self.assertRaises(RecordLengthError) as ctx:
            decode_cifar100(crafted_cifar_bytes()[:-5], cifar100_hierarchy())
        self.assertEqual(ctx.exception.expected, 2 * RECORD_BYTES)
        self.assertEqual(ctx.exception.actual, 2 * RECORD_BYTES - 5)

    def test_full_size_count_is_enforced(self):
        train = self.write('train.bin', crafted_cifar_bytes())
        with self.assertRaises(RecordLengthError) as ctx:
            parse_cifar100(train, train)
        self.assertEqual(ctx.exception.expected, 50_000 * RECORD_BYTES)

    def test_inconsistent_coarse_byte(self):
        data = bytearray(crafted_cifar_bytes())
        data[RECORD_BYTES] = 7
        with self.assertRaises(ConsistencyError) as ctx:
            decode_cifar100(bytes(data), cifar100_hierarchy())
        self.assertEqual(ctx.exception.record_index, 1)

    def test_load_dataset_detects_cifar_layout(self):
        path = self.write('plain.bin', crafted_cifar_bytes())
        records, hierarchy = load_dataset(path)
        self.assertEqual(len(records), 2)
        self.assertEqual(hierarchy, cifar100_hierarchy())


class SyntheticTests(SimpleTestCase):

    def test_tiny_noise_free_construction(self):
        cfg = SyntheticConfig(coarse_count=2, fine_per_coarse=2, images_per_fine=1,
                              image_size=16, noise_std=0.0, seed=0)
        records, hierarchy = generate_synthetic(cfg)
        self.assertEqual([r.fine_label for r in records], [0, 1, 2, 3])
        self.assertEqual([ancestor_of(hierarchy, r.fine_label) for r in records], [0, 0, 1, 1])

        # the bottom half never holds a glyph, so it shows the stripe orientation alone
        def stripe_profile(record):
            bottom = record.pixels[8:, :, 0].astype(np.float64)
            return np.abs(np.diff(bottom, axis=1)).mean(), np.abs(np.diff(bottom, axis=0)).mean()

        horizontal_change = [stripe_profile(r)[0] for r in records]
        vertical_change = [stripe_profile(r)[1] for r in records]
        # coarse 0 stripes vary along x only; coarse 1 (90 degrees) along y only
        self.assertLess(vertical_change[0], 1e-6)
        self.assertLess(vertical_change[1], 1e-6)
        self.assertLess(horizontal_change[2], 1e-6)
        self.assertLess(horizontal_change[3], 1e-6)

    def test_determinism(self):
        cfg = SyntheticConfig(coarse_count=3, fine_per_coarse=2, images_per_fine=3, image_size=16, seed=5)
        first, _ = generate_synthetic(cfg)
        second, _ = generate_synthetic(cfg)
        self.assertEqual(dataset_fingerprint(first), dataset_fingerprint(second))
        for a, b in zip(first, second):
            self.assertEqual(a.pixels.tobytes(), b.pixels.tobytes())

    def test_desk_scale_range_and_marginals(self):
        cfg = SyntheticConfig(coarse_count=8, fine_per_coarse=4, images_per_fine=64,
                              image_size=32, noise_std=0.1, seed=1)
        records, hierarchy = generate_synthetic(cfg)
        self.assertEqual(len(records), 2048)
        pixels = np.stack([r.pixels for r in records])
        self.assertGreaterEqual(pixels.min(), 0.0)
        self.assertLessEqual(pixels.max(), 1.0)
        self.assertEqual(set(Counter(r.fine_label for r in records).values()), {64})
        self.assertEqual(hierarchy.fine_count, 32)

    def test_invalid_config(self):
        with self.assertRaises(ValueError):
            SyntheticConfig(coarse_count=0).validate()
        with self.assertRaises(ValueError):
            SyntheticConfig(noise_std=-1).validate()

    def test_file_round_trip(self):
        cfg = SyntheticConfig(coarse_count=2, fine_per_coarse=3, images_per_fine=2, image_size=16, seed=2)
        records, hierarchy = generate_synthetic(cfg)
        with tempfile.TemporaryDirectory() as tmp:
            path = write_synthetic(Path(tmp) / 'data.bin', records, hierarchy, cfg.fine_per_coarse)
            again, again_hierarchy = read_synthetic(path)
            loaded, _ = load_dataset(path)
        self.assertEqual(again_hierarchy, hierarchy)
        self.assertEqual([r.fine_label for r in again], [r.fine_label for r in records])
        for original, restored in zip(records, again):
            np.testing.assert_allclose(restored.pixels, original.pixels, atol=0.5 / 255 + 1e-7)
        self.assertEqual(len(loaded), len(records))


class SamplingTests(SimpleTestCase):

    def make_records(self, per_class=10, classes=3):
        pixels = np.zeros((8, 8, 3), dtype=np.float32)
        return [ImageRecord(pixels, fine_label=c, image_id=c * per_class + i)
                for c in range(classes) for i in range(per_class)]

    def test_fraction_one_is_identity(self):
        records = self.make_records()
        self.assertEqual(subsample_per_class(records, 1.0, seed=0), records)

    def test_ceiling_per_class(self):
        records = self.make_records(per_class=10)
        kept = subsample_per_class(records, 0.5, seed=0)
        self.assertEqual(Counter(r.fine_label for r in kept), {0: 5, 1: 5, 2: 5})
        kept = subsample_per_class(records, 0.25, seed=0)
        self.assertEqual(set(Counter(r.fine_label for r in kept).values()), {3})
        kept = subsample_per_class(self.make_records(per_class=30), 0.1, seed=0)
        self.assertEqual(set(Counter(r.fine_label for r in kept).values()), {3})

    def test_order_preserved_and_deterministic(self):
        records = self.make_records()
        first = subsample_per_class(records, 0.3, seed=4)
        second = subsample_per_class(records, 0.3, seed=4)
        self.assertEqual([r.image_id for r in first], [r.image_id for r in second])
        ids = [r.image_id for r in first]
        self.assertEqual(ids, sorted(ids))

    def test_invalid_fraction(self):
        with self.assertRaises(ValueError):
            subsample_per_class(self.make_records(), 0.0, seed=0)

    def test_split_per_class(self):
        train, held = split_per_class(self.make_records(per_class=5), 2)
        self.assertEqual(len(train), 9)
        self.assertEqual(Counter(r.fine_label for r in held), {0: 2, 1: 2, 2: 2})

    def test_stack_records(self):
        images, labels = stack_records(self.make_records(per_class=2, classes=2))
        self.assertEqual(images.shape, (4, 8, 8, 3))
        self.assertEqual(labels.tolist(), [0, 0, 1, 1])
