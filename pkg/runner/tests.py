import tempfile
from io import StringIO
from pathlib import Path

from django.core.exceptions import ImproperlyConfigured
from django.core.management import CommandError, call_command
from django.test import SimpleTestCase, override_settings

from hierarchy import load_hierarchy
from imagedata.synthetic import read_synthetic
from .base import deterministic_mode
from .manifest import RunManifest, file_fingerprint
from .options import format_option, load_config_file, parse_bool, parse_int_list, resolve_options

FIELDS = {'epochs': int, 'lr': float, 'layers': parse_int_list, 'flip': parse_bool}


class OptionTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def write_config(self, text):
        path = self.root / 'run.env'
        path.write_text(text)
        return path

    def test_int_list_ranges(self):
        self.assertEqual(parse_int_list('0..3'), [0, 1, 2, 3])
        self.assertEqual(parse_int_list('3,5, 7'), [3, 5, 7])
        self.assertEqual(parse_int_list('1..2,9'), [1, 2, 9])

    def test_bool_words(self):
        self.assertTrue(parse_bool('yes'))
        self.assertFalse(parse_bool('0'))
        with self.assertRaises(ValueError):
            parse_bool('maybe')

    def test_precedence(self):
        file_values = load_config_file(self.write_config('EPOCHS=5\nlr=0.01\n# comment\nflip=1\n'))
        resolved = resolve_options(
            FIELDS,
            flags={'epochs': 7, 'lr': None, 'layers': None, 'flip': None},
            file_values=file_values,
            preset_values={'epochs': 60, 'lr': 3e-3, 'layers': '5'},
            defaults={'flip': False},
        )
        self.assertEqual(resolved, {'epochs': 7, 'lr': 0.01, 'layers': [5], 'flip': True})

    def test_unknown_key(self):
        with self.assertRaises(ImproperlyConfigured):
            resolve_options(FIELDS, {}, {'epoch': '5'})

    def test_bad_value(self):
        with self.assertRaises(ImproperlyConfigured):
            resolve_options(FIELDS, {}, {'epochs': 'many'})

    def test_missing_file(self):
        with self.assertRaises(ImproperlyConfigured):
            load_config_file(self.root / 'absent.env')

    def test_echo_reparses(self):
        resolved = {'epochs': 7, 'lr': 0.01, 'layers': [3, 5], 'flip': True}
        text = ''.join(f'{key}={format_option(value)}\n' for key, value in resolved.items())
        self.assertEqual(resolve_options(FIELDS, {}, load_config_file(self.write_config(text))), resolved)

    @override_settings(TRANSHP_DETERMINISTIC=True)
    def test_setting_forces_deterministic(self):
        self.assertTrue(deterministic_mode(None))


class ManifestTests(SimpleTestCase):

    def test_round_trip(self):
        with tempfile.TemporaryDirectory() as tmp:
            source = Path(tmp) / 'input.bin'
            source.write_bytes(b'\x00\x01\x02')
            manifest = RunManifest.create('train', {'epochs': 3, 'flip': False}, seed=4, inputs=[source])
            manifest.add_output(Path(tmp) / 'model.ckpt')
            loaded = RunManifest.load(manifest.write(tmp))
        self.assertEqual(loaded, manifest)
        self.assertEqual(loaded.config, {'epochs': '3', 'flip': '0'})
        self.assertEqual(loaded.inputs[str(source)], file_fingerprint_of(b'\x00\x01\x02'))


def file_fingerprint_of(payload):
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / 'payload'
        path.write_bytes(payload)
        return file_fingerprint(path)


class GenDataCommandTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def gen(self, name, **options):
        values = dict(coarse_count=3, fine_per_coarse=2, per_fine=4, size=16, noise=0.1, seed=1,
                      output=str(self.root / name))
        values.update(options)
        call_command('gen_data', stdout=StringIO(), **values)
        return self.root / name

    def test_desk_dataset(self):
        out = self.gen('desk', coarse_count=8, fine_per_coarse=4, per_fine=64, size=32, val_per_fine=16)
        records, hierarchy = read_synthetic(out / 'train.bin')
        self.assertEqual(len(records), 2048)
        self.assertEqual(len(read_synthetic(out / 'val.bin')[0]), 512)
        self.assertEqual(load_hierarchy(out / 'hierarchy.txt'), hierarchy)

    def test_same_flags_same_bytes(self):
        first, second = self.gen('a'), self.gen('b')
        self.assertEqual((first / 'train.bin').read_bytes(), (second / 'train.bin').read_bytes())
        self.assertEqual((first / 'hierarchy.txt').read_text(), (second / 'hierarchy.txt').read_text())

    def test_zero_coarse_classes_writes_nothing(self):
        with self.assertRaises(CommandError):
            self.gen('empty', coarse_count=0)
        self.assertFalse((self.root / 'empty').exists())

    def test_manifest_reproduces_run(self):
        first = self.gen('first')
        config = self.root / 'replay.env'
        config.write_text(RunManifest.load(first).config_text())
        call_command('gen_data', config=str(config), output=str(self.root / 'replay'), stdout=StringIO())
        self.assertEqual((first / 'train.bin').read_bytes(), (self.root / 'replay' / 'train.bin').read_bytes())


class MergeHierarchyCommandTests(SimpleTestCase):

    def test_preset(self):
        with tempfile.TemporaryDirectory() as tmp:
            call_command('merge_hierarchy', preset='cifar100-5', output=tmp, stdout=StringIO())
            hierarchy = load_hierarchy(Path(tmp) / 'hierarchy.txt')
        self.assertEqual(hierarchy.fine_count, 100)
        self.assertEqual(hierarchy.levels[0].coarse_count, 5)

    def test_needs_a_source(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError):
                call_command('merge_hierarchy', output=tmp, stdout=StringIO())
