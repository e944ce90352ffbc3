"""
Generate the synthetic hierarchical dataset
Usage: python manage.py gen_data --M 8 --K 4 --per-fine 64 --size 32 --noise 0.1 --seed 1
"""
from hierarchy import dump_hierarchy
from imagedata.sampling import split_per_class
from imagedata.synthetic import SyntheticConfig, generate_synthetic, write_synthetic
from runner.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Generate a synthetic hierarchical image dataset (train, optional validation, hierarchy file)'

    FIELDS = {
        'coarse_count': int,
        'fine_per_coarse': int,
        'per_fine': int,
        'val_per_fine': int,
        'size': int,
        'noise': float,
    }
    DEFAULTS = {
        'coarse_count': 8,
        'fine_per_coarse': 4,
        'per_fine': 64,
        'val_per_fine': 0,
        'size': 32,
        'noise': 0.1,
        'seed': 0,
    }

    def add_experiment_arguments(self, parser):
        parser.add_argument('--M', '--coarse-count', dest='coarse_count', type=int, help='Coarse classes')
        parser.add_argument('--K', '--fine-per-coarse', dest='fine_per_coarse', type=int,
                            help='Fine classes per coarse class')
        parser.add_argument('--per-fine', dest='per_fine', type=int, help='Training images per fine class')
        parser.add_argument('--val-per-fine', dest='val_per_fine', type=int,
                            help='Validation images per fine class, written to val.bin')
        parser.add_argument('--size', type=int, help='Image height and width')
        parser.add_argument('--noise', type=float, help='Standard deviation of pixel noise')

    def run(self, resolved):
        cfg = SyntheticConfig(
            coarse_count=resolved['coarse_count'],
            fine_per_coarse=resolved['fine_per_coarse'],
            images_per_fine=resolved['per_fine'] + resolved['val_per_fine'],
            image_size=resolved['size'],
            noise_std=resolved['noise'],
            seed=resolved['seed'],
        )
        cfg.validate()
        if resolved['per_fine'] < 1 or resolved['val_per_fine'] < 0:
            raise ValueError('per-fine must be >= 1 and val-per-fine >= 0')

        out_dir = self.output_dir(resolved)
        manifest = self.start_manifest(resolved, out_dir)

        records, hierarchy = generate_synthetic(cfg)
        train, val = split_per_class(records, resolved['val_per_fine'])
        manifest.add_output(write_synthetic(out_dir / 'train.bin', train, hierarchy, cfg.fine_per_coarse))
        if val:
            manifest.add_output(write_synthetic(out_dir / 'val.bin', val, hierarchy, cfg.fine_per_coarse))
        manifest.add_output(dump_hierarchy(hierarchy, out_dir / 'hierarchy.txt'))

        self.stdout.write(f"Generated {len(train)} train and {len(val)} validation records "
                          f"({hierarchy.fine_count} fine / {cfg.coarse_count} coarse classes)")
        self.finish_manifest(manifest, out_dir)
