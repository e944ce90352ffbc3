"""
Coarse-class-count ablation
Usage: python manage.py coarse_ablation --data train.bin --val-data val.bin --hierarchies cifar100,cifar100-10,cifar100-5,cifar100-2
"""
from pathlib import Path

from hierarchy import load_hierarchy
from hierarchy.presets import HIERARCHY_PRESETS
from training.experiments import coarse_count_ablation
from training.options import TrainingCommand


def parse_names(value):
    if isinstance(value, (list, tuple)):
        return list(value)
    return [part.strip() for part in str(value).split(',') if part.strip()]


class Command(TrainingCommand):
    help = 'Train TransHP once per coarse taxonomy (preset names or hierarchy files) plus the baseline'

    FIELDS = {
        **TrainingCommand.FIELDS,
        'hierarchies': parse_names,
    }

    def add_run_arguments(self, parser):
        parser.add_argument('--hierarchies',
                            help=f"Comma-separated presets ({', '.join(HIERARCHY_PRESETS)}) or hierarchy files")

    def load_hierarchies(self, names):
        hierarchies = {}
        for name in names:
            if name in HIERARCHY_PRESETS:
                hierarchies[name] = HIERARCHY_PRESETS[name]()
            else:
                hierarchies[Path(name).stem] = load_hierarchy(name)
        return hierarchies

    def run(self, resolved):
        if not resolved['hierarchies']:
            raise ValueError('--hierarchies is required')
        hierarchies = self.load_hierarchies(resolved['hierarchies'])
        train_records, val_records, hierarchy, config, cfg = self.prepare(resolved)
        out_dir = self.output_dir(resolved)
        manifest = self.start_manifest(resolved, out_dir, inputs=self.input_paths(resolved))

        table = coarse_count_ablation(config, hierarchies, train_records, val_records, cfg,
                                      progress=lambda name: self.stdout.write(f"Training with hierarchy {name}"))
        manifest.add_output(table.write_csv(out_dir / 'coarse_ablation.csv'))
        for row in table.rows:
            self.stdout.write(self.summary({'hierarchy': row['hierarchy'], 'fine top-1': row['fine_top1']}))
        self.finish_manifest(manifest, out_dir)
