"""
Data-efficiency protocol: baseline against TransHP on per-class subsets
Usage: python manage.py data_efficiency --data train.bin --val-data val.bin --fractions 1.0,0.5,0.25 --seeds 0,1,2
"""
from runner.options import parse_float_list, parse_int_list
from training.experiments import data_efficiency_protocol
from training.options import TrainingCommand


class Command(TrainingCommand):
    help = 'Train baseline and TransHP on per-class fractions of the training split'

    FIELDS = {
        **TrainingCommand.FIELDS,
        'fractions': parse_float_list,
        'seeds': parse_int_list,
    }
    DEFAULTS = {
        **TrainingCommand.DEFAULTS,
        'fractions': '1.0,0.5,0.25',
        'seeds': '0,1,2',
    }

    def add_run_arguments(self, parser):
        parser.add_argument('--fractions', help='Per-class fractions in (0, 1]')
        parser.add_argument('--seeds', help="Seeds for subsets and training, e.g. '0,1,2'")

    def run(self, resolved):
        train_records, val_records, hierarchy, config, cfg = self.prepare(resolved)
        out_dir = self.output_dir(resolved)
        manifest = self.start_manifest(resolved, out_dir, inputs=self.input_paths(resolved))

        table = data_efficiency_protocol(config, hierarchy, train_records, val_records,
                                         resolved['fractions'], resolved['seeds'], cfg)
        manifest.add_output(table.write_csv(out_dir / 'data_efficiency.csv'))
        for row in table.rows:
            self.stdout.write(self.summary(row))
        self.finish_manifest(manifest, out_dir)
