"""
Prompt-position sweep
Usage: python manage.py sweep_positions --data train.bin --val-data val.bin --candidates 3,5,7
"""
from runner.options import parse_bool, parse_int_list
from training.experiments import SINGLE, SWEEP_MODES, position_sweep
from training.options import TrainingCommand


class Command(TrainingCommand):
    help = 'Train once per prompting-block placement and tabulate final accuracies'

    FIELDS = {
        **TrainingCommand.FIELDS,
        'candidates': parse_int_list,
        'mode': str,
        'baseline': parse_bool,
    }
    DEFAULTS = {
        **TrainingCommand.DEFAULTS,
        'candidates': '3,5,7',
        'mode': SINGLE,
        'baseline': True,
    }

    def add_run_arguments(self, parser):
        parser.add_argument('--candidates', help="Layers to try, e.g. '3,5,7' or '1..8'")
        parser.add_argument('--mode', choices=SWEEP_MODES,
                            help='single: one block at each layer; from_layer: preset blocks from that layer on')
        parser.add_argument('--baseline', help='Also train the plain ViT (1/0)')

    def run(self, resolved):
        train_records, val_records, hierarchy, config, cfg = self.prepare(resolved)
        out_dir = self.output_dir(resolved)
        manifest = self.start_manifest(resolved, out_dir, inputs=self.input_paths(resolved))

        table = position_sweep(config, hierarchy, resolved['candidates'], train_records, val_records, cfg,
                               mode=resolved['mode'], include_baseline=resolved['baseline'])
        manifest.add_output(table.write_csv(out_dir / 'position_sweep.csv'))
        for row in table.rows:
            self.stdout.write(self.summary({'placement': row['placement'], 'fine top-1': row['fine_top1']}))
        self.finish_manifest(manifest, out_dir)
