"""
Evaluate a checkpoint on a dataset
Usage: python manage.py eval --checkpoint runs/train/model.ckpt --data runs/gen_data/val.bin
"""
import json

from imagedata.storage import load_dataset
from runner.base import ExperimentCommand
from training.options import check_compatible
from training.trainer import evaluate
from vision import load_checkpoint


class Command(ExperimentCommand):
    help = 'Fine and per-block coarse top-1 accuracy of a checkpoint'

    FIELDS = {
        'checkpoint': str,
        'data': str,
        'hierarchy': str,
    }

    def add_experiment_arguments(self, parser):
        parser.add_argument('--checkpoint', help='Checkpoint written by train')
        parser.add_argument('--data', help='Dataset file to score')
        parser.add_argument('--hierarchy', help='Hierarchy file overriding the one implied by the data')

    def run(self, resolved):
        if not resolved['checkpoint'] or not resolved['data']:
            raise ValueError('--checkpoint and --data are required')
        model = load_checkpoint(resolved['checkpoint'])
        records, hierarchy = load_dataset(resolved['data'], resolved['hierarchy'])
        check_compatible(model.config, hierarchy, records, source=resolved['checkpoint'])

        out_dir = self.output_dir(resolved)
        manifest = self.start_manifest(resolved, out_dir, inputs=[resolved['checkpoint'], resolved['data']])
        metrics = evaluate(model, records, workers=self.eval_workers(resolved))
        path = out_dir / 'eval.json'
        path.write_text(json.dumps(metrics, indent=2, sort_keys=True) + '\n')
        manifest.add_output(path)

        self.stdout.write(f"fine top-1 {metrics['fine_top1']:.4f} on {len(records)} images")
        for layer, accuracy in metrics['coarse_top1'].items():
            self.stdout.write(f"block {layer} coarse top-1 {accuracy:.4f}")
        self.finish_manifest(manifest, out_dir)
