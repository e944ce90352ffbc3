"""
Train one arm (transhp, baseline, no_prompts or no_coarse_labels)
Usage: python manage.py train --data runs/gen_data/train.bin --val-data runs/gen_data/val.bin --variant transhp --prompt-layer 5 --lambda 1.0
"""
from training.options import TrainingCommand
from training.trainer import train
from vision import build_model, count_params, save_checkpoint


class Command(TrainingCommand):
    help = 'Train a model and write its checkpoint, per-epoch log and manifest'

    def run(self, resolved):
        train_records, val_records, hierarchy, config, cfg = self.prepare(resolved)
        out_dir = self.output_dir(resolved)
        manifest = self.start_manifest(resolved, out_dir, inputs=self.input_paths(resolved))

        model = build_model(config, hierarchy, cfg.seed, resolved['variant'], dtype=cfg.numpy_dtype)
        counts = count_params(model)
        self.stdout.write(f"Training {model}: {counts['total']} parameters "
                          f"({counts['added_by_prompting']} added by prompting)")
        model, log = train(model, train_records, val_records, cfg)

        manifest.add_output(save_checkpoint(model, out_dir / 'model.ckpt'))
        manifest.add_output(log.write(out_dir / 'log.jsonl'))
        manifest.add_output(log.write_timing(out_dir / 'timing.json'))
        if log.records:
            final = log.final
            self.stdout.write(self.summary({
                'train top-1': final['train_fine_top1'],
                'val top-1': final['val_fine_top1'],
                'log checksum': log.checksum()[:16],
            }))
        self.finish_manifest(manifest, out_dir)
