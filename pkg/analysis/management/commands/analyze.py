"""
Absorption reports, prompt-weight bars and attention heatmaps for a checkpoint
Usage: python manage.py analyze --checkpoint runs/train/model.ckpt --data runs/gen_data/val.bin --images 0..7 --blocks coarse,final
"""
from analysis.absorption import image_reports, summarize_reports
from analysis.heatmaps import export_heatmaps, write_prompt_bars, write_report
from imagedata import stack_records
from imagedata.storage import load_dataset
from runner.base import ExperimentCommand
from runner.options import parse_bool, parse_int_list
from training.options import check_compatible
from transhp.exceptions import ContractError
from vision import load_checkpoint


def parse_blocks(value):
    if isinstance(value, (list, tuple)):
        return list(value)
    return [part.strip() for part in str(value).split(',') if part.strip()]


class Command(ExperimentCommand):
    help = 'Write absorption statistics, per-image prompt weights and class-token heatmaps'

    FIELDS = {
        'checkpoint': str,
        'data': str,
        'hierarchy': str,
        'images': parse_int_list,
        'blocks': parse_blocks,
        'absorption': parse_bool,
    }
    DEFAULTS = {
        'images': '0..7',
        'blocks': 'coarse,final',
        'absorption': True,
    }

    def add_experiment_arguments(self, parser):
        parser.add_argument('--checkpoint', help='Checkpoint written by train')
        parser.add_argument('--data', help='Dataset file; reports cover the whole split')
        parser.add_argument('--hierarchy', help='Hierarchy file overriding the one implied by the data')
        parser.add_argument('--images', help="Record positions to export, e.g. '0..7' or '3,9'")
        parser.add_argument('--blocks', help="Heatmap blocks: numbers, 'coarse' (prompting blocks), 'final'")
        parser.add_argument('--absorption', help='Write absorption report and prompt bars (1/0)')

    def resolve_blocks(self, model, names):
        layers = []
        for name in names:
            if name == 'coarse':
                if not model.config.prompt_layers:
                    raise ContractError(f"{model} has no prompting blocks")
                layers.extend(model.config.prompt_layers)
            elif name == 'final':
                layers.append(model.config.depth)
            else:
                layers.append(int(name))
        return list(dict.fromkeys(layers))

    def run(self, resolved):
        if not resolved['checkpoint'] or not resolved['data']:
            raise ValueError('--checkpoint and --data are required')
        model = load_checkpoint(resolved['checkpoint'])
        if resolved['absorption'] and not model.has_pools:
            raise ContractError(f"{resolved['checkpoint']} has no prompting blocks; rerun with --absorption 0")
        records, hierarchy = load_dataset(resolved['data'], resolved['hierarchy'])
        check_compatible(model.config, hierarchy, records, source=resolved['checkpoint'])
        layers = self.resolve_blocks(model, resolved['blocks'])
        positions = resolved['images']
        for position in positions:
            if not 0 <= position < len(records):
                raise IndexError(f"image {position} out of range [0, {len(records)})")

        out_dir = self.output_dir(resolved)
        manifest = self.start_manifest(resolved, out_dir, inputs=[resolved['checkpoint'], resolved['data']])

        for position in positions:
            record = records[position]
            for export in export_heatmaps(model, record.pixels, layers, out_dir / 'heatmaps', record.image_id):
                manifest.add_output(export.pgm_path)
                manifest.add_output(export.csv_path)

        if resolved['absorption']:
            images, labels = stack_records(records, dtype=model.dtype)
            reports = image_reports(model, images, labels, [r.image_id for r in records],
                                    workers=self.eval_workers(resolved))
            summary = summarize_reports(reports)
            manifest.add_output(write_report(reports, summary, out_dir / 'absorption_report.jsonl'))
            selected = {records[position].image_id for position in positions}
            bars = [report for report in reports if report.image_id in selected]
            manifest.add_output(write_prompt_bars(bars, out_dir / 'prompt_bars.csv'))
            for layer, stats in summary.items():
                self.stdout.write(
                    f"block {layer}: mean target weight {stats['target_weight.class_token.predicted']:.4f} "
                    f"(uniform {stats['uniform_weight']:.4f}), correct selection {stats['selection.correct']:.3f}"
                )
        self.finish_manifest(manifest, out_dir)
