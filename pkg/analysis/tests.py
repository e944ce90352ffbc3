import json
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import CommandError, call_command
from django.test import SimpleTestCase
from PIL import Image

from imagedata import stack_records
from imagedata.synthetic import SyntheticConfig, generate_synthetic, write_synthetic
from transhp.exceptions import ContractError, DimensionError
from vision import assemble, build_model, save_checkpoint
from vision.tests import tiny_config
from .absorption import (absorption_ratio, absorption_weights, image_reports, selection_label, summarize_reports,
                         track_absorption)
from .heatmaps import (attention_map_export, class_token_attention, export_heatmaps, normalize_grid, read_matrix,
                       write_matrix, write_pgm, write_prompt_bars)


def softmax_rows(logits):
    e = np.exp(logits - logits.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def tiny_split(images_per_fine=2, seed=0):
    records, hierarchy = generate_synthetic(SyntheticConfig(
        coarse_count=3, fine_per_coarse=2, images_per_fine=images_per_fine, image_size=16, seed=seed,
    ))
    return records, hierarchy


def flatten_attention(model):
    for layer in range(1, model.config.depth + 1):
        model.params[f'blocks.{layer}.attn.qkv.weight'].data[...] = 0.0
        model.params[f'blocks.{layer}.attn.qkv.bias'].data[...] = 0.0


class AbsorptionWeightTests(SimpleTestCase):

    def test_uniform_attention(self):
        attention = np.full((6, 217, 217), 1.0 / 217)
        weights = absorption_weights(attention, 197, 20)
        self.assertEqual(weights.shape, (197, 20))
        np.testing.assert_allclose(weights, 1.0 / 217, rtol=0, atol=1e-15)

    def test_no_prompts_gives_empty_weights(self):
        weights = absorption_weights(np.full((2, 17, 17), 1.0 / 17), 17, 0)
        self.assertEqual(weights.shape, (17, 0))

    def test_softmax_slice_oracle(self):
        rng = np.random.default_rng(3)
        heads, n_feature, prompts = 3, 17, 4
        tokens = n_feature + prompts
        for _ in range(5):
            logits = rng.normal(scale=2.0, size=(heads, tokens, tokens))
            attention = softmax_rows(logits)
            weights = absorption_weights(attention, n_feature, prompts)

            expected = np.zeros((n_feature, prompts))
            for i in range(n_feature):
                for j in range(prompts):
                    total = 0.0
                    for head in range(heads):
                        row = logits[head, i]
                        total += np.exp(row[n_feature + j]) / np.exp(row).sum()
                    expected[i, j] = total / heads
            np.testing.assert_allclose(weights, expected, rtol=0, atol=1e-12)
            self.assertTrue(np.all((weights >= 0) & (weights <= 1)))
            np.testing.assert_allclose(attention.sum(axis=-1), 1.0, atol=1e-6)

    def test_per_head_keeps_head_axis(self):
        attention = softmax_rows(np.random.default_rng(0).normal(size=(2, 4, 7, 7)))
        per_head = absorption_weights(attention, 5, 2, per_head=True)
        self.assertEqual(per_head.shape, (2, 4, 5, 2))
        np.testing.assert_allclose(per_head.mean(axis=1), absorption_weights(attention, 5, 2))

    def test_length_mismatch(self):
        with self.assertRaises(DimensionError):
            absorption_weights(np.full((2, 20, 20), 0.05), 17, 4)


class RatioTests(SimpleTestCase):

    def test_target_over_best_other(self):
        self.assertAlmostEqual(absorption_ratio([0.4, 0.1, 0.1], 0), 4.0)

    def test_uniform_ratio_is_one(self):
        self.assertEqual(absorption_ratio([0.25] * 4, 2), 1.0)

    def test_non_max_target_below_one(self):
        self.assertLess(absorption_ratio([0.1, 0.5, 0.2], 2), 1.0)

    def test_single_prompt_is_undefined(self):
        with self.assertRaises(ContractError):
            absorption_ratio([1.0], 0)

    def test_target_out_of_range(self):
        with self.assertRaises(IndexError):
            absorption_ratio([0.5, 0.5], 2)

    def test_all_zero_row_scores_zero(self):
        self.assertEqual(absorption_ratio([0.0, 0.0, 0.0], 1), 0.0)

    def test_zero_others_stay_finite(self):
        ratio = absorption_ratio([0.3, 0.0, 0.0], 0)
        self.assertTrue(np.isfinite(ratio))
        self.assertGreater(ratio, 1.0)

    def test_selection_labels(self):
        self.assertEqual(selection_label([0.5, 0.2, 0.3], 0), 'correct')
        self.assertEqual(selection_label([0.5, 0.46, 0.04], 0), 'ambiguous')
        self.assertEqual(selection_label([0.2, 0.7, 0.1], 0), 'incorrect')


class HeatmapTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.out = Path(self.tmp.name)

    def test_grid_at_desk_size(self):
        prompts = 8
        attention = softmax_rows(np.random.default_rng(1).normal(size=(4, 65 + prompts, 65 + prompts)))
        grid, weights = class_token_attention(attention, 65, 8)
        self.assertEqual(grid.shape, (8, 8))
        self.assertEqual(weights.shape, (prompts,))
        row = attention.mean(axis=0)[0]
        self.assertEqual(grid[2, 3], row[1 + 2 * 8 + 3])

    def test_flat_grid_is_half(self):
        np.testing.assert_array_equal(normalize_grid(np.full((4, 4), 0.2)), np.full((4, 4), 0.5))

    def test_normalized_range(self):
        normalized = normalize_grid(np.arange(16.0).reshape(4, 4))
        self.assertEqual(normalized.min(), 0.0)
        self.assertEqual(normalized.max(), 1.0)

    def test_matrix_round_trip(self):
        matrix = np.random.default_rng(2).random((8, 8))
        np.testing.assert_allclose(read_matrix(write_matrix(matrix, self.out / 'm.csv')), matrix, atol=1e-6)

    def test_pgm_is_readable_greyscale(self):
        normalized = normalize_grid(np.arange(64.0).reshape(8, 8))
        with Image.open(write_pgm(normalized, self.out / 'h.pgm')) as image:
            self.assertEqual(image.mode, 'L')
            self.assertEqual(image.size, (8, 8))
            pixels = np.asarray(image)
        self.assertEqual(pixels[0, 0], 0)
        self.assertEqual(pixels[7, 7], 255)

    def test_export_per_block(self):
        config, hierarchy = tiny_config()
        model = assemble(config, hierarchy, seed=0)
        image = np.random.default_rng(0).random((16, 16, 3))
        exports = export_heatmaps(model, image, [2, 3], self.out, image_id=7)
        self.assertEqual([e.layer for e in exports], [2, 3])
        self.assertTrue((self.out / 'image7_block2.pgm').is_file())
        self.assertTrue((self.out / 'image7_block3.csv').is_file())
        self.assertEqual(exports[0].prompt_weights.shape, (3,))
        self.assertEqual(exports[1].prompt_weights.shape, (0,))
        self.assertEqual(exports[0].grid.shape, (4, 4))

    def test_single_block_export(self):
        config, hierarchy = tiny_config()
        model = assemble(config, hierarchy, seed=0)
        image = np.random.default_rng(4).random((16, 16, 3))
        export = attention_map_export(model, image, 2, self.out, image_id=3)
        self.assertEqual((export.image_id, export.layer), (3, 2))
        self.assertEqual(export.pgm_path, self.out / 'image3_block2.pgm')
        np.testing.assert_allclose(read_matrix(export.csv_path), export.normalized, atol=1e-6)

    def test_zero_attention_logits_give_flat_map(self):
        config, hierarchy = tiny_config()
        model = assemble(config, hierarchy, seed=0)
        flatten_attention(model)
        image = np.random.default_rng(0).random((16, 16, 3))
        export = export_heatmaps(model, image, [3], self.out)[0]
        np.testing.assert_array_equal(export.normalized, np.full((4, 4), 0.5))
        np.testing.assert_allclose(read_matrix(export.csv_path), 0.5)

    def test_block_out_of_range(self):
        config, hierarchy = tiny_config()
        model = assemble(config, hierarchy, seed=0)
        with self.assertRaises(IndexError):
            export_heatmaps(model, np.zeros((16, 16, 3)), [4], self.out)


class ReportTests(SimpleTestCase):

    def setUp(self):
        self.config, self.hierarchy = tiny_config()
        self.model = assemble(self.config, self.hierarchy, seed=0)
        self.records, _ = tiny_split(images_per_fine=3)
        self.images, self.labels = stack_records(self.records)

    def test_one_report_per_image_and_block(self):
        reports = image_reports(self.model, self.images, self.labels)
        self.assertEqual(len(reports), len(self.records))
        self.assertTrue(all(len(r.class_token_weights) == 3 for r in reports))
        self.assertEqual({r.sequence_length for r in reports}, {20})
        parents = self.hierarchy.levels[0].parent_of
        self.assertEqual([r.true_coarse for r in reports], [parents[y] for y in self.labels])

    def test_batching_does_not_change_reports(self):
        whole = image_reports(self.model, self.images, self.labels)
        pieces = image_reports(self.model, self.images, self.labels, batch_size=4)
        for a, b in zip(whole, pieces):
            np.testing.assert_allclose(a.class_token_weights, b.class_token_weights, atol=1e-12)
            self.assertEqual(a.predicted_coarse, b.predicted_coarse)

    def test_threaded_reports_match_serial(self):
        serial = image_reports(self.model, self.images, self.labels, batch_size=4)
        threaded = image_reports(self.model, self.images, self.labels, batch_size=4, workers=3)
        self.assertEqual([r.image_id for r in threaded], [r.image_id for r in serial])
        for a, b in zip(serial, threaded):
            self.assertEqual(a.class_token_weights, b.class_token_weights)

    def test_untrained_target_weight_near_uniform(self):
        summary = summarize_reports(image_reports(self.model, self.images, self.labels))
        stats = summary[2]
        self.assertEqual(stats['uniform_weight'], 1 / 20)
        self.assertAlmostEqual(stats['target_weight.class_token.true'], 1 / 20, delta=0.01)
        self.assertEqual(stats['count'], len(self.records))

    def test_baseline_has_nothing_to_analyse(self):
        baseline = build_model(self.config, self.hierarchy, 0, 'baseline')
        with self.assertRaises(ContractError):
            image_reports(baseline, self.images, self.labels)

    def test_no_coarse_labels_predicts_from_weights(self):
        variant = build_model(self.config, self.hierarchy, 0, 'no_coarse_labels')
        reports = image_reports(variant, self.images, self.labels)
        for report in reports:
            self.assertEqual(report.predicted_coarse, int(np.argmax(report.class_token_weights)))

    def test_track_absorption_rows(self):
        rows = track_absorption(self.model, self.images, self.labels, epoch=4, split='val')
        statistics = {row['statistic'] for row in rows}
        self.assertIn('target_weight.class_token.predicted', statistics)
        self.assertIn('ratio.feature_mean.true', statistics)
        self.assertTrue(all(row['type'] == 'absorption' and row['epoch'] == 4 and row['block'] == 2 for row in rows))

    def test_prompt_bars(self):
        reports = image_reports(self.model, self.images[:2], self.labels[:2])
        with tempfile.TemporaryDirectory() as tmp:
            lines = write_prompt_bars(reports, Path(tmp) / 'bars.csv').read_text().splitlines()
        self.assertEqual(lines[0], 'image_id,block,true_coarse,predicted_coarse,selection,w0,w1,w2')
        self.assertEqual(len(lines), 3)


class AnalyzeCommandTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)
        records, hierarchy = tiny_split()
        self.data = write_synthetic(self.root / 'data.bin', records, hierarchy, 2)
        config, self.hierarchy = tiny_config()
        self.config = config

    def checkpoint(self, variant='transhp'):
        model = build_model(self.config, self.hierarchy, 0, variant)
        return save_checkpoint(model, self.root / f'{variant}.ckpt')

    def test_outputs(self):
        out = self.root / 'analyze'
        call_command('analyze', checkpoint=str(self.checkpoint()), data=str(self.data), images='0..3',
                     blocks='coarse,final', output=str(out), stdout=StringIO())
        self.assertEqual(len(list((out / 'heatmaps').glob('*.pgm'))), 4 * 2)
        report = [json.loads(line) for line in (out / 'absorption_report.jsonl').read_text().splitlines()]
        self.assertEqual(sum(1 for r in report if r['type'] == 'image'), 12)
        self.assertEqual(sum(1 for r in report if r['type'] == 'summary'), 1)
        self.assertEqual(len((out / 'prompt_bars.csv').read_text().splitlines()), 1 + 4)
        self.assertTrue((out / 'manifest.json').is_file())

    def test_baseline_checkpoint(self):
        with self.assertRaisesMessage(CommandError, 'no prompting blocks'):
            call_command('analyze', checkpoint=str(self.checkpoint('baseline')), data=str(self.data),
                         output=str(self.root / 'analyze'))
