import json
import math
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.exceptions import ImproperlyConfigured
from django.core.management import CommandError, call_command
from django.test import SimpleTestCase, tag

from hierarchy import MergeSpec, dump_hierarchy, merge_coarse
from imagedata import stack_records, subsample_per_class
from imagedata.sampling import split_per_class
from imagedata.synthetic import SyntheticConfig, generate_synthetic, write_synthetic
from numerics import Tensor, no_grad
from transhp.exceptions import ContractError, DivergenceError
from vision import ModelConfig, assemble, build_model, desk_config, strip_prompting
from vision.config import specs_for_hierarchy
from vision.tests import tiny_config
from .config import TrainConfig
from .experiments import coarse_count_ablation, data_efficiency_protocol, position_sweep, run_arm
from .optim import AdamW
from .options import build_model_config
from .schedule import learning_rate
from .trainer import evaluate, train


def tiny_data(images_per_fine=2, seed=0):
    records, _ = generate_synthetic(SyntheticConfig(
        coarse_count=3, fine_per_coarse=2, images_per_fine=images_per_fine, image_size=16, seed=seed,
    ))
    return records


def quick_cfg(**overrides):
    values = dict(epochs=2, batch_size=4, base_lr=1e-3, warmup_epochs=1, dtype='float64')
    values.update(overrides)
    return TrainConfig(**values)


def weights_of(model):
    return {name: p.data.copy() for name, p in model.params.items()}


class ScheduleTests(SimpleTestCase):

    def test_closed_form_at_every_step(self):
        base, total, warmup = 3e-3, 120, 10
        for step in range(total):
            if step < warmup:
                expected = base * (step + 1) / warmup
            else:
                expected = base * 0.5 * (1 + math.cos(math.pi * (step - warmup) / (total - warmup)))
            self.assertAlmostEqual(learning_rate(step, total, warmup, base), expected, delta=1e-12)

    def test_warmup_reaches_base(self):
        self.assertEqual(learning_rate(9, 100, 10, 1e-3), 1e-3)
        self.assertEqual(learning_rate(10, 100, 10, 1e-3), 1e-3)

    def test_no_warmup(self):
        self.assertEqual(learning_rate(0, 50, 0, 2e-3), 2e-3)

    def test_decays_monotonically(self):
        rates = [learning_rate(step, 60, 5, 1.0) for step in range(5, 60)]
        self.assertTrue(all(a >= b for a, b in zip(rates, rates[1:])))
        self.assertLess(rates[-1], 0.01)


class AdamWTests(SimpleTestCase):

    def test_zero_gradient_step_is_pure_decay(self):
        theta = np.random.default_rng(0).normal(size=(4, 3))
        param = Tensor(theta.copy(), requires_grad=True)
        optimizer = AdamW({'w': param}, weight_decay=0.05)
        optimizer.step(lr=0.1)
        np.testing.assert_array_equal(param.data, theta - 0.1 * 0.05 * theta)

    def test_first_step_oracle(self):
        theta = np.array([0.5, -1.0, 2.0])
        grad = np.array([0.2, -0.4, 0.0])
        param = Tensor(theta.copy(), requires_grad=True)
        param.grad = grad.copy()
        AdamW({'w': param}, weight_decay=0.0).step(lr=0.01)
        m_hat = 0.1 * grad / 0.1
        v_hat = 0.001 * grad * grad / 0.001
        np.testing.assert_allclose(param.data, theta - 0.01 * m_hat / (np.sqrt(v_hat) + 1e-8), atol=1e-15)

    def test_zero_grad(self):
        param = Tensor(np.ones(3), requires_grad=True)
        param.grad = np.ones(3)
        AdamW({'w': param}).zero_grad()
        np.testing.assert_array_equal(param.grad, np.zeros(3))


class TrainConfigTests(SimpleTestCase):

    def test_desk_preset(self):
        cfg = TrainConfig.desk()
        self.assertEqual((cfg.epochs, cfg.batch_size, cfg.base_lr, cfg.weight_decay, cfg.warmup_epochs),
                         (60, 64, 3e-3, 0.05, 5))
        self.assertEqual(cfg.dtype, 'float32')

    def test_full_scale_preset(self):
        cfg = TrainConfig.full_scale()
        self.assertEqual((cfg.epochs, cfg.batch_size, cfg.base_lr), (300, 1024, 1e-3))

    def test_invalid(self):
        for overrides in ({'base_lr': 0.0}, {'warmup_epochs': 2}, {'batch_size': 0}, {'epochs': -1}):
            with self.assertRaises(ValueError):
                quick_cfg(**overrides).validate()

    def test_zero_epochs_is_valid(self):
        quick_cfg(epochs=0, warmup_epochs=5).validate()

    def test_deterministic_runs_evaluate_on_one_thread(self):
        self.assertEqual(quick_cfg(deterministic=True, eval_workers=4).workers, 1)
        self.assertEqual(quick_cfg(deterministic=False, eval_workers=4).workers, 4)
        with self.assertRaises(ValueError):
            quick_cfg(eval_workers=0).validate()


class TrainTests(SimpleTestCase):

    def setUp(self):
        self.config, self.hierarchy = tiny_config()
        self.train_records = tiny_data()
        self.val_records = tiny_data(images_per_fine=1, seed=1)

    def test_zero_epochs_leaves_model_unchanged(self):
        model = assemble(self.config, self.hierarchy, seed=0)
        before = weights_of(model)
        _, log = train(model, self.train_records, self.val_records, quick_cfg(epochs=0))
        self.assertEqual(log.records, [])
        for name, array in before.items():
            np.testing.assert_array_equal(model.params[name].data, array)

    def test_log_schema(self):
        model = assemble(self.config, self.hierarchy, seed=0)
        _, log = train(model, self.train_records, self.val_records, quick_cfg())
        self.assertEqual([r['epoch'] for r in log.records], [1, 2])
        final = log.final
        self.assertEqual(set(final['loss']), {'fine_loss', 'coarse_loss.2', 'total'})
        self.assertEqual(set(final['coarse_top1']['val']), {'2'})
        self.assertTrue(0.0 <= final['val_fine_top1'] <= 1.0)
        self.assertTrue(all(math.isfinite(v) for v in final['loss'].values()))
        splits = {row['split'] for row in log.absorption}
        self.assertEqual(splits, {'train', 'val'})
        lines = [json.loads(line) for line in log.to_jsonl().splitlines()]
        self.assertEqual(lines[0]['type'], 'run')
        self.assertEqual(lines[0]['dataset_fingerprint'], log.dataset_fingerprint)

    def test_parameters_move(self):
        model = assemble(self.config, self.hierarchy, seed=0)
        before = weights_of(model)
        train(model, self.train_records, [], quick_cfg(epochs=1, warmup_epochs=0))
        self.assertFalse(np.array_equal(model.params['prompting.2.pool'].data, before['prompting.2.pool']))
        self.assertFalse(np.array_equal(model.params['head.weight'].data, before['head.weight']))

    def test_loss_does_not_rise_on_clean_data(self):
        records, _ = generate_synthetic(SyntheticConfig(
            coarse_count=3, fine_per_coarse=2, images_per_fine=4, image_size=16, noise_std=0.0, seed=2,
        ))
        model = assemble(self.config, self.hierarchy, seed=0)
        _, log = train(model, records, [], quick_cfg(epochs=3, warmup_epochs=0, track_absorption=False))
        losses = [record['loss']['total'] for record in log.records]
        for previous, current in zip(losses, losses[1:]):
            self.assertLessEqual(current, previous * 1.02)

    def test_identical_runs_are_bitwise_identical(self):
        logs, models = [], []
        for _ in range(2):
            model = assemble(self.config, self.hierarchy, seed=3)
            _, log = train(model, self.train_records, self.val_records, quick_cfg(seed=3, flip=True))
            logs.append(log)
            models.append(model)
        self.assertEqual(logs[0].to_jsonl(), logs[1].to_jsonl())
        self.assertEqual(logs[0].checksum(), logs[1].checksum())
        for name, param in models[0].params.items():
            np.testing.assert_array_equal(param.data, models[1].params[name].data)

    def test_different_seed_changes_batch_order(self):
        a = assemble(self.config, self.hierarchy, seed=0)
        b = assemble(self.config, self.hierarchy, seed=0)
        train(a, self.train_records, [], quick_cfg(seed=0))
        train(b, self.train_records, [], quick_cfg(seed=1))
        self.assertFalse(np.array_equal(a.params['head.weight'].data, b.params['head.weight'].data))

    def test_stripped_model_trains_like_baseline(self):
        stripped = strip_prompting(assemble(self.config, self.hierarchy, seed=0))
        baseline = build_model(self.config, self.hierarchy, 0, 'baseline')
        _, log_a = train(stripped, self.train_records, self.val_records, quick_cfg())
        _, log_b = train(baseline, self.train_records, self.val_records, quick_cfg())
        self.assertEqual(log_a.to_jsonl(), log_b.to_jsonl())
        self.assertEqual(set(stripped.params), set(baseline.params))
        for name, param in baseline.params.items():
            np.testing.assert_array_equal(stripped.params[name].data, param.data)

    def test_baseline_log_has_empty_coarse_columns(self):
        baseline = build_model(self.config, self.hierarchy, 0, 'baseline')
        _, log = train(baseline, self.train_records, self.val_records, quick_cfg(epochs=1, warmup_epochs=0))
        self.assertEqual(log.final['coarse_top1'], {'train': {}, 'val': {}})
        self.assertEqual(log.absorption, [])
        self.assertEqual(log.variant, 'baseline')

    def test_divergence_is_reported(self):
        model = assemble(self.config, self.hierarchy, seed=0)
        model.params['head.bias'].data[0] = np.nan
        with self.assertRaises(DivergenceError) as caught:
            train(model, self.train_records, [], quick_cfg())
        self.assertEqual((caught.exception.epoch, caught.exception.batch), (1, 0))

    def test_empty_training_split(self):
        model = assemble(self.config, self.hierarchy, seed=0)
        with self.assertRaises(ContractError):
            train(model, [], [], quick_cfg())


class EvaluateTests(SimpleTestCase):

    def setUp(self):
        self.config, self.hierarchy = tiny_config()
        self.model = assemble(self.config, self.hierarchy, seed=0)

    def test_empty_split(self):
        with self.assertRaises(ContractError):
            evaluate(self.model, [])

    def test_forced_correct_argmax(self):
        records = [r for r in tiny_data() if r.fine_label == 3]
        self.assertEqual(len(records), 2)
        self.model.params['head.weight'].data[...] = 0.0
        self.model.params['head.bias'].data[...] = 0.0
        self.model.params['head.bias'].data[3] = 10.0
        self.assertEqual(evaluate(self.model, records)['fine_top1'], 1.0)

    def test_counting_oracle(self):
        records = tiny_data(images_per_fine=5)
        images, labels = stack_records(records)
        with no_grad():
            output = self.model(images)
        expected_fine = np.sum(np.argmax(output.fine_logits.data, axis=1) == labels) / len(records)
        coarse = self.model.coarse_labels(labels, self.config.prompting_specs[0])
        expected_coarse = np.sum(np.argmax(output.coarse_logits[2].data, axis=1) == coarse) / len(records)
        metrics = evaluate(self.model, records, batch_size=7)
        self.assertEqual(metrics['fine_top1'], expected_fine)
        self.assertEqual(metrics['coarse_top1'], {2: expected_coarse})

    def test_threaded_evaluation_matches_serial(self):
        records = tiny_data(images_per_fine=5)
        serial = evaluate(self.model, records, batch_size=4)
        self.assertEqual(evaluate(self.model, records, batch_size=4, workers=3), serial)

    def test_non_deterministic_training_matches_deterministic(self):
        records = tiny_data()
        logs = []
        for deterministic in (True, False):
            model = assemble(self.config, self.hierarchy, seed=0)
            _, log = train(model, records, records, quick_cfg(deterministic=deterministic, eval_workers=3))
            logs.append(log)
        self.assertEqual(logs[0].records, logs[1].records)
        self.assertEqual(logs[0].absorption, logs[1].absorption)

    def test_untrained_coarse_accuracy_is_chance(self):
        records, hierarchy = generate_synthetic(SyntheticConfig(
            coarse_count=8, fine_per_coarse=4, images_per_fine=8, image_size=16, seed=0,
        ))
        config = ModelConfig(image_size=16, patch_size=4, embed_dim=16, depth=3, heads=2, fine_count=32,
                             prompting_specs=specs_for_hierarchy(hierarchy, [(2, 1.0)]))
        model = assemble(config, hierarchy, seed=0)
        accuracy = evaluate(model, records)['coarse_top1'][2]
        sigma = math.sqrt(0.125 * 0.875 / len(records))
        self.assertLess(abs(accuracy - 0.125), 3 * sigma)


class ExperimentTests(SimpleTestCase):

    def setUp(self):
        self.config, self.hierarchy = tiny_config()
        self.train_records = tiny_data()
        self.val_records = tiny_data(images_per_fine=1, seed=1)
        self.cfg = quick_cfg(epochs=1, warmup_epochs=0)

    def test_single_candidate_equals_plain_run(self):
        table = position_sweep(self.config, self.hierarchy, [2], self.train_records, self.val_records, self.cfg,
                               include_baseline=False)
        self.assertEqual(len(table.rows), 1)
        model = build_model(self.config, self.hierarchy, self.cfg.seed)
        _, log = train(model, self.train_records, self.val_records, self.cfg)
        self.assertEqual(table.rows[0]['checksum'], log.checksum())
        self.assertEqual(table.rows[0]['fine_top1'], log.final['val_fine_top1'])

    def test_sweep_shape(self):
        table = position_sweep(self.config, self.hierarchy, [1, 2, 3], self.train_records, self.val_records,
                               self.cfg)
        self.assertEqual(table.column('placement'), ['baseline', 1, 2, 3])
        self.assertEqual(table.column('prompt_layers'), ['', '1', '2', '3'])

    def test_from_layer_mode(self):
        config, hierarchy = tiny_config(prompt_layers=(1, 2))
        table = position_sweep(config, hierarchy, [1, 2], self.train_records, [], self.cfg, mode='from_layer',
                               include_baseline=False)
        self.assertEqual(table.column('prompt_layers'), ['1 2', '2'])

    def test_candidate_out_of_range(self):
        with self.assertRaises(ImproperlyConfigured):
            position_sweep(self.config, self.hierarchy, [4], self.train_records, [], self.cfg)

    def test_full_fraction_row_equals_plain_run(self):
        table = data_efficiency_protocol(self.config, self.hierarchy, self.train_records, self.val_records,
                                         [0.5, 1.0], [0], self.cfg)
        self.assertEqual(table.column('fraction'), [1.0, 0.5])
        plain = run_arm(self.config, self.hierarchy, self.train_records, self.val_records, self.cfg.with_seed(0))
        self.assertEqual(table.rows[0]['transhp_top1'], plain.fine_top1)
        self.assertEqual(table.rows[0]['transhp_drop'], 0.0)
        self.assertEqual(table.rows[0]['baseline_drop'], 0.0)

    def test_fraction_range(self):
        with self.assertRaises(ValueError):
            data_efficiency_protocol(self.config, self.hierarchy, self.train_records, [], [0.0], [0], self.cfg)

    def test_coarse_count_ablation(self):
        merged = merge_coarse(self.hierarchy, 0, MergeSpec(((0, 1), (2,))))
        table = coarse_count_ablation(self.config, {'three': self.hierarchy, 'two': merged},
                                      self.train_records, self.val_records, self.cfg)
        self.assertEqual(table.column('hierarchy'), ['baseline', 'three', 'two'])
        self.assertEqual(table.column('coarse_count'), [0, '3', '2'])

    def test_csv_export(self):
        table = position_sweep(self.config, self.hierarchy, [2], self.train_records, [], self.cfg,
                               include_baseline=False)
        with tempfile.TemporaryDirectory() as tmp:
            lines = table.write_csv(Path(tmp) / 'sweep.csv').read_text().splitlines()
        self.assertEqual(lines[0], 'placement,prompt_layers,fine_top1,coarse_top1,checksum')
        self.assertEqual(len(lines), 2)


class OptionTests(SimpleTestCase):

    def resolved(self, **values):
        base = {'preset': 'desk', 'prompt_layer': None, 'balance': None, 'patch_size': 4, 'embed_dim': 16,
                'depth': 3, 'heads': 2, 'mlp_ratio': None}
        base.update(values)
        return base

    def test_prompt_layer_and_lambda(self):
        _, hierarchy = tiny_config()
        config = build_model_config(self.resolved(prompt_layer=[2], balance=[0.5]), hierarchy, 16)
        self.assertEqual(config.prompt_layers, [2])
        self.assertEqual(config.prompting_specs[0].balance, 0.5)

    def test_empty_prompt_layers_give_baseline(self):
        _, hierarchy = tiny_config()
        self.assertEqual(build_model_config(self.resolved(prompt_layer=[]), hierarchy, 16).prompting_specs, ())

    def test_layer_beyond_depth(self):
        _, hierarchy = tiny_config()
        with self.assertRaises(ImproperlyConfigured):
            build_model_config(self.resolved(prompt_layer=[9]), hierarchy, 16)

    def test_lambda_count_mismatch(self):
        _, hierarchy = tiny_config()
        with self.assertRaises(ImproperlyConfigured):
            build_model_config(self.resolved(prompt_layer=[1, 2], balance=[0.1, 0.2, 0.3]), hierarchy, 16)


class TrainCommandTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)
        records, hierarchy = generate_synthetic(SyntheticConfig(
            coarse_count=3, fine_per_coarse=2, images_per_fine=3, image_size=16, seed=0,
        ))
        train_records, val_records = split_per_class(records, 1)
        self.data = write_synthetic(self.root / 'train.bin', train_records, hierarchy, 2)
        self.val = write_synthetic(self.root / 'val.bin', val_records, hierarchy, 2)

    def run_train(self, name, **options):
        return self.run_command('train', name, **options)

    def run_command(self, command, name, **options):
        values = dict(data=str(self.data), val_data=str(self.val), patch_size=4, embed_dim=16, depth=3, heads=2,
                      prompt_layer='2', epochs=1, batch_size=4, warmup_epochs=0, dtype='float64',
                      deterministic=True, output=str(self.root / name))
        values.update(options)
        call_command(command, stdout=StringIO(), **values)
        return self.root / name

    def test_outputs(self):
        out = self.run_train('transhp', balance='1.0')
        self.assertTrue((out / 'model.ckpt').is_file())
        self.assertTrue((out / 'timing.json').is_file())
        lines = [json.loads(line) for line in (out / 'log.jsonl').read_text().splitlines()]
        epochs = [line for line in lines if line['type'] == 'epoch']
        self.assertEqual(len(epochs), 1)
        self.assertIn('2', epochs[0]['coarse_top1']['val'])
        self.assertTrue(any(line['type'] == 'absorption' for line in lines))
        manifest = json.loads((out / 'manifest.json').read_text())
        self.assertEqual(manifest['command'], 'train')
        self.assertIn(str(out / 'model.ckpt'), manifest['outputs'])

    def test_identical_invocations(self):
        first = self.run_train('first')
        second = self.run_train('second')
        self.assertEqual((first / 'log.jsonl').read_bytes(), (second / 'log.jsonl').read_bytes())
        self.assertEqual((first / 'model.ckpt').read_bytes(), (second / 'model.ckpt').read_bytes())

    def test_baseline_variant(self):
        out = self.run_train('baseline', variant='baseline')
        epoch = [json.loads(line) for line in (out / 'log.jsonl').read_text().splitlines()][1]
        self.assertEqual(epoch['coarse_top1'], {'train': {}, 'val': {}})

    def test_hyphenated_variant(self):
        out = self.run_train('ncl', variant='no-coarse-labels')
        header = json.loads((out / 'log.jsonl').read_text().splitlines()[0])
        self.assertEqual(header['variant'], 'no_coarse_labels')

    def test_contradictory_config_fails_before_training(self):
        with self.assertRaises(CommandError):
            self.run_train('bad', prompt_layer='9')
        self.assertFalse((self.root / 'bad').exists())

    def test_eval_scores_checkpoint(self):
        trained = self.run_train('transhp')
        out = self.root / 'eval'
        call_command('eval', checkpoint=str(trained / 'model.ckpt'), data=str(self.val), output=str(out),
                     stdout=StringIO())
        metrics = json.loads((out / 'eval.json').read_text())
        self.assertTrue(0.0 <= metrics['fine_top1'] <= 1.0)
        self.assertEqual(list(metrics['coarse_top1']), ['2'])

    def test_analyze_report_matches_training_log(self):
        statistic = 'target_weight.class_token.predicted'
        for dtype in ('float64', 'float32'):
            trained = self.run_train(f'run_{dtype}', dtype=dtype, epochs=2)
            lines = [json.loads(line) for line in (trained / 'log.jsonl').read_text().splitlines()]
            logged = [line['value'] for line in lines
                      if line['type'] == 'absorption' and line['epoch'] == 2 and line['split'] == 'val'
                      and line['block'] == 2 and line['statistic'] == statistic]
            self.assertEqual(len(logged), 1)

            out = self.root / f'analyze_{dtype}'
            call_command('analyze', checkpoint=str(trained / 'model.ckpt'), data=str(self.val), images='0',
                         blocks='final', output=str(out), stdout=StringIO())
            report = [json.loads(line) for line in (out / 'absorption_report.jsonl').read_text().splitlines()]
            summary = [line for line in report if line['type'] == 'summary' and line['block'] == 2]
            self.assertEqual(len(summary), 1)
            self.assertAlmostEqual(summary[0][statistic], logged[0], delta=1e-12)

    def test_sweep_positions_table(self):
        out = self.run_command('sweep_positions', 'sweep', candidates='1,2', baseline='0')
        lines = (out / 'position_sweep.csv').read_text().splitlines()
        self.assertEqual(lines[0], 'placement,prompt_layers,fine_top1,coarse_top1,checksum')
        self.assertEqual(len(lines), 1 + 2)

    def test_data_efficiency_table(self):
        out = self.run_command('data_efficiency', 'efficiency', fractions='1.0,0.5', seeds='0')
        lines = (out / 'data_efficiency.csv').read_text().splitlines()
        self.assertEqual(lines[0], 'fraction,baseline_top1,transhp_top1,baseline_drop,transhp_drop')
        self.assertEqual(len(lines), 1 + 2)

    def test_coarse_ablation_from_file(self):
        _, hierarchy = generate_synthetic(SyntheticConfig(
            coarse_count=3, fine_per_coarse=2, images_per_fine=1, image_size=16, seed=0,
        ))
        merged = dump_hierarchy(merge_coarse(hierarchy, 0, MergeSpec(((0, 1), (2,)))), self.root / 'two.txt')
        out = self.run_command('coarse_ablation', 'ablation', hierarchies=str(merged))
        lines = (out / 'coarse_ablation.csv').read_text().splitlines()
        self.assertEqual([line.split(',')[0] for line in lines], ['hierarchy', 'baseline', 'two'])

    def test_coarse_ablation_needs_hierarchies(self):
        with self.assertRaises(CommandError):
            self.run_command('coarse_ablation', 'none')


@tag('slow')
class DeskScaleTrendTests(SimpleTestCase):
    """Full desk-scale runs; exclude with --exclude-tag slow"""

    SEEDS = (0, 1, 2)

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        records, cls.hierarchy = generate_synthetic(SyntheticConfig(
            coarse_count=8, fine_per_coarse=4, images_per_fine=64 + 16, image_size=32, noise_std=0.1, seed=1,
        ))
        cls.train_records, cls.val_records = split_per_class(records, 16)
        cls.config = desk_config(cls.hierarchy)

    def median_top1(self, variant):
        scores = [
            run_arm(self.config, self.hierarchy, self.train_records, self.val_records,
                    TrainConfig.desk(seed=seed), variant).fine_top1
            for seed in self.SEEDS
        ]
        return float(np.median(scores))

    def test_prompting_beats_baseline_and_unsupervised_prompts(self):
        transhp = self.median_top1('transhp')
        self.assertGreaterEqual(transhp, self.median_top1('baseline') + 0.03)
        self.assertGreaterEqual(transhp, self.median_top1('no_coarse_labels') + 0.02)

    def test_trained_model_absorbs_target_prompt(self):
        model = build_model(self.config, self.hierarchy, 0, dtype=np.float32)
        _, log = train(model, self.train_records, self.val_records, TrainConfig.desk(seed=0))
        final = {row['statistic']: row['value'] for row in log.absorption
                 if row['epoch'] == log.final['epoch'] and row['split'] == 'val'}
        tokens = 1 + self.config.patch_count + 8
        self.assertGreater(final['target_weight.class_token.predicted'], 2 / tokens)
        self.assertGreater(final['ratio.class_token.predicted'], 1.5)

    def test_prompting_loses_less_with_less_data(self):
        table = data_efficiency_protocol(self.config, self.hierarchy, self.train_records, self.val_records,
                                         [1.0, 0.5, 0.25], self.SEEDS, TrainConfig.desk())
        last = table.rows[-1]
        self.assertEqual(last['fraction'], 0.25)
        self.assertLess(last['transhp_drop'], last['baseline_drop'])

    def test_subsampling_keeps_classes_balanced(self):
        subset = subsample_per_class(self.train_records, 0.25, 0)
        self.assertEqual(len(subset), 32 * 16)
