import math
from types import SimpleNamespace

import numpy as np
from django.test import SimpleTestCase

from hierarchy.presets import cifar100_hierarchy
from numerics import Tensor
from numerics.gradcheck import check_parameters
from transhp.exceptions import ContractError, DimensionError
from vision.config import preset_config
from vision.model import assemble
from vision.tests import tiny_config
from .heads import coarse_scores
from .losses import coarse_loss, model_loss, total_loss


class CoarseScoreTests(SimpleTestCase):

    def test_orthonormal_rows(self):
        eye = Tensor(np.eye(4))
        np.testing.assert_array_equal(coarse_scores(eye, eye).data, np.ones(4))

    def test_single_prompt_is_dot_product(self):
        p, w = np.array([[1.0, 2.0, 3.0]]), np.array([[4.0, -1.0, 0.5]])
        self.assertEqual(coarse_scores(Tensor(p), Tensor(w)).data.tolist(), [3.5])

    def test_matches_full_product_diagonal(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            p, w = rng.normal(size=(5, 7)), rng.normal(size=(5, 7))
            np.testing.assert_array_equal(coarse_scores(Tensor(p), Tensor(w)).data, np.diag(p @ w.T))

    def test_batched_states(self):
        rng = np.random.default_rng(1)
        p, w = rng.normal(size=(3, 4, 6)), rng.normal(size=(4, 6))
        scores = coarse_scores(Tensor(p), Tensor(w)).data
        self.assertEqual(scores.shape, (3, 4))
        for b in range(3):
            np.testing.assert_allclose(scores[b], np.diag(p[b] @ w.T), atol=1e-12)

    def test_shape_mismatch(self):
        with self.assertRaises(DimensionError):
            coarse_scores(Tensor(np.zeros((3, 4))), Tensor(np.zeros((2, 4))))


class CoarseLossTests(SimpleTestCase):

    def test_single_class_is_zero(self):
        self.assertEqual(coarse_loss(Tensor([2.5]), 0).item(), 0.0)

    def test_uniform_scores(self):
        self.assertAlmostEqual(coarse_loss(Tensor(np.full(20, 0.3)), 7).item(), math.log(20), places=12)

    def test_direct_formula(self):
        scores = np.random.default_rng(2).normal(size=6)
        expected = -np.log(np.exp(scores[4]) / np.exp(scores).sum())
        self.assertAlmostEqual(coarse_loss(Tensor(scores), 4).item(), expected, delta=1e-12)

    def test_never_negative(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            self.assertGreaterEqual(coarse_loss(Tensor(rng.normal(size=5) * 10), 2).item(), 0.0)

    def test_label_out_of_range(self):
        with self.assertRaises(IndexError):
            coarse_loss(Tensor(np.zeros(3)), 3)


def fake_output(rng, layers, batch=3, fine=6, coarse=4):
    return SimpleNamespace(
        fine_logits=Tensor(rng.normal(size=(batch, fine)), requires_grad=True),
        coarse_logits={layer: Tensor(rng.normal(size=(batch, coarse)), requires_grad=True) for layer in layers},
    )


class TotalLossTests(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(4)
        self.fine = np.array([0, 5, 2])
        self.coarse = np.array([1, 3, 0])

    def test_zero_balance_is_fine_loss(self):
        output = fake_output(self.rng, [2, 4])
        breakdown = total_loss(output, self.fine, {2: self.coarse, 4: self.coarse}, {2: 0.0, 4: 0.0})
        self.assertEqual(breakdown.total.item(), breakdown.fine_loss.item())

    def test_unit_balance_adds_terms(self):
        output = fake_output(self.rng, [3])
        breakdown = total_loss(output, self.fine, {3: self.coarse}, {3: 1.0})
        fine = coarse_loss(output.fine_logits, self.fine).item()
        coarse = coarse_loss(output.coarse_logits[3], self.coarse).item()
        self.assertEqual(breakdown.fine_loss.item(), fine)
        self.assertEqual(breakdown.coarse_losses[3].item(), coarse)
        self.assertEqual(breakdown.total.item(), fine + coarse)

    def test_linear_in_each_balance(self):
        output = fake_output(self.rng, [1, 2])
        labels = {1: self.coarse, 2: self.coarse}
        totals = [total_loss(output, self.fine, labels, {1: lam, 2: 0.5}).total.item() for lam in (0.0, 0.5, 2.0)]
        slope = total_loss(output, self.fine, labels, {1: 1.0, 2: 0.5}).coarse_losses[1].item()
        self.assertAlmostEqual((totals[1] - totals[0]) / 0.5, slope, delta=1e-12)
        self.assertAlmostEqual((totals[2] - totals[0]) / 2.0, slope, delta=1e-12)

    def test_imagenet_balances_in_breakdown(self):
        specs = preset_config('imagenet', cifar100_hierarchy()).prompting_specs
        layers = [spec.layer_index for spec in specs]
        output = fake_output(self.rng, layers)
        breakdown = total_loss(output, self.fine, {layer: self.coarse for layer in layers},
                               {spec.layer_index: spec.balance for spec in specs})
        self.assertEqual([breakdown.lambdas[layer] for layer in layers], [0.1] * 5 + [0.15] * 4 + [1.0, 1.0])
        expected = breakdown.fine_loss.item()
        for layer in layers:
            expected = expected + breakdown.lambdas[layer] * breakdown.coarse_losses[layer].item()
        self.assertEqual(breakdown.total.item(), expected)

    def test_label_count_mismatch(self):
        output = fake_output(self.rng, [2, 4])
        with self.assertRaises(ContractError):
            total_loss(output, self.fine, {2: self.coarse}, {2: 1.0, 4: 1.0})

    def test_breakdown_floats(self):
        output = fake_output(self.rng, [2])
        values = total_loss(output, self.fine, {2: self.coarse}, {2: 1.0}).as_floats()
        self.assertEqual(set(values), {'fine_loss', 'total', 'coarse_loss.2'})


class ModelGradientTests(SimpleTestCase):
    """Tiny model: H=16, P=4, C=16, L=3, h=2, prompting at layer 2 with M=3, 6 fine classes, fp64"""

    def setUp(self):
        config, hierarchy = tiny_config()
        self.model = assemble(config, hierarchy, seed=0, dtype=np.float64)
        rng = np.random.default_rng(8)
        self.images = rng.random((2, 16, 16, 3))
        self.labels = np.array([1, 4])

    def loss(self):
        return model_loss(self.model, self.model.forward(self.images), self.labels).total

    def test_model_loss_uses_hierarchy(self):
        breakdown = model_loss(self.model, self.model.forward(self.images), self.labels)
        self.assertEqual(list(breakdown.coarse_losses), [2])
        self.assertEqual(breakdown.lambdas, {2: 1.0})

    def test_prompt_parameters_receive_gradient(self):
        self.model.zero_grad()
        self.loss().backward()
        for name in ('prompting.2.pool', 'prompting.2.prototypes', 'blocks.1.attn.qkv.weight'):
            self.assertGreater(np.abs(self.model.params[name].grad).max(), 0.0, name)

    def test_every_parameter_matches_finite_differences(self):
        results = check_parameters(self.loss, self.model.params, h=1e-5, tolerance=1e-6)
        self.assertEqual(set(results), set(self.model.params))
        failures = {name: r.max_relative_error for name, r in results.items() if not r.passed}
        self.assertEqual(failures, {})
