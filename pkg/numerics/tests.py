import numpy as np
from django.test import SimpleTestCase

from transhp.exceptions import ContractError, DimensionError, NumericError
from .batching import batch_bounds, map_batches
from .functional import (broadcast_to, concat, cross_entropy, diagonal, gelu,
                         layer_norm, linear, matmul, softmax)
from .gradcheck import check_parameters, gradient_check
from .tensor import Tensor, no_grad


def leaf(array):
    return Tensor(np.asarray(array, dtype=np.float64), requires_grad=True)


class MatmulTests(SimpleTestCase):

    def test_identity(self):
        out = matmul(Tensor([[1.0, 0.0], [0.0, 1.0]]), Tensor([[3.0, 4.0], [5.0, 6.0]]))
        np.testing.assert_array_equal(out.data, [[3, 4], [5, 6]])

    def test_dot_product(self):
        out = matmul(Tensor([[1.0, 2.0]]), Tensor([[3.0], [4.0]]))
        self.assertEqual(out.data.tolist(), [[11.0]])

    def test_against_triple_loop(self):
        rng = np.random.default_rng(0)
        a, b = rng.uniform(-1, 1, (4, 5)), rng.uniform(-1, 1, (5, 3))
        expected = np.zeros((4, 3))
        for i in range(4):
            for j in range(3):
                for k in range(5):
                    expected[i, j] += a[i, k] * b[k, j]
        out = matmul(Tensor(a), Tensor(b)).data
        np.testing.assert_allclose(out, expected, rtol=1e-10, atol=1e-15)

    def test_shape_mismatch_names_both_shapes(self):
        with self.assertRaises(DimensionError) as ctx:
            matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 2))))
        self.assertIn('(2, 3)', str(ctx.exception))
        self.assertIn('(4, 2)', str(ctx.exception))

    def test_gradient_flows_to_both_operands(self):
        rng = np.random.default_rng(1)
        a, b = leaf(rng.uniform(-1, 1, (3, 4))), leaf(rng.uniform(-1, 1, (4, 2)))
        matmul(a, b).sum().backward()
        np.testing.assert_allclose(a.grad, np.ones((3, 2)) @ b.data.T)
        np.testing.assert_allclose(b.grad, a.data.T @ np.ones((3, 2)))

    def test_batched_operand_against_shared_weight(self):
        rng = np.random.default_rng(2)
        w = rng.uniform(-1, 1, (4, 3))
        x = Tensor(rng.uniform(-1, 1, (2, 5, 4)))
        result = gradient_check(lambda t: (matmul(x, t) * matmul(x, t)).sum(), leaf(w))
        self.assertTrue(result.passed, result)


class SoftmaxTests(SimpleTestCase):

    def test_symmetric_input(self):
        np.testing.assert_allclose(softmax(Tensor([0.0, 0.0, 0.0])).data, [1 / 3] * 3)

    def test_large_logit_does_not_overflow(self):
        out = softmax(Tensor([1000.0, 0.0])).data
        self.assertTrue(np.all(np.isfinite(out)))
        self.assertAlmostEqual(out[0], 1.0)
        self.assertAlmostEqual(out[1], 0.0)

    def test_direct_formula(self):
        x = np.random.default_rng(3).uniform(-1, 1, 7)
        expected = np.exp(x) / np.exp(x).sum()
        np.testing.assert_allclose(softmax(Tensor(x)).data, expected, rtol=0, atol=1e-12)

    def test_slices_sum_to_one(self):
        x = np.random.default_rng(4).normal(size=(3, 4, 9)) * 10
        out = softmax(Tensor(x), axis=-1).data
        np.testing.assert_allclose(out.sum(axis=-1), 1.0, atol=1e-6)
        self.assertTrue(np.all((out >= 0) & (out <= 1)))

    def test_non_finite_input(self):
        with self.assertRaises(NumericError):
            softmax(Tensor([0.0, np.nan]))

    def test_masked_entries_get_zero(self):
        out = softmax(Tensor([1.0, 2.0, 3.0]), mask=np.array([False, False, True])).data
        self.assertEqual(out[2], 0.0)
        np.testing.assert_allclose(out[:2], softmax(Tensor([1.0, 2.0])).data)


class LayerNormTests(SimpleTestCase):

    def test_constant_token(self):
        out = layer_norm(Tensor([5.0, 5.0, 5.0, 5.0]), Tensor(np.ones(4)), Tensor(np.zeros(4)))
        np.testing.assert_array_equal(out.data, np.zeros(4))

    def test_already_normalised(self):
        out = layer_norm(Tensor([1.0, -1.0]), Tensor(np.ones(2)), Tensor(np.zeros(2)), eps=1e-12)
        np.testing.assert_allclose(out.data, [1.0, -1.0], atol=1e-10)

    def test_explicit_formula(self):
        rng = np.random.default_rng(5)
        x, g, b = rng.uniform(-1, 1, 6), rng.uniform(-1, 1, 6), rng.uniform(-1, 1, 6)
        expected = (x - x.mean()) / np.sqrt(x.var() + 1e-5) * g + b
        out = layer_norm(Tensor(x), Tensor(g), Tensor(b)).data
        np.testing.assert_allclose(out, expected, rtol=0, atol=1e-10)

    def test_shape_mismatch(self):
        with self.assertRaises(DimensionError):
            layer_norm(Tensor(np.zeros(4)), Tensor(np.ones(3)), Tensor(np.zeros(3)))


class CrossEntropyTests(SimpleTestCase):

    def test_single_class_is_zero(self):
        self.assertEqual(cross_entropy(Tensor([2.5]), 0).item(), 0.0)

    def test_uniform_two_class(self):
        self.assertAlmostEqual(cross_entropy(Tensor([0.0, 0.0]), 0).item(), np.log(2), places=14)

    def test_direct_formula(self):
        x = np.random.default_rng(6).uniform(-1, 1, 5)
        expected = -np.log(np.exp(x[3]) / np.exp(x).sum())
        self.assertAlmostEqual(cross_entropy(Tensor(x), 3).item(), expected, delta=1e-12)

    def test_gradient_is_softmax_minus_one_hot(self):
        x = leaf(np.random.default_rng(7).uniform(-1, 1, 4))
        cross_entropy(x, 1).backward()
        expected = np.exp(x.data) / np.exp(x.data).sum()
        expected[1] -= 1.0
        np.testing.assert_allclose(x.grad, expected, atol=1e-14)

    def test_batch_mean(self):
        x = np.random.default_rng(8).uniform(-1, 1, (3, 4))
        targets = [0, 3, 2]
        single = [cross_entropy(Tensor(row), t).item() for row, t in zip(x, targets)]
        self.assertAlmostEqual(cross_entropy(Tensor(x), targets).item(), np.mean(single), places=14)

    def test_index_out_of_range(self):
        with self.assertRaises(IndexError):
            cross_entropy(Tensor([0.0, 1.0]), 2)


class BackwardTests(SimpleTestCase):

    def test_sum_gives_ones(self):
        x = leaf(np.random.default_rng(9).normal(size=(2, 3, 4)))
        x.sum().backward()
        np.testing.assert_array_equal(x.grad, np.ones((2, 3, 4)))

    def test_half_square_gives_identity(self):
        x = leaf(np.random.default_rng(10).normal(size=5))
        ((x * x).sum() / 2.0).backward()
        np.testing.assert_allclose(x.grad, x.data)

    def test_repeated_calls_accumulate(self):
        x = leaf([1.0, 2.0])
        (x * 3.0).sum().backward()
        (x * 3.0).sum().backward()
        np.testing.assert_array_equal(x.grad, [6.0, 6.0])

    def test_additivity(self):
        rng = np.random.default_rng(11)
        x = leaf(rng.uniform(-1, 1, 6))

        def first(t):
            return softmax(t)[0] * 2.0

        def second(t):
            return gelu(t).sum()

        first(x).backward()
        g1 = x.grad.copy()
        x.zero_grad()
        second(x).backward()
        g2 = x.grad.copy()
        x.zero_grad()
        (first(x) + second(x)).backward()
        np.testing.assert_allclose(x.grad, g1 + g2, rtol=0, atol=1e-10)

    def test_non_scalar_loss(self):
        with self.assertRaises(ContractError):
            (leaf([1.0, 2.0]) * 2.0).backward()

    def test_no_grad_records_nothing(self):
        x = leaf([1.0])
        with no_grad():
            y = x * 2.0
        self.assertFalse(y.requires_grad)
        self.assertIsNone(y.creator)

    def test_shared_subexpression(self):
        x = leaf([0.5, -0.25])
        y = x * x
        (y + y * 2.0).sum().backward()
        np.testing.assert_allclose(x.grad, 6.0 * x.data)


class GradientCheckTests(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(12)

    def random(self, *shape):
        return leaf(self.rng.uniform(-1, 1, shape))

    def test_linear_function_is_exact(self):
        result = gradient_check(lambda t: t.sum(), self.random(3, 2))
        self.assertLessEqual(result.max_relative_error, 1e-10)

    def test_softmax_pick_first(self):
        result = gradient_check(lambda t: softmax(t)[0], self.random(3))
        self.assertTrue(result.passed)

    def test_corrupted_gradient_is_located(self):
        x = self.random(4)
        corrupted = gradient_check(lambda t: t.sum(), x, analytic=np.ones(4) + np.eye(4)[2] * 0.1)
        self.assertFalse(corrupted.passed)
        self.assertEqual(corrupted.worst_coordinate, (2,))
        self.assertAlmostEqual(corrupted.max_relative_error, 0.1 / 1.1, places=8)

    def test_every_differentiable_operation(self):
        w = Tensor(self.rng.uniform(-1, 1, (3, 4)))
        g, b = Tensor(self.rng.uniform(-1, 1, 4)), Tensor(self.rng.uniform(-1, 1, 4))
        pool = Tensor(self.rng.uniform(-1, 1, (2, 4)))
        cases = {
            'matmul': (lambda t: matmul(t, w.transpose()).sum(), (2, 4)),
            'linear': (lambda t: (linear(t, w) * linear(t, w)).sum(), (2, 4)),
            'softmax': (lambda t: (softmax(t, axis=-1) * w).sum(), (3, 4)),
            'layer_norm': (lambda t: (layer_norm(t, g, b) * layer_norm(t, g, b)).sum(), (3, 4)),
            'gelu': (lambda t: (gelu(t) * w).sum(), (3, 4)),
            'cross_entropy': (lambda t: cross_entropy(t, [1, 0, 3]), (3, 4)),
            'concat': (lambda t: (concat([t, pool], axis=0) * concat([pool, t], axis=0)).sum(), (2, 4)),
            'broadcast': (lambda t: (broadcast_to(t, (3, 2, 4)) * broadcast_to(t, (3, 2, 4))).sum(), (2, 4)),
            'diagonal': (lambda t: (diagonal(matmul(t, t.transpose())) * 1.5).sum(), (3, 4)),
            'divide': (lambda t: (t / (t * t + 2.0)).sum(), (3, 4)),
            'exp_log': (lambda t: ((t * t + 1.0).log() + t.exp()).sum(), (3, 4)),
            'reshape_transpose': (lambda t: (t.reshape(4, 3).transpose() * w).sum(), (3, 4)),
            'mean_axis': (lambda t: (t.mean(axis=0) * t.mean(axis=0)).sum(), (3, 4)),
        }
        for name, (fn, shape) in cases.items():
            with self.subTest(op=name):
                result = gradient_check(fn, self.random(*shape), h=1e-5, tolerance=1e-6)
                self.assertTrue(result.passed, f"{name}: {result}")

    def test_check_parameters(self):
        w = self.random(2, 3)
        x = Tensor(self.rng.uniform(-1, 1, (4, 3)))
        results = check_parameters(lambda: cross_entropy(linear(x, w), [0, 1, 1, 0]), {'w': w})
        self.assertTrue(results['w'].passed)


class BatchingTests(SimpleTestCase):

    def test_bounds_cover_count(self):
        self.assertEqual(batch_bounds(7, 3), [(0, 3), (3, 6), (6, 7)])
        self.assertEqual(batch_bounds(0, 3), [])

    def test_bad_batch_size(self):
        with self.assertRaises(ValueError):
            batch_bounds(4, 0)

    def test_threaded_results_keep_batch_order(self):
        values = np.arange(23.0)
        serial = map_batches(lambda start, stop: values[start:stop].sum(), 23, 4)
        threaded = map_batches(lambda start, stop: values[start:stop].sum(), 23, 4, workers=3)
        self.assertEqual(threaded, serial)
        self.assertEqual(len(threaded), 6)

    def test_workers_record_no_graph(self):
        x = leaf([1.0, 2.0, 3.0, 4.0])
        outputs = map_batches(lambda start, stop: x[start:stop] * 2.0, 4, 1, workers=2)
        self.assertFalse(any(out.requires_grad for out in outputs))
