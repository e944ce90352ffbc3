import tempfile
from pathlib import Path

import numpy as np
from django.core.exceptions import ImproperlyConfigured
from django.test import SimpleTestCase

from hierarchy import LabelHierarchy, Level
from hierarchy.presets import cifar100_hierarchy
from imagedata.synthetic import SyntheticConfig, synthetic_hierarchy
from numerics import Tensor, no_grad
from transhp.exceptions import CheckpointError, ContractError
from .checkpoint import load_checkpoint, save_checkpoint
from .config import ModelConfig, PromptingSpec, desk_config, preset_config, specs_for_hierarchy
from .layers import (block_forward, block_params, generic_prompting_forward, patch_embed, patchify,
                     prompting_block_forward)
from .model import (NO_COARSE_LABELS, NO_PROMPTS, assemble, build_model, count_params, make_variant,
                    strip_prompting)


def tiny_hierarchy():
    return synthetic_hierarchy(SyntheticConfig(coarse_count=3, fine_per_coarse=2, image_size=16))


def tiny_config(prompt_layers=(2,), depth=3):
    hierarchy = tiny_hierarchy()
    specs = specs_for_hierarchy(hierarchy, [(layer, 1.0) for layer in prompt_layers]) if prompt_layers else ()
    config = ModelConfig(image_size=16, patch_size=4, embed_dim=16, depth=depth, heads=2,
                         fine_count=6, prompting_specs=specs)
    return config, hierarchy


def random_block(rng, width, hidden):
    shapes = {
        'norm1.gain': (width,), 'norm1.bias': (width,),
        'attn.qkv.weight': (3 * width, width), 'attn.qkv.bias': (3 * width,),
        'attn.proj.weight': (width, width), 'attn.proj.bias': (width,),
        'norm2.gain': (width,), 'norm2.bias': (width,),
        'mlp.fc1.weight': (hidden, width), 'mlp.fc1.bias': (hidden,),
        'mlp.fc2.weight': (width, hidden), 'mlp.fc2.bias': (width,),
    }
    return {name: Tensor(rng.uniform(-0.5, 0.5, size=shape), requires_grad=True) for name, shape in shapes.items()}


def np_layer_norm(x, gain, bias, eps=1e-5):
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + eps) * gain + bias


def np_gelu(x):
    return 0.5 * x * (1.0 + np.tanh(np.sqrt(2.0 / np.pi) * (x + 0.044715 * x ** 3)))


def block_oracle(x, block, heads):
    p = {name: t.data for name, t in block.items()}
    tokens, width = x.shape
    d = width // heads
    h = np_layer_norm(x, p['norm1.gain'], p['norm1.bias'])
    qkv = h @ p['attn.qkv.weight'].T + p['attn.qkv.bias']
    q, k, v = qkv[:, :width], qkv[:, width:2 * width], qkv[:, 2 * width:]
    heads_out, attention = [], []
    for head in range(heads):
        cols = slice(head * d, (head + 1) * d)
        scores = q[:, cols] @ k[:, cols].T / np.sqrt(d)
        e = np.exp(scores - scores.max(axis=1, keepdims=True))
        a = e / e.sum(axis=1, keepdims=True)
        attention.append(a)
        heads_out.append(a @ v[:, cols])
    x1 = x + np.concatenate(heads_out, axis=1) @ p['attn.proj.weight'].T + p['attn.proj.bias']
    h2 = np_layer_norm(x1, p['norm2.gain'], p['norm2.bias'])
    hidden = np_gelu(h2 @ p['mlp.fc1.weight'].T + p['mlp.fc1.bias'])
    return x1 + hidden @ p['mlp.fc2.weight'].T + p['mlp.fc2.bias'], np.stack(attention)


def model_oracle(model, image):
    """Plain-numpy forward of one image: (fine logits, {layer: coarse scores})"""
    config = model.config
    p = {name: t.data for name, t in model.params.items()}
    size, grid = config.patch_size, config.image_size // config.patch_size
    patches = np.array([image[r * size:(r + 1) * size, c * size:(c + 1) * size, :].reshape(-1)
                        for r in range(grid) for c in range(grid)])
    embedded = patches @ p['patch_embed.weight'].T + p['patch_embed.bias']
    x = np.vstack([p['cls_token'][None, :], embedded]) + p['pos_embed']
    n_feature = len(x)
    coarse = {}
    for layer in range(1, config.depth + 1):
        block = block_params(model.params, layer)
        spec = config.spec_at(layer)
        if spec is None:
            x, _ = block_oracle(x, block, config.heads)
            continue
        out, _ = block_oracle(np.vstack([x, p[f'prompting.{layer}.pool']]), block, config.heads)
        x, states = out[:n_feature], out[n_feature:]
        coarse[layer] = (states * p[f'prompting.{layer}.prototypes']).sum(axis=1)
    final = np_layer_norm(x, p['norm.gain'], p['norm.bias'])
    return final[0] @ p['head.weight'].T + p['head.bias'], coarse


class PatchEmbedTests(SimpleTestCase):

    def setUp(self):
        self.config, self.hierarchy = tiny_config()
        self.model = assemble(self.config, self.hierarchy, seed=0)

    def test_output_shape(self):
        image = np.zeros((16, 16, 3))
        self.assertEqual(patch_embed(image, self.model.params, self.config).shape, (17, 16))
        batch = np.zeros((5, 16, 16, 3))
        self.assertEqual(patch_embed(batch, self.model.params, self.config).shape, (5, 17, 16))

    def test_zero_image_gives_bias_rows(self):
        params = self.model.params
        params['pos_embed'].data[:] = 0.0
        params['patch_embed.bias'].data[:] = np.arange(16) * 0.1
        out = patch_embed(np.zeros((16, 16, 3)), params, self.config).data
        np.testing.assert_array_equal(out[1:], np.tile(params['patch_embed.bias'].data, (16, 1)))
        np.testing.assert_array_equal(out[0], params['cls_token'].data)

    def test_one_hot_pixel_selects_embedding_column(self):
        params = self.model.params
        params['pos_embed'].data[:] = 0.0
        image = np.zeros((16, 16, 3))
        # patch (row 1, col 2) -> patch index 6; pixel (3, 1) channel 2 -> flat index 41
        image[1 * 4 + 3, 2 * 4 + 1, 2] = 1.0
        out = patch_embed(image, params, self.config).data
        weight, bias = params['patch_embed.weight'].data, params['patch_embed.bias'].data
        np.testing.assert_allclose(out[1 + 6], weight[:, 41] + bias, atol=1e-15)
        others = np.delete(out[1:], 6, axis=0)
        np.testing.assert_allclose(others, np.tile(bias, (15, 1)), atol=1e-15)

    def test_patch_order(self):
        image = np.arange(16 * 16 * 3, dtype=np.float64).reshape(16, 16, 3)
        patches = patchify(image, 4)
        self.assertEqual(patches.shape, (16, 48))
        self.assertEqual(patches[6, 41], image[7, 9, 2])
        self.assertEqual(patches[15, 0], image[12, 12, 0])

    def test_size_mismatch(self):
        with self.assertRaises(ImproperlyConfigured):
            patch_embed(np.zeros((8, 8, 3)), self.model.params, self.config)


class BlockForwardTests(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(3)
        self.block = random_block(self.rng, 8, 32)

    def test_single_token_attends_to_itself(self):
        out, attention = block_forward(Tensor(self.rng.normal(size=(1, 8))), self.block, heads=2)
        self.assertEqual(out.shape, (1, 8))
        np.testing.assert_array_equal(attention.data, np.ones((2, 1, 1)))

    def test_zero_branches_are_pure_residual(self):
        for name in ('attn.proj.weight', 'attn.proj.bias', 'mlp.fc2.weight', 'mlp.fc2.bias'):
            self.block[name].data[:] = 0.0
        x = self.rng.normal(size=(6, 8))
        out, _ = block_forward(Tensor(x), self.block, heads=2)
        np.testing.assert_array_equal(out.data, x)

    def test_step_by_step_oracle(self):
        x = self.rng.normal(size=(5, 8))
        out, attention = block_forward(Tensor(x), self.block, heads=2)
        expected_out, expected_attention = block_oracle(x, self.block, heads=2)
        np.testing.assert_allclose(out.data, expected_out, atol=1e-10, rtol=0)
        np.testing.assert_allclose(attention.data, expected_attention, atol=1e-10, rtol=0)

    def test_batched_rows_match_single(self):
        x = self.rng.normal(size=(3, 5, 8))
        batched, _ = block_forward(Tensor(x), self.block, heads=2)
        for i in range(3):
            single, _ = block_forward(Tensor(x[i]), self.block, heads=2)
            np.testing.assert_allclose(batched.data[i], single.data, atol=1e-12)

    def test_attention_rows_sum_to_one(self):
        _, attention = block_forward(Tensor(self.rng.normal(size=(2, 7, 8))), self.block, heads=4)
        np.testing.assert_allclose(attention.data.sum(axis=-1), 1.0, atol=1e-6)


class PromptingBlockTests(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(11)
        self.block = random_block(self.rng, 8, 32)
        self.tokens = Tensor(self.rng.normal(size=(17, 8)))

    def test_empty_pool_reduces_to_plain_block(self):
        features, states, attention = prompting_block_forward(self.tokens, Tensor(np.zeros((0, 8))), self.block, 2)
        plain, plain_attention = block_forward(self.tokens, self.block, 2)
        np.testing.assert_array_equal(features.data, plain.data)
        np.testing.assert_array_equal(attention.data, plain_attention.data)
        self.assertEqual(states.shape, (0, 8))

    def test_shapes(self):
        pool = Tensor(self.rng.normal(size=(20, 8)))
        features, states, attention = prompting_block_forward(self.tokens, pool, self.block, 2)
        self.assertEqual(features.shape, (17, 8))
        self.assertEqual(states.shape, (20, 8))
        self.assertEqual(attention.shape, (2, 37, 37))

    def test_masked_zero_prompts_match_plain_block(self):
        pool = Tensor(np.zeros((5, 8)))
        features, _, attention = prompting_block_forward(self.tokens, pool, self.block, 2, mask_prompts=True)
        plain, _ = block_forward(self.tokens, self.block, 2)
        np.testing.assert_allclose(features.data, plain.data, atol=1e-8, rtol=0)
        np.testing.assert_array_equal(attention.data[:, :, 17:], 0.0)

    def test_prompts_change_features_when_visible(self):
        pool = Tensor(self.rng.normal(size=(5, 8)))
        features, _, _ = prompting_block_forward(self.tokens, pool, self.block, 2)
        plain, _ = block_forward(self.tokens, self.block, 2)
        self.assertGreater(np.abs(features.data - plain.data).max(), 1e-6)

    def test_generic_prompting_forwards_prompt(self):
        blocks = [self.block, random_block(self.rng, 8, 32)]
        prompt = Tensor(self.rng.normal(size=(8,)))
        features, state, attentions = generic_prompting_forward(self.tokens, prompt, blocks, 2)
        self.assertEqual(features.shape, (17, 8))
        self.assertEqual(state.shape, (1, 8))
        self.assertEqual([a.shape for a in attentions], [(2, 18, 18), (2, 18, 18)])


class ConfigTests(SimpleTestCase):

    def test_cifar100_preset(self):
        config = preset_config('cifar100', cifar100_hierarchy())
        self.assertEqual(config.prompting_specs, (PromptingSpec(9, 0, 20, 1.0),))
        self.assertEqual((config.depth, config.embed_dim, config.heads, config.patch_count), (12, 384, 6, 196))

    def test_deepfashion_preset_puts_coarser_level_lower(self):
        hierarchy = LabelHierarchy(fine_count=8, levels=(
            Level('top', 2, (0, 0, 0, 0, 1, 1, 1, 1)),
            Level('mid', 4, (0, 0, 1, 1, 2, 2, 3, 3)),
        ))
        specs = preset_config('deepfashion', hierarchy).prompting_specs
        self.assertEqual([(s.layer_index, s.coarse_count, s.balance) for s in specs], [(7, 2, 0.5), (9, 4, 1.0)])

    def test_imagenet_balances(self):
        specs = preset_config('imagenet', cifar100_hierarchy()).prompting_specs
        self.assertEqual([s.layer_index for s in specs], list(range(1, 12)))
        self.assertEqual([s.balance for s in specs], [0.1] * 5 + [0.15] * 4 + [1.0, 1.0])

    def test_desk_config(self):
        config = desk_config(synthetic_hierarchy(SyntheticConfig()))
        self.assertEqual((config.image_size, config.patch_count, config.embed_dim, config.depth, config.heads),
                         (32, 64, 64, 8, 4))
        self.assertEqual(config.prompting_specs, (PromptingSpec(5, 0, 8, 1.0),))

    def test_layer_beyond_depth(self):
        config, hierarchy = tiny_config(prompt_layers=(4,))
        with self.assertRaises(ImproperlyConfigured):
            config.validate(hierarchy)

    def test_repeated_layer(self):
        config, hierarchy = tiny_config()
        config = config.with_specs([PromptingSpec(2, 0, 3), PromptingSpec(2, 0, 3)])
        with self.assertRaises(ImproperlyConfigured):
            config.validate(hierarchy)

    def test_coarse_count_must_match_level(self):
        config, hierarchy = tiny_config()
        with self.assertRaises(ImproperlyConfigured):
            config.with_specs([PromptingSpec(2, 0, 4)]).validate(hierarchy)

    def test_indivisible_patch(self):
        with self.assertRaises(ImproperlyConfigured):
            ModelConfig(image_size=30, patch_size=4).validate()

    def test_placement_violation_only_warns(self):
        config = ModelConfig(depth=4, prompting_specs=(PromptingSpec(1, 1, 8), PromptingSpec(3, 0, 2)))
        with self.assertLogs('vision.config', level='WARNING') as logs:
            config.validate()
        self.assertIn('coarser', logs.output[0])

    def test_text_round_trip(self):
        config = ModelConfig(depth=4, prompting_specs=(PromptingSpec(1, 0, 2, 0.15), PromptingSpec(3, 1, 8, 1.0)))
        self.assertEqual(ModelConfig.from_text(config.to_text()), config)


class ModelTests(SimpleTestCase):

    def setUp(self):
        self.config, self.hierarchy = tiny_config()
        self.images = np.random.default_rng(5).random((4, 16, 16, 3))

    def test_same_seed_same_parameters(self):
        first = assemble(self.config, self.hierarchy, seed=7)
        second = assemble(self.config, self.hierarchy, seed=7)
        self.assertEqual(list(first.params), list(second.params))
        for name in first.params:
            np.testing.assert_array_equal(first.params[name].data, second.params[name].data)

    def test_prompting_shares_backbone_draws(self):
        transhp = assemble(self.config, self.hierarchy, seed=7)
        baseline = assemble(self.config.with_specs(()), self.hierarchy, seed=7)
        for name, param in baseline.params.items():
            np.testing.assert_array_equal(param.data, transhp.params[name].data)

    def test_sequence_length_trace(self):
        model = assemble(self.config, self.hierarchy, seed=0)
        with no_grad():
            output = model.forward(self.images, retain_attention=True)
        self.assertEqual(output.sequence_lengths, [17, 20, 17])
        self.assertEqual(output.attention[2].shape, (4, 2, 20, 20))
        self.assertEqual(output.attention[3].shape, (4, 2, 17, 17))
        self.assertEqual(output.coarse_logits[2].shape, (4, 3))
        self.assertEqual(output.fine_logits.shape, (4, 6))

    def test_cifar_preset_trace(self):
        config = preset_config('cifar100', cifar100_hierarchy(), image_size=16, patch_size=4, embed_dim=12, heads=2)
        model = assemble(config, cifar100_hierarchy(), seed=0)
        with no_grad():
            output = model.forward(self.images[0])
        self.assertEqual(output.sequence_lengths, [17] * 8 + [37] + [17] * 3)
        self.assertEqual(output.fine_logits.shape, (100,))
        self.assertEqual(output.coarse_logits[9].shape, (20,))

    def test_attention_rows_sum_to_one(self):
        model = assemble(self.config, self.hierarchy, seed=1)
        with no_grad():
            output = model.forward(self.images, retain_attention=True)
        for attention in output.attention.values():
            np.testing.assert_allclose(attention.sum(axis=-1), 1.0, atol=1e-6)

    def test_baseline_has_no_coarse_logits(self):
        model = assemble(self.config.with_specs(()), self.hierarchy, seed=0)
        output = model.forward(self.images)
        self.assertEqual(output.coarse_logits, {})
        self.assertEqual(output.sequence_lengths, [17, 17, 17])

    def test_stripped_model_is_bitwise_baseline(self):
        stripped = strip_prompting(assemble(self.config, self.hierarchy, seed=3))
        baseline = assemble(self.config.with_specs(()), self.hierarchy, seed=3)
        np.testing.assert_array_equal(stripped.forward(self.images).fine_logits.data,
                                      baseline.forward(self.images).fine_logits.data)

    def test_repeat_forward_is_identical(self):
        model = assemble(self.config, self.hierarchy, seed=4)
        first = model.forward(self.images).fine_logits.data
        np.testing.assert_array_equal(model.forward(self.images).fine_logits.data, first)

    def test_batched_matches_single_images(self):
        model = assemble(self.config, self.hierarchy, seed=4)
        batched = model.forward(self.images)
        for i in range(len(self.images)):
            single = model.forward(self.images[i])
            np.testing.assert_allclose(batched.fine_logits.data[i], single.fine_logits.data, atol=1e-12)
            np.testing.assert_allclose(batched.coarse_logits[2].data[i], single.coarse_logits[2].data, atol=1e-12)

    def test_single_image_logits_shape(self):
        model = assemble(self.config, self.hierarchy, seed=4)
        output = model.forward(self.images[0])
        self.assertEqual(output.fine_logits.shape, (6,))
        self.assertEqual(output.coarse_logits[2].shape, (3,))

    def test_matches_numpy_reference(self):
        for config in (self.config, tiny_config(prompt_layers=(1, 3))[0], self.config.with_specs(())):
            model = assemble(config, self.hierarchy, seed=11)
            with no_grad():
                batched = model.forward(self.images)
                for i, image in enumerate(self.images):
                    fine, coarse = model_oracle(model, image)
                    single = model.forward(image)
                    np.testing.assert_allclose(single.fine_logits.data, fine, atol=1e-6)
                    np.testing.assert_allclose(batched.fine_logits.data[i], fine, atol=1e-6)
                    self.assertEqual(set(single.coarse_logits), set(coarse))
                    for layer, scores in coarse.items():
                        np.testing.assert_allclose(single.coarse_logits[layer].data, scores, atol=1e-6)
                        np.testing.assert_allclose(batched.coarse_logits[layer].data[i], scores, atol=1e-6)


class VariantTests(SimpleTestCase):

    def setUp(self):
        self.config, self.hierarchy = tiny_config()
        self.model = assemble(self.config, self.hierarchy, seed=0)
        self.images = np.random.default_rng(9).random((2, 16, 16, 3))

    def test_no_coarse_labels_drops_prototypes(self):
        variant = make_variant(self.model, NO_COARSE_LABELS)
        difference = count_params(self.model)['total'] - count_params(variant)['total']
        self.assertEqual(difference, 3 * 16)
        output = variant.forward(self.images)
        self.assertEqual(output.coarse_logits, {})
        self.assertEqual(output.sequence_lengths, [17, 20, 17])
        self.assertEqual(variant.config.prompting_specs[0].balance, 0.0)
        self.assertEqual(output.fine_logits.shape, (2, 6))

    def test_no_prompts_scores_class_token(self):
        variant = make_variant(self.model, NO_PROMPTS)
        output = variant.forward(self.images)
        self.assertTrue(all(length <= 17 for length in output.sequence_lengths))
        self.assertEqual(output.coarse_logits[2].shape, (2, 3))
        self.assertEqual(output.fine_logits.shape, (2, 6))
        self.assertNotIn('prompting.2.pool', variant.params)

    def test_variant_copies_parameters(self):
        variant = make_variant(self.model, NO_PROMPTS)
        variant.params['cls_token'].data[:] = 0.0
        self.assertGreater(np.abs(self.model.params['cls_token'].data).max(), 0.0)

    def test_promptless_model_has_no_variants(self):
        baseline = assemble(self.config.with_specs(()), self.hierarchy, seed=0)
        with self.assertRaises(ContractError):
            make_variant(baseline, NO_PROMPTS)

    def test_build_model_arms(self):
        self.assertEqual(build_model(self.config, self.hierarchy, 0, 'baseline').config.prompting_specs, ())
        self.assertEqual(build_model(self.config, self.hierarchy, 0, NO_PROMPTS).variant, NO_PROMPTS)


class ParameterCountTests(SimpleTestCase):

    def test_single_level_formula(self):
        hierarchy = LabelHierarchy(fine_count=20, levels=(Level('coarse', 20, tuple(range(20))),))
        config = ModelConfig(image_size=8, patch_size=4, embed_dim=384, depth=1, heads=6, fine_count=20,
                             prompting_specs=(PromptingSpec(1, 0, 20, 1.0),))
        self.assertEqual(count_params(assemble(config, hierarchy, seed=0))['added_by_prompting'], 15_360)

    def test_baseline_adds_nothing(self):
        config, hierarchy = tiny_config(prompt_layers=())
        self.assertEqual(count_params(assemble(config, hierarchy, seed=0))['added_by_prompting'], 0)

    def test_desk_config_difference(self):
        hierarchy = synthetic_hierarchy(SyntheticConfig())
        config = desk_config(hierarchy)
        transhp = count_params(assemble(config, hierarchy, seed=0, dtype=np.float32))
        baseline = count_params(assemble(config.with_specs(()), hierarchy, seed=0, dtype=np.float32))
        self.assertEqual(transhp['added_by_prompting'], 1024)
        self.assertEqual(transhp['total'] - baseline['total'], 1024)


class CheckpointTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.path = Path(self.tmp.name) / 'model.ckpt'
        config, hierarchy = tiny_config()
        self.model = assemble(config, hierarchy, seed=2)

    def test_round_trip(self):
        save_checkpoint(self.model, self.path)
        loaded = load_checkpoint(self.path)
        self.assertEqual(loaded.config, self.model.config)
        self.assertEqual(loaded.hierarchy, self.model.hierarchy)
        self.assertEqual(loaded.seed, 2)
        self.assertEqual(loaded.dtype, np.float64)
        self.assertEqual(list(loaded.params), list(self.model.params))
        for name, param in self.model.params.items():
            np.testing.assert_array_equal(loaded.params[name].data, param.data)

    def test_float32_model_keeps_float32_payloads(self):
        config, hierarchy = tiny_config()
        model = assemble(config, hierarchy, seed=2, dtype=np.float32)
        single = save_checkpoint(model, self.path).stat().st_size
        double = save_checkpoint(self.model, Path(self.tmp.name) / 'double.ckpt').stat().st_size
        values = sum(param.size for param in model.params.values())
        self.assertEqual(double - single, 4 * values)
        loaded = load_checkpoint(self.path)
        self.assertEqual(loaded.dtype, np.float32)
        for name, param in model.params.items():
            np.testing.assert_array_equal(loaded.params[name].data, param.data)

    def test_dtype_override(self):
        save_checkpoint(self.model, self.path)
        loaded = load_checkpoint(self.path, dtype=np.float32)
        self.assertEqual(loaded.dtype, np.float32)
        np.testing.assert_array_equal(loaded.params['head.weight'].data,
                                      self.model.params['head.weight'].data.astype(np.float32))

    def test_variant_round_trip(self):
        save_checkpoint(make_variant(self.model, NO_PROMPTS), self.path)
        self.assertEqual(load_checkpoint(self.path).variant, NO_PROMPTS)

    def test_identical_models_give_identical_files(self):
        other = assemble(self.model.config, self.model.hierarchy, seed=2)
        first = save_checkpoint(self.model, self.path).read_bytes()
        second = save_checkpoint(other, Path(self.tmp.name) / 'again.ckpt').read_bytes()
        self.assertEqual(first, second)

    def test_bad_magic(self):
        self.path.write_bytes(b'NOTACKPT' + bytes(16))
        with self.assertRaises(CheckpointError):
            load_checkpoint(self.path)

    def test_truncated(self):
        data = save_checkpoint(self.model, self.path).read_bytes()
        self.path.write_bytes(data[:-3])
        with self.assertRaises(CheckpointError):
            load_checkpoint(self.path)

    def test_block_params_view(self):
        block = block_params(self.model.params, 1)
        self.assertEqual(len(block), 12)
        self.assertIs(block['attn.qkv.weight'], self.model.params['blocks.1.attn.qkv.weight'])
