import unittest

import numpy as np

from iada.exceptions import InvalidArgumentError, ResourceError
from iada.forge.domains import (
    DomainSpec,
    area_weights,
    compressed_rows,
    deform_image,
    deform_images,
    make_domain_sequence,
    sweep_start_factor,
)
from iada.forge.streams import LabeledBatch, UnlabeledBatch, realize_domain


def base_batch(count=20, seed=0):
    rng = np.random.default_rng(seed)
    images = rng.uniform(0.0, 1.0, size=(count, 28, 28)).astype(np.float32)
    labels = np.arange(count) % 10
    return LabeledBatch(images, labels)


class test_deformation(unittest.TestCase):
    def test_area_weights_rows_sum_to_one(self):
        """ every output row of the resampling matrix is a convex combination """
        for dst in (1, 7, 14, 19, 27):
            weights = area_weights(28, dst)
            self.assertEqual(weights.shape, (dst, 28))
            np.testing.assert_allclose(weights.sum(axis=1), np.ones(dst), atol=1e-9)
            self.assertTrue((weights >= 0).all())

    def test_identity_factor(self):
        """ factor 1 returns an equal copy """
        images = base_batch().images
        out = deform_images(images, 1.0)
        np.testing.assert_array_equal(out, images)
        self.assertIsNot(out, images)

    def test_compression_is_centred(self):
        """ a white image compressed by half fills the 14 middle rows """
        image = np.ones((28, 28), dtype=np.float32)
        out = deform_image(image, 0.5)
        self.assertEqual(compressed_rows(28, 0.5), 14)
        np.testing.assert_allclose(out[7:21], 1.0, atol=1e-6)
        self.assertEqual(out[:7].sum(), 0.0)
        self.assertEqual(out[21:].sum(), 0.0)

    def test_mass_scales_with_rows(self):
        """ area resampling keeps column means, so total intensity scales by rows / height """
        images = base_batch(4).images
        out = deform_images(images, 0.5)
        np.testing.assert_allclose(out.sum(axis=(1, 2)), images.sum(axis=(1, 2)) * 14 / 28, rtol=1e-4)
        self.assertTrue((out >= 0).all() and (out <= 1).all())

    def test_bad_factor(self):
        """ factors outside (0, 1] are rejected """
        images = base_batch(2).images
        for factor in (0.0, -0.2, 1.5):
            self.assertRaises(InvalidArgumentError, deform_images, images, factor)
        self.assertRaises(InvalidArgumentError, DomainSpec, 0.0)

    def test_bad_shape(self):
        """ a single image is not a stack """
        self.assertRaises(InvalidArgumentError, deform_images, np.zeros((28, 28)), 0.5)


class test_domain_sequence(unittest.TestCase):
    def test_equal_spacing(self):
        """ five domains from 0.9 down to 0.5 """
        sequence = make_domain_sequence(0.9, 0.5, 5)
        self.assertEqual(sequence.factors, [0.9, 0.8, 0.7, 0.6, 0.5])
        self.assertEqual(len(sequence), 5)
        self.assertEqual([spec.index for spec in sequence], [0, 1, 2, 3, 4])
        self.assertEqual(sequence.final.factor, 0.5)

    def test_single_domain_is_final(self):
        """ a one domain sequence holds only the end factor """
        sequence = make_domain_sequence(0.9, 0.5, 1)
        self.assertEqual(sequence.factors, [0.5])

    def test_seeds(self):
        """ domain seeds differ between domains and replay for the same root seed """
        first = make_domain_sequence(0.9, 0.5, 5, seed=3)
        second = make_domain_sequence(0.9, 0.5, 5, seed=3)
        other = make_domain_sequence(0.9, 0.5, 5, seed=4)
        seeds = [spec.seed for spec in first]
        self.assertEqual(len(set(seeds)), 5)
        self.assertEqual(seeds, [spec.seed for spec in second])
        self.assertNotEqual(seeds, [spec.seed for spec in other])

    def test_invalid(self):
        """ empty sequences, reversed factors and flat multi domain sequences are rejected """
        self.assertRaises(InvalidArgumentError, make_domain_sequence, 0.9, 0.5, 0)
        self.assertRaises(InvalidArgumentError, make_domain_sequence, 0.5, 0.9, 3)
        self.assertRaises(InvalidArgumentError, make_domain_sequence, 0.7, 0.7, 3)
        self.assertRaises(InvalidArgumentError, make_domain_sequence, 1.2, 0.5, 3)

    def test_sweep_start_factor(self):
        """ count domains spread evenly between the source and the end factor """
        self.assertAlmostEqual(sweep_start_factor(0.3, 1), 0.3)
        self.assertAlmostEqual(sweep_start_factor(0.3, 2), 0.65)
        self.assertAlmostEqual(sweep_start_factor(0.3, 10), 0.93)
        self.assertRaises(InvalidArgumentError, sweep_start_factor, 0.3, 0)


class test_streams(unittest.TestCase):
    def test_realize_is_deterministic(self):
        """ equal spec and pool give equal pools and equal batch streams """
        base = base_batch(40)
        spec = make_domain_sequence(0.9, 0.5, 3, seed=1).specs[1]
        first = realize_domain(base, spec)
        second = realize_domain(base, spec)
        np.testing.assert_array_equal(first.materialize().images, second.materialize().images)
        for a, b in zip(first.batches(8, epochs=2), second.batches(8, epochs=2)):
            np.testing.assert_array_equal(a.images, b.images)
            np.testing.assert_array_equal(a.labels, b.labels)

    def test_unlabeled_domain(self):
        """ unlabeled domains carry no labels at all """
        stream = realize_domain(base_batch(16), DomainSpec(0.6), labeled=False)
        self.assertFalse(stream.labeled)
        batch = next(stream.batches(4))
        self.assertIsInstance(batch, UnlabeledBatch)
        self.assertFalse(hasattr(batch, "labels"))

    def test_epoch_visits_every_sample(self):
        """ one epoch without drop_last touches each image once """
        stream = realize_domain(base_batch(10), DomainSpec(1.0))
        labels = np.concatenate([b.labels for b in stream.batches(3, epochs=1, drop_last=False)])
        self.assertEqual(sorted(labels.tolist()), sorted(stream.materialize().labels.tolist()))

    def test_batch_larger_than_pool(self):
        """ a pool smaller than one batch cannot feed full batches """
        stream = realize_domain(base_batch(5), DomainSpec(0.8))
        self.assertRaises(InvalidArgumentError, next, stream.batches(8))

    def test_missing_base(self):
        """ realizing without a base dataset fails """
        self.assertRaises(ResourceError, realize_domain, None, DomainSpec(0.8))

    def test_disjoint_shards(self):
        """ shards of one pool never share an image """
        count = 30
        images = np.zeros((count, 28, 28), dtype=np.float32)
        images[:, 0, 0] = np.arange(count) / 100.0
        base = LabeledBatch(images, np.arange(count) % 10)
        seen = []
        for k in range(3):
            shard = realize_domain(base, DomainSpec(1.0, index=k), shard=(k, 3))
            seen.extend(np.round(shard.materialize().images[:, 0, 0] * 100).astype(int).tolist())
        self.assertEqual(sorted(seen), list(range(count)))
        self.assertRaises(InvalidArgumentError, realize_domain, base, DomainSpec(1.0), True, (3, 3))

    def test_labeled_batch_validation(self):
        """ labels must match the images and stay in range """
        images = np.zeros((3, 28, 28))
        self.assertRaises(InvalidArgumentError, LabeledBatch, images, [0, 1])
        self.assertRaises(InvalidArgumentError, LabeledBatch, images, [0, 1, 10])
        self.assertRaises(InvalidArgumentError, UnlabeledBatch, np.zeros((0, 28, 28)))
