import math
import unittest

import torch

from iada.core.losses import (
    LossWeights,
    loss_discriminator_features,
    loss_discriminator_gan,
    loss_discriminator_sdm,
    loss_generator,
    loss_target_encoder,
    loss_target_encoder_sdm,
    supervised_loss,
)
from iada.exceptions import InvalidArgumentError, NumericalFailureError
from iada.nets.models import Discriminator, Encoder, Generator, Head, encode, generate, init_params

FEATURES = 16
GRADIENT_TOLERANCE = 1e-3
CONFUSION_LOSSES = (loss_target_encoder, loss_generator, loss_target_encoder_sdm)
BINARY_LOSSES = (loss_discriminator_features, loss_discriminator_gan, loss_discriminator_sdm)


def make_disc(seed=0, double=False):
    gen = torch.Generator()
    gen.manual_seed(seed)
    disc = init_params(Discriminator(FEATURES, hidden=32), gen)
    return disc.double() if double else disc


def neutral_disc():
    """ discriminator whose output is 0.5 everywhere """
    disc = make_disc()
    with torch.no_grad():
        disc.layers[-1].weight.zero_()
        disc.layers[-1].bias.zero_()
    return disc


def mirrored(disc):
    """ D'(f) = 1 - D(f), by negating the final layer """
    twin = Discriminator(FEATURES, hidden=32)
    twin.load_state_dict(disc.state_dict())
    with torch.no_grad():
        twin.layers[-1].weight.neg_()
        twin.layers[-1].bias.neg_()
    return twin


def numeric_gradient(fn, tensor, coordinates, h=1e-6):
    grads = []
    flat = tensor.detach().view(-1)
    for i in coordinates:
        original = flat[i].item()
        with torch.no_grad():
            flat[i] = original + h
            plus = fn().item()
            flat[i] = original - h
            minus = fn().item()
            flat[i] = original
        grads.append((plus - minus) / (2 * h))
    return grads


def relative_error(a, n):
    return abs(a - n) / max(abs(a), abs(n), 1e-6)


class test_losses(unittest.TestCase):
    def test_equilibrium_constants(self):
        """ at D = 1/2 the confusion losses are log 2 and the discriminator losses 2 log 2 """
        disc = neutral_disc()
        f_a = torch.randn(8, FEATURES)
        f_b = torch.randn(8, FEATURES)
        for loss in (loss_target_encoder, loss_generator, loss_target_encoder_sdm):
            self.assertAlmostEqual(loss(disc, f_a).item(), math.log(2), places=5)
        for loss in (loss_discriminator_features, loss_discriminator_gan, loss_discriminator_sdm):
            self.assertAlmostEqual(loss(disc, f_a, f_b).item(), 2 * math.log(2), places=5)

    def test_batch_mean(self):
        """ batch losses are the mean of per sample losses """
        disc = make_disc(1)
        f_t = torch.randn(6, FEATURES)
        f_s = torch.randn(6, FEATURES)
        per_sample = [loss_target_encoder(disc, f_t[i:i + 1]).item() for i in range(6)]
        self.assertAlmostEqual(loss_target_encoder(disc, f_t).item(), sum(per_sample) / 6, places=5)
        pairs = [loss_discriminator_features(disc, f_s[i:i + 1], f_t[i:i + 1]).item() for i in range(6)]
        self.assertAlmostEqual(loss_discriminator_features(disc, f_s, f_t).item(), sum(pairs) / 6, places=5)

    def test_label_symmetry(self):
        """ swapping the real and fake batches equals mirroring the discriminator """
        disc = make_disc(2)
        twin = mirrored(disc)
        f_s = torch.randn(10, FEATURES)
        f_t = torch.randn(10, FEATURES)
        self.assertAlmostEqual(
            loss_discriminator_features(disc, f_s, f_t).item(),
            loss_discriminator_features(twin, f_t, f_s).item(),
            places=4,
        )

    def test_loss_gradients(self):
        """ every adversarial loss matches central differences in its inputs and discriminator weights """
        for k, loss in enumerate(CONFUSION_LOSSES):
            disc = make_disc(10 + k, double=True)
            f = torch.randn(4, FEATURES, dtype=torch.float64, requires_grad=True)
            self.check_gradients(lambda: loss(disc, f), [f, disc.layers[0].weight], seed=k)
        for k, loss in enumerate(BINARY_LOSSES):
            disc = make_disc(20 + k, double=True)
            real = torch.randn(5, FEATURES, dtype=torch.float64, requires_grad=True)
            fake = torch.randn(5, FEATURES, dtype=torch.float64, requires_grad=True)
            self.check_gradients(lambda: loss(disc, real, fake), [real, fake, disc.layers[0].weight, disc.layers[2].bias], seed=k)

    def test_network_gradients(self):
        """ encoder, generator and head parameter gradients match central differences """
        gen = torch.Generator()
        gen.manual_seed(7)
        disc = make_disc(30, double=True)
        encoder = init_params(Encoder(input_shape=(8, 8), channels=(4, 4, FEATURES)), gen).double()
        images = torch.rand(3, 8, 8, dtype=torch.float64)
        self.check_gradients(
            lambda: loss_target_encoder(disc, encode(encoder, images)),
            [encoder.blocks[0][0].weight, encoder.blocks[2][2].weight],
        )
        generator = init_params(Generator(noise_dim=4, feature_dim=FEATURES, hidden=16), gen).double()
        noise = torch.randn(6, 4, dtype=torch.float64)
        self.check_gradients(lambda: loss_generator(disc, generate(generator, noise)), [generator.layers[0].weight, generator.layers[4].weight])
        head = init_params(Head(FEATURES), gen).double()
        features = torch.randn(6, FEATURES, dtype=torch.float64)
        labels = torch.tensor([0, 1, 2, 3, 4, 5])
        self.check_gradients(lambda: supervised_loss(head, features, labels), [head.fc.weight, head.fc.bias])

    def check_gradients(self, fn, tensors, seed=0, count=10):
        analytic = torch.autograd.grad(fn(), tensors)
        picker = torch.Generator()
        picker.manual_seed(seed)
        for tensor, grad in zip(tensors, analytic):
            coordinates = torch.randperm(tensor.numel(), generator=picker)[:count].tolist()
            numeric = numeric_gradient(fn, tensor, coordinates)
            for i, n in zip(coordinates, numeric):
                self.assertLess(relative_error(grad.view(-1)[i].item(), n), GRADIENT_TOLERANCE)

    def test_empty_batch(self):
        """ empty batches are rejected """
        disc = make_disc()
        self.assertRaises(InvalidArgumentError, loss_target_encoder, disc, torch.zeros(0, FEATURES))
        self.assertRaises(InvalidArgumentError, loss_discriminator_features, disc, torch.zeros(0, FEATURES), torch.zeros(2, FEATURES))

    def test_weights(self):
        """ lambda must be positive and only scales the discriminator on request """
        self.assertRaises(InvalidArgumentError, LossWeights, 0.0)
        self.assertEqual(LossWeights(0.001).discriminator_scale(), 1.0)
        self.assertEqual(LossWeights(0.001, scale_discriminator=True).discriminator_scale(), 0.001)


class test_supervised_loss(unittest.TestCase):
    def test_labels_checked(self):
        """ out of range or mismatched labels are rejected """
        head = Head(FEATURES)
        features = torch.randn(3, FEATURES)
        self.assertRaises(InvalidArgumentError, supervised_loss, head, features, torch.tensor([0, 1]))
        self.assertRaises(InvalidArgumentError, supervised_loss, head, features, torch.tensor([0, 1, 10]))

    def test_non_finite(self):
        """ a NaN feature surfaces as a numerical failure """
        head = Head(FEATURES)
        features = torch.randn(3, FEATURES)
        features[0, 0] = float("nan")
        with self.assertRaises(NumericalFailureError) as context:
            supervised_loss(head, features, torch.tensor([0, 1, 2]))
        self.assertEqual(context.exception.exit_code, 4)
        self.assertEqual(context.exception.telemetry["loss"], "supervised_loss")
