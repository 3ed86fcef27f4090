import unittest

import numpy as np
import torch
from torch import nn

from iada.core.losses import LossWeights
from iada.core.steps import (
    GeneratedFeatures,
    NoiseSampler,
    OptimizerSettings,
    SourceFeatures,
    StepReport,
    adversarial_step,
    gan_step,
    make_adaptation_optimizers,
    make_gan_optimizers,
)
from iada.exceptions import InvalidArgumentError, NumericalFailureError
from iada.forge.domains import DomainSpec
from iada.forge.streams import DomainStream, UnlabeledBatch
from iada.nets.models import Discriminator, Generator, Head, ModelBundle, clone_params, init_params, param_hash


class ToyEncoder(nn.Module):
    """ affine map of 2-D points, starting at the identity """

    def __init__(self) -> None:
        super().__init__()
        self.input_shape = (2,)
        self.feature_dim = 2
        self.fc = nn.Linear(2, 2)
        with torch.no_grad():
            self.fc.weight.copy_(torch.eye(2))
            self.fc.bias.zero_()

    def forward(self, points):
        return self.fc(points)


def toy_bundle(seed=0, with_generator=False):
    gen = torch.Generator()
    gen.manual_seed(seed)
    encoder = ToyEncoder()
    bundle = ModelBundle(
        source_encoder=encoder,
        target_encoder=clone_params(encoder),
        head=init_params(Head(2, 10), gen),
        discriminator=init_params(Discriminator(2, hidden=32), gen),
        generator=init_params(Generator(4, 2, hidden=16), gen) if with_generator else None,
        seed=seed,
        noise_dim=4,
    )
    bundle.freeze_source()
    return bundle


def toy_points(centre, count=512, seed=0):
    rng = np.random.default_rng(seed)
    return (rng.normal(size=(count, 2)) * 0.1 + np.asarray(centre)).astype(np.float32)


def run_steps(steps, seed=0, settings=OptimizerSettings(), lambda_adv=0.001, batch=32):
    bundle = toy_bundle(seed)
    source = DomainStream(DomainSpec(1.0, seed=11), toy_points((2.0, 2.0), seed=1))
    target = DomainStream(DomainSpec(0.5, seed=12), toy_points((0.0, 0.0), seed=2))
    provider = SourceFeatures(bundle.source_encoder, source, batch)
    opt_state = make_adaptation_optimizers(bundle, settings)
    weights = LossWeights(lambda_adv)
    frozen = bundle.source_hashes()
    batches = target.batches(batch)
    reports = [
        adversarial_step(bundle, provider, next(batches), weights, opt_state, step_index=i, frozen=frozen)
        for i in range(steps)
    ]
    return bundle, reports, target


class test_adversarial_step(unittest.TestCase):
    def test_updates_only_trainable(self):
        """ one step moves discriminator and target encoder, never the source side """
        bundle = toy_bundle()
        before = {name: param_hash(m) for name, m in bundle.components().items()}
        source = DomainStream(DomainSpec(1.0), toy_points((2.0, 2.0)))
        provider = SourceFeatures(bundle.source_encoder, source, 16)
        batch = UnlabeledBatch(toy_points((0.0, 0.0), count=16))
        report = adversarial_step(bundle, provider, batch, LossWeights(1.0), make_adaptation_optimizers(bundle))
        self.assertIsInstance(report, StepReport)
        self.assertNotEqual(before["discriminator"], param_hash(bundle.discriminator))
        self.assertNotEqual(before["target_encoder"], param_hash(bundle.target_encoder))
        self.assertEqual(before["source_encoder"], param_hash(bundle.source_encoder))
        self.assertEqual(before["head"], param_hash(bundle.head))
        self.assertTrue(all(p.requires_grad for p in bundle.discriminator.parameters()))

    def test_deterministic(self):
        """ equal seeds replay identical step reports and parameters """
        first, reports_a, _ = run_steps(5)
        second, reports_b, _ = run_steps(5)
        self.assertEqual([r.as_metrics() for r in reports_a], [r.as_metrics() for r in reports_b])
        self.assertEqual(param_hash(first.target_encoder), param_hash(second.target_encoder))

    def test_unbalanced_batches(self):
        """ the discriminator sees equally many real and target features """
        bundle = toy_bundle()
        source = DomainStream(DomainSpec(1.0), toy_points((2.0, 2.0)))
        provider = SourceFeatures(bundle.source_encoder, source, 8)
        batch = UnlabeledBatch(toy_points((0.0, 0.0), count=4))
        self.assertRaises(
            InvalidArgumentError,
            adversarial_step,
            bundle,
            provider,
            batch,
            LossWeights(),
            make_adaptation_optimizers(bundle),
        )

    def test_report_metrics(self):
        """ metrics carry step, phase and both discriminator means in (0, 1) """
        _, reports, _ = run_steps(2)
        metrics = reports[-1].as_metrics()
        self.assertEqual(metrics["step"], 1)
        self.assertEqual(metrics["phase"], "adapt")
        self.assertTrue(0.0 < metrics["d_real_mean"] < 1.0)
        self.assertTrue(0.0 < metrics["d_fake_mean"] < 1.0)
        self.assertRaises(NumericalFailureError, StepReport, 0, "adapt", float("nan"), 0.0, 0.5, 0.5)

    def test_toy_alignment(self):
        """ on separated 2-D clusters the target features move toward the source cluster """
        settings = OptimizerSettings(lr_disc=1e-2, lr_encoder=5e-3)
        bundle, _, target = run_steps(600, settings=settings, lambda_adv=1.0)
        points = torch.as_tensor(target.materialize().images)
        with torch.no_grad():
            moved = bundle.target_encoder(points).mean(dim=0)
            start = bundle.source_encoder(points).mean(dim=0)
        source_centre = torch.tensor([2.0, 2.0])
        initial = torch.dist(start, source_centre).item()
        final = torch.dist(moved, source_centre).item()
        self.assertLess(final, 0.5 * initial)


class test_gan_step(unittest.TestCase):
    def test_generator_moves(self):
        """ a gan step trains the generator and discriminator but not the source encoder """
        bundle = toy_bundle(with_generator=True)
        before = {name: param_hash(m) for name, m in bundle.components().items()}
        source = DomainStream(DomainSpec(1.0), toy_points((2.0, 2.0)))
        provider = SourceFeatures(bundle.source_encoder, source, 16)
        noise = NoiseSampler(4, seed=0)
        report = gan_step(bundle, provider, noise, LossWeights(1.0), make_gan_optimizers(bundle))
        self.assertEqual(report.phase, "gan")
        self.assertNotEqual(before["generator"], param_hash(bundle.generator))
        self.assertNotEqual(before["discriminator"], param_hash(bundle.discriminator))
        self.assertEqual(before["source_encoder"], param_hash(bundle.source_encoder))
        self.assertEqual(before["target_encoder"], param_hash(bundle.target_encoder))

    def test_generated_provider(self):
        """ generated features replay for equal noise seeds """
        bundle = toy_bundle(with_generator=True)
        a = GeneratedFeatures(bundle.generator, NoiseSampler(4, seed=5))(6)
        b = GeneratedFeatures(bundle.generator, NoiseSampler(4, seed=5))(6)
        self.assertTrue(torch.equal(a, b))
        self.assertEqual(tuple(a.shape), (6, 2))

    def test_no_generator(self):
        """ gan optimizers need a generator """
        self.assertRaises(InvalidArgumentError, make_gan_optimizers, toy_bundle())
