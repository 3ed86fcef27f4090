"""
Single batch optimisation steps: one discriminator update then one encoder
(or generator) update
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import torch

from ..exceptions import InvalidArgumentError, InvariantViolationError, NumericalFailureError
from ..nets.models import discriminate, encode, generate, param_hash, set_trainable
from .losses import (
    loss_discriminator_features,
    loss_discriminator_gan,
    loss_discriminator_sdm,
    loss_generator,
    loss_target_encoder,
    loss_target_encoder_sdm,
)

log = logging.getLogger("IADA")

KIND_SOURCE = "source"
KIND_GENERATED = "generated"


@dataclass
class StepReport:
    step_index: int
    phase: str
    loss_D: float
    loss_E_or_G: float
    mean_D_on_source_or_gen: float
    mean_D_on_target: float
    domain: Optional[int] = None

    def __post_init__(self):
        for name in ("loss_D", "loss_E_or_G", "mean_D_on_source_or_gen", "mean_D_on_target"):
            if not math.isfinite(getattr(self, name)):
                raise NumericalFailureError(f"{name} is not finite", self.as_metrics())

    def as_metrics(self) -> dict:
        return {
            "step": self.step_index,
            "phase": self.phase,
            "domain": self.domain,
            "loss_D": self.loss_D,
            "loss_E": self.loss_E_or_G,
            "d_real_mean": self.mean_D_on_source_or_gen,
            "d_fake_mean": self.mean_D_on_target,
        }


@dataclass(frozen=True)
class OptimizerSettings:
    lr_disc: float = 2e-4
    lr_gen: float = 2e-4
    lr_encoder: float = 1e-4
    lr_source: float = 1e-3
    beta1: float = 0.5
    beta2: float = 0.999

    @property
    def betas(self):
        return (self.beta1, self.beta2)


@dataclass
class OptimizerState:
    disc: torch.optim.Optimizer
    model: torch.optim.Optimizer


def make_adaptation_optimizers(bundle, settings=OptimizerSettings()) -> OptimizerState:
    return OptimizerState(
        disc=torch.optim.Adam(bundle.discriminator.parameters(), lr=settings.lr_disc, betas=settings.betas),
        model=torch.optim.Adam(bundle.target_encoder.parameters(), lr=settings.lr_encoder, betas=settings.betas),
    )


def make_gan_optimizers(bundle, settings=OptimizerSettings()) -> OptimizerState:
    if bundle.generator is None:
        raise InvalidArgumentError("bundle has no generator")
    return OptimizerState(
        disc=torch.optim.Adam(bundle.discriminator.parameters(), lr=settings.lr_disc, betas=settings.betas),
        model=torch.optim.Adam(bundle.generator.parameters(), lr=settings.lr_gen, betas=settings.betas),
    )


def module_device(module) -> torch.device:
    return next(module.parameters()).device


class NoiseSampler:
    """
    Seeded N(0, 1) noise of width noise_dim
    """

    def __init__(self, noise_dim, seed=0, device="cpu") -> None:
        self.noise_dim = noise_dim
        self.device = torch.device(device)
        # noise is drawn on the cpu so replays match across devices
        self._gen = torch.Generator()
        self._gen.manual_seed(seed)

    def __call__(self, batch_size) -> torch.Tensor:
        return torch.randn(batch_size, self.noise_dim, generator=self._gen).to(self.device)


class SourceFeatures:
    """
    E_s features over a (possibly audited) source stream; the stream is not
    touched before the first call
    """

    kind = KIND_SOURCE

    def __init__(self, encoder, stream, batch_size) -> None:
        self.encoder = encoder
        self.batch_size = batch_size
        self._stream = stream
        self._batches = None

    def __call__(self, batch_size=None) -> torch.Tensor:
        if batch_size is not None and batch_size != self.batch_size:
            raise InvalidArgumentError(f"source provider serves batches of {self.batch_size}, asked for {batch_size}")
        if self._batches is None:
            self._batches = self._stream.batches(self.batch_size)
        batch = next(self._batches)
        images = torch.as_tensor(batch.images, device=module_device(self.encoder))
        with torch.no_grad():
            return encode(self.encoder, images)


class GeneratedFeatures:
    """
    G(z) features for fresh noise z on every call
    """

    kind = KIND_GENERATED

    def __init__(self, generator, noise: NoiseSampler) -> None:
        self.generator = generator
        self.noise = noise

    def __call__(self, batch_size) -> torch.Tensor:
        with torch.no_grad():
            return generate(self.generator, self.noise(batch_size))


def _check_unchanged(before, after, what):
    if before != after:
        raise InvariantViolationError(f"{what} changed during a step that must not touch it")


def _tag(error, step_index, phase):
    error.telemetry.update(step=step_index, phase=phase)
    return error


def adversarial_step(
    bundle,
    real_feats_provider,
    target_batch,
    weights,
    opt_state,
    step_index=0,
    phase="adapt",
    domain=None,
    frozen=None,
    check_isolation=True,
) -> StepReport:
    """
    One discriminator update on the source/target (or generated/target)
    objective, then one target encoder update on the lambda weighted confusion
    objective

    frozen holds the expected source encoder / head hashes; they are computed on
    entry when not given
    """
    sdm = real_feats_provider.kind == KIND_GENERATED
    disc_objective = loss_discriminator_sdm if sdm else loss_discriminator_features
    encoder_objective = loss_target_encoder_sdm if sdm else loss_target_encoder
    frozen = frozen or bundle.source_hashes()
    disc = bundle.discriminator
    encoder = bundle.target_encoder

    images = torch.as_tensor(target_batch.images, device=module_device(encoder))
    batch_size = images.shape[0]
    try:
        f_real = real_feats_provider(batch_size)
        if f_real.shape[0] != batch_size:
            raise InvalidArgumentError(
                f"unbalanced discriminator batch: {f_real.shape[0]} real vs {batch_size} target"
            )

        encoder_before = param_hash(encoder) if check_isolation else None
        with torch.no_grad():
            f_t = encode(encoder, images)
        opt_state.disc.zero_grad(set_to_none=True)
        loss_d = disc_objective(disc, f_real, f_t)
        (weights.discriminator_scale() * loss_d).backward()
        opt_state.disc.step()
        with torch.no_grad():
            d_real = discriminate(disc, f_real).mean().item()
            d_fake = discriminate(disc, f_t).mean().item()
        if check_isolation:
            _check_unchanged(encoder_before, param_hash(encoder), "target encoder")

        disc_before = param_hash(disc) if check_isolation else None
        set_trainable(disc, False)
        try:
            opt_state.model.zero_grad(set_to_none=True)
            loss_e = encoder_objective(disc, encode(encoder, images))
            (weights.lambda_adv * loss_e).backward()
            opt_state.model.step()
        finally:
            set_trainable(disc, True)
        if check_isolation:
            _check_unchanged(disc_before, param_hash(disc), "discriminator")
    except NumericalFailureError as e:
        raise _tag(e, step_index, phase)

    _check_unchanged(frozen, bundle.source_hashes(), "source encoder / head")
    report = StepReport(
        step_index=step_index,
        phase=phase,
        loss_D=loss_d.item(),
        loss_E_or_G=loss_e.item(),
        mean_D_on_source_or_gen=d_real,
        mean_D_on_target=d_fake,
        domain=domain,
    )
    log.debug(f"step {step_index} {phase}: {report.as_metrics()}")
    return report


def gan_step(
    bundle, source_provider, noise, weights, opt_state, step_index=0, phase="gan", frozen=None
) -> StepReport:
    """
    One discriminator update on source vs generated features, then one
    generator update on the lambda weighted confusion objective
    """
    frozen = frozen or bundle.source_hashes()
    disc = bundle.discriminator
    generator = bundle.generator
    try:
        f_s = source_provider()
        batch_size = f_s.shape[0]
        with torch.no_grad():
            f_g = generate(generator, noise(batch_size))
        opt_state.disc.zero_grad(set_to_none=True)
        loss_d = loss_discriminator_gan(disc, f_s, f_g)
        (weights.discriminator_scale() * loss_d).backward()
        opt_state.disc.step()
        with torch.no_grad():
            d_real = discriminate(disc, f_s).mean().item()
            d_fake = discriminate(disc, f_g).mean().item()

        set_trainable(disc, False)
        try:
            opt_state.model.zero_grad(set_to_none=True)
            loss_g = loss_generator(disc, generate(generator, noise(batch_size)))
            (weights.lambda_adv * loss_g).backward()
            opt_state.model.step()
        finally:
            set_trainable(disc, True)
    except NumericalFailureError as e:
        raise _tag(e, step_index, phase)

    _check_unchanged(frozen, bundle.source_hashes(), "source encoder / head")
    return StepReport(
        step_index=step_index,
        phase=phase,
        loss_D=loss_d.item(),
        loss_E_or_G=loss_g.item(),
        mean_D_on_source_or_gen=d_real,
        mean_D_on_target=d_fake,
    )
