"""
Training regimes: supervised source training, source GAN (for source
distribution modelling), adversarial adaptation and evaluation
"""
import logging
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import torch

from ..core.losses import LossWeights, supervised_loss
from ..core.steps import (
    GeneratedFeatures,
    NoiseSampler,
    OptimizerSettings,
    SourceFeatures,
    adversarial_step,
    gan_step,
    make_adaptation_optimizers,
    make_gan_optimizers,
    module_device,
)
from ..exceptions import (
    InvalidArgumentError,
    InvariantViolationError,
    MissingPrerequisiteError,
    NumericalFailureError,
)
from ..forge.streams import LabeledBatch
from ..io.auditio import AccessAudit, audit_guard
from ..nets.checkpoint import save_bundle
from ..nets.models import add_generator, classify, clone_params, encode, generate, param_hash, set_trainable
from ..regimes import REGIMES, get_regime
from ..seeding import SeedSplitter
from .buffer import SampleBuffer
from .records import DomainResult, RunRecord, checkpoint_name

log = logging.getLogger("IADA")

COLLAPSE_RATIO = 1e-4
SOURCE_DATASET = "source"
PHASE_ADAPT = "adapt"


@dataclass(frozen=True)
class AdaptationConfig:
    mode: str = "iada"
    sdm: bool = False
    lambda_adv: float = 0.001
    steps_per_domain: int = 400
    batch_size: int = 64
    buffer_capacity: int = 4096
    noise_dim: int = 64
    seed: int = 0
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    scale_discriminator: bool = False
    verify_interval: int = 1
    steps_total: Optional[int] = None

    def __post_init__(self):
        mode = str(self.mode).lower().replace("-", "_")
        if mode not in REGIMES:
            raise InvalidArgumentError(f"unknown adaptation mode {self.mode}")
        object.__setattr__(self, "mode", mode)
        if self.steps_per_domain < 1:
            raise InvalidArgumentError(f"steps_per_domain must be >= 1, got {self.steps_per_domain}")
        if self.steps_total is not None and self.steps_total < 1:
            raise InvalidArgumentError(f"steps_total must be >= 1, got {self.steps_total}")
        if self.batch_size < 1:
            raise InvalidArgumentError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.buffer_capacity < self.batch_size:
            raise InvalidArgumentError(
                f"buffer_capacity ({self.buffer_capacity}) must be >= batch_size ({self.batch_size})"
            )
        if self.verify_interval < 1:
            raise InvalidArgumentError(f"verify_interval must be >= 1, got {self.verify_interval}")

    def weights(self) -> LossWeights:
        return LossWeights(self.lambda_adv, self.scale_discriminator)


def _images(batch, device) -> torch.Tensor:
    return torch.as_tensor(batch.images, device=device)


def train_source(
    bundle, source_data, epochs, batch_size=64, settings=OptimizerSettings(), on_epoch=None
):
    """
    Supervised training of source encoder and head, then clone the target
    encoder from the trained source encoder and freeze the source side
    """
    if epochs < 1:
        raise InvalidArgumentError(f"epochs must be >= 1, got {epochs}")
    encoder = bundle.source_encoder
    head = bundle.head
    set_trainable(encoder, True)
    set_trainable(head, True)
    encoder.train()
    head.train()
    device = module_device(encoder)
    optimizer = torch.optim.Adam(
        list(encoder.parameters()) + list(head.parameters()), lr=settings.lr_source, betas=(0.9, 0.999)
    )
    steps_per_epoch = max(1, len(source_data) // batch_size)
    log.info(f"source training: {epochs} epochs of {steps_per_epoch} steps on {len(source_data)} images")
    running = 0.0
    for step, batch in enumerate(source_data.batches(batch_size, epochs=epochs)):
        epoch = step // steps_per_epoch
        labels = torch.as_tensor(batch.labels, device=device)
        optimizer.zero_grad(set_to_none=True)
        try:
            loss = supervised_loss(head, encode(encoder, _images(batch, device)), labels)
        except NumericalFailureError as e:
            e.telemetry.update(phase="source", step=step, epoch=epoch)
            raise
        loss.backward()
        optimizer.step()
        running += loss.item()
        if (step + 1) % steps_per_epoch == 0:
            log.info(f"source epoch {epoch + 1}/{epochs}: mean loss {running / steps_per_epoch:.5f}")
            if on_epoch is not None:
                on_epoch(epoch, running / steps_per_epoch)
            running = 0.0
    encoder.eval()
    head.eval()
    bundle.target_encoder = clone_params(encoder)
    bundle.freeze_source()
    bundle.stage = "source"
    return bundle


def train_source_gan(
    bundle,
    source_data,
    steps,
    batch_size=64,
    lambda_adv=0.001,
    settings=OptimizerSettings(),
    scale_discriminator=False,
    on_step=None,
):
    """
    Fit the generator to the frozen source encoder's feature distribution

    The source encoder receives no gradient; the discriminator trained here is
    kept in the bundle to warm start adaptation with source distribution modelling
    """
    if steps < 1:
        raise InvalidArgumentError(f"gan steps must be >= 1, got {steps}")
    add_generator(bundle)
    bundle.freeze_source()
    set_trainable(bundle.discriminator, True)
    set_trainable(bundle.generator, True)
    frozen = bundle.source_hashes()
    seeds = SeedSplitter(bundle.seed)
    device = module_device(bundle.source_encoder)
    provider = SourceFeatures(bundle.source_encoder, source_data, batch_size)
    noise = NoiseSampler(bundle.noise_dim, seeds.seed("gan", 0), device)
    weights = LossWeights(lambda_adv, scale_discriminator)
    opt_state = make_gan_optimizers(bundle, settings)
    log.info(f"source gan training: {steps} steps, batch {batch_size}, lambda {lambda_adv}")
    for step in range(steps):
        report = gan_step(bundle, provider, noise, weights, opt_state, step_index=step, frozen=frozen)
        if on_step is not None:
            on_step(report)
        if (step + 1) % 100 == 0:
            log.debug(f"gan step {step + 1}/{steps}: {report.as_metrics()}")

    warning = check_mode_collapse(bundle, source_data, batch_size, seeds.seed("gan", 1))
    if warning:
        log.warning(warning)
        bundle.warnings.append(warning)
    bundle.stage = "source_gan"
    return bundle


def check_mode_collapse(bundle, source_data, batch_size, seed, batches=8):
    """
    Compare mean per-dimension variance of generated and real source features
    """
    provider = SourceFeatures(bundle.source_encoder, source_data, batch_size)
    batches = max(1, min(batches, len(source_data) // batch_size))
    real = torch.cat([provider() for _ in range(batches)])
    noise = NoiseSampler(bundle.noise_dim, seed, module_device(bundle.generator))
    with torch.no_grad():
        fake = generate(bundle.generator, noise(len(real)))
    real_var = real.var(dim=0).mean().item()
    fake_var = fake.var(dim=0).mean().item()
    log.debug(f"feature variance real {real_var:.6g}, generated {fake_var:.6g}")
    if fake_var < COLLAPSE_RATIO * real_var:
        return f"generator mode collapse: generated feature variance {fake_var:.3g} vs real {real_var:.3g}"
    return None


def stage_feeder(targets, stage, batch_size):
    """
    Endless incoming target batches for a stage, round robin over its domains
    """
    iterators = [targets[k].batches(batch_size) for k in stage.domains]
    while True:
        for domain, batches in zip(stage.domains, iterators):
            yield domain, next(batches)


def _prefill(buffer, feeder, stage, targets, batch_size):
    pool = sum(len(targets[k]) for k in stage.domains)
    pushes = max(1, min(buffer.capacity, pool) // batch_size)
    for _ in range(pushes):
        domain, batch = next(feeder)
        buffer.push(batch, tag=domain)
    log.debug(f"stage {stage.index}: prefilled buffer with {len(buffer)} images")


def adapt(
    bundle,
    sequence,
    config: AdaptationConfig,
    eval_hook=None,
    targets=None,
    source_data=None,
    source_test=None,
    audit=None,
    run_dir=None,
    on_step=None,
) -> RunRecord:
    """
    Adapt the bundle's target encoder along sequence under config.mode

    targets holds one unlabeled stream per domain of the sequence; source_data
    is the retained source stream (unused, and never read, with sdm). The bundle
    is updated in place: each stage warm starts from the previous one.
    """
    if targets is None or len(targets) != sequence.count:
        raise InvalidArgumentError(f"adapt needs {sequence.count} target streams, got {0 if targets is None else len(targets)}")
    if any(getattr(t, "labeled", False) for t in targets):
        raise InvalidArgumentError("target streams must be unlabeled")
    if config.sdm and bundle.generator is None:
        raise MissingPrerequisiteError("adaptation with sdm needs a trained generator (run train-sdm-gan first)")
    if not config.sdm and source_data is None:
        raise MissingPrerequisiteError("adaptation without sdm needs the source data")

    regime = get_regime(config.mode)
    stages = regime.plan(sequence, config.steps_per_domain, config.steps_total)
    audit = audit if audit is not None else AccessAudit()
    guarded_source = None
    if source_data is not None:
        guarded_source = audit_guard(source_data, PHASE_ADAPT, audit, name=SOURCE_DATASET)

    bundle.freeze_source()
    set_trainable(bundle.target_encoder, True)
    set_trainable(bundle.discriminator, True)
    if bundle.generator is not None:
        set_trainable(bundle.generator, False)
    frozen = bundle.source_hashes()
    seeds = SeedSplitter(config.seed)
    device = module_device(bundle.target_encoder)
    weights = config.weights()

    record = RunRecord(mode=config.mode, sdm=config.sdm, seed=config.seed, count=sequence.count, config=_snapshot(config))
    record.warnings.extend(bundle.warnings)
    if source_test is not None:
        record.source_accuracy_before = evaluate(bundle, source_test, use_target_encoder=False)

    log.info(f"adapting with {regime} (sdm {config.sdm}) over factors {sequence.factors}: {len(stages)} stages")
    step_index = 0
    for stage in stages:
        spec = sequence.specs[stage.evaluate_index]
        started = time.perf_counter()
        start_hash = param_hash(bundle.target_encoder)
        buffer = SampleBuffer(config.buffer_capacity, seeds.seed("buffer", stage.index))
        feeder = stage_feeder(targets, stage, config.batch_size)
        _prefill(buffer, feeder, stage, targets, config.batch_size)
        if config.sdm:
            bundle.generator.eval()
            provider = GeneratedFeatures(
                bundle.generator, NoiseSampler(bundle.noise_dim, seeds.seed("noise", stage.index), device)
            )
        else:
            provider = SourceFeatures(bundle.source_encoder, guarded_source, config.batch_size)
        opt_state = make_adaptation_optimizers(bundle, config.optimizer)
        domain_tag = None if stage.mixed else stage.evaluate_index
        drawn = np.zeros(sequence.count, dtype=np.int64)

        for _ in range(stage.steps):
            domain, incoming = next(feeder)
            buffer.push(incoming, tag=domain)
            sampled, tags = buffer.sample_tagged(config.batch_size)
            drawn += np.bincount(tags, minlength=sequence.count)
            report = adversarial_step(
                bundle,
                provider,
                sampled,
                weights,
                opt_state,
                step_index=step_index,
                phase=PHASE_ADAPT,
                domain=domain_tag,
                frozen=frozen,
                check_isolation=step_index % config.verify_interval == 0,
            )
            record.metrics.append(report.as_metrics())
            if on_step is not None:
                on_step(report)
            step_index += 1

        result = DomainResult(
            index=stage.evaluate_index,
            factor=spec.factor,
            steps=stage.steps,
            start_hash=start_hash,
            end_hash=param_hash(bundle.target_encoder),
            domain_share={str(k): float(drawn[k] / drawn.sum()) for k in stage.domains},
        )
        if run_dir is not None:
            bundle.stage = f"adapt_{config.mode}_domain_{stage.evaluate_index}"
            result.checkpoint = checkpoint_name(stage.evaluate_index)
            save_bundle(bundle, os.path.join(run_dir, result.checkpoint))
        if eval_hook is not None:
            result.accuracy = eval_hook(bundle.frozen_copy(), spec)
        result.wall_clock = time.perf_counter() - started
        record.domains.append(result)
        log.info(
            f"stage {stage.index + 1}/{len(stages)} (factor {spec.factor}) done in {result.wall_clock:.1f}s, "
            f"accuracy {result.accuracy}"
        )

    if config.sdm and audit.count(SOURCE_DATASET, PHASE_ADAPT) > 0:
        raise InvariantViolationError("source data was read during adaptation with sdm")
    _check_frozen(frozen, bundle)
    record.audit = audit.as_dict()
    if source_test is not None:
        record.source_accuracy_after = evaluate(bundle, source_test, use_target_encoder=False)
    bundle.stage = f"adapt_{config.mode}"
    return record


def _check_frozen(frozen, bundle):
    if frozen != bundle.source_hashes():
        raise InvariantViolationError("source encoder / head changed during adaptation")


def _snapshot(config) -> dict:
    return asdict(config)


def evaluate(bundle, labeled_domain, use_target_encoder=True, batch_size=256) -> float:
    """
    Fraction of argmax-correct predictions of E_t -> S (deployment) or E_s -> S
    """
    batch = labeled_domain if isinstance(labeled_domain, LabeledBatch) else labeled_domain.materialize()
    labels = getattr(batch, "labels", None)
    if labels is None:
        raise InvalidArgumentError("evaluation needs a labeled domain")
    if len(labels) == 0:
        raise InvalidArgumentError("cannot evaluate on an empty domain")
    encoder = bundle.target_encoder if use_target_encoder else bundle.source_encoder
    training = encoder.training, bundle.head.training
    encoder.eval()
    bundle.head.eval()
    device = module_device(encoder)
    correct = 0
    with torch.no_grad():
        for start in range(0, len(labels), batch_size):
            images = torch.as_tensor(batch.images[start:start + batch_size], device=device)
            predicted = classify(bundle.head, encode(encoder, images)).argmax(dim=1).cpu().numpy()
            correct += int(np.sum(predicted == labels[start:start + batch_size]))
    encoder.train(training[0])
    bundle.head.train(training[1])
    return correct / len(labels)
