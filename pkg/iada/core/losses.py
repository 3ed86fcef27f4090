"""
Adversarial and supervised objectives

All log terms use the clamped discriminator output, so they stay finite
"""
import logging
from dataclasses import dataclass

import torch
import torch.nn.functional as F

from ..exceptions import InvalidArgumentError, NumericalFailureError
from ..nets.models import discriminate

log = logging.getLogger("IADA")

DEFAULT_LAMBDA = 0.001


@dataclass(frozen=True)
class LossWeights:
    lambda_adv: float = DEFAULT_LAMBDA
    scale_discriminator: bool = False

    def __post_init__(self):
        if not self.lambda_adv > 0:
            raise InvalidArgumentError(f"lambda_adv must be > 0, got {self.lambda_adv}")

    def discriminator_scale(self) -> float:
        return self.lambda_adv if self.scale_discriminator else 1.0


def _finite(loss, name, **telemetry):
    if not torch.isfinite(loss):
        raise NumericalFailureError(f"{name} is not finite", dict(telemetry, loss=name, value=float(loss)))
    return loss


def _nonempty(features, name):
    if features.dim() != 2 or features.shape[0] < 1:
        raise InvalidArgumentError(f"{name} must be a non-empty [B x F] batch, got {tuple(features.shape)}")


def _confusion(disc, features, name):
    _nonempty(features, name)
    loss = -torch.log(discriminate(disc, features)).mean()
    return _finite(loss, name, batch=features.shape[0])


def _binary(disc, real, fake, name):
    _nonempty(real, f"{name} real batch")
    _nonempty(fake, f"{name} fake batch")
    loss = -torch.log(discriminate(disc, real)).mean() - torch.log(1.0 - discriminate(disc, fake)).mean()
    return _finite(loss, name, batch=real.shape[0])


def loss_target_encoder(disc, f_t) -> torch.Tensor:
    """
    -E[log D(f_t)]: the target encoder tries to pass as source
    """
    return _confusion(disc, f_t, "loss_target_encoder")


def loss_discriminator_features(disc, f_real_source, f_target) -> torch.Tensor:
    """
    -E[log D(f_s)] - E[log(1 - D(f_t))]: source labelled 1, target labelled 0
    """
    return _binary(disc, f_real_source, f_target, "loss_discriminator_features")


def loss_generator(disc, f_g) -> torch.Tensor:
    return _confusion(disc, f_g, "loss_generator")


def loss_discriminator_gan(disc, f_s, f_g) -> torch.Tensor:
    return _binary(disc, f_s, f_g, "loss_discriminator_gan")


def loss_target_encoder_sdm(disc, f_t) -> torch.Tensor:
    return _confusion(disc, f_t, "loss_target_encoder_sdm")


def loss_discriminator_sdm(disc, f_g, f_t) -> torch.Tensor:
    """
    Generated source features play the real class against target features
    """
    return _binary(disc, f_g, f_t, "loss_discriminator_sdm")


def supervised_loss(head, features, labels) -> torch.Tensor:
    """
    Softmax cross entropy of the head on features
    """
    num_classes = getattr(head, "num_classes", None)
    if labels.dim() != 1 or labels.shape[0] != features.shape[0]:
        raise InvalidArgumentError(f"labels shape {tuple(labels.shape)} does not match features")
    if labels.numel() and (labels.min() < 0 or (num_classes is not None and labels.max() >= num_classes)):
        raise InvalidArgumentError(f"labels must be in [0, {num_classes})")
    loss = F.cross_entropy(head(features), labels)
    return _finite(loss, "supervised_loss", batch=features.shape[0])
