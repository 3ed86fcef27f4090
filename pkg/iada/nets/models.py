"""
Encoders, supervised head, domain discriminator and feature generator

Each network is a torch module (the parameter record); encode / classify /
discriminate / generate are the checked forward maps used everywhere else
"""
import copy
import hashlib
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import torch
from torch import nn

from ..exceptions import InvalidArgumentError
from ..seeding import SeedSplitter

log = logging.getLogger("IADA")

IMAGE_SHAPE = (28, 28)
FEATURE_DIM = 128
NUM_CLASSES = 10
NOISE_DIM = 64
HIDDEN_DISC = 512
HIDDEN_GEN = 256
EPS = 1e-7


def nin_block(in_channels, out_channels) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(in_channels, out_channels, kernel_size=3, stride=2, padding=1),
        nn.ELU(),
        nn.Conv2d(out_channels, out_channels, kernel_size=1),
        nn.ELU(),
    )


class Encoder(nn.Module):
    """
    Network-in-Network style encoder: [B x H x W] images to [B x F] features
    """

    def __init__(self, input_shape=IMAGE_SHAPE, channels=(32, 64, 128)) -> None:
        super().__init__()
        self.input_shape = tuple(input_shape)
        blocks = []
        in_channels = 1
        for out_channels in channels:
            blocks.append(nin_block(in_channels, out_channels))
            in_channels = out_channels
        self.blocks = nn.Sequential(*blocks)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.feature_dim = in_channels

    def forward(self, images):
        x = self.blocks(images.unsqueeze(1))
        return self.pool(x).flatten(1)


class Head(nn.Module):
    def __init__(self, feature_dim=FEATURE_DIM, num_classes=NUM_CLASSES) -> None:
        super().__init__()
        self.feature_dim = feature_dim
        self.num_classes = num_classes
        self.fc = nn.Linear(feature_dim, num_classes)

    def forward(self, features):
        return self.fc(features)


class Discriminator(nn.Module):
    """
    Two hidden layers of 512 units; forward returns the logit
    """

    def __init__(self, feature_dim=FEATURE_DIM, hidden=HIDDEN_DISC) -> None:
        super().__init__()
        self.feature_dim = feature_dim
        self.layers = nn.Sequential(
            nn.Linear(feature_dim, hidden),
            nn.LeakyReLU(0.2),
            nn.Linear(hidden, hidden),
            nn.LeakyReLU(0.2),
            nn.Linear(hidden, 1),
        )

    def forward(self, features):
        return self.layers(features).squeeze(1)


class Generator(nn.Module):
    """
    Maps N(0, 1) noise [B x n] to source-like features [B x F]
    """

    def __init__(self, noise_dim=NOISE_DIM, feature_dim=FEATURE_DIM, hidden=HIDDEN_GEN) -> None:
        super().__init__()
        self.noise_dim = noise_dim
        self.feature_dim = feature_dim
        self.layers = nn.Sequential(
            nn.Linear(noise_dim, hidden),
            nn.ELU(),
            nn.Linear(hidden, hidden),
            nn.ELU(),
            nn.Linear(hidden, feature_dim),
        )

    def forward(self, noise):
        return self.layers(noise)


@dataclass
class ModelBundle:
    source_encoder: nn.Module
    target_encoder: nn.Module
    head: nn.Module
    discriminator: nn.Module
    generator: Optional[nn.Module] = None
    stage: str = "init"
    seed: int = 0
    noise_dim: int = NOISE_DIM
    warnings: List[str] = field(default_factory=list)

    def __str__(self):
        parts = ", ".join(f"{name}: {count_params(module)}" for name, module in self.components().items())
        return f"ModelBundle stage: {self.stage}, seed: {self.seed}, params: {parts}"

    @property
    def sdm(self) -> bool:
        return self.generator is not None

    def components(self) -> dict:
        parts = {
            "source_encoder": self.source_encoder,
            "target_encoder": self.target_encoder,
            "head": self.head,
            "discriminator": self.discriminator,
        }
        if self.generator is not None:
            parts["generator"] = self.generator
        return parts

    def freeze_source(self):
        set_trainable(self.source_encoder, False)
        set_trainable(self.head, False)

    def source_hashes(self) -> dict:
        return {"source_encoder": param_hash(self.source_encoder), "head": param_hash(self.head)}

    def to(self, device) -> "ModelBundle":
        for module in self.components().values():
            module.to(device)
        return self

    def frozen_copy(self) -> "ModelBundle":
        snapshot = copy.deepcopy(self)
        for module in snapshot.components().values():
            set_trainable(module, False)
            module.eval()
        return snapshot


def count_params(module) -> int:
    return sum(p.numel() for p in module.parameters())


def set_trainable(module, flag):
    for p in module.parameters():
        p.requires_grad_(flag)


def init_params(module, generator: torch.Generator):
    """
    Fan-in scaled uniform initialisation, +-1/sqrt(fan_in) for weights and biases
    """
    with torch.no_grad():
        for layer in module.modules():
            if isinstance(layer, (nn.Linear, nn.Conv2d)):
                fan_in = layer.weight[0].numel()
                bound = 1.0 / math.sqrt(fan_in)
                layer.weight.copy_(torch.empty_like(layer.weight).uniform_(-bound, bound, generator=generator))
                if layer.bias is not None:
                    layer.bias.copy_(torch.empty_like(layer.bias).uniform_(-bound, bound, generator=generator))
    return module


def build_bundle(seed=0, sdm=False, noise_dim=NOISE_DIM, input_shape=IMAGE_SHAPE) -> ModelBundle:
    seeds = SeedSplitter(seed)
    source_encoder = init_params(Encoder(input_shape), seeds.generator("init", 0))
    head = init_params(Head(source_encoder.feature_dim), seeds.generator("init", 1))
    discriminator = init_params(Discriminator(source_encoder.feature_dim), seeds.generator("init", 2))
    generator = None
    if sdm:
        generator = init_params(Generator(noise_dim, source_encoder.feature_dim), seeds.generator("init", 3))
    log.debug(f"built bundle with seed {seed}, sdm {sdm}")
    return ModelBundle(
        source_encoder=source_encoder,
        target_encoder=clone_params(source_encoder),
        head=head,
        discriminator=discriminator,
        generator=generator,
        seed=seed,
        noise_dim=noise_dim,
    )


def add_generator(bundle, seed=None) -> ModelBundle:
    if bundle.generator is None:
        seeds = SeedSplitter(bundle.seed if seed is None else seed)
        bundle.generator = init_params(
            Generator(bundle.noise_dim, bundle.head.feature_dim), seeds.generator("init", 3)
        )
    return bundle


def clone_params(src: nn.Module) -> nn.Module:
    clone = copy.deepcopy(src)
    set_trainable(clone, True)
    return clone


def param_hash(module: nn.Module) -> str:
    digest = hashlib.sha256()
    for key, tensor in module.state_dict().items():
        digest.update(key.encode())
        digest.update(tensor.detach().cpu().contiguous().numpy().tobytes())
    return digest.hexdigest()


def _width(module, name):
    return getattr(module, name, None)


def encode(params: nn.Module, images: torch.Tensor) -> torch.Tensor:
    expected = _width(params, "input_shape")
    if images.dim() < 2 or (expected is not None and tuple(images.shape[1:]) != tuple(expected)):
        raise InvalidArgumentError(f"encoder expects input [B x {expected}], got {tuple(images.shape)}")
    return params(images)


def classify(head: nn.Module, features: torch.Tensor) -> torch.Tensor:
    _check_features(head, features, "head")
    return torch.softmax(head(features), dim=1)


def discriminate(disc: nn.Module, features: torch.Tensor) -> torch.Tensor:
    _check_features(disc, features, "discriminator")
    return torch.sigmoid(disc(features)).clamp(EPS, 1.0 - EPS)


def generate(gen: nn.Module, noise: torch.Tensor) -> torch.Tensor:
    expected = _width(gen, "noise_dim")
    if noise.dim() != 2 or (expected is not None and noise.shape[1] != expected):
        raise InvalidArgumentError(f"generator expects noise [B x {expected}], got {tuple(noise.shape)}")
    return gen(noise)


def _check_features(module, features, name):
    expected = _width(module, "feature_dim")
    if features.dim() != 2 or (expected is not None and features.shape[1] != expected):
        raise InvalidArgumentError(f"{name} expects features [B x {expected}], got {tuple(features.shape)}")
