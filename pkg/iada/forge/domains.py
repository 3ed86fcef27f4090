"""
Height compression deformation and drifting domain sequences
"""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..exceptions import InvalidArgumentError
from ..seeding import SeedSplitter

log = logging.getLogger("IADA")


@dataclass(frozen=True)
class DomainSpec:
    factor: float
    index: int = 0
    seed: int = 0

    def __post_init__(self):
        check_factor(self.factor)
        if self.index < 0:
            raise InvalidArgumentError(f"domain index must be >= 0, got {self.index}")


@dataclass(frozen=True)
class DomainSequence:
    start_factor: float
    end_factor: float
    count: int
    specs: Tuple[DomainSpec, ...]

    def __post_init__(self):
        if len(self.specs) != self.count:
            raise InvalidArgumentError(
                f"sequence expects {self.count} domains, got {len(self.specs)}"
            )
        for previous, current in zip(self.specs, self.specs[1:]):
            if current.index <= previous.index or current.factor >= previous.factor:
                raise InvalidArgumentError(
                    f"domain {current.index} (factor {current.factor}) does not follow "
                    f"domain {previous.index} (factor {previous.factor})"
                )

    @property
    def factors(self) -> list:
        return [spec.factor for spec in self.specs]

    @property
    def final(self) -> DomainSpec:
        return self.specs[-1]

    def __len__(self):
        return self.count

    def __iter__(self):
        return iter(self.specs)


def check_factor(factor):
    if not (0.0 < factor <= 1.0):
        raise InvalidArgumentError(f"compression factor must be in (0, 1], got {factor}")


def area_weights(src_rows, dst_rows) -> np.ndarray:
    """
    Resampling matrix [dst_rows x src_rows] for area weighted rescaling

    Output row i covers the source interval [i * s, (i + 1) * s) with
    s = src_rows / dst_rows; its weight on source row j is the overlap of that
    interval with [j, j + 1) divided by s, so each row sums to 1
    """
    scale = src_rows / dst_rows
    weights = np.zeros((dst_rows, src_rows), dtype=np.float64)
    for i in range(dst_rows):
        lo = i * scale
        hi = (i + 1) * scale
        first = int(np.floor(lo))
        last = min(int(np.ceil(hi)), src_rows)
        for j in range(first, last):
            overlap = min(hi, j + 1) - max(lo, j)
            if overlap > 0:
                weights[i, j] = overlap / scale
    return weights


def compressed_rows(height, factor) -> int:
    return max(1, int(round(height * factor)))


def deform_images(images, factor) -> np.ndarray:
    """
    Vertically compress a stack of images [N x H x W] by factor

    Content is rescaled to round(H * factor) rows, centred, remaining rows zero
    """
    check_factor(factor)
    images = np.asarray(images, dtype=np.float32)
    if images.ndim != 3:
        raise InvalidArgumentError(f"expected images of shape [N x H x W], got {images.shape}")
    height = images.shape[1]
    rows = compressed_rows(height, factor)
    if rows == height:
        return images.copy()
    weights = area_weights(height, rows).astype(np.float32)
    squeezed = np.matmul(weights, images)
    out = np.zeros_like(images)
    top = (height - rows) // 2
    out[:, top:top + rows, :] = squeezed
    return np.clip(out, 0.0, 1.0)


def deform_image(image, factor) -> np.ndarray:
    image = np.asarray(image, dtype=np.float32)
    if image.ndim != 2:
        raise InvalidArgumentError(f"expected an image of shape [H x W], got {image.shape}")
    return deform_images(image[None], factor)[0]


def make_domain_sequence(start_factor, end_factor, count, seed=0) -> DomainSequence:
    """
    Build count domains with factors equally spaced from start_factor down to end_factor

    A single domain is the final (end_factor) domain only
    """
    if count < 1:
        raise InvalidArgumentError(f"domain count must be >= 1, got {count}")
    if not (0.0 < end_factor <= start_factor <= 1.0):
        raise InvalidArgumentError(
            f"factors must satisfy 0 < end <= start <= 1, got start {start_factor}, end {end_factor}"
        )
    if count > 1 and start_factor == end_factor:
        raise InvalidArgumentError("several domains need start factor > end factor")
    if count == 1:
        factors = [float(end_factor)]
    else:
        factors = [round(float(f), 10) for f in np.linspace(start_factor, end_factor, count)]
        factors[-1] = float(end_factor)
    seeds = SeedSplitter(seed)
    specs = tuple(
        DomainSpec(factor=f, index=k, seed=seeds.seed("data", k)) for k, f in enumerate(factors)
    )
    log.debug(f"domain sequence {start_factor} -> {end_factor} ({count}): {factors}")
    return DomainSequence(
        start_factor=float(start_factor), end_factor=float(end_factor), count=count, specs=specs
    )


def sweep_start_factor(end_factor, count, source_factor=1.0) -> float:
    """
    First factor of count domains equally spread between the source and end_factor
    """
    if count < 1:
        raise InvalidArgumentError(f"domain count must be >= 1, got {count}")
    return source_factor - (source_factor - end_factor) / count
