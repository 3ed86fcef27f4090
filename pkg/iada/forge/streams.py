"""
Batches and realized (deformed) domains
"""
import logging
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple, Union

import numpy as np

from ..exceptions import InvalidArgumentError, ResourceError
from .domains import DomainSpec, deform_images

log = logging.getLogger("IADA")

NUM_CLASSES = 10


@dataclass
class LabeledBatch:
    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float32)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 3 or len(self.images) < 1:
            raise InvalidArgumentError(f"expected images [B x H x W] with B >= 1, got {self.images.shape}")
        if self.labels.shape != (len(self.images),):
            raise InvalidArgumentError(
                f"labels shape {self.labels.shape} does not match {len(self.images)} images"
            )
        if self.labels.min() < 0 or self.labels.max() >= NUM_CLASSES:
            raise InvalidArgumentError(f"labels must be in [0, {NUM_CLASSES})")

    def __len__(self):
        return len(self.images)

    def take(self, indices) -> "LabeledBatch":
        return LabeledBatch(self.images[indices], self.labels[indices])


@dataclass
class UnlabeledBatch:
    images: np.ndarray

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float32)
        if self.images.ndim < 2 or len(self.images) < 1:
            raise InvalidArgumentError(f"expected a non-empty image batch, got {self.images.shape}")

    def __len__(self):
        return len(self.images)

    def take(self, indices) -> "UnlabeledBatch":
        return UnlabeledBatch(self.images[indices])


Batch = Union[LabeledBatch, UnlabeledBatch]


class DomainStream:
    """
    A realized domain: the deformed pool (in base order) plus seeded batch iteration

    Each epoch visits the pool in a fresh permutation drawn from spec.seed, so two
    streams with equal spec and pool yield identical batches
    """

    def __init__(self, spec: DomainSpec, images, labels=None) -> None:
        self.spec = spec
        self._images = np.asarray(images, dtype=np.float32)
        self._labels = None if labels is None else np.asarray(labels, dtype=np.int64)

    def __str__(self):
        kind = "labeled" if self.labeled else "unlabeled"
        return f"DomainStream factor: {self.spec.factor}, index: {self.spec.index}, {kind}, size: {len(self)}"

    def __len__(self):
        return len(self._images)

    @property
    def labeled(self) -> bool:
        return self._labels is not None

    @property
    def image_shape(self) -> Tuple[int, ...]:
        return tuple(self._images.shape[1:])

    def materialize(self) -> Batch:
        if self.labeled:
            return LabeledBatch(self._images.copy(), self._labels.copy())
        return UnlabeledBatch(self._images.copy())

    def _batch(self, indices) -> Batch:
        if self.labeled:
            return LabeledBatch(self._images[indices], self._labels[indices])
        return UnlabeledBatch(self._images[indices])

    def batches(self, batch_size, epochs=None, drop_last=True, shuffle=True) -> Iterator[Batch]:
        """
        Yield batches epoch after epoch (forever when epochs is None)
        """
        if batch_size < 1:
            raise InvalidArgumentError(f"batch size must be >= 1, got {batch_size}")
        if drop_last and len(self) < batch_size:
            raise InvalidArgumentError(
                f"domain {self.spec.index} holds {len(self)} images, fewer than batch size {batch_size}"
            )
        rng = np.random.default_rng(self.spec.seed)
        epoch = 0
        while epochs is None or epoch < epochs:
            order = rng.permutation(len(self)) if shuffle else np.arange(len(self))
            stop = len(order) - len(order) % batch_size if drop_last else len(order)
            for start in range(0, stop, batch_size):
                yield self._batch(order[start:start + batch_size])
            epoch += 1


def realize_domain(
    base: Optional[LabeledBatch], spec: DomainSpec, labeled=True, shard=None
) -> DomainStream:
    """
    Deform every image of base with spec.factor

    shard=(k, K) keeps only the k-th of K disjoint seeded shards of the pool
    """
    if base is None:
        raise ResourceError("no base dataset loaded")
    images = base.images
    labels = base.labels
    if shard is not None:
        k, parts = shard
        if not (0 <= k < parts):
            raise InvalidArgumentError(f"shard {k} outside 0..{parts - 1}")
        # the shard permutation depends on the pool only, so shards of one pool never overlap
        order = np.random.default_rng(len(base)).permutation(len(base))
        keep = np.sort(np.array_split(order, parts)[k])
        images = images[keep]
        labels = labels[keep]
    log.debug(f"realizing domain {spec.index} factor {spec.factor} on {len(images)} images")
    deformed = deform_images(images, spec.factor)
    return DomainStream(spec, deformed, labels.copy() if labeled else None)
