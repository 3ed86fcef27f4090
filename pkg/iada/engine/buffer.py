import logging

import numpy as np

from ..exceptions import BufferStateError, InvalidArgumentError
from ..forge.streams import UnlabeledBatch

log = logging.getLogger("IADA")


class SampleBuffer:
    """
    Bounded ring of unlabeled target images, sampled uniformly with replacement

    Once full, each push overwrites the oldest slots. An optional tag per slot
    remembers which domain an image came from
    """

    def __init__(self, capacity, seed=0) -> None:
        if capacity < 1:
            raise InvalidArgumentError(f"buffer capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._images = None
        self._tags = np.full(capacity, -1, dtype=np.int64)
        self._cursor = 0
        self._size = 0
        self._rng = np.random.default_rng(seed)

    def __str__(self):
        return f"SampleBuffer size: {self._size}/{self.capacity}, cursor: {self._cursor}"

    def __len__(self):
        return self._size

    @property
    def full(self) -> bool:
        return self._size == self.capacity

    def clear(self):
        self._cursor = 0
        self._size = 0
        self._tags.fill(-1)

    def push(self, batch, tag=-1):
        images = batch.images
        if self._images is None:
            self._images = np.zeros((self.capacity,) + images.shape[1:], dtype=np.float32)
        elif images.shape[1:] != self._images.shape[1:]:
            raise InvalidArgumentError(
                f"buffer holds images of shape {self._images.shape[1:]}, got {images.shape[1:]}"
            )
        # only the last `capacity` images of an oversized batch survive
        images = images[-self.capacity:]
        slots = (self._cursor + np.arange(len(images))) % self.capacity
        self._images[slots] = images
        self._tags[slots] = tag
        self._cursor = int((self._cursor + len(images)) % self.capacity)
        self._size = min(self.capacity, self._size + len(images))

    def _draw(self, batch_size):
        if self._size == 0:
            raise BufferStateError("cannot sample from an empty buffer")
        if batch_size < 1:
            raise InvalidArgumentError(f"sample size must be >= 1, got {batch_size}")
        return self._rng.integers(0, self._size, size=batch_size)

    def sample(self, batch_size) -> UnlabeledBatch:
        return UnlabeledBatch(self._images[self._draw(batch_size)])

    def sample_tagged(self, batch_size):
        indices = self._draw(batch_size)
        return UnlabeledBatch(self._images[indices]), self._tags[indices].copy()

    def contents(self) -> np.ndarray:
        """
        Current images, oldest first
        """
        if self._size < self.capacity:
            return self._images[:self._size].copy() if self._images is not None else np.zeros((0,))
        order = (self._cursor + np.arange(self.capacity)) % self.capacity
        return self._images[order].copy()


def buffer_push(buf: SampleBuffer, batch):
    buf.push(batch)


def buffer_sample(buf: SampleBuffer, batch_size) -> UnlabeledBatch:
    return buf.sample(batch_size)
