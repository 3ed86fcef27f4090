import logging

import numpy as np

from ..forge.streams import LabeledBatch
from .baseio import BaseIO

log = logging.getLogger("IADA")

# Seven segment layout: a top, b top right, c bottom right, d bottom, e bottom left, f top left, g middle
SEGMENTS = {
    0: "abcdef",
    1: "bc",
    2: "abged",
    3: "abgcd",
    4: "fgbc",
    5: "afgcd",
    6: "afgedc",
    7: "abc",
    8: "abcdefg",
    9: "abcdfg",
}
SIZE = 28


class TestIO(BaseIO):
    """
    Procedural seven segment digits, a download free stand in for the digit archives

    Stroke width, glyph size, position and intensity are jittered per sample
    """

    def __init__(self, train_size=2000, test_size=500, seed=0, **kwargs) -> None:
        self._sizes = {"train": train_size, "test": test_size}
        self._seed = seed

    def __str__(self):
        return f"TestIO sizes: {self._sizes}, seed: {self._seed}"

    def load(self, split="train") -> LabeledBatch:
        count = self._sizes[split]
        rng = np.random.default_rng([self._seed, 0 if split == "train" else 1])
        labels = rng.permutation(np.arange(count) % 10)
        images = np.stack([draw_digit(int(label), rng) for label in labels])
        log.debug(f"generated {count} synthetic {split} digits")
        return LabeledBatch(images, labels)


def draw_digit(digit, rng) -> np.ndarray:
    image = np.zeros((SIZE, SIZE), dtype=np.float32)
    height = int(rng.integers(16, 21))
    width = int(rng.integers(9, 13))
    stroke = int(rng.integers(2, 4))
    top = (SIZE - height) // 2 + int(rng.integers(-1, 2))
    left = (SIZE - width) // 2 + int(rng.integers(-2, 3))
    intensity = float(rng.uniform(0.75, 1.0))
    middle = top + height // 2 - stroke // 2
    bottom = top + height - stroke
    right = left + width - stroke
    boxes = {
        "a": (top, top + stroke, left, left + width),
        "g": (middle, middle + stroke, left, left + width),
        "d": (bottom, bottom + stroke, left, left + width),
        "f": (top, middle + stroke, left, left + stroke),
        "b": (top, middle + stroke, right, right + stroke),
        "e": (middle, bottom + stroke, left, left + stroke),
        "c": (middle, bottom + stroke, right, right + stroke),
    }
    for segment in SEGMENTS[digit]:
        r0, r1, c0, c1 = boxes[segment]
        image[r0:r1, c0:c1] = intensity
    return image
