import gzip
import logging
import os
import struct

import numpy as np

from ..exceptions import ResourceError
from ..forge.streams import LabeledBatch
from .baseio import BaseIO

log = logging.getLogger("IADA")

IDX_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}
IDX_UBYTE = 0x08


def read_idx(path) -> np.ndarray:
    """
    Decode an idx archive: 2 zero bytes, dtype code, ndim, big-endian uint32 dims,
    row-major payload
    """
    opener = gzip.open if path.endswith(".gz") else open
    try:
        with opener(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise ResourceError(f"unable to read idx archive {path}: {e}") from e
    if len(data) < 4:
        raise ResourceError(f"{path} is too short to be an idx archive")
    zero, dtype_code, ndim = struct.unpack(">HBB", data[:4])
    if zero != 0 or dtype_code != IDX_UBYTE:
        raise ResourceError(f"{path} is not an unsigned byte idx archive (magic {data[:4].hex()})")
    dims = struct.unpack(f">{ndim}I", data[4:4 + 4 * ndim])
    offset = 4 + 4 * ndim
    expected = int(np.prod(dims))
    if len(data) - offset != expected:
        raise ResourceError(f"{path} holds {len(data) - offset} bytes, dims {dims} need {expected}")
    log.debug(f"read idx archive {path} with dims {dims}")
    return np.frombuffer(data, dtype=np.uint8, offset=offset).reshape(dims)


class IdxIO(BaseIO):
    def __init__(self, data_dir) -> None:
        self._data_dir = data_dir

    def __str__(self):
        return f"IdxIO data_dir: {self._data_dir}"

    def _find(self, name) -> str:
        for candidate in (name, name + ".gz"):
            path = os.path.join(self._data_dir, candidate)
            if os.path.exists(path):
                return path
        raise ResourceError(f"digit archive {name} not found in {self._data_dir}")

    def load(self, split="train") -> LabeledBatch:
        if split not in IDX_FILES:
            raise ResourceError(f"unknown split {split}")
        if self._data_dir is None or not os.path.isdir(self._data_dir):
            raise ResourceError(f"base dataset directory {self._data_dir} does not exist")
        image_file, label_file = IDX_FILES[split]
        images = read_idx(self._find(image_file))
        labels = read_idx(self._find(label_file))
        if images.ndim != 3 or labels.shape != (images.shape[0],):
            raise ResourceError(f"image / label archives for {split} do not match")
        log.info(f"loaded {len(labels)} {split} digits from {self._data_dir}")
        return LabeledBatch(images.astype(np.float32) / 255.0, labels.astype(np.int64))
