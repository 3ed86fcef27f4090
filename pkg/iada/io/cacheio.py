"""
Realized domain cache files

header (little endian): magic 'IADD', factor f64, count u32, H u32, W u32, seed i64, has_labels u8
payload: count * H * W float32 pixels, then count uint8 labels when has_labels
"""
import logging
import os
import struct

import numpy as np

from ..exceptions import ResourceError
from ..forge.domains import DomainSpec
from ..forge.streams import DomainStream
from .atomic import atomic_write

log = logging.getLogger("IADA")

MAGIC = b"IADD"
HEADER = struct.Struct("<4sdIIIqB")


def domain_filename(index, labeled=False) -> str:
    suffix = "_test" if labeled else ""
    return f"domain_{index}{suffix}.bin"


def write_domain(path, stream: DomainStream):
    batch = stream.materialize()
    count, height, width = batch.images.shape
    labels = getattr(batch, "labels", None)
    header = HEADER.pack(
        MAGIC, stream.spec.factor, count, height, width, stream.spec.seed, labels is not None
    )
    with atomic_write(path) as f:
        f.write(header)
        f.write(batch.images.astype("<f4").tobytes())
        if labels is not None:
            f.write(labels.astype(np.uint8).tobytes())
    log.info(f"cached domain {stream.spec.index} (factor {stream.spec.factor}, {count} images) to {path}")


def read_domain(path, index=0) -> DomainStream:
    if not os.path.exists(path):
        raise ResourceError(f"domain cache {path} not found")
    with open(path, "rb") as f:
        data = f.read()
    magic, factor, count, height, width, seed, has_labels = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ResourceError(f"{path} is not a domain cache file")
    pixels = count * height * width
    offset = HEADER.size
    images = np.frombuffer(data, dtype="<f4", count=pixels, offset=offset).reshape(count, height, width)
    labels = None
    if has_labels:
        labels = np.frombuffer(data, dtype=np.uint8, count=count, offset=offset + 4 * pixels)
        labels = labels.astype(np.int64)
    spec = DomainSpec(factor=factor, index=index, seed=seed)
    return DomainStream(spec, images.astype(np.float32), labels)
