"""
Bundle checkpoints

file layout: b'IADACKPT', manifest length (u32 little endian), JSON manifest,
then every tensor as raw little-endian float32 in manifest order
"""
import json
import logging
import os
import struct

import numpy as np
import torch

from ..exceptions import MissingPrerequisiteError, ResourceError
from ..io.atomic import atomic_write
from .models import Discriminator, Encoder, Generator, Head, ModelBundle

log = logging.getLogger("IADA")

MAGIC = b"IADACKPT"
FORMAT_VERSION = 1
LENGTH = struct.Struct("<I")


def build_manifest(bundle: ModelBundle) -> dict:
    components = {}
    offset = 0
    for name, module in bundle.components().items():
        entries = []
        for key, tensor in module.state_dict().items():
            entries.append({"key": key, "shape": list(tensor.shape), "offset": offset})
            offset += tensor.numel() * 4
        components[name] = entries
    return {
        "format": FORMAT_VERSION,
        "stage": bundle.stage,
        "seed": bundle.seed,
        "noise_dim": bundle.noise_dim,
        "input_shape": list(bundle.source_encoder.input_shape),
        "warnings": list(bundle.warnings),
        "components": components,
    }


def save_bundle(bundle: ModelBundle, path) -> dict:
    manifest = build_manifest(bundle)
    header = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with atomic_write(path) as f:
        f.write(MAGIC)
        f.write(LENGTH.pack(len(header)))
        f.write(header)
        for module in bundle.components().values():
            for tensor in module.state_dict().values():
                f.write(tensor.detach().cpu().numpy().astype("<f4").tobytes())
    log.info(f"saved {bundle.stage} bundle to {path}")
    return manifest


def read_manifest(path) -> dict:
    return _read(path)[0]


def _read(path):
    if not os.path.exists(path):
        raise MissingPrerequisiteError(f"checkpoint {path} does not exist")
    with open(path, "rb") as f:
        data = f.read()
    if data[:len(MAGIC)] != MAGIC:
        raise ResourceError(f"{path} is not a bundle checkpoint")
    (length,) = LENGTH.unpack_from(data, len(MAGIC))
    start = len(MAGIC) + LENGTH.size
    manifest = json.loads(data[start:start + length].decode("utf-8"))
    if manifest.get("format") != FORMAT_VERSION:
        raise ResourceError(f"{path} has unsupported checkpoint format {manifest.get('format')}")
    return manifest, data[start + length:]


def load_bundle(path) -> ModelBundle:
    manifest, payload = _read(path)
    components = manifest["components"]
    modules = {
        "source_encoder": Encoder(manifest["input_shape"]),
        "target_encoder": Encoder(manifest["input_shape"]),
        "head": Head(),
        "discriminator": Discriminator(),
    }
    if "generator" in components:
        modules["generator"] = Generator(manifest["noise_dim"])
    for name, module in modules.items():
        state = {}
        for entry in components[name]:
            count = int(np.prod(entry["shape"])) if entry["shape"] else 1
            array = np.frombuffer(payload, dtype="<f4", count=count, offset=entry["offset"])
            state[entry["key"]] = torch.from_numpy(array.astype(np.float32).reshape(entry["shape"]))
        module.load_state_dict(state)
    bundle = ModelBundle(
        source_encoder=modules["source_encoder"],
        target_encoder=modules["target_encoder"],
        head=modules["head"],
        discriminator=modules["discriminator"],
        generator=modules.get("generator"),
        stage=manifest["stage"],
        seed=manifest["seed"],
        noise_dim=manifest["noise_dim"],
        warnings=list(manifest.get("warnings", [])),
    )
    log.info(f"loaded {bundle.stage} bundle from {path}")
    return bundle
