"""Single-file checkpoint archive: JSON manifest header + raw tensor bytes.

Layout: 4-byte magic, uint32 format version, uint64 manifest length,
manifest JSON, then tensor data at the offsets the manifest records.
All tensors are stored little-endian; round trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import torch

from .config import EncoderConfig, GeneratorConfig, ModelConfig
from .errors import CheckpointError, CheckpointVersionError

MAGIC = b"SKST"
VERSION = 1

_DTYPES = {"float32": "<f4", "int64": "<i8", "uint8": "|u1"}


def _tensor_entries(module: torch.nn.Module):
    for name, t in list(module.state_dict().items()):
        yield name, t


def save_checkpoint(model: torch.nn.Module, path: str | Path,
                    extra: dict | None = None) -> Path:
    """Write a model (Generator or ConditionalModel) to a checkpoint archive."""
    from .generator import Generator
    from .model import ConditionalModel

    if isinstance(model, ConditionalModel):
        kind, config = "conditional", model.config.to_dict()
    elif isinstance(model, Generator):
        kind, config = "generator", {"model": model.config.to_dict()}
    else:
        raise CheckpointError(f"cannot checkpoint {type(model).__name__}")

    entries = []
    blobs = []
    offset = 0
    for name, t in _tensor_entries(model):
        arr = t.detach().cpu().numpy()
        dtype = str(arr.dtype)
        if dtype not in _DTYPES:
            raise CheckpointError(f"unsupported dtype {dtype} for {name}")
        raw = np.ascontiguousarray(arr).astype(_DTYPES[dtype], copy=False).tobytes()
        entries.append({"name": name, "shape": list(arr.shape), "dtype": dtype,
                        "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)

    manifest = {"kind": kind, "config": config, "tensors": entries,
                "extra": extra or {}}
    mbytes = json.dumps(manifest).encode()

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<Q", len(mbytes)))
        f.write(mbytes)
        for raw in blobs:
            f.write(raw)
    return path


def read_manifest(path: str | Path) -> tuple[dict, int]:
    with open(path, "rb") as f:
        head = f.read(4)
        if head != MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint archive")
        (version,) = struct.unpack("<I", f.read(4))
        if version != VERSION:
            raise CheckpointVersionError(f"{path}: unknown format version {version}")
        (mlen,) = struct.unpack("<Q", f.read(8))
        manifest = json.loads(f.read(mlen))
        data_start = 4 + 4 + 8 + mlen
    return manifest, data_start


def _load_tensors(path: Path, manifest: dict, data_start: int) -> dict[str, torch.Tensor]:
    out = {}
    with open(path, "rb") as f:
        for e in manifest["tensors"]:
            f.seek(data_start + e["offset"])
            raw = f.read(e["nbytes"])
            if len(raw) != e["nbytes"]:
                raise CheckpointError(f"{path}: truncated data for {e['name']}")
            arr = np.frombuffer(raw, dtype=_DTYPES[e["dtype"]]).reshape(e["shape"])
            out[e["name"]] = torch.from_numpy(arr.astype(e["dtype"], copy=True))
    return out


def load_checkpoint(path: str | Path, expect_config: ModelConfig | GeneratorConfig | None = None):
    """Reconstruct the checkpointed model; round trip is bit-exact.

    When expect_config is given it must match the archived config exactly.
    """
    from .generator import Generator
    from .model import ConditionalModel

    path = Path(path)
    manifest, data_start = read_manifest(path)
    config = manifest["config"]

    if manifest["kind"] == "generator":
        gen_config = GeneratorConfig.from_dict(config["model"])
        if expect_config is not None:
            want = expect_config if isinstance(expect_config, GeneratorConfig) \
                else expect_config.generator
            if want.to_dict() != gen_config.to_dict():
                raise CheckpointError("archived generator config does not match")
        model = Generator(gen_config)
    elif manifest["kind"] == "conditional":
        model_config = ModelConfig.from_dict(config)
        if expect_config is not None:
            if not isinstance(expect_config, ModelConfig) or \
                    expect_config.to_dict() != model_config.to_dict():
                raise CheckpointError("archived model config does not match")
        model = ConditionalModel(model_config.generator, model_config.encoder)
    else:
        raise CheckpointError(f"unknown archive kind {manifest['kind']!r}")

    tensors = _load_tensors(path, manifest, data_start)
    state = model.state_dict()
    if set(state) != set(tensors):
        missing = set(state) ^ set(tensors)
        raise CheckpointError(f"manifest/tensor name mismatch: {sorted(missing)[:5]}")
    for name, t in tensors.items():
        if tuple(state[name].shape) != tuple(t.shape):
            raise CheckpointError(f"shape mismatch for {name}")
    model.load_state_dict(tensors)
    return model
