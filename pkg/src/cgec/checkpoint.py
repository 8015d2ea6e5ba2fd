"""Binary tensor container and model checkpoints.

Layout (little-endian): magic ``SQMD``, u32 format version, u32 tensor count;
then per tensor a u32 name length, the UTF-8 name, u32 rank, u64 dims and the
float32 values in row-major order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import torch

from .core import CgecError, PipelineConfig, PosTagSet, Vocab

MAGIC = b"SQMD"
VERSION = 1


class CheckpointError(CgecError, OSError):
    pass


def write_tensors(path, tensors: Mapping[str, np.ndarray]) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(tensors)))
        for name, arr in tensors.items():
            arr = np.ascontiguousarray(np.asarray(arr, dtype="<f4"))
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            fh.write(arr.tobytes())


def read_tensors(path) -> dict[str, np.ndarray]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if data[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    try:
        version, count = struct.unpack_from("<II", data, 4)
        if version != VERSION:
            raise CheckpointError(f"{path}: unsupported format version {version}")
        off = 12
        out = {}
        for _ in range(count):
            (n,) = struct.unpack_from("<I", data, off)
            name = data[off + 4: off + 4 + n].decode("utf-8")
            off += 4 + n
            (rank,) = struct.unpack_from("<I", data, off)
            dims = struct.unpack_from(f"<{rank}Q", data, off + 4)
            off += 4 + 8 * rank
            size = int(np.prod(dims, dtype=np.int64))
            if off + 4 * size > len(data):
                raise CheckpointError(f"{path}: truncated tensor {name!r}")
            out[name] = np.frombuffer(data, dtype="<f4", count=size, offset=off).reshape(dims).copy()
            off += 4 * size
    except (struct.error, UnicodeDecodeError, ValueError) as exc:
        raise CheckpointError(f"{path}: corrupt checkpoint ({exc})") from exc
    return out


def text_tensor(text: str) -> np.ndarray:
    return np.frombuffer(text.encode("utf-8"), dtype=np.uint8).astype(np.float32)


def tensor_text(arr: np.ndarray) -> str:
    return bytes(arr.astype(np.uint8).tolist()).decode("utf-8")


# -- models ----------------------------------------------------------------------


def model_meta(model) -> dict:
    return {
        "config": model.cfg.to_dict(),
        "vocab": model.vocab.user_tokens(),
        "tags": list(model.tagset.tags),
        "class_alphabets": model.class_alphabets,
    }


def model_tensors(model, extra: Mapping[str, np.ndarray] | None = None) -> dict[str, np.ndarray]:
    tensors = {"meta.json": text_tensor(json.dumps(model_meta(model), ensure_ascii=False, sort_keys=True))}
    for name, value in model.state_dict().items():
        tensors["model." + name] = value.detach().cpu().float().numpy()
    tensors.update(extra or {})
    return tensors


def save_model(model, path, extra: Mapping[str, np.ndarray] | None = None) -> None:
    write_tensors(path, model_tensors(model, extra))


def model_from_tensors(tensors: Mapping[str, np.ndarray]):
    from .model.network import GecModel

    if "meta.json" not in tensors:
        raise CheckpointError("checkpoint has no model metadata")
    meta = json.loads(tensor_text(tensors["meta.json"]))
    model = GecModel(
        PipelineConfig.from_dict(meta["config"]),
        Vocab(meta["vocab"]),
        PosTagSet(tuple(meta["tags"])),
        meta["class_alphabets"],
    )
    state = {k[len("model."):]: torch.from_numpy(v.copy()) for k, v in tensors.items() if k.startswith("model.")}
    try:
        model.load_state_dict(state, strict=True)
    except RuntimeError as exc:
        raise CheckpointError(f"checkpoint does not fit the model: {exc}") from exc
    model.eval()
    return model


def load_model(path):
    return model_from_tensors(read_tensors(path))


def average_tensors(paths: Sequence) -> dict[str, np.ndarray]:
    """Element-wise mean of every model tensor across checkpoint files."""
    if not paths:
        raise CheckpointError("need at least one checkpoint to average")
    loaded = [read_tensors(p) for p in paths]
    first = loaded[0]
    out = {}
    for name, ref in first.items():
        arrays = []
        for p, tensors in zip(paths, loaded):
            if name not in tensors:
                raise CheckpointError(f"tensor {name!r} missing from {p}")
            if tensors[name].shape != ref.shape:
                raise CheckpointError(f"tensor {name!r} has shape {tensors[name].shape} in {p}, expected {ref.shape}")
            arrays.append(tensors[name])
        if not name.startswith("model."):
            if any(not np.array_equal(a, ref) for a in arrays):
                raise CheckpointError(f"metadata tensor {name!r} differs between checkpoints")
            out[name] = ref
            continue
        # sorting per element makes the sum independent of argument order
        stack = np.sort(np.stack(arrays).astype(np.float64), axis=0)
        out[name] = (stack.sum(axis=0) / len(arrays)).astype(np.float32)
    for p, tensors in zip(paths, loaded):
        extra = set(tensors) - set(first)
        if extra:
            raise CheckpointError(f"tensor {sorted(extra)[0]!r} in {p} missing from {paths[0]}")
    return out


def average_checkpoints(paths: Sequence):
    return model_from_tensors(average_tensors(paths))
