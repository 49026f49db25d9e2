"""Binary checkpoint container.

Layout (all integers little-endian)::

    magic "WFCKPT\\0\\0" | u32 version | u32 header length | header (sorted JSON)
    | u32 record count | records | u32 crc32 of everything before it

Each record is ``u16 name length | name | u8 ndim | u32 dims... | float32 payload``.
Record names are ``param/<id>``, ``adam/<optimizer>/m/<id>`` and ``adam/<optimizer>/v/<id>``.
"""
from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from wavefill.errors import CorruptPayload, VersionMismatch

MAGIC = b"WFCKPT\x00\x00"
VERSION = 1


@dataclass
class Checkpoint:
    tensors: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)


def encode(checkpoint: Checkpoint, version: int = VERSION) -> bytes:
    header = json.dumps(checkpoint.meta, sort_keys=True, separators=(",", ":")).encode()
    chunks = [MAGIC, struct.pack("<II", version, len(header)), header,
              struct.pack("<I", len(checkpoint.tensors))]
    for name in sorted(checkpoint.tensors):
        array = np.asarray(checkpoint.tensors[name])
        raw_name = name.encode()
        chunks.append(struct.pack("<H", len(raw_name)) + raw_name)
        chunks.append(struct.pack(f"<B{array.ndim}I", array.ndim, *array.shape))
        chunks.append(array.astype("<f4").tobytes())
    body = b"".join(chunks)
    return body + struct.pack("<I", zlib.crc32(body))


def decode(blob: bytes) -> Checkpoint:
    if not blob.startswith(MAGIC):
        raise CorruptPayload("not a checkpoint file")
    if len(blob) < len(MAGIC) + 16:
        raise CorruptPayload("checkpoint truncated")
    body, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) != crc:
        raise CorruptPayload("checksum mismatch (truncated or modified file)")
    offset = len(MAGIC)
    version, header_len = struct.unpack_from("<II", body, offset)
    if version != VERSION:
        raise VersionMismatch(f"checkpoint version {version}, expected {VERSION}")
    offset += 8
    meta = json.loads(body[offset:offset + header_len])
    offset += header_len
    (count,) = struct.unpack_from("<I", body, offset)
    offset += 4
    tensors = {}
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", body, offset)
            offset += 2
            name = body[offset:offset + name_len].decode()
            offset += name_len
            (ndim,) = struct.unpack_from("<B", body, offset)
            offset += 1
            shape = struct.unpack_from(f"<{ndim}I", body, offset)
            offset += 4 * ndim
            size = int(np.prod(shape))
            data = np.frombuffer(body, dtype="<f4", count=size, offset=offset)
            tensors[name] = data.astype(np.float32).reshape(shape)
            offset += 4 * size
    except (struct.error, ValueError) as exc:
        raise CorruptPayload(f"malformed record: {exc}") from exc
    if offset != len(body):
        raise CorruptPayload("unexpected trailing bytes")
    return Checkpoint(tensors, meta)


def save_checkpoint(path, checkpoint: Checkpoint) -> None:
    Path(path).write_bytes(encode(checkpoint))


def load_checkpoint(path) -> Checkpoint:
    return decode(Path(path).read_bytes())


def collect(models: dict, optimizers: dict, meta: dict) -> Checkpoint:
    """Snapshot ``models`` (prefix -> Module) and ``optimizers`` (name -> Adam)."""
    tensors = {}
    for prefix, model in models.items():
        for name, p in model.named_parameters(prefix):
            tensors[f"param/{name}"] = p.data
    opt_meta = {}
    for opt_name, opt in optimizers.items():
        state = opt.state
        opt_meta[opt_name] = {"step": state.step, "lr": state.learning_rate,
                              "beta1": state.beta1, "beta2": state.beta2, "eps": state.epsilon}
        for name, m in state.first_moment.items():
            tensors[f"adam/{opt_name}/m/{name}"] = m
        for name, v in state.second_moment.items():
            tensors[f"adam/{opt_name}/v/{name}"] = v
    return Checkpoint(tensors, {**meta, "optimizers": opt_meta})


def restore(checkpoint: Checkpoint, models: dict, optimizers: dict | None = None) -> None:
    """Load parameters (and optimizer moments) in place; every parameter must be present."""
    for prefix, model in models.items():
        for name, p in model.named_parameters(prefix):
            key = f"param/{name}"
            if key not in checkpoint.tensors:
                raise CorruptPayload(f"checkpoint lacks {key}")
            value = checkpoint.tensors[key]
            if value.shape != p.shape:
                raise CorruptPayload(f"{key}: shape {value.shape} != {p.shape}")
            p.data = value.astype(p.dtype)
            p.grad = None
    for opt_name, opt in (optimizers or {}).items():
        info = checkpoint.meta.get("optimizers", {}).get(opt_name)
        if info is None:
            raise CorruptPayload(f"checkpoint lacks optimizer {opt_name}")
        state = opt.state
        state.step = int(info["step"])
        state.first_moment.clear()
        state.second_moment.clear()
        for name, p in opt.params.items():
            m = checkpoint.tensors.get(f"adam/{opt_name}/m/{name}")
            v = checkpoint.tensors.get(f"adam/{opt_name}/v/{name}")
            if m is not None:
                state.first_moment[name] = m.astype(p.dtype)
                state.second_moment[name] = v.astype(p.dtype)
