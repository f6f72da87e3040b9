"""Named-tensor checkpoint container.

Layout (little endian): magic ``b"NGFFP1"``, u32 tensor count, then per
tensor: u32 name length, UTF-8 name, u32 rank, rank x u64 dims, f64 values in
row-major order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError, NffError
from .atomic import atomic_write

MAGIC = b"NGFFP1"
CONFIG_PREFIX = "__config__."


def encode_tensors(tensors: dict) -> bytes:
    parts = [MAGIC, struct.pack("<I", len(tensors))]
    for name in sorted(tensors):
        arr = np.asarray(tensors[name], dtype="<f8")
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)) + raw + struct.pack(f"<I{arr.ndim}Q", arr.ndim, *arr.shape))
        parts.append(arr.tobytes())
    return b"".join(parts)


def decode_tensors(data: bytes) -> dict:
    n = len(data)
    if data[: len(MAGIC)] != MAGIC:
        raise FormatError("not a checkpoint (bad magic)", offset=0)
    off = len(MAGIC)
    if n < off + 4:
        raise FormatError("truncated checkpoint header", offset=n)
    (count,) = struct.unpack_from("<I", data, off)
    off += 4
    out = {}
    for _ in range(count):
        if n < off + 4:
            raise FormatError("truncated tensor record", offset=off)
        (name_len,) = struct.unpack_from("<I", data, off)
        off += 4
        if off + name_len + 4 > n:
            raise FormatError("truncated tensor name", offset=off)
        try:
            name = data[off:off + name_len].decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError("tensor name is not UTF-8", offset=off) from None
        off += name_len
        (rank,) = struct.unpack_from("<I", data, off)
        off += 4
        if rank > 8 or off + 8 * rank > n:
            raise FormatError(f"tensor {name!r}: bad rank {rank}", offset=off - 4)
        dims = struct.unpack_from(f"<{rank}Q", data, off)
        off += 8 * rank
        if any(d > n for d in dims):
            raise FormatError(f"tensor {name!r}: dimension exceeds the file size", offset=off - 8 * rank)
        size = 1
        for d in dims:
            size *= d
        if off + 8 * size > n:
            raise FormatError(f"tensor {name!r} truncated", offset=off)
        if name in out:
            raise FormatError(f"duplicate tensor {name!r}", offset=off)
        out[name] = np.frombuffer(data, dtype="<f8", count=size, offset=off).reshape(dims).astype(np.float64)
        off += 8 * size
    if off != n:
        raise FormatError(f"{n - off} unexpected trailing bytes", offset=off)
    return out


def save_tensors(path, tensors):
    atomic_write(path, encode_tensors(tensors))


def load_tensors(path):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from None
    return decode_tensors(data)


def save_params(path, params):
    """Store force-field parameters together with their numeric configuration."""
    tensors = dict(params.tree())
    for key, value in params.config.to_dict().items():
        tensors[CONFIG_PREFIX + key] = np.asarray(value, dtype=np.float64)
    save_tensors(path, tensors)


def load_params(path):
    from ..nff.model import ForceFieldConfig, ForceFieldParams

    tensors = load_tensors(path)
    defaults = ForceFieldConfig()
    cfg = {}
    for name in [k for k in tensors if k.startswith(CONFIG_PREFIX)]:
        value = tensors.pop(name)
        key = name[len(CONFIG_PREFIX):]
        ref = getattr(defaults, key, None)
        flat = value.ravel()
        if isinstance(ref, tuple):
            cfg[key] = tuple(int(v) for v in flat)
        elif flat.size != 1:
            raise FormatError(f"config entry {key!r} should hold one value, found {flat.size}")
        elif isinstance(ref, int):
            cfg[key] = int(flat[0])
        else:
            cfg[key] = float(flat[0])
    try:
        template = ForceFieldParams.create(ForceFieldConfig.from_dict(cfg), init="zeros")
        extra = set(tensors) - set(template.tree())
        if extra:
            raise FormatError(f"checkpoint has unexpected tensors {sorted(extra)[:5]}")
        return template.with_tree(tensors)
    except FormatError:
        raise
    except (NffError, TypeError, ValueError) as exc:
        raise FormatError(f"checkpoint does not describe a valid model: {exc}") from None
