"""Binary trajectory container.

Layout (little endian)::

    magic    b"GSTRJ1"
    version  u32 (= 1)
    K, T     u32, u32
    M_k      K x u32
    frame_dt f64
    flags    u32   bits 0-1: split tag index
    ref_len  u32, then ref_len bytes of UTF-8 scene reference
    T frames, each: for every object k
        x (M_k x 3 f32), x_dot (M_k x 3 f32), c, c_dot, theta, theta_dot (3 f64 each)
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..core.types import SPLIT_TAGS, Trajectory
from ..errors import FormatError, NffError
from .atomic import atomic_write

MAGIC = b"GSTRJ1"
VERSION = 1
MAX_REF = 4096


def _frame_dtype(counts):
    fields = []
    for k, m in enumerate(counts):
        fields += [(f"x{k}", "<f4", (m, 3)), (f"v{k}", "<f4", (m, 3)), (f"s{k}", "<f8", (4, 3))]
    return np.dtype(fields)


def frame_size(counts):
    return sum(24 * int(m) + 96 for m in counts)


def encode_trajectory(traj: Trajectory) -> bytes:
    counts = traj.keypoint_counts
    T, K = traj.n_frames, traj.n_objects
    ref = traj.scene_ref.encode("utf-8")[:MAX_REF]
    head = MAGIC + struct.pack(f"<III{K}IdII", VERSION, K, T, *counts, float(traj.frame_dt),
                               SPLIT_TAGS.index(traj.split_tag), len(ref)) + ref
    if K == 0:
        return head
    rec = np.zeros(T, dtype=_frame_dtype(counts))
    for k in range(K):
        rec[f"x{k}"] = traj.keypoints[k]
        rec[f"v{k}"] = traj.keypoint_velocities[k]
        rec[f"s{k}"] = np.stack([traj.com[:, k], traj.com_velocity[:, k], traj.orientation[:, k],
                                 traj.angular_velocity[:, k]], axis=1)
    return head + rec.tobytes()


def decode_trajectory(data: bytes) -> Trajectory:
    n = len(data)
    if n < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise FormatError("not a trajectory file (bad magic)", offset=0)
    off = len(MAGIC)
    if n < off + 12:
        raise FormatError("truncated header", offset=n)
    version, K, T = struct.unpack_from("<III", data, off)
    if version != VERSION:
        raise FormatError(f"unsupported trajectory version {version}", offset=off)
    off += 12
    if K > (n - off) // 4:
        raise FormatError(f"header declares {K} objects but the file is too short", offset=off)
    counts = list(struct.unpack_from(f"<{K}I", data, off))
    off += 4 * K
    if n < off + 16:
        raise FormatError("truncated header", offset=n)
    frame_dt, flags, ref_len = struct.unpack_from("<dII", data, off)
    off += 16
    if not (np.isfinite(frame_dt) and frame_dt > 0):
        raise FormatError(f"invalid frame_dt {frame_dt}", offset=off - 16)
    if flags >= len(SPLIT_TAGS):
        raise FormatError(f"unknown flags {flags:#x}", offset=off - 8)
    if ref_len > MAX_REF or off + ref_len > n:
        raise FormatError(f"scene reference of {ref_len} bytes does not fit", offset=off - 4)
    try:
        ref = data[off:off + ref_len].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError("scene reference is not UTF-8", offset=off + exc.start) from None
    off += ref_len
    if T < 2:
        raise FormatError(f"trajectory needs at least 2 frames, header says {T}", offset=len(MAGIC) + 8)
    fsize = frame_size(counts)
    expected = off + T * fsize
    if n < expected:
        frame = (n - off) // fsize if fsize else 0
        raise FormatError(f"file truncated in frame {frame} of {T}", offset=off + frame * fsize)
    if n > expected:
        raise FormatError(f"{n - expected} unexpected trailing bytes", offset=expected)
    if K == 0:
        zeros = np.zeros((T, 0, 3))
        return Trajectory([], [], zeros, zeros.copy(), zeros.copy(), zeros.copy(), frame_dt, ref, SPLIT_TAGS[flags])
    rec = np.frombuffer(data, dtype=_frame_dtype(counts), count=T, offset=off)
    state = np.stack([rec[f"s{k}"] for k in range(K)], axis=1).astype(np.float64)  # (T, K, 4, 3)
    try:
        return Trajectory(
            keypoints=[rec[f"x{k}"].astype(np.float32) for k in range(K)],
            keypoint_velocities=[rec[f"v{k}"].astype(np.float32) for k in range(K)],
            com=state[:, :, 0].copy(), com_velocity=state[:, :, 1].copy(),
            orientation=state[:, :, 2].copy(), angular_velocity=state[:, :, 3].copy(),
            frame_dt=frame_dt, scene_ref=ref, split_tag=SPLIT_TAGS[flags])
    except NffError as exc:
        raise FormatError(f"inconsistent trajectory: {exc}", offset=off) from None


def save_trajectory(traj: Trajectory, path):
    atomic_write(path, encode_trajectory(traj))


def load_trajectory(path):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from None
    return decode_trajectory(data)
