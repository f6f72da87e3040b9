"""PLY point clouds: vertex positions plus optional covariance properties."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import FormatError
from .atomic import atomic_write

PLY_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}
COV_NAMES = ("cov_xx", "cov_xy", "cov_xz", "cov_yy", "cov_yz", "cov_zz")
MAX_HEADER = 1 << 16

# fixed 10-colour palette (tab10) indexed by object id
PALETTE = np.array([
    [31, 119, 180], [255, 127, 14], [44, 160, 44], [214, 39, 40], [148, 103, 189],
    [140, 86, 75], [227, 119, 194], [127, 127, 127], [188, 189, 34], [23, 190, 207],
], dtype=np.uint8)


def _parse_header(data):
    end = data.find(b"end_header", 0, MAX_HEADER)
    if not data.startswith(b"ply") or end < 0:
        raise FormatError("not a PLY file (missing 'ply' or 'end_header')", offset=0)
    body = end + len(b"end_header")
    # the header terminator is followed by a single newline (\n or \r\n)
    if data[body:body + 2] == b"\r\n":
        body += 2
    elif data[body:body + 1] == b"\n":
        body += 1
    else:
        raise FormatError("header terminator not followed by a newline", offset=body)
    fmt = None
    elements = []
    offset = 0
    for raw in data[:end].split(b"\n"):
        line = raw.decode("latin-1").strip()
        words = line.split()
        here = offset
        offset += len(raw) + 1
        if not words or words[0] in ("ply", "comment", "obj_info"):
            continue
        if words[0] == "format":
            if len(words) < 2 or words[1] not in ("ascii", "binary_little_endian"):
                raise FormatError(f"unsupported PLY format {line!r}", offset=here)
            fmt = words[1]
        elif words[0] == "element":
            if len(words) != 3 or not (words[2].isascii() and words[2].isdigit()):
                raise FormatError(f"malformed element line {line!r}", offset=here)
            elements.append([words[1], int(words[2]), []])
        elif words[0] == "property":
            if not elements:
                raise FormatError("property before any element", offset=here)
            if len(words) == 5 and words[1] == "list":
                if words[2] not in PLY_TYPES or words[3] not in PLY_TYPES:
                    raise FormatError(f"unknown list property types in {line!r}", offset=here)
                elements[-1][2].append((words[4], "list", PLY_TYPES[words[2]], PLY_TYPES[words[3]]))
            elif len(words) == 3 and words[1] in PLY_TYPES:
                elements[-1][2].append((words[2], PLY_TYPES[words[1]]))
            else:
                raise FormatError(f"malformed property line {line!r}", offset=here)
        else:
            raise FormatError(f"unexpected header line {line!r}", offset=here)
    if fmt is None:
        raise FormatError("PLY header lacks a format line", offset=0)
    for name, _, props in elements:
        names = [p[0] for p in props]
        if len(set(names)) != len(names):
            raise FormatError(f"element {name!r} repeats a property name", offset=0)
        if name == "vertex" and not all(a in names for a in "xyz"):
            raise FormatError("vertex element lacks x, y or z", offset=0)
    return fmt, elements, body


def _binary_vertices(data, elements, off):
    for name, count, props in elements:
        if any(len(p) == 4 for p in props):
            if name == "vertex":
                raise FormatError("list properties on vertices are not supported", offset=off)
            if count and name != "vertex":
                # list elements after the vertices are never read; before them we cannot size them
                raise FormatError(f"cannot skip list element {name!r} before the vertices", offset=off)
        dtype = np.dtype([(p[0], "<" + p[1]) for p in props])
        size = dtype.itemsize * count
        if off + size > len(data):
            have = (len(data) - off) // dtype.itemsize if dtype.itemsize else 0
            raise FormatError(f"element {name!r} declares {count} rows but only {have} are present",
                              offset=off + have * dtype.itemsize)
        if name == "vertex":
            return np.frombuffer(data, dtype=dtype, count=count, offset=off)
        off += size
    raise FormatError("PLY file has no vertex element", offset=0)


def _ascii_vertices(data, elements, off):
    lines = data[off:].split(b"\n")
    row = 0
    pos = off
    for name, count, props in elements:
        if name != "vertex":
            if any(len(p) == 4 for p in props):
                raise FormatError(f"cannot skip list element {name!r} before the vertices", offset=pos)
            for _ in range(count):
                if row >= len(lines):
                    raise FormatError(f"element {name!r} truncated", offset=pos)
                pos += len(lines[row]) + 1
                row += 1
            continue
        if any(len(p) == 4 for p in props):
            raise FormatError("list properties on vertices are not supported", offset=pos)
        dtype = np.dtype([(p[0], p[1]) for p in props])
        out = np.zeros(count, dtype=dtype)
        casts = [int if dtype[j].kind in "iu" else float for j in range(len(props))]
        for i in range(count):
            line = lines[row] if row < len(lines) else b""
            words = line.split()
            if len(words) < len(props):
                raise FormatError(f"vertex {i} of {count} is missing or short", offset=pos)
            try:
                out[i] = tuple(c(w) for c, w in zip(casts, words))
            except (ValueError, OverflowError):
                raise FormatError(f"vertex {i} has a non-numeric value", offset=pos) from None
            pos += len(line) + 1
            row += 1
        return out
    raise FormatError("PLY file has no vertex element", offset=0)


def parse_ply(data: bytes):
    fmt, elements, body = _parse_header(data)
    if fmt == "binary_little_endian":
        verts = _binary_vertices(data, elements, body)
    else:
        verts = _ascii_vertices(data, elements, body)
    names = verts.dtype.names or ()
    if not all(a in names for a in "xyz"):
        raise FormatError("vertex element lacks x, y or z", offset=0)
    with np.errstate(invalid="ignore"):  # signalling NaNs warn on widening
        pos = np.stack([verts[a].astype(np.float64) for a in "xyz"], axis=1)
        cov = None
        if all(c in names for c in COV_NAMES):
            xx, xy, xz, yy, yz, zz = (verts[c].astype(np.float64) for c in COV_NAMES)
            cov = np.stack([np.stack([xx, xy, xz], -1), np.stack([xy, yy, yz], -1), np.stack([xz, yz, zz], -1)], axis=1)
    if not np.isfinite(pos).all() or (cov is not None and not np.isfinite(cov).all()):
        raise FormatError("non-finite vertex value", offset=0)
    return pos, cov


def load_ply_points(path):
    """Positions ``(N, 3)`` and covariances ``(N, 3, 3)`` or None."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from None
    return parse_ply(data)


def encode_ply(points, colors=None, cov=None, binary=True):
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    fields = [("x", "<f4"), ("y", "<f4"), ("z", "<f4")]
    if colors is not None:
        fields += [("red", "u1"), ("green", "u1"), ("blue", "u1")]
    if cov is not None:
        fields += [(c, "<f4") for c in COV_NAMES]
    rec = np.zeros(n, dtype=np.dtype(fields))
    for i, a in enumerate("xyz"):
        rec[a] = points[:, i]
    if colors is not None:
        colors = np.broadcast_to(np.asarray(colors, dtype=np.uint8), (n, 3))
        rec["red"], rec["green"], rec["blue"] = colors[:, 0], colors[:, 1], colors[:, 2]
    if cov is not None:
        cov = np.asarray(cov)
        for c, (i, j) in zip(COV_NAMES, [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]):
            rec[c] = cov[:, i, j]
    kinds = {"<f4": "float", "u1": "uchar"}
    head = ["ply", f"format {'binary_little_endian' if binary else 'ascii'} 1.0", f"element vertex {n}"]
    head += [f"property {kinds[t]} {name}" for name, t in fields]
    head.append("end_header")
    text = ("\n".join(head) + "\n").encode("ascii")
    if binary:
        return text + rec.tobytes()
    rows = [" ".join(repr(float(v)) if rec.dtype[name].kind == "f" else str(int(v))
                     for name, v in zip(rec.dtype.names, r)) for r in rec]
    return text + ("\n".join(rows) + ("\n" if rows else "")).encode("ascii")


def write_ply(path, points, colors=None, cov=None, binary=True):
    atomic_write(path, encode_ply(points, colors, cov, binary))


def export_frames_ply(traj, directory, binary=True):
    """One PLY per frame named ``frame_0000.ply`` ..., points coloured by object id."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if traj is None or traj.n_objects == 0:
        return []
    width = max(4, len(str(traj.n_frames - 1)))
    colors = np.concatenate([np.repeat(PALETTE[k % len(PALETTE)][None], m, axis=0)
                             for k, m in enumerate(traj.keypoint_counts)])
    paths = []
    for t in range(traj.n_frames):
        pts = np.concatenate([np.asarray(x[t], dtype=np.float64) for x in traj.keypoints])
        p = directory / f"frame_{t:0{width}d}.ply"
        write_ply(p, pts, colors, binary=binary)
        paths.append(p)
    return paths
