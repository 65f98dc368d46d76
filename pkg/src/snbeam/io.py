"""File formats and run manifests.

SNB1 tensor format (little-endian throughout):

    offset  size  field
    0       4     magic b"SNB1"
    4       2     version, u16 (currently 1)
    6       1     dtype code, u8: 1 = f32, 2 = f64, 3 = c64
    7       1     rank, u8
    8       8*r   dims, u64 each
    ...           payload, row-major

The "c64" code means a complex number with 64-bit float components
(numpy complex128); it mirrors the f64 naming.  Every writer also emits
a JSON sidecar ``<file>.json`` carrying the manifest hash chain.

Writes are atomic (temp file + rename) and contain no timestamps, so a
rerun with identical inputs and seeds is byte-identical.
"""

import csv
import hashlib
import io as _io
import json
import os
import struct

import numpy as np

__all__ = [
    "write_tensor",
    "read_tensor",
    "write_pgm",
    "read_pgm",
    "write_csv",
    "read_csv",
    "write_manifest",
    "read_manifest",
    "config_digest",
    "file_digest",
    "TOOL_VERSION",
]

TOOL_VERSION = "snbeam 0.1.0"

_MAGIC = b"SNB1"
_VERSION = 1
_DTYPE_CODES = {1: np.dtype("<f4"), 2: np.dtype("<f8"), 3: np.dtype("<c16")}
_CODE_FOR = {np.dtype("float32"): 1, np.dtype("float64"): 2, np.dtype("complex128"): 3}


def _atomic_write(path, payload):
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def write_tensor(path, array):
    """Serialize an array to SNB1.  Allowed dtypes: f32, f64, c64."""
    a = np.asarray(array)
    if a.dtype == np.dtype("complex64"):
        a = a.astype(np.complex128)
    if a.dtype not in _CODE_FOR:
        if np.issubdtype(a.dtype, np.integer) or a.dtype == bool:
            a = a.astype(np.float64)
        else:
            raise ValueError(f"unsupported dtype {a.dtype}")
    code = _CODE_FOR[a.dtype]
    buf = _io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<HBB", _VERSION, code, a.ndim))
    buf.write(struct.pack(f"<{a.ndim}Q", *a.shape))
    buf.write(np.ascontiguousarray(a).astype(a.dtype.newbyteorder("<")).tobytes())
    _atomic_write(path, buf.getvalue())
    return path


def read_tensor(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise ValueError(f"{path}: not an SNB1 file")
    version, code, rank = struct.unpack_from("<HBB", data, 4)
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported SNB1 version {version}")
    if code not in _DTYPE_CODES:
        raise ValueError(f"{path}: unknown dtype code {code}")
    dims = struct.unpack_from(f"<{rank}Q", data, 8)
    offset = 8 + 8 * rank
    arr = np.frombuffer(data, dtype=_DTYPE_CODES[code], offset=offset)
    want = int(np.prod(dims)) if rank else 1
    if arr.size != want:
        raise ValueError(f"{path}: payload holds {arr.size} values, header says {want}")
    return arr.reshape(dims).copy()


def write_pgm(path, image):
    """8-bit binary PGM (P5) of an image already scaled to [0, 1]."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError("PGM output needs a 2-D image")
    pix = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)
    h, w = pix.shape
    _atomic_write(path, f"P5\n{w} {h}\n255\n".encode() + pix.tobytes())
    return path


def read_pgm(path):
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"P5":
            raise ValueError(f"{path}: not a binary PGM")
        line = fh.readline()
        while line.startswith(b"#"):
            line = fh.readline()
        w, h = map(int, line.split())
        maxval = int(fh.readline())
        raw = fh.read(w * h)
    return np.frombuffer(raw, dtype=np.uint8).reshape(h, w) / maxval


def write_csv(path, header, rows):
    """RFC-4180 CSV with CRLF line endings, written atomically."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    _atomic_write(path, buf.getvalue().encode())
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_digest(obj):
    """sha256 of the canonical JSON form of a configuration snapshot."""
    return hashlib.sha256(_canonical_json(obj).encode()).hexdigest()


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, config_snapshot, inputs=None, extra=None):
    """JSON sidecar: config snapshot, its hash, input hashes, tool version.

    No timestamps: reruns with identical inputs stay byte-identical.
    """
    manifest = {
        "tool": TOOL_VERSION,
        "config": config_snapshot,
        "config_hash": config_digest(config_snapshot),
        "inputs": inputs or {},
    }
    if extra:
        manifest.update(extra)
    _atomic_write(path, (_canonical_json(manifest) + "\n").encode())
    return manifest


def read_manifest(path):
    with open(path) as fh:
        return json.load(fh)


_CKPT_MAGIC = b"SNBC"


def write_checkpoint(path, params, meta):
    """Versioned parameter checkpoint.

    Layout: magic "SNBC", u16 version, u32 JSON-header length, the
    header (parameter names/shapes/dtypes plus ``meta``), then the flat
    little-endian payloads in header order.
    """
    names = list(params.keys())
    header = {
        "version": 1,
        "meta": meta,
        "params": [
            {"name": k, "shape": list(params[k].shape), "dtype": str(params[k].dtype)}
            for k in names
        ],
    }
    hjson = _canonical_json(header).encode()
    buf = _io.BytesIO()
    buf.write(_CKPT_MAGIC)
    buf.write(struct.pack("<HI", 1, len(hjson)))
    buf.write(hjson)
    for k in names:
        a = np.ascontiguousarray(params[k])
        buf.write(a.astype(a.dtype.newbyteorder("<")).tobytes())
    _atomic_write(path, buf.getvalue())
    return path


def read_checkpoint(path):
    """Returns (params dict, meta dict)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _CKPT_MAGIC:
        raise ValueError(f"{path}: not an SNBC checkpoint")
    version, hlen = struct.unpack_from("<HI", data, 4)
    if version != 1:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(data[10 : 10 + hlen])
    offset = 10 + hlen
    params = {}
    for entry in header["params"]:
        dt = np.dtype(entry["dtype"]).newbyteorder("<")
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        arr = np.frombuffer(data, dtype=dt, count=count, offset=offset)
        offset += arr.nbytes
        params[entry["name"]] = arr.reshape(entry["shape"]).astype(np.dtype(entry["dtype"]))
    return params, header["meta"]
