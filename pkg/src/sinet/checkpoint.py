"""Binary checkpoint format.

Layout (all integers little-endian)::

    b"SINC" | u32 version | u32 header_len | header (UTF-8 JSON)
    | float64 parameter blobs in manifest order | u32 CRC-32 of all prior bytes

The header holds the config (including both vocabularies), model metadata,
the ordered parameter manifest with shapes, and the total parameter count.
"""

from __future__ import annotations

import hashlib
import json
import struct
import zlib

import numpy as np

from . import tensor as T
from .errors import CorruptionError, FormatError
from .model import SinetConfig, SinetModel, count_parameters

__all__ = ["MAGIC", "VERSION", "to_bytes", "from_bytes", "save_checkpoint",
           "load_checkpoint", "checkpoint_id"]

MAGIC = b"SINC"
VERSION = 1
_PREFIX = struct.Struct("<4sII")


def to_bytes(model):
    manifest = [{"name": k, "shape": list(t.shape)} for k, t in model.params.items()]
    header = {
        "config": model.config.to_dict(),
        "metadata": model.metadata,
        "parameters": manifest,
        "parameter_count": count_parameters(model),
    }
    hbytes = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
    parts = [_PREFIX.pack(MAGIC, VERSION, len(hbytes)), hbytes]
    for t in model.params.values():
        parts.append(np.ascontiguousarray(t.data, dtype="<f8").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def from_bytes(buf):
    buf = bytes(buf)
    if len(buf) < _PREFIX.size:
        raise FormatError("truncated checkpoint: missing prefix", offset=len(buf))
    magic, version, hlen = _PREFIX.unpack_from(buf, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", offset=4)
    if len(buf) < _PREFIX.size + 4:
        raise FormatError("truncated checkpoint: missing checksum", offset=len(buf))
    body, (crc,) = buf[:-4], struct.unpack("<I", buf[-4:])
    if zlib.crc32(body) != crc:
        raise CorruptionError("CRC-32 mismatch", offset=len(body))
    hstart = _PREFIX.size
    hend = hstart + hlen
    if hend > len(body):
        raise FormatError(f"truncated checkpoint: header of {hlen} bytes", offset=8)
    try:
        header = json.loads(body[hstart:hend].decode("utf-8"))
        config = SinetConfig.from_dict(header["config"])
        manifest = header["parameters"]
        declared = int(header["parameter_count"])
        metadata = header["metadata"]
    except (UnicodeDecodeError, ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"unreadable header: {exc}", offset=hstart) from exc

    counted = sum(int(np.prod(p["shape"], dtype=np.int64)) for p in manifest)
    if counted != declared:
        raise CorruptionError(
            f"manifest lists {counted} parameters but header declares {declared}", offset=hstart
        )
    if len(body) - hend != 8 * declared:
        raise CorruptionError(
            f"expected {8 * declared} bytes of parameters, found {len(body) - hend}", offset=hend
        )
    params = {}
    pos = hend
    for p in manifest:
        shape = tuple(p["shape"])
        n = int(np.prod(shape, dtype=np.int64))
        arr = np.frombuffer(body, dtype="<f8", count=n, offset=pos).astype(np.float64).reshape(shape)
        params[p["name"]] = T.Tensor(arr, requires_grad=True, name=p["name"])
        pos += 8 * n
    return SinetModel(config, params, metadata)


def checkpoint_id(data):
    """Short content hash identifying a checkpoint (bytes or model)."""
    if isinstance(data, SinetModel):
        data = to_bytes(data)
    return hashlib.sha256(data).hexdigest()[:16]


def save_checkpoint(model, path):
    data = to_bytes(model)
    with open(path, "wb") as fh:
        fh.write(data)
    return checkpoint_id(data)


def load_checkpoint(path):
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
