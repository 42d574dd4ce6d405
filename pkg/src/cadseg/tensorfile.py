"""Minimal on-disk tensor container.

Layout: 4-byte magic "CADT", a 4-byte little-endian unsigned header
length, a UTF-8 JSON header {"dtype": "f32"|"i32", "shape": [...]}, then
the row-major little-endian payload. Writers emit the header in canonical
form (sorted keys, no whitespace) so write(read(f)) reproduces the file
byte for byte.
"""

import json
import struct

import numpy as np

from .errors import TensorFileError

MAGIC = b"CADT"

_DTYPES = {"f32": np.dtype("<f4"), "i32": np.dtype("<i4")}


def _tag_for(arr: np.ndarray) -> str:
    if arr.dtype.kind == "f":
        return "f32"
    if arr.dtype.kind in ("i", "u", "b"):
        return "i32"
    raise TensorFileError(f"unsupported dtype {arr.dtype}")


def write_tensor(path, array) -> None:
    """Write an array as f32 (floating input) or i32 (integer/bool input)."""
    arr = np.asarray(array)
    tag = _tag_for(arr)
    header = json.dumps({"dtype": tag, "shape": list(arr.shape)},
                        sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = np.ascontiguousarray(arr.astype(_DTYPES[tag], copy=False)).tobytes()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        f.write(payload)


def read_tensor(path) -> np.ndarray:
    """Read a CADT file back into a float32 or int32 array."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 8 or data[:4] != MAGIC:
        raise TensorFileError(f"{path}: not a CADT tensor file")
    (header_len,) = struct.unpack("<I", data[4:8])
    if 8 + header_len > len(data):
        raise TensorFileError(f"{path}: truncated header")
    try:
        header = json.loads(data[8:8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise TensorFileError(f"{path}: bad header ({exc})") from exc
    if not isinstance(header, dict) or set(header) != {"dtype", "shape"}:
        raise TensorFileError(f"{path}: header must carry exactly dtype and shape")
    tag = header["dtype"]
    if tag not in _DTYPES:
        raise TensorFileError(f"{path}: unknown dtype {tag!r}")
    shape = header["shape"]
    if (not isinstance(shape, list)
            or any(not isinstance(s, int) or isinstance(s, bool) or s < 0 for s in shape)):
        raise TensorFileError(f"{path}: malformed shape {shape!r}")
    count = 1
    for s in shape:
        count *= s
    payload = data[8 + header_len:]
    if len(payload) != 4 * count:
        raise TensorFileError(
            f"{path}: payload holds {len(payload)} bytes, expected {4 * count}"
        )
    arr = np.frombuffer(payload, dtype=_DTYPES[tag], count=count)
    return arr.reshape(shape).copy()
