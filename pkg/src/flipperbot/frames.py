"""Binary sidecar format for image-like channels.

Telemetry logs stay line-oriented JSON; per-pixel data goes in a sidecar
file of appended frames.  Each frame is a fixed little-endian header

    magic   4 bytes  b"FBFR"
    version u16      format revision, currently 1
    dtype   u16      0 = float32, 1 = uint8, 2 = int16
    width   u32
    height  u32
    t       f64      sim time, seconds

followed by height*width row-major values, rows bottom-up as rendered.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterator

import numpy as np

MAGIC = b"FBFR"
VERSION = 1
_HEADER = struct.Struct("<4sHHIId")
_DTYPES = {0: np.float32, 1: np.uint8, 2: np.int16}
_CODES = {np.dtype(np.float32): 0, np.dtype(np.uint8): 1, np.dtype(np.int16): 2}


class FrameFormatError(ValueError):
    pass


@dataclass
class FrameRecord:
    t: float
    values: np.ndarray


def write_frame(fh: BinaryIO, values: np.ndarray, t: float) -> None:
    arr = np.ascontiguousarray(values)
    code = _CODES.get(arr.dtype)
    if code is None:
        raise FrameFormatError(f"unsupported dtype {arr.dtype}")
    if arr.ndim != 2:
        raise FrameFormatError("frame must be 2-D")
    h, w = arr.shape
    fh.write(_HEADER.pack(MAGIC, VERSION, code, w, h, float(t)))
    fh.write(arr.tobytes())


def read_frames(fh: BinaryIO) -> Iterator[FrameRecord]:
    while True:
        head = fh.read(_HEADER.size)
        if not head:
            return
        if len(head) < _HEADER.size:
            raise FrameFormatError("truncated frame header")
        magic, version, code, w, h, t = _HEADER.unpack(head)
        if magic != MAGIC:
            raise FrameFormatError("bad magic")
        if version != VERSION:
            raise FrameFormatError(f"unsupported version {version}")
        dtype = _DTYPES.get(code)
        if dtype is None:
            raise FrameFormatError(f"unknown dtype code {code}")
        n = int(w) * int(h) * np.dtype(dtype).itemsize
        body = fh.read(n)
        if len(body) < n:
            raise FrameFormatError("truncated frame body")
        yield FrameRecord(t=t, values=np.frombuffer(body, dtype=dtype).reshape(h, w).copy())
