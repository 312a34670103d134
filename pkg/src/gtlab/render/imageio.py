"""Image encoding: binary PPM (P6) and a minimal PNG writer.

The framebuffer is linear radiance; files store gamma-2.2 bytes
(``byte = floor(clip(v, 0, 1) ** (1/2.2) * 255 + 0.5)``).  Encoding is pure
arithmetic, so identical images produce identical files -- the PPM bytes are
the determinism contract.  PNG output uses filter type 0 and a fixed zlib
level; the reader here handles exactly that subset (plus PPM), enough to
decode anything this package writes.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .scene import Image

GAMMA = 2.2


def tonemap_bytes(image: Image) -> np.ndarray:
    """Linear radiance -> gamma-encoded uint8 (h, w, 3)."""
    v = np.clip(image.pixels, 0.0, 1.0) ** (1.0 / GAMMA)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def ppm_bytes(image: Image) -> bytes:
    data = tonemap_bytes(image)
    header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + data.tobytes()


def write_ppm(image: Image, path: str | Path) -> None:
    Path(path).write_bytes(ppm_bytes(image))


def read_ppm(path: str | Path) -> np.ndarray:
    """Decode a P6 PPM into display-domain floats in [0, 1], shape (h, w, 3)."""
    raw = Path(path).read_bytes()
    fields = []
    pos = 0

    def next_token() -> bytes:
        nonlocal pos
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            return next_token()
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        return raw[start:pos]

    magic = next_token()
    if magic != b"P6":
        raise ValueError(f"not a binary PPM (magic {magic!r})")
    width = int(next_token())
    height = int(next_token())
    maxval = int(next_token())
    if maxval != 255:
        raise ValueError(f"unsupported PPM maxval {maxval}")
    pos += 1  # single whitespace after maxval
    data = raw[pos : pos + width * height * 3]
    if len(data) != width * height * 3:
        raise ValueError("truncated PPM payload")
    arr = np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3)
    return arr.astype(np.float64) / 255.0


def png_bytes(image: Image) -> bytes:
    data = tonemap_bytes(image)
    raw = bytearray()
    for row in data:
        raw.append(0)  # filter type 0
        raw.extend(row.tobytes())
    out = bytearray(b"\x89PNG\r\n\x1a\n")

    def chunk(tag: bytes, payload: bytes) -> None:
        out.extend(struct.pack(">I", len(payload)))
        out.extend(tag)
        out.extend(payload)
        out.extend(struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF))

    chunk(b"IHDR", struct.pack(">IIBBBBB", image.width, image.height, 8, 2, 0, 0, 0))
    chunk(b"IDAT", zlib.compress(bytes(raw), 6))
    chunk(b"IEND", b"")
    return bytes(out)


def write_png(image: Image, path: str | Path) -> None:
    Path(path).write_bytes(png_bytes(image))


def read_png(path: str | Path) -> np.ndarray:
    """Decode the PNG subset this module writes (8-bit RGB, filter 0)."""
    raw = Path(path).read_bytes()
    if raw[:8] != b"\x89PNG\r\n\x1a\n":
        raise ValueError("not a PNG file")
    pos = 8
    width = height = None
    idat = bytearray()
    while pos < len(raw):
        (length,) = struct.unpack(">I", raw[pos : pos + 4])
        tag = raw[pos + 4 : pos + 8]
        payload = raw[pos + 8 : pos + 8 + length]
        pos += 12 + length
        if tag == b"IHDR":
            width, height, depth, color, _, _, interlace = struct.unpack(
                ">IIBBBBB", payload
            )
            if (depth, color, interlace) != (8, 2, 0):
                raise ValueError("unsupported PNG variant (this reader handles 8-bit RGB)")
        elif tag == b"IDAT":
            idat.extend(payload)
        elif tag == b"IEND":
            break
    if width is None:
        raise ValueError("PNG missing IHDR")
    decoded = zlib.decompress(bytes(idat))
    stride = width * 3 + 1
    if len(decoded) != stride * height:
        raise ValueError("unexpected PNG payload size")
    rows = np.frombuffer(decoded, dtype=np.uint8).reshape(height, stride)
    if np.any(rows[:, 0] != 0):
        raise ValueError("unsupported PNG row filter (this reader handles type 0)")
    arr = rows[:, 1:].reshape(height, width, 3)
    return arr.astype(np.float64) / 255.0


def read_image(path: str | Path) -> np.ndarray:
    """Decode PPM or PNG by sniffing the magic bytes."""
    head = Path(path).read_bytes()[:8]
    if head.startswith(b"P6"):
        return read_ppm(path)
    if head == b"\x89PNG\r\n\x1a\n":
        return read_png(path)
    raise ValueError(f"unrecognized image format in {path}")
