"""Image decoding: binary PPM (P6, 8-bit) and PNG (8-bit gray/RGB/RGBA).

Decoded images hold row-major interleaved RGB doubles in [0, 1]. Alpha is
dropped, grayscale replicated. Malformed input raises DecodeError naming the
byte offset or cause.
"""

from __future__ import annotations

import struct
import zlib
from array import array
from dataclasses import dataclass, field

from ._backend import kernels

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


class DecodeError(ValueError):
    """Raised for malformed or unsupported image payloads."""


@dataclass(frozen=True)
class RasterImage:
    """Decoded RGB image; `pixels` is a flat array('d') of length 3*w*h."""

    width: int
    height: int
    pixels: array = field(repr=False)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        if len(self.pixels) != 3 * self.width * self.height:
            raise ValueError(
                f"pixel buffer length {len(self.pixels)} does not match "
                f"{self.width}x{self.height} RGB"
            )

    @classmethod
    def from_pixels(cls, width: int, height: int, pixels) -> "RasterImage":
        buf = array("d", pixels)
        for v in buf:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"channel value {v} outside [0, 1]")
        return cls(width, height, buf)

    @classmethod
    def filled(cls, width: int, height: int, rgb=(0.0, 0.0, 0.0)) -> "RasterImage":
        r, g, b = rgb
        return cls(width, height, array("d", [r, g, b] * (width * height)))

    def copy_pixels(self) -> array:
        return array("d", self.pixels)

    def luminance(self) -> array:
        out = array("d", bytes(8 * self.width * self.height))
        kernels.luminance(self.pixels, self.width, self.height, out)
        return out


def decode_image(data: bytes) -> RasterImage:
    """Decode PPM (P6) or PNG bytes; the format is sniffed from the payload."""
    if len(data) >= 2 and data[:2] == b"P6":
        return decode_ppm(data)
    if len(data) >= 8 and data[:8] == PNG_SIGNATURE:
        return decode_png(data)
    raise DecodeError("unrecognized image format (expected binary PPM P6 or PNG)")


# --- PPM ---------------------------------------------------------------


def _ppm_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Next header token, skipping whitespace and # comments."""
    n = len(data)
    while pos < n:
        c = data[pos]
        if c in b" \t\r\n":
            pos += 1
        elif c == 0x23:  # '#'
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
        else:
            break
    if pos >= n:
        raise DecodeError(f"truncated PPM header at offset {pos}")
    start = pos
    while pos < n and data[pos] not in b" \t\r\n":
        pos += 1
    return data[start:pos], pos


def decode_ppm(data: bytes) -> RasterImage:
    if data[:2] != b"P6":
        raise DecodeError("not a binary PPM: missing P6 magic at offset 0")
    pos = 2
    fields = []
    for name in ("width", "height", "maxval"):
        token, pos = _ppm_token(data, pos)
        try:
            value = int(token)
        except ValueError:
            raise DecodeError(
                f"malformed PPM {name} {token!r} at offset {pos - len(token)}"
            ) from None
        fields.append(value)
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise DecodeError(f"invalid PPM dimensions {width}x{height}")
    if maxval != 255:
        raise DecodeError(f"unsupported PPM bit depth: maxval {maxval} (only 255)")
    if pos >= len(data) or data[pos] not in b" \t\r\n":
        raise DecodeError(f"missing whitespace after PPM maxval at offset {pos}")
    pos += 1
    need = 3 * width * height
    payload = data[pos : pos + need]
    if len(payload) < need:
        raise DecodeError(
            f"truncated PPM payload: expected {need} bytes at offset {pos}, "
            f"got {len(payload)}"
        )
    out = array("d", bytes(8 * need))
    kernels.u8_to_unit(payload, need, out)
    return RasterImage(width, height, out)


def encode_ppm(img: RasterImage) -> bytes:
    """Quantize to 8-bit (round half up) and emit binary PPM."""
    n = 3 * img.width * img.height
    raw = bytearray(n)
    kernels.quantize_u8(img.pixels, n, raw)
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + bytes(raw)


# --- PNG ---------------------------------------------------------------

_PNG_CHANNELS = {0: 1, 2: 3, 4: 2, 6: 4}


def _paeth(a: int, b: int, c: int) -> int:
    p = a + b - c
    pa = abs(p - a)
    pb = abs(p - b)
    pc = abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    if pb <= pc:
        return b
    return c


def decode_png(data: bytes) -> RasterImage:
    if data[:8] != PNG_SIGNATURE:
        raise DecodeError("not a PNG: bad signature at offset 0")
    pos = 8
    header = None
    idat = bytearray()
    seen_end = False
    while pos < len(data):
        if pos + 8 > len(data):
            raise DecodeError(f"truncated PNG chunk header at offset {pos}")
        (length,) = struct.unpack(">I", data[pos : pos + 4])
        ctype = data[pos + 4 : pos + 8]
        body = data[pos + 8 : pos + 8 + length]
        if len(body) < length:
            raise DecodeError(f"truncated PNG chunk {ctype!r} at offset {pos}")
        crc_at = pos + 8 + length
        if crc_at + 4 > len(data):
            raise DecodeError(f"missing CRC for PNG chunk {ctype!r} at offset {crc_at}")
        (crc,) = struct.unpack(">I", data[crc_at : crc_at + 4])
        if zlib.crc32(ctype + body) & 0xFFFFFFFF != crc:
            raise DecodeError(f"CRC mismatch in PNG chunk {ctype!r} at offset {pos}")
        pos = crc_at + 4
        if ctype == b"IHDR":
            if length != 13:
                raise DecodeError("malformed PNG IHDR length")
            header = struct.unpack(">IIBBBBB", body)
        elif ctype == b"IDAT":
            idat.extend(body)
        elif ctype == b"IEND":
            seen_end = True
            break
    if header is None:
        raise DecodeError("PNG missing IHDR chunk")
    if not seen_end:
        raise DecodeError("PNG missing IEND chunk (truncated file)")
    width, height, depth, color, comp, filt, interlace = header
    if width < 1 or height < 1:
        raise DecodeError(f"invalid PNG dimensions {width}x{height}")
    if depth != 8:
        raise DecodeError(f"unsupported PNG bit depth {depth} (only 8)")
    if color not in _PNG_CHANNELS:
        raise DecodeError(f"unsupported PNG color type {color} (palette not supported)")
    if comp != 0 or filt != 0:
        raise DecodeError("unsupported PNG compression/filter method")
    if interlace != 0:
        raise DecodeError("interlaced PNG not supported")
    if not idat:
        raise DecodeError("PNG has no IDAT data")
    try:
        raw = zlib.decompress(bytes(idat))
    except zlib.error as exc:
        raise DecodeError(f"corrupt PNG IDAT stream: {exc}") from None
    channels = _PNG_CHANNELS[color]
    stride = width * channels
    if len(raw) != (stride + 1) * height:
        raise DecodeError(
            f"PNG pixel data length {len(raw)} does not match "
            f"{height} rows of {stride}+1 bytes"
        )
    flat = bytearray(stride * height)
    prev_start = -1
    for y in range(height):
        rowpos = y * (stride + 1)
        ftype = raw[rowpos]
        row = bytearray(raw[rowpos + 1 : rowpos + 1 + stride])
        if ftype == 0:
            pass
        elif ftype == 1:  # sub
            for i in range(channels, stride):
                row[i] = (row[i] + row[i - channels]) & 0xFF
        elif ftype == 2:  # up
            if prev_start >= 0:
                for i in range(stride):
                    row[i] = (row[i] + flat[prev_start + i]) & 0xFF
        elif ftype == 3:  # average
            for i in range(stride):
                left = row[i - channels] if i >= channels else 0
                up = flat[prev_start + i] if prev_start >= 0 else 0
                row[i] = (row[i] + ((left + up) >> 1)) & 0xFF
        elif ftype == 4:  # paeth
            for i in range(stride):
                left = row[i - channels] if i >= channels else 0
                up = flat[prev_start + i] if prev_start >= 0 else 0
                ul = flat[prev_start + i - channels] if prev_start >= 0 and i >= channels else 0
                row[i] = (row[i] + _paeth(left, up, ul)) & 0xFF
        else:
            raise DecodeError(f"invalid PNG filter type {ftype} in row {y}")
        start = y * stride
        flat[start : start + stride] = row
        prev_start = start
    n = width * height
    rgb = bytearray(3 * n)
    if color == 2:
        rgb[:] = flat
    elif color == 6:
        rgb[0::3] = flat[0::4]
        rgb[1::3] = flat[1::4]
        rgb[2::3] = flat[2::4]
    elif color == 0:
        rgb[0::3] = flat
        rgb[1::3] = flat
        rgb[2::3] = flat
    else:  # gray + alpha
        g = flat[0::2]
        rgb[0::3] = g
        rgb[1::3] = g
        rgb[2::3] = g
    out = array("d", bytes(8 * 3 * n))
    kernels.u8_to_unit(bytes(rgb), 3 * n, out)
    return RasterImage(width, height, out)
