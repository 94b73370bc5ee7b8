"""Bit-exact image file I/O: PNG (8-bit RGB/RGBA), PFM (32-bit float) and
Radiance HDR, plus the sRGB transfer curve.

Writers are deterministic byte-for-byte: the PNG encoder always emits a
single non-interlaced IDAT with fixed zlib settings.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import ImageFormatError

_PNG_SIG = b"\x89PNG\r\n\x1a\n"
_ZLIB_LEVEL = 6


# ---------------------------------------------------------------------------
# sRGB transfer

def linear_to_srgb(x):
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    lo = 12.92 * x
    hi = 1.055 * np.power(x, 1.0 / 2.4, where=x > 0, out=np.zeros_like(x)) - 0.055
    return np.where(x <= 0.0031308, lo, hi)


def srgb_to_linear(x):
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    lo = x / 12.92
    hi = np.power((x + 0.055) / 1.055, 2.4)
    return np.where(x <= 0.04045, lo, hi)


def linear_to_srgb_u8(x):
    return np.clip(np.rint(255.0 * linear_to_srgb(x)), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# PNG

def write_png(buffer, path):
    """Write linear RGB floats (h, w, 3) as 8-bit sRGB PNG."""
    buffer = np.asarray(buffer, dtype=np.float64)
    if buffer.ndim == 2:
        buffer = np.repeat(buffer[:, :, None], 3, axis=2)
    if buffer.ndim != 3 or buffer.shape[2] < 3:
        raise ImageFormatError("write_png expects an (h, w, 3) buffer")
    if not np.all(np.isfinite(buffer)):
        raise ImageFormatError("write_png requires finite pixel values")
    data = linear_to_srgb_u8(buffer[:, :, :3])
    h, w = data.shape[:2]
    raw = bytearray()
    for row in range(h):
        raw.append(0)  # filter type 0 per scanline, fixed for reproducibility
        raw.extend(data[row].tobytes())
    comp = zlib.compress(bytes(raw), _ZLIB_LEVEL)

    def chunk(tag, payload):
        return (struct.pack(">I", len(payload)) + tag + payload
                + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF))

    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    blob = _PNG_SIG + chunk(b"IHDR", ihdr) + chunk(b"IDAT", comp) + chunk(b"IEND", b"")
    with open(path, "wb") as fh:
        fh.write(blob)


def _paeth(a, b, c):
    p = a + b - c
    pa = abs(p - a)
    pb = abs(p - b)
    pc = abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    if pb <= pc:
        return b
    return c


def read_png(path):
    """Decode an 8-bit PNG and return linear-light RGBA floats (h, w, 4)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != _PNG_SIG:
        raise ImageFormatError(f"{path}: not a PNG (bad signature at byte 0)")
    pos = 8
    idat = bytearray()
    w = h = None
    color_type = None
    while pos + 8 <= len(blob):
        (length,) = struct.unpack(">I", blob[pos:pos + 4])
        tag = blob[pos + 4:pos + 8]
        payload = blob[pos + 8:pos + 8 + length]
        if len(payload) != length:
            raise ImageFormatError(f"{path}: truncated chunk at byte {pos}")
        if tag == b"IHDR":
            w, h, depth, color_type, comp, filt, interlace = struct.unpack(">IIBBBBB", payload)
            if depth != 8:
                raise ImageFormatError(f"{path}: only 8-bit PNGs supported (got {depth})")
            if color_type not in (0, 2, 6):
                raise ImageFormatError(f"{path}: unsupported color type {color_type}")
            if interlace != 0:
                raise ImageFormatError(f"{path}: interlaced PNGs unsupported")
        elif tag == b"IDAT":
            idat.extend(payload)
        elif tag == b"IEND":
            break
        pos += 12 + length
    if w is None:
        raise ImageFormatError(f"{path}: missing IHDR")
    try:
        raw = zlib.decompress(bytes(idat))
    except zlib.error as exc:
        raise ImageFormatError(f"{path}: corrupt IDAT stream ({exc})") from exc
    channels = {0: 1, 2: 3, 6: 4}[color_type]
    stride = w * channels
    if len(raw) != h * (stride + 1):
        raise ImageFormatError(f"{path}: IDAT size mismatch at byte {len(raw)}")
    out = np.zeros((h, stride), dtype=np.uint8)
    prev = np.zeros(stride, dtype=np.int64)
    for row in range(h):
        ftype = raw[row * (stride + 1)]
        line = np.frombuffer(raw, dtype=np.uint8,
                             count=stride, offset=row * (stride + 1) + 1).astype(np.int64)
        cur = np.zeros(stride, dtype=np.int64)
        if ftype == 0:
            cur = line
        elif ftype == 1:
            for i in range(stride):
                left = cur[i - channels] if i >= channels else 0
                cur[i] = (line[i] + left) & 0xFF
        elif ftype == 2:
            cur = (line + prev) & 0xFF
        elif ftype == 3:
            for i in range(stride):
                left = cur[i - channels] if i >= channels else 0
                cur[i] = (line[i] + (left + prev[i]) // 2) & 0xFF
        elif ftype == 4:
            for i in range(stride):
                left = cur[i - channels] if i >= channels else 0
                ul = prev[i - channels] if i >= channels else 0
                cur[i] = (line[i] + _paeth(left, prev[i], ul)) & 0xFF
        else:
            raise ImageFormatError(f"{path}: bad filter type {ftype} in row {row}")
        out[row] = cur.astype(np.uint8)
        prev = cur
    px = out.reshape(h, w, channels).astype(np.float64) / 255.0
    rgba = np.ones((h, w, 4), dtype=np.float64)
    if channels == 1:
        rgba[:, :, 0] = rgba[:, :, 1] = rgba[:, :, 2] = srgb_to_linear(px[:, :, 0])
    else:
        rgba[:, :, :3] = srgb_to_linear(px[:, :, :3])
        if channels == 4:
            rgba[:, :, 3] = px[:, :, 3]
    return rgba


# ---------------------------------------------------------------------------
# PFM (little-endian, scale -1.0)

def write_pfm(buffer, path):
    """32-bit float PFM; 1 channel -> 'Pf', otherwise 'PF' (3 channels)."""
    buffer = np.asarray(buffer)
    if buffer.ndim == 2:
        header = b"Pf"
        data = buffer.astype("<f4")
    elif buffer.ndim == 3 and buffer.shape[2] == 2:
        data = np.zeros(buffer.shape[:2] + (3,), dtype="<f4")
        data[:, :, :2] = buffer
        header = b"PF"
    elif buffer.ndim == 3 and buffer.shape[2] == 3:
        header = b"PF"
        data = buffer.astype("<f4")
    else:
        raise ImageFormatError("write_pfm expects (h, w), (h, w, 2) or (h, w, 3)")
    h, w = data.shape[:2]
    with open(path, "wb") as fh:
        fh.write(header + b"\n")
        fh.write(f"{w} {h}\n".encode())
        fh.write(b"-1.0\n")
        fh.write(data[::-1].tobytes())  # bottom-to-top row order


def _read_pfm_token(fh):
    token = b""
    while True:
        c = fh.read(1)
        if not c:
            raise ImageFormatError(f"unexpected end of PFM header at byte {fh.tell()}")
        if c.isspace():
            if token:
                return token
        else:
            token += c


def read_pfm(path):
    with open(path, "rb") as fh:
        magic = _read_pfm_token(fh)
        if magic not in (b"PF", b"Pf"):
            raise ImageFormatError(f"{path}: bad PFM magic at byte 0")
        w = int(_read_pfm_token(fh))
        h = int(_read_pfm_token(fh))
        scale = float(_read_pfm_token(fh))
        channels = 3 if magic == b"PF" else 1
        count = w * h * channels
        dt = "<f4" if scale < 0 else ">f4"
        raw = fh.read(count * 4)
        if len(raw) != count * 4:
            raise ImageFormatError(f"{path}: truncated PFM data at byte {fh.tell()}")
        data = np.frombuffer(raw, dtype=dt).reshape(h, w, channels)[::-1]
        if channels == 1:
            data = data[:, :, 0]
        return np.ascontiguousarray(data.astype(np.float64))


# ---------------------------------------------------------------------------
# Radiance HDR (RGBE)

def _rgbe_to_float(rgbe):
    rgbe = rgbe.astype(np.float64)
    exp = rgbe[..., 3]
    scale = np.where(exp == 0, 0.0, np.exp2(exp - 143.0))
    return rgbe[..., :3] * scale[..., None]


def read_hdr(path):
    """Radiance .hdr: flat and adaptive-RLE scanlines, -Y +X orientation."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if not (blob.startswith(b"#?RADIANCE") or blob.startswith(b"#?RGBE")):
        raise ImageFormatError(f"{path}: missing Radiance signature at byte 0")
    pos = blob.index(b"\n") + 1
    while True:
        end = blob.index(b"\n", pos)
        line = blob[pos:end]
        pos = end + 1
        if line == b"":
            break
        if line.startswith(b"FORMAT=") and b"32-bit_rle_rgbe" not in line:
            raise ImageFormatError(f"{path}: unsupported format {line!r}")
    end = blob.index(b"\n", pos)
    dims = blob[pos:end].split()
    pos = end + 1
    if len(dims) != 4 or dims[0] != b"-Y" or dims[2] != b"+X":
        raise ImageFormatError(f"{path}: unsupported orientation at byte {pos}")
    h = int(dims[1])
    w = int(dims[3])
    out = np.zeros((h, w, 4), dtype=np.uint8)
    for y in range(h):
        if pos + 4 > len(blob):
            raise ImageFormatError(f"{path}: truncated scanline at byte {pos}")
        if blob[pos] == 2 and blob[pos + 1] == 2 and (blob[pos + 2] << 8) + blob[pos + 3] == w and w >= 8:
            pos += 4
            for c in range(4):
                x = 0
                while x < w:
                    if pos >= len(blob):
                        raise ImageFormatError(f"{path}: truncated RLE at byte {pos}")
                    n = blob[pos]
                    pos += 1
                    if n > 128:
                        run = n - 128
                        out[y, x:x + run, c] = blob[pos]
                        pos += 1
                        x += run
                    else:
                        out[y, x:x + n, c] = np.frombuffer(blob, np.uint8, n, pos)
                        pos += n
                        x += n
        else:
            row = np.frombuffer(blob, np.uint8, w * 4, pos).reshape(w, 4)
            out[y] = row
            pos += w * 4
    return _rgbe_to_float(out)


def write_hdr(buffer, path):
    """Minimal flat (non-RLE) Radiance writer, used for fixtures and tests."""
    buffer = np.asarray(buffer, dtype=np.float64)
    if buffer.ndim != 3 or buffer.shape[2] != 3:
        raise ImageFormatError("write_hdr expects (h, w, 3)")
    h, w = buffer.shape[:2]
    mx = buffer.max(axis=2)
    exp = np.zeros((h, w), dtype=np.int32)
    nz = mx > 1e-32
    exp[nz] = np.floor(np.log2(mx[nz])).astype(np.int32) + 1
    scale = np.where(nz, np.exp2(exp - 8.0), 0.0)
    rgbe = np.zeros((h, w, 4), dtype=np.uint8)
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.where(nz[..., None], buffer / scale[..., None], 0.0)
    rgbe[..., :3] = np.clip(m, 0, 255).astype(np.uint8)
    rgbe[..., 3] = np.where(nz, exp + 135, 0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"#?RADIANCE\n")
        fh.write(b"FORMAT=32-bit_rle_rgbe\n\n")
        fh.write(f"-Y {h} +X {w}\n".encode())
        fh.write(rgbe.tobytes())
