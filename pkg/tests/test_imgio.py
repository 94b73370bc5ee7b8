import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from raygen import imgio
from raygen.errors import ImageFormatError


def test_srgb_reference_values():
    # 0.5 linear encodes to byte 188; the linear-segment breakpoint to 10
    assert imgio.linear_to_srgb_u8(np.array([0.5]))[0] == 188
    assert imgio.linear_to_srgb_u8(np.array([0.0031308]))[0] == 10
    assert imgio.linear_to_srgb_u8(np.array([0.0]))[0] == 0
    assert imgio.linear_to_srgb_u8(np.array([1.0]))[0] == 255


def test_srgb_round_trip():
    x = np.linspace(0.0, 1.0, 1024)
    assert np.allclose(imgio.srgb_to_linear(imgio.linear_to_srgb(x)), x, atol=1e-12)


def test_png_round_trip_exact(tmp_path, rng):
    img = rng.random((13, 17, 3))
    path = tmp_path / "img.png"
    imgio.write_png(img, path)
    back = imgio.read_png(path)
    # decoding returns linear floats; re-encoding to bytes must be lossless
    assert np.array_equal(imgio.linear_to_srgb_u8(back[:, :, :3]),
                          imgio.linear_to_srgb_u8(np.clip(img, 0.0, 1.0)))


def test_png_bytes_deterministic(tmp_path, rng):
    img = rng.random((8, 8, 3))
    p1, p2 = tmp_path / "a.png", tmp_path / "b.png"
    imgio.write_png(img, p1)
    imgio.write_png(img, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_png_rejects_non_finite(tmp_path):
    img = np.zeros((2, 2, 3))
    img[0, 0, 0] = np.nan
    with pytest.raises(ImageFormatError):
        imgio.write_png(img, tmp_path / "bad.png")


def test_png_truncation_reported_with_offset(tmp_path):
    path = tmp_path / "t.png"
    imgio.write_png(np.zeros((4, 4, 3)), path)
    data = path.read_bytes()
    path.write_bytes(data[:30])
    with pytest.raises(ImageFormatError):
        imgio.read_png(path)


@given(hnp.arrays(np.float32, st.tuples(st.integers(1, 6), st.integers(1, 6)),
                  elements=st.floats(-1e6, 1e6, width=32)))
@settings(max_examples=40, deadline=None)
def test_pfm_gray_round_trip_bitwise(tmp_path_factory, arr):
    path = tmp_path_factory.mktemp("pfm") / "x.pfm"
    imgio.write_pfm(arr, path)
    back = imgio.read_pfm(path).astype(np.float32)
    assert np.array_equal(back.view(np.uint32), arr.view(np.uint32))


def test_pfm_rgb_round_trip_bitwise(tmp_path, rng):
    arr = rng.standard_normal((9, 5, 3)).astype(np.float32)
    path = tmp_path / "c.pfm"
    imgio.write_pfm(arr, path)
    assert np.array_equal(imgio.read_pfm(path), arr)


def test_pfm_header_scale_little_endian(tmp_path):
    path = tmp_path / "h.pfm"
    imgio.write_pfm(np.zeros((2, 3), np.float32), path)
    head = path.read_bytes().split(b"\n")[:3]
    assert head[0] == b"Pf"
    assert head[1] == b"3 2"
    assert float(head[2]) == -1.0


def test_rgbe_reference_value(tmp_path):
    # mantissa 128 with exponent byte 136 decodes to exactly 1.0
    path = tmp_path / "one.hdr"
    header = b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 1 +X 1\n"
    path.write_bytes(header + bytes([128, 128, 128, 136]))
    img = imgio.read_hdr(path)
    assert img.shape == (1, 1, 3)
    assert np.array_equal(img[0, 0], [1.0, 1.0, 1.0])


def test_hdr_round_trip(tmp_path, rng):
    img = (rng.random((6, 7, 3)) * 4.0).astype(np.float64)
    path = tmp_path / "r.hdr"
    imgio.write_hdr(img, path)
    back = imgio.read_hdr(path)
    # all three channels share one exponent, so each pixel quantizes with a
    # step set by its brightest channel (8-bit mantissa, truncating)
    step = img.max(axis=2, keepdims=True) / 128.0
    assert np.all(np.abs(back - img) <= step + 1e-12)


def test_hdr_rle_scanlines(tmp_path):
    """Adjacent-run scanline compression decodes to the flat value."""
    w = 64
    row = bytes([2, 2, w >> 8, w & 0xFF])
    runs = b""
    for _ in range(4):  # r, g, b, e planes, each one full run
        runs += bytes([128 + w, 140 if _ == 3 else 128])
    header = f"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 1 +X {w}\n".encode()
    path = tmp_path / "rle.hdr"
    path.write_bytes(header + row + runs)
    img = imgio.read_hdr(path)
    assert img.shape == (1, w, 3)
    assert np.allclose(img, 128.0 * 2.0 ** (140 - 143))
