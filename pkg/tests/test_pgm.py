"""PGM export/import round trips and probability quantization."""

import numpy as np
import pytest

from opunet.errors import FormatError
from opunet.pgm import quantize_probabilities, read_pgm, write_pgm


def test_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(7, 11), dtype=np.uint8)
    p = tmp_path / "img.pgm"
    write_pgm(img, p)
    np.testing.assert_array_equal(read_pgm(p), img)


def test_header_layout(tmp_path):
    p = tmp_path / "img.pgm"
    write_pgm(np.zeros((2, 3), np.uint8), p)
    assert p.read_bytes().startswith(b"P5\n3 2\n255\n")


def test_comments_tolerated(tmp_path):
    p = tmp_path / "img.pgm"
    pixels = bytes(range(6))
    p.write_bytes(b"P5\n# a comment\n3 2\n# more\n255\n" + pixels)
    img = read_pgm(p)
    assert img.shape == (2, 3)
    assert img[1, 2] == 5


def test_wrong_magic_rejected(tmp_path):
    p = tmp_path / "img.pgm"
    p.write_bytes(b"P2\n2 2\n255\n0 0 0 0")
    with pytest.raises(FormatError, match="P5"):
        read_pgm(p)


def test_wrong_maxval_rejected(tmp_path):
    p = tmp_path / "img.pgm"
    p.write_bytes(b"P5\n2 2\n65535\n" + bytes(8))
    with pytest.raises(FormatError, match="maxval"):
        read_pgm(p)


def test_truncated_pixels_rejected(tmp_path):
    p = tmp_path / "img.pgm"
    p.write_bytes(b"P5\n4 4\n255\n" + bytes(3))
    with pytest.raises(FormatError, match="truncated"):
        read_pgm(p)


def test_non_2d_write_rejected(tmp_path):
    with pytest.raises(ValueError, match="2-D"):
        write_pgm(np.zeros((2, 2, 3), np.uint8), tmp_path / "x.pgm")


def test_quantization_endpoints_and_rounding():
    probs = np.array([0.0, 1.0, 0.5, 1 / 255 / 2, -0.2, 1.7])
    q = quantize_probabilities(probs)
    # 0.5*255 = 127.5 rounds half-up to 128; out-of-range values clip
    np.testing.assert_array_equal(q, [0, 255, 128, 1, 0, 255])
    assert q.dtype == np.uint8
