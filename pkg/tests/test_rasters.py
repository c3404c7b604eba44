"""Tests for cropgan/rasters.py - PGM masks and PPM images."""

import numpy as np
import pytest

from cropgan.rasters import read_mask, read_pgm, read_ppm, write_pgm, write_ppm
from shared.errors import FormatError, UsageError


class TestPgm:
    """Tests for P5 masks."""

    def test_bool_mask_round_trip(self, tmp_path):
        mask = np.array([[True, False, True], [False, False, True]])
        path = write_pgm(tmp_path / "mask.pgm", mask)
        assert path.read_bytes()[:11] == b"P5\n3 2\n255\n"
        np.testing.assert_array_equal(read_pgm(path), mask.astype(np.uint8) * 255)
        np.testing.assert_array_equal(read_mask(path), mask)

    def test_header_with_comment(self, tmp_path):
        path = tmp_path / "comment.pgm"
        path.write_bytes(b"P5\n# written elsewhere\n2 1\n255\n\x00\x07")
        np.testing.assert_array_equal(read_mask(path), [[False, True]])

    def test_short_pixel_data(self, tmp_path):
        path = tmp_path / "short.pgm"
        path.write_bytes(b"P5\n2 2\n255\n\x00\x00\x00")
        with pytest.raises(FormatError, match="pixel bytes"):
            read_pgm(path)

    def test_sixteen_bit_rejected(self, tmp_path):
        path = tmp_path / "deep.pgm"
        path.write_bytes(b"P5\n1 1\n65535\n\x00\x00")
        with pytest.raises(FormatError, match="8-bit"):
            read_pgm(path)

    def test_ppm_is_not_pgm(self, tmp_path):
        path = write_ppm(tmp_path / "img.ppm", np.zeros((1, 1, 3), dtype=np.uint8))
        with pytest.raises(FormatError, match="expected P5"):
            read_pgm(path)

    def test_not_an_image(self, tmp_path):
        path = tmp_path / "text.pgm"
        path.write_text("hello")
        with pytest.raises(FormatError) as excinfo:
            read_pgm(path)
        assert excinfo.value.offset == 0


class TestPpm:
    """Tests for P6 images."""

    def test_round_trip(self, tmp_path):
        image = np.arange(2 * 3 * 3, dtype=np.uint8).reshape(2, 3, 3)
        np.testing.assert_array_equal(read_ppm(write_ppm(tmp_path / "a.ppm", image)), image)

    def test_requires_rgb(self, tmp_path):
        with pytest.raises(UsageError):
            write_ppm(tmp_path / "gray.ppm", np.zeros((2, 2)))
