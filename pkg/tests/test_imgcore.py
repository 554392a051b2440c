"""Frame/stack validation, file round-trips, raster operations."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import rng_array
from zstacker.errors import (
    ConfigError,
    DimensionMismatchError,
    FrameRangeError,
    StackLoadError,
)
from zstacker.imgcore import (
    Frame,
    ZStack,
    dark_mask,
    downscale,
    frame_diff_mad,
    from_arrays,
    load_frame,
    load_stack,
    save_frame,
    subsample,
)


class TestFrame:
    def test_from_array_converts_dtype(self):
        f = Frame.from_array(np.zeros((4, 5), dtype=np.float32))
        assert f.pixels.dtype == np.float64
        assert (f.width, f.height) == (5, 4)

    def test_rejects_wrong_ndim(self):
        with pytest.raises(FrameRangeError):
            Frame.from_array(np.zeros(9))
        with pytest.raises(FrameRangeError):
            Frame.from_array(np.zeros((3, 3, 3)))

    def test_rejects_small_sides(self):
        with pytest.raises(FrameRangeError):
            Frame.from_array(np.zeros((2, 5)))
        with pytest.raises(FrameRangeError):
            Frame.from_array(np.zeros((5, 2)))

    def test_rejects_non_finite(self):
        a = np.zeros((3, 3))
        a[1, 1] = np.nan
        with pytest.raises(FrameRangeError):
            Frame.from_array(a)

    def test_rejects_out_of_range(self):
        with pytest.raises(FrameRangeError):
            Frame.from_array(np.full((3, 3), -0.1))
        with pytest.raises(FrameRangeError):
            Frame.from_array(np.full((3, 3), 1.1))

    def test_pixels_are_read_only(self):
        f = Frame.from_array(np.zeros((3, 3)))
        with pytest.raises(ValueError):
            f.pixels[0, 0] = 1.0


class TestZStack:
    def test_empty_rejected(self):
        with pytest.raises(StackLoadError):
            ZStack(())

    def test_bad_stride_rejected(self):
        f = Frame.from_array(np.zeros((3, 3)))
        with pytest.raises(ConfigError):
            ZStack((f,), stride=0)

    def test_mismatched_frames_rejected(self):
        a = Frame.from_array(np.zeros((3, 3)))
        b = Frame.from_array(np.zeros((4, 4)))
        with pytest.raises(DimensionMismatchError):
            ZStack((a, b))

    def test_sequence_protocol(self):
        stack = from_arrays([np.full((3, 4), i / 10) for i in range(5)])
        assert len(stack) == 5
        assert stack.width == 4 and stack.height == 3
        assert stack[2].pixels[0, 0] == 0.2
        assert [f.pixels[0, 0] for f in stack] == [0.0, 0.1, 0.2, 0.3, 0.4]

    def test_subsample(self):
        stack = from_arrays([np.full((3, 3), i / 10) for i in range(10)], stride=2)
        sub = subsample(stack, 3)
        assert len(sub) == 4
        assert sub.stride == 6
        assert [f.pixels[0, 0] for f in sub] == [0.0, 0.3, 0.6, 0.9]
        with pytest.raises(ConfigError):
            subsample(stack, 0)


class TestFileIO:
    def test_pgm_round_trip_exact_on_quantized(self, tmp_path):
        a = (np.arange(12 * 16).reshape(12, 16) % 256) / 255.0
        p = save_frame(Frame.from_array(a), tmp_path / "f.pgm")
        back = load_frame(p)
        assert np.array_equal(back.pixels, a)

    def test_png_round_trip_within_quantization(self, tmp_path):
        a = rng_array(7, 9, 11)
        p = save_frame(Frame.from_array(a), tmp_path / "f.png")
        back = load_frame(p)
        assert np.max(np.abs(back.pixels - a)) <= 0.5 / 255.0 + 1e-12

    def test_pgm_header_comments(self, tmp_path):
        raster = bytes(range(20))
        data = b"P5\n# a comment line\n5 4\n# another\n255\n" + raster
        p = tmp_path / "c.pgm"
        p.write_bytes(data)
        f = load_frame(p)
        assert f.width == 5 and f.height == 4
        assert np.array_equal(f.pixels, np.arange(20).reshape(4, 5) / 255.0)

    def test_pgm_bad_magic(self, tmp_path):
        p = tmp_path / "bad.pgm"
        p.write_bytes(b"P2\n3 3\n255\n" + bytes(9))
        with pytest.raises(StackLoadError):
            load_frame(p)

    def test_pgm_truncated_raster(self, tmp_path):
        p = tmp_path / "short.pgm"
        p.write_bytes(b"P5\n4 4\n255\n" + bytes(7))
        with pytest.raises(StackLoadError):
            load_frame(p)

    def test_pgm_malformed_header_token(self, tmp_path):
        p = tmp_path / "bad.pgm"
        p.write_bytes(b"P5\nfour 4\n255\n" + bytes(16))
        with pytest.raises(StackLoadError):
            load_frame(p)

    def test_png_rgb_luma_reduction(self, tmp_path):
        from PIL import Image

        rgb = np.zeros((4, 4, 3), dtype=np.uint8)
        rgb[..., 0], rgb[..., 1], rgb[..., 2] = 200, 100, 50
        p = tmp_path / "c.png"
        Image.fromarray(rgb, mode="RGB").save(p)
        f = load_frame(p)
        expect = (0.299 * 200 + 0.587 * 100 + 0.114 * 50) / 255.0
        assert np.allclose(f.pixels, expect, atol=1e-12)

    def test_missing_file_and_bad_extension(self, tmp_path):
        with pytest.raises(StackLoadError):
            load_frame(tmp_path / "nope.pgm")
        p = tmp_path / "f.tiff"
        p.write_bytes(b"x")
        with pytest.raises(StackLoadError):
            load_frame(p)
        with pytest.raises(ConfigError):
            save_frame(Frame.from_array(np.zeros((3, 3))), tmp_path / "f.bmp")

    def test_load_stack_lexicographic_order(self, tmp_path):
        for name, val in [("b.pgm", 0.2), ("a.pgm", 0.1), ("c.png", 0.3)]:
            save_frame(Frame.from_array(np.full((4, 4), val)), tmp_path / name)
        stack = load_stack(tmp_path)
        got = [round(float(f.pixels[0, 0]), 1) for f in stack]
        assert got == [0.1, 0.2, 0.3]

    def test_load_stack_errors(self, tmp_path):
        with pytest.raises(StackLoadError):
            load_stack(tmp_path / "absent")
        empty = tmp_path / "empty"
        empty.mkdir()
        with pytest.raises(StackLoadError):
            load_stack(empty)
        mixed = tmp_path / "mixed"
        mixed.mkdir()
        save_frame(Frame.from_array(np.zeros((4, 4))), mixed / "a.pgm")
        save_frame(Frame.from_array(np.zeros((5, 5))), mixed / "b.pgm")
        with pytest.raises(DimensionMismatchError):
            load_stack(mixed)


class TestRasterOps:
    def test_downscale_block_average_exact(self):
        a = rng_array(9, 6, 6)
        out = downscale(Frame.from_array(a), (3, 3))
        expect = a.reshape(3, 2, 3, 2).mean(axis=(1, 3))
        assert out.pixels == pytest.approx(expect, abs=1e-12)

    def test_downscale_preserves_mean(self):
        a = rng_array(3, 16, 24)
        out = downscale(Frame.from_array(a), (12, 8))
        assert abs(float(out.pixels.mean()) - float(a.mean())) < 1e-12

    def test_downscale_constant(self):
        out = downscale(Frame.from_array(np.full((10, 14), 0.37)), (5, 7))
        assert np.allclose(out.pixels, 0.37, atol=1e-12)

    def test_downscale_validation(self):
        f = Frame.from_array(np.zeros((8, 8)))
        with pytest.raises(ConfigError):
            downscale(f, (2, 8))
        with pytest.raises(ConfigError):
            downscale(f, (16, 8))

    def test_frame_diff_mad(self):
        a = Frame.from_array(np.zeros((3, 3)))
        b = Frame.from_array(np.full((3, 3), 0.25))
        assert frame_diff_mad(a, b) == 0.25
        assert frame_diff_mad(a, a) == 0.0
        c = Frame.from_array(np.zeros((3, 4)))
        with pytest.raises(DimensionMismatchError):
            frame_diff_mad(a, c)

    def test_dark_mask_strict_threshold(self):
        f = Frame.from_array(np.array([[0.0, 0.04, 0.05], [0.039, 0.5, 1.0], [0.0, 0.0, 0.0]]))
        m = dark_mask(f, 0.04)
        expect = np.array([[True, False, False], [True, False, False], [True, True, True]])
        assert np.array_equal(m, expect)
