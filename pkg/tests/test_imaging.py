import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from zoomtok.errors import DecodeError, InvalidDimension, InvalidNormalization, OutOfBounds
from zoomtok.imaging import (
    CropRect,
    ImageBuffer,
    decode_image,
    denormalize,
    encode_fixture,
    extract_tile,
    normalize,
    resize,
)


def bilinear_reference(src: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    """Brute-force mirror of the documented resize algorithm, one pixel at a time."""
    src_h, src_w = src.shape[0], src.shape[1]
    out = np.zeros((target_h, target_w, 3), np.uint8)
    f32 = np.float32
    for dy in range(target_h):
        sy = (f32(dy) + f32(0.5)) * (f32(src_h) / f32(target_h)) - f32(0.5)
        sy = min(max(sy, f32(0.0)), f32(src_h - 1))
        y0 = int(np.floor(sy))
        fy = f32(sy - f32(y0))
        y1 = min(y0 + 1, src_h - 1)
        for dx in range(target_w):
            sx = (f32(dx) + f32(0.5)) * (f32(src_w) / f32(target_w)) - f32(0.5)
            sx = min(max(sx, f32(0.0)), f32(src_w - 1))
            x0 = int(np.floor(sx))
            fx = f32(sx - f32(x0))
            x1 = min(x0 + 1, src_w - 1)
            for ch in range(3):
                v00 = f32(src[y0, x0, ch])
                v10 = f32(src[y0, x1, ch])
                v01 = f32(src[y1, x0, ch])
                v11 = f32(src[y1, x1, ch])
                top = v00 + (v10 - v00) * fx
                bottom = v01 + (v11 - v01) * fx
                value = top + (bottom - top) * fy
                out[dy, dx, ch] = np.uint8(min(max(float(np.rint(value)), 0.0), 255.0))
    return out


def png_bytes(array: np.ndarray, mode: str = "RGB") -> bytes:
    buf = io.BytesIO()
    Image.fromarray(array, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


class TestDecode:
    def test_single_red_pixel_png(self):
        img = decode_image(png_bytes(np.array([[[255, 0, 0]]], np.uint8)))
        assert (img.width, img.height) == (1, 1)
        assert img.data.tolist() == [[[255, 0, 0]]]

    def test_grayscale_promoted_to_rgb(self):
        img = decode_image(png_bytes(np.full((2, 2), 128, np.uint8), mode="L"))
        assert img.data.shape == (2, 2, 3)
        assert np.all(img.data == 128)

    def test_alpha_discarded(self):
        rgba = np.zeros((2, 2, 4), np.uint8)
        rgba[..., 0] = 200
        rgba[..., 3] = 7
        img = decode_image(png_bytes(rgba, mode="RGBA"))
        assert img.data.shape == (2, 2, 3)
        assert np.all(img.data[..., 0] == 200)

    def test_truncated_jpeg_raises(self):
        buf = io.BytesIO()
        Image.fromarray(np.full((32, 32, 3), 90, np.uint8)).save(buf, format="JPEG")
        data = buf.getvalue()
        with pytest.raises(DecodeError):
            decode_image(data[: len(data) // 2])

    def test_unknown_magic_raises(self):
        with pytest.raises(DecodeError):
            decode_image(b"GIF89a" + b"\x00" * 64)

    def test_jpeg_roundtrip_dims(self):
        buf = io.BytesIO()
        Image.fromarray(np.full((21, 17, 3), 90, np.uint8)).save(buf, format="JPEG")
        img = decode_image(buf.getvalue())
        assert (img.width, img.height) == (17, 21)

    def test_fixture_roundtrip(self, noise_image):
        img = noise_image(3, 11, 7)
        back = decode_image(encode_fixture(img))
        assert np.array_equal(back.data, img.data)

    def test_fixture_truncated_raises(self, noise_image):
        data = encode_fixture(noise_image(3, 11, 7))
        with pytest.raises(DecodeError):
            decode_image(data[:-1])
        with pytest.raises(DecodeError):
            decode_image(data[:8])


class TestResize:
    def test_identity_is_byte_identical(self, noise_image):
        img = noise_image(5, 23, 31)
        out = resize(img, 23, 31)
        assert np.array_equal(out.data, img.data)

    def test_constant_image_stays_constant(self):
        img = ImageBuffer(np.full((300, 500, 3), 77, np.uint8))
        for tw, th in [(1, 1), (7, 13), (336, 336), (997, 3)]:
            out = resize(img, tw, th)
            assert out.data.shape == (th, tw, 3)
            assert np.all(out.data == 77)

    @settings(max_examples=30, deadline=None)
    @given(value=st.integers(0, 255), tw=st.integers(1, 40), th=st.integers(1, 40))
    def test_constant_preservation_property(self, value, tw, th):
        img = ImageBuffer(np.full((9, 14, 3), value, np.uint8))
        assert np.all(resize(img, tw, th).data == value)

    def test_checkerboard_downscale_matches_oracle(self):
        # 4x4 checkerboard of 0/255 collapses to the blended midpoint.
        pattern = np.zeros((4, 4, 3), np.uint8)
        pattern[::2, 1::2] = 255
        pattern[1::2, ::2] = 255
        img = ImageBuffer(pattern)
        out = resize(img, 2, 2)
        expected = bilinear_reference(pattern, 2, 2)
        assert np.array_equal(out.data, expected)
        assert np.all(out.data == 128)

    @pytest.mark.parametrize(
        "src_w,src_h,tw,th",
        [(9, 7, 5, 11), (13, 5, 7, 3), (16, 16, 8, 8), (3, 3, 7, 7), (40, 11, 17, 29)],
    )
    def test_matches_bruteforce_oracle(self, noise_image, src_w, src_h, tw, th):
        img = noise_image(src_w * 1000 + src_h, src_w, src_h)
        out = resize(img, tw, th)
        assert np.array_equal(out.data, bilinear_reference(img.data, tw, th))

    def test_deterministic_across_runs(self, noise_image):
        img = noise_image(8, 101, 67)
        a = resize(img, 336, 336)
        b = resize(img, 336, 336)
        assert np.array_equal(a.data, b.data)

    def test_single_pixel_source_replicates(self):
        img = ImageBuffer(np.full((1, 1, 3), 200, np.uint8))
        out = resize(img, 4, 3)
        assert out.data.shape == (3, 4, 3)
        assert np.all(out.data == 200)

    def test_bad_target_raises(self, noise_image):
        img = noise_image(1, 4, 4)
        with pytest.raises(InvalidDimension):
            resize(img, 0, 10)
        with pytest.raises(InvalidDimension):
            resize(img, 10, -1)


class TestExtractTile:
    def test_full_image_rect_is_identity(self, noise_image):
        img = noise_image(2, 12, 9)
        out = extract_tile(img, CropRect(0, 0, 12, 9))
        assert np.array_equal(out.data, img.data)

    def test_quadrant_matches_index_arithmetic(self, gradient_image):
        img = gradient_image(672, 672)
        tile = extract_tile(img, CropRect(336, 0, 336, 336))
        assert np.array_equal(tile.data, img.data[0:336, 336:672])

    def test_out_of_bounds_raises(self, noise_image):
        img = noise_image(4, 672, 672)
        with pytest.raises(OutOfBounds):
            extract_tile(img, CropRect(600, 0, 336, 336))
        with pytest.raises(OutOfBounds):
            extract_tile(img, CropRect(-1, 0, 10, 10))
        with pytest.raises(OutOfBounds):
            extract_tile(img, CropRect(0, 0, 0, 10))

    def test_tiles_partition_pixels_exactly(self, noise_image):
        # Tiling a 2x3 grid of 5x5 tiles must reproduce every pixel once.
        img = noise_image(6, 10, 15)
        total = np.zeros_like(img.data, dtype=np.int64)
        reassembled = np.zeros_like(img.data)
        for row in range(3):
            for col in range(2):
                rect = CropRect(col * 5, row * 5, 5, 5)
                tile = extract_tile(img, rect)
                reassembled[rect.y : rect.y + 5, rect.x : rect.x + 5] = tile.data
                total[rect.y : rect.y + 5, rect.x : rect.x + 5] += 1
        assert np.all(total == 1)
        assert np.array_equal(reassembled, img.data)
        tile_sum = sum(
            int(extract_tile(img, CropRect(c * 5, r * 5, 5, 5)).data.sum())
            for r in range(3)
            for c in range(2)
        )
        assert tile_sum == int(img.data.sum())


class TestNormalize:
    MEAN = (0.5, 0.5, 0.5)
    STD = (0.25, 0.25, 0.25)

    def test_full_scale_pixel(self):
        img = ImageBuffer(np.full((1, 1, 3), 255, np.uint8))
        out = normalize(img, (0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
        assert out.data.shape == (3, 1, 1)
        assert np.allclose(out.data, 1.0)

    def test_centering_hits_zero(self):
        # 255 * 0.2 = 51, so pixel 51 with mean 0.2 lands exactly on zero.
        img = ImageBuffer(np.full((2, 2, 3), 51, np.uint8))
        out = normalize(img, (0.2, 0.2, 0.2), (0.7, 0.9, 1.3))
        assert np.allclose(out.data, 0.0, atol=1e-7)

    def test_mid_gray_value(self):
        img = ImageBuffer(np.full((1, 1, 3), 128, np.uint8))
        out = normalize(img, self.MEAN, self.STD)
        expected = (128 / 255 - 0.5) / 0.25
        assert np.allclose(out.data, expected, atol=1e-6)
        assert out.data[0, 0, 0] == pytest.approx(0.00784, abs=1e-5)

    def test_zero_std_raises(self):
        img = ImageBuffer(np.zeros((1, 1, 3), np.uint8))
        with pytest.raises(InvalidNormalization):
            normalize(img, self.MEAN, (0.25, 0.0, 0.25))

    def test_wrong_arity_raises(self):
        img = ImageBuffer(np.zeros((1, 1, 3), np.uint8))
        with pytest.raises(InvalidNormalization):
            normalize(img, (0.5, 0.5), (1.0, 1.0, 1.0))

    def test_roundtrip_recovers_all_pixel_values(self):
        # Every 8-bit value in every channel, against the default constants.
        from zoomtok.gridplan import DEFAULT_MEAN, DEFAULT_STD

        ramp = np.tile(np.arange(256, dtype=np.uint8)[None, :, None], (1, 1, 3))
        img = ImageBuffer(ramp)
        tensor = normalize(img, DEFAULT_MEAN, DEFAULT_STD)
        back = denormalize(tensor, DEFAULT_MEAN, DEFAULT_STD)
        err = np.abs(back - ramp.astype(np.float64))
        assert err.max() < 2**-8  # far inside one 8-bit quantization step
        assert np.array_equal(np.rint(back).astype(np.uint8), ramp)

    def test_channel_planar_layout(self):
        pixels = np.zeros((1, 2, 3), np.uint8)
        pixels[0, 0] = (255, 0, 0)
        pixels[0, 1] = (0, 255, 0)
        out = normalize(ImageBuffer(pixels), (0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
        assert out.data[0, 0, 0] == pytest.approx(1.0)
        assert out.data[1, 0, 1] == pytest.approx(1.0)
        assert out.data[2, 0, 0] == pytest.approx(0.0)


class TestBufferInvariants:
    def test_rejects_bad_shapes(self):
        with pytest.raises(InvalidDimension):
            ImageBuffer(np.zeros((4, 4), np.uint8))
        with pytest.raises(InvalidDimension):
            ImageBuffer(np.zeros((0, 4, 3), np.uint8))

    def test_buffers_are_read_only(self, noise_image):
        img = noise_image(1, 3, 3)
        with pytest.raises(ValueError):
            img.data[0, 0, 0] = 1
