import numpy as np
import pytest

from panomix.core import (
    Layout,
    Panorama,
    Sample,
    SemanticMask,
    col_to_lon,
    direction,
    flip_horizontal,
    lat_to_row,
    lon_to_col,
    roll_columns,
    row_to_lat,
    sample_bilinear,
    sample_nearest,
    validate_sample,
)
from panomix.errors import InvalidCoordinateError

from conftest import flat_sample, square_layout


class TestAngleConversions:
    def test_image_center_faces_forward(self):
        assert col_to_lon(1024 / 2 - 0.5, 1024) == pytest.approx(0.0, abs=1e-15)

    def test_horizon_at_vertical_center(self):
        assert row_to_lat(512 / 2 - 0.5, 512) == pytest.approx(0.0, abs=1e-15)

    def test_quarter_turn_column(self):
        # 2*pi*640/1024 - pi = pi/4
        assert col_to_lon(639.5, 1024) == pytest.approx(np.pi / 4, abs=1e-12)

    def test_round_trip_exactness(self):
        rng = np.random.default_rng(0)
        cols = rng.uniform(-0.5, 2047.5, 10_000)
        rows = rng.uniform(-0.5, 1023.5, 10_000)
        assert np.max(np.abs(lon_to_col(col_to_lon(cols, 2048), 2048) - cols)) < 1e-12
        assert np.max(np.abs(lat_to_row(row_to_lat(rows, 1024), 1024) - rows)) < 1e-12
        lons = rng.uniform(-np.pi, np.pi, 10_000)
        lats = rng.uniform(-np.pi / 2, np.pi / 2, 10_000)
        assert np.max(np.abs(col_to_lon(lon_to_col(lons, 2048), 2048) - lons)) < 1e-12
        assert np.max(np.abs(row_to_lat(lat_to_row(lats, 1024), 1024) - lats)) < 1e-12

    def test_direction_convention(self):
        assert direction(0.0, 0.0) == pytest.approx([0.0, 0.0, 1.0], abs=1e-15)
        assert direction(np.pi / 2, 0.0) == pytest.approx([1.0, 0.0, 0.0], abs=1e-15)
        assert direction(0.3, np.pi / 2) == pytest.approx([0.0, 1.0, 0.0], abs=1e-12)


class TestBilinear:
    def test_lattice_points_exact(self):
        rng = np.random.default_rng(1)
        img = Panorama(rng.uniform(size=(16, 32, 3)))
        for x, y in [(0, 0), (5, 7), (31, 15)]:
            assert sample_bilinear(img, x, y) == pytest.approx(img.pixels[y, x], abs=0)

    def test_seam_wrap_averages(self):
        rng = np.random.default_rng(2)
        img = Panorama(rng.uniform(size=(16, 32, 3)))
        got = sample_bilinear(img, 31.5, 4.0)
        want = (img.pixels[4, 31] + img.pixels[4, 0]) / 2
        assert got == pytest.approx(want, abs=1e-15)

    def test_constant_image_constant(self):
        img = Panorama(np.full((8, 16, 3), 0.3))
        rng = np.random.default_rng(3)
        xs = rng.uniform(-5, 40, 100)
        ys = rng.uniform(-5, 20, 100)
        assert np.max(np.abs(sample_bilinear(img, xs, ys) - 0.3)) < 1e-15

    def test_column_ramp_reproduced(self):
        h, w = 8, 64
        ramp = np.repeat(np.arange(w, dtype=np.float64)[None, :, None] / w, h, axis=0)
        img = Panorama(np.repeat(ramp, 3, axis=2))
        rng = np.random.default_rng(4)
        xs = rng.uniform(0.0, w - 2.0, 500)  # interior: the seam breaks linearity
        got = sample_bilinear(img, xs, np.full(500, 3.0))
        assert np.max(np.abs(got[:, 0] - xs / w)) < 1e-9

    def test_vertical_clamp(self):
        rng = np.random.default_rng(5)
        img = Panorama(rng.uniform(size=(8, 16, 3)))
        assert sample_bilinear(img, 3.0, -5.0) == pytest.approx(img.pixels[0, 3], abs=0)
        assert sample_bilinear(img, 3.0, 99.0) == pytest.approx(img.pixels[7, 3], abs=0)

    def test_nonfinite_rejected(self):
        img = Panorama(np.zeros((8, 16, 3)))
        with pytest.raises(InvalidCoordinateError):
            sample_bilinear(img, np.nan, 0.0)
        with pytest.raises(InvalidCoordinateError):
            sample_bilinear(img, 0.0, np.inf)


class TestNearest:
    def test_lattice_and_rounding(self):
        rng = np.random.default_rng(6)
        mask = SemanticMask(rng.integers(0, 4, size=(8, 16)), ("a", "b", "c", "d"))
        assert sample_nearest(mask, 5, 3) == mask.labels[3, 5]
        assert sample_nearest(mask, 5.49, 3.0) == mask.labels[3, 5]
        assert sample_nearest(mask, 5.5, 3.0) == mask.labels[3, 6]

    def test_wrap_and_clamp(self):
        rng = np.random.default_rng(7)
        mask = SemanticMask(rng.integers(0, 4, size=(8, 16)), ("a", "b", "c", "d"))
        assert sample_nearest(mask, 15.8, 3.0) == mask.labels[3, 0]
        assert sample_nearest(mask, 3.0, -2.0) == mask.labels[0, 3]

    def test_no_fabricated_classes_under_random_warp(self):
        rng = np.random.default_rng(8)
        labels = (rng.uniform(size=(32, 64)) < 0.5).astype(np.int32) * 2  # classes {0, 2}
        mask = SemanticMask(labels, ("bg", "unused", "fg"))
        xs = rng.uniform(-100, 200, size=(40, 80))
        ys = rng.uniform(-10, 50, size=(40, 80))
        warped = sample_nearest(mask, xs, ys)
        assert set(np.unique(warped)) <= set(np.unique(labels))

    def test_nonfinite_rejected(self):
        mask = SemanticMask(np.zeros((8, 16), dtype=np.int32), ("a",))
        with pytest.raises(InvalidCoordinateError):
            sample_nearest(mask, np.nan, 0.0)


class TestRollColumns:
    def _sample(self):
        rng = np.random.default_rng(9)
        img = Panorama(rng.uniform(size=(128, 256, 3)))
        mask = SemanticMask(rng.integers(0, 3, size=(128, 256)), ("ceiling", "floor", "wall"))
        return Sample(img, mask, square_layout(128, 256))

    def test_zero_and_full_period_identity(self):
        s = self._sample()
        for k in (0, 256, -256, 512):
            rolled = roll_columns(s, k)
            assert np.array_equal(rolled.image.pixels, s.image.pixels)
            assert np.array_equal(rolled.mask.labels, s.mask.labels)
            assert np.array_equal(rolled.layout.corners, s.layout.corners)

    def test_corner_shift_modular(self):
        corners = [[100.0, 10.0, 100.0], [300.0, 10.0, 100.0], [600.0, 10.0, 100.0], [900.0, 10.0, 100.0]]
        img = Panorama(np.zeros((512, 1024, 3)))
        mask = SemanticMask(np.zeros((512, 1024), dtype=np.int32), ("x",))
        rolled = roll_columns(Sample(img, mask, Layout(corners)), 256)
        assert 356.0 in rolled.layout.columns

    def test_column_placement(self):
        s = self._sample()
        rolled = roll_columns(s, 37)
        c = 100
        assert np.array_equal(rolled.image.pixels[:, c], s.image.pixels[:, (c - 37) % 256])

    def test_inverse_composition_bit_exact(self):
        s = self._sample()
        back = roll_columns(roll_columns(s, 91), -91)
        assert np.array_equal(back.image.pixels, s.image.pixels)
        assert np.array_equal(back.mask.labels, s.mask.labels)
        assert np.array_equal(back.layout.corners, s.layout.corners)


class TestFlip:
    def test_involution_and_layout(self):
        rng = np.random.default_rng(10)
        img = Panorama(rng.uniform(size=(128, 256, 3)))
        mask = SemanticMask(rng.integers(0, 3, size=(128, 256)), ("ceiling", "floor", "wall"))
        s = Sample(img, mask, square_layout(128, 256))
        f = flip_horizontal(s)
        assert np.array_equal(f.image.pixels[:, 0], s.image.pixels[:, 255])
        assert set(np.round(f.layout.columns, 9)) == set(np.round(255.0 - s.layout.columns, 9))
        back = flip_horizontal(f)
        assert np.array_equal(back.image.pixels, s.image.pixels)
        assert np.array_equal(back.layout.corners, s.layout.corners)


class TestValidateSample:
    def test_oracle_sample_is_valid(self, oracle_sample):
        assert validate_sample(oracle_sample) == []

    def test_inverted_rows_named(self):
        s = flat_sample()
        corners = np.array(s.layout.corners)
        corners[2, 1], corners[2, 2] = corners[2, 2], corners[2, 1]
        bad = Sample(s.image, s.mask, Layout(corners))
        violations = validate_sample(bad)
        assert any("corner 2" in v for v in violations)

    def test_out_of_range_class(self):
        s = flat_sample()
        labels = np.array(s.mask.labels)
        labels[0, 0] = 3  # == class count
        bad = Sample(s.image, SemanticMask(labels, s.mask.class_names), s.layout)
        violations = validate_sample(bad)
        assert any("1 pixels" in v for v in violations)

    def test_aspect_ratio_checked(self):
        img = Panorama(np.zeros((64, 100, 3)))
        mask = SemanticMask(np.zeros((64, 100), dtype=np.int32), ("a",))
        violations = validate_sample(Sample(img, mask, square_layout(64, 100)))
        assert any("twice" in v for v in violations)

    def test_inconsistent_ceiling_heights(self):
        s = flat_sample()
        corners = np.array(s.layout.corners)
        corners[0, 1] -= 6.0  # lift one ceiling corner well above the rest
        violations = validate_sample(Sample(s.image, s.mask, Layout(corners)))
        assert any("ceiling heights" in v for v in violations)

    def test_pixel_range_checked(self):
        img = Panorama(np.full((128, 256, 3), 1.5))
        mask = SemanticMask(np.zeros((128, 256), dtype=np.int32), ("a",))
        violations = validate_sample(Sample(img, mask, square_layout()))
        assert any("[0, 1]" in v for v in violations)


class TestTypeConstruction:
    def test_panorama_shape_checked(self):
        with pytest.raises(ValueError):
            Panorama(np.zeros((8, 16)))

    def test_mask_dtype_checked(self):
        with pytest.raises(ValueError):
            SemanticMask(np.zeros((8, 16)), ("a",))

    def test_layout_sorts_corners(self):
        lay = Layout([[300.0, 5.0, 60.0], [10.0, 5.0, 60.0], [150.0, 5.0, 60.0]])
        assert list(lay.columns) == [10.0, 150.0, 300.0]

    def test_types_are_frozen(self):
        img = Panorama(np.zeros((8, 16, 3)))
        with pytest.raises(ValueError):
            img.pixels[0, 0, 0] = 1.0
