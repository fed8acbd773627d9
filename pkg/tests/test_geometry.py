import numpy as np
import pytest

from panomix.core import Layout, lat_to_row, lon_to_col, roll_columns, row_to_lat
from panomix.errors import (
    DegenerateLayoutError,
    DegeneratePointError,
    DegenerateWallError,
    InconsistentLayoutError,
    InvalidFactorError,
    UnsupportedLayoutError,
)
from panomix.geometry import (
    layout_to_plan,
    panostretch_dir,
    panostretch_image,
    plan_to_boundaries,
    project_corner,
    split_column_groups,
    wall_index_of_columns,
)
from panomix.synth import SceneParams, random_scene, render_scene

from conftest import boundary_agreement, centered_square_spec, flat_sample, square_layout


def _layout_with_distance_one(height=512, width=1024, ceiling=1.5):
    cols = np.array([0.125, 0.375, 0.625, 0.875]) * width - 0.5
    floor_row = 383.5  # latitude -pi/4 at H=512, so plan distance 1
    ceil_row = float(lat_to_row(np.arctan(ceiling), height))
    return Layout([[c, ceil_row, floor_row] for c in cols])


class TestLayoutToPlan:
    def test_distance_from_floor_row(self):
        plan = layout_to_plan(_layout_with_distance_one(), 512, 1024)
        dists = np.hypot(plan.corners_xz[:, 0], plan.corners_xz[:, 1])
        assert dists == pytest.approx(np.ones(4), abs=1e-12)

    def test_ceiling_height_recovered(self):
        # ceil row built by inverting atan(1.5/1) through lat_to_row
        plan = layout_to_plan(_layout_with_distance_one(ceiling=1.5), 512, 1024)
        assert plan.ceiling_height == pytest.approx(1.5, abs=1e-12)

    def test_centered_square_symmetry(self):
        plan = layout_to_plan(square_layout(), 128, 256)
        u = np.arctan2(plan.corners_xz[:, 0], plan.corners_xz[:, 1])
        assert u == pytest.approx([-0.75 * np.pi, -0.25 * np.pi, 0.25 * np.pi, 0.75 * np.pi], abs=1e-12)
        d = np.hypot(plan.corners_xz[:, 0], plan.corners_xz[:, 1])
        assert np.ptp(d) < 1e-12

    def test_floor_at_horizon_rejected(self):
        lay = Layout([[c, 10.0, 512 / 2 - 0.5] for c in (100, 400, 700, 1000)])
        with pytest.raises(DegenerateLayoutError):
            layout_to_plan(lay, 512, 1024)

    def test_inconsistent_ceilings_rejected(self):
        lay = _layout_with_distance_one()
        corners = np.array(lay.corners)
        corners[0, 1] -= 20.0
        with pytest.raises(InconsistentLayoutError):
            layout_to_plan(Layout(corners), 512, 1024)


class TestPlanToBoundaries:
    def test_corner_columns_match_layout_rows(self):
        lay = _layout_with_distance_one()
        plan = layout_to_plan(lay, 512, 1024)
        bm = plan_to_boundaries(plan, 512, 1024, lay)
        for col, ceil_row, floor_row in np.asarray(lay.corners):
            a, b = bm.at(np.array([col]))
            assert abs(a[0] - ceil_row) < 0.51
            assert abs(b[0] - floor_row) < 0.51

    def test_mid_wall_floor_row_square_room(self):
        # corner distance 1 -> mid-wall distance 1/sqrt(2); expected row from
        # lat_to_row(-atan(sqrt(2))) ~ 411.22 at H=512
        lay = _layout_with_distance_one()
        plan = layout_to_plan(lay, 512, 1024)
        bm = plan_to_boundaries(plan, 512, 1024, lay)
        mid = float(lon_to_col(0.0, 1024))
        _, floor = bm.at(np.array([mid]))
        expected = float(lat_to_row(-np.arctan(np.sqrt(2.0)), 512))
        assert expected == pytest.approx(411.1924, abs=1e-3)
        assert floor[0] == pytest.approx(expected, abs=0.02)

    def test_random_oracle_round_trip(self):
        for seed in range(5):
            sample = render_scene(random_scene(seed, SceneParams(box_count=(0, 0))), 128, 256)
            lay = sample.layout
            plan = layout_to_plan(lay, 128, 256)
            bm = plan_to_boundaries(plan, 128, 256, lay)
            a, b = bm.at(lay.columns)
            assert np.max(np.abs(a - lay.ceil_rows)) < 0.51
            assert np.max(np.abs(b - lay.floor_rows)) < 0.51

    def test_boundaries_straddle_horizon(self):
        lay = square_layout()
        bm = plan_to_boundaries(layout_to_plan(lay, 128, 256), 128, 256, lay)
        horizon = 128 / 2 - 0.5
        assert np.all(bm.ceil_rows < horizon)
        assert np.all(bm.floor_rows > horizon)

    def test_non_star_shaped_rejected(self):
        # All corners crowded into a quarter turn: the wrap wall cannot be
        # hit by rays pointing the other way.
        lay = Layout([[10.0, 20.0, 100.0], [40.0, 20.0, 100.0], [70.0, 20.0, 100.0]])
        with pytest.raises(UnsupportedLayoutError):
            plan_to_boundaries(layout_to_plan(lay, 128, 256), 128, 256, lay)

    def test_oracle_mask_transitions_match(self, oracle_sample):
        lay = oracle_sample.layout
        bm = plan_to_boundaries(layout_to_plan(lay, 128, 256), 128, 256, lay)
        agreement = boundary_agreement(
            oracle_sample.mask.labels, oracle_sample.mask.class_names, bm
        )
        assert agreement >= 0.99


class TestProjectCorner:
    def test_forward_horizon(self):
        col, row = project_corner((0.0, 1.0), 0.0, 512, 1024)
        assert col == pytest.approx(1024 / 2 - 0.5, abs=1e-9)
        assert row == pytest.approx(512 / 2 - 0.5, abs=1e-9)

    def test_hand_trig_case(self):
        col, row = project_corner((1.0, 1.0), -1.0, 512, 1024)
        assert col == pytest.approx(float(lon_to_col(np.pi / 4, 1024)), abs=1e-9)
        v = -np.arctan(1.0 / np.sqrt(2.0))
        assert v == pytest.approx(-0.61548, abs=1e-5)
        assert row == pytest.approx(float(lat_to_row(v, 512)), abs=1e-9)

    def test_inverse_pair_with_lift(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            point = rng.uniform(-3, 3, size=2)
            if np.hypot(*point) < 0.1:
                continue
            col, row = project_corner(point, -1.0, 128, 256)
            d = 1.0 / np.tan(-row_to_lat(row, 128))
            u = (col + 0.5) * (2 * np.pi / 256) - np.pi
            rebuilt = d * np.array([np.sin(u), np.cos(u)])
            assert rebuilt == pytest.approx(point, abs=1e-9)

    def test_origin_rejected(self):
        with pytest.raises(DegeneratePointError):
            project_corner((0.0, 0.0), 1.0, 128, 256)


class TestSplitColumnGroups:
    def _sample_with_columns(self, cols, width=1024, height=512):
        from panomix.core import Sample

        base = flat_sample(height, width)
        ceil_row = float(lat_to_row(np.arctan(1.5), height))
        floor_row = height * 0.75 - 0.5  # latitude -pi/4: plan distance 1
        lay = Layout([[float(c), ceil_row, floor_row] for c in cols])
        return Sample(base.image, base.mask, lay)

    def test_aligned_corners(self):
        s = self._sample_with_columns([0, 256, 512, 768])
        split = split_column_groups(s)
        assert split.roll == 0
        assert [(g.col_start, g.col_end) for g in split.groups] == [
            (0, 256), (256, 512), (512, 768), (768, 1024),
        ]

    def test_offset_corners_rolled(self):
        s = self._sample_with_columns([100, 356, 612, 868])
        split = split_column_groups(s)
        assert split.roll == -100
        assert [(g.col_start, g.col_end) for g in split.groups] == [
            (0, 256), (256, 512), (512, 768), (768, 1024),
        ]

    def test_partition_property(self):
        for seed in range(6):
            sample = render_scene(random_scene(seed, SceneParams(box_count=(0, 0))), 128, 256)
            split = split_column_groups(sample)
            assert len(split.groups) == sample.layout.wall_count
            assert sum(g.width for g in split.groups) == 256
            edges = [g.col_start for g in split.groups] + [split.groups[-1].col_end]
            assert edges[0] == 0 and edges[-1] == 256
            assert all(b > a for a, b in zip(edges, edges[1:]))

    def test_roll_is_invertible(self, oracle_sample):
        split = split_column_groups(oracle_sample)
        back = roll_columns(split.sample, -split.roll)
        assert np.array_equal(back.image.pixels, oracle_sample.image.pixels)
        assert np.array_equal(back.mask.labels, oracle_sample.mask.labels)

    def test_slices_view_rolled_sample(self, oracle_sample):
        split = split_column_groups(oracle_sample)
        g = split.groups[1]
        assert np.array_equal(
            g.image_slice, split.sample.image.pixels[:, g.col_start : g.col_end]
        )
        assert g.boundary_slice.shape == (2, g.width)

    def test_colliding_corners_rejected(self):
        s = self._sample_with_columns([100.0, 100.3, 612.0, 868.0])
        with pytest.raises(DegenerateWallError):
            split_column_groups(s)


class TestWallIndex:
    def test_ownership_ranges(self):
        lay = square_layout(128, 256)
        cols = lay.columns
        idx = wall_index_of_columns(lay, np.array([0.0, cols[0], cols[0] + 1, cols[3] + 1, 255.0]))
        assert list(idx) == [3, 0, 0, 3, 3]


class TestPanostretchDir:
    def test_identity(self):
        rng = np.random.default_rng(12)
        u = rng.uniform(-np.pi, np.pi, 1000)
        v = rng.uniform(-np.pi / 2 + 0.01, np.pi / 2 - 0.01, 1000)
        u2, v2 = panostretch_dir(u, v, 1.0, 1.0)
        assert np.max(np.abs(u2 - u)) < 1e-9
        assert np.max(np.abs(v2 - v)) < 1e-9

    def test_hand_values(self):
        u2, v2 = panostretch_dir(np.pi / 2, np.pi / 4, 2.0, 1.0)
        assert float(u2) == pytest.approx(np.pi / 2, abs=1e-12)
        assert float(v2) == pytest.approx(0.463648, abs=1e-6)
        u2, v2 = panostretch_dir(0.0, np.pi / 4, 1.0, 3.0)
        assert float(u2) == pytest.approx(0.0, abs=1e-12)
        assert float(v2) == pytest.approx(0.321751, abs=1e-6)

    def test_round_trip_bijection(self):
        rng = np.random.default_rng(13)
        u = rng.uniform(-np.pi, np.pi, 2000)
        v = rng.uniform(-np.pi / 2 + 0.01, np.pi / 2 - 0.01, 2000)
        for kx, kz in [(2.0, 0.5), (0.3, 1.7), (4.0, 4.0)]:
            u1, v1 = panostretch_dir(u, v, kx, kz)
            u2, v2 = panostretch_dir(u1, v1, 1.0 / kx, 1.0 / kz)
            assert np.max(np.abs(u2 - u)) < 1e-9
            assert np.max(np.abs(v2 - v)) < 1e-9

    def test_uniform_scale_keeps_azimuth(self):
        rng = np.random.default_rng(14)
        u = rng.uniform(-np.pi, np.pi, 500)
        v = rng.uniform(-1.2, 1.2, 500)
        for k in (0.5, 2.0, 3.0):
            u2, v2 = panostretch_dir(u, v, k, k)
            assert np.max(np.abs(u2 - u)) < 1e-9
            assert np.tan(v2) == pytest.approx(np.tan(v) / k, rel=1e-9)

    def test_invalid_factors(self):
        for kx, kz in [(0.0, 1.0), (-1.0, 1.0), (1.0, np.nan)]:
            with pytest.raises(InvalidFactorError):
                panostretch_dir(0.1, 0.1, kx, kz)


class TestPanostretchImage:
    def test_identity_factors(self, oracle_sample):
        out = panostretch_image(oracle_sample, 1.0, 1.0)
        assert np.max(np.abs(out.image.pixels - oracle_sample.image.pixels)) < 1e-6
        assert np.array_equal(out.mask.labels, oracle_sample.mask.labels)

    def test_layout_round_trip(self, oracle_sample):
        once = panostretch_image(oracle_sample, 2.0, 0.5)
        back = panostretch_image(once, 0.5, 2.0)
        assert np.max(np.abs(back.layout.corners - oracle_sample.layout.corners)) < 1e-6

    def test_oracle_scene_re_render(self):
        kx, kz = 2.0, 0.5
        spec = centered_square_spec(half=1.5, ceiling=1.4)
        sample = render_scene(spec, 256, 512)
        stretched = panostretch_image(sample, kx, kz)

        from dataclasses import replace

        scaled = replace(
            spec,
            half_x=spec.half_x * kx,
            half_z=spec.half_z * kz,
            camera_x=spec.camera_x * kx,
            camera_z=spec.camera_z * kz,
            textures=dict(spec.textures),
        )
        expected = render_scene(scaled, 256, 512).layout
        assert np.max(np.abs(stretched.layout.corners - expected.corners)) < 0.6

    def test_stretched_boundaries_still_consistent(self, oracle_sample):
        out = panostretch_image(oracle_sample, 1.5, 0.8)
        lay = out.layout
        bm = plan_to_boundaries(layout_to_plan(lay, 128, 256), 128, 256, lay)
        assert boundary_agreement(out.mask.labels, out.mask.class_names, bm, tol=1.5) >= 0.97
