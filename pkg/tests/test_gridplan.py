import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zoomtok.errors import ConfigError, EmptyGridSet, IndivisibleGrid, InvalidDimension
from zoomtok.gridplan import GridSpec, PipelineConfig, plan_crops, select_grid, zoom_ratio

MEDIUM = (GridSpec(2, 2), GridSpec(1, 4), GridSpec(4, 1))
HIGH = (GridSpec(6, 6), GridSpec(3, 12), GridSpec(12, 3))


def select_oracle(w, h, grids):
    """Exhaustive minimization with the aspect metric written independently."""
    best_key, best = None, None
    for g in grids:
        metric = abs(math.log(w / h) - math.log(g.cols / g.rows))
        key = (metric, abs(g.cols - g.rows), -g.cols)
        if best_key is None or key < best_key:
            best_key, best = key, g
    return best


class TestSelectGrid:
    def test_square_picks_square_grid(self):
        assert select_grid(1000, 1000, MEDIUM) == GridSpec(2, 2)
        assert select_grid(1000, 1000, HIGH) == GridSpec(6, 6)

    def test_tall_aspect_exact_match(self):
        assert select_grid(400, 1600, MEDIUM) == GridSpec(1, 4)
        assert select_grid(400, 1600, HIGH) == GridSpec(3, 12)

    def test_wide_aspect_exact_match(self):
        assert select_grid(1600, 400, MEDIUM) == GridSpec(4, 1)
        assert select_grid(1600, 400, HIGH) == GridSpec(12, 3)

    def test_metric_enumeration_example(self):
        # |ln(1000/1400)| ~= 0.336 beats 1.050 for (1,4) and 1.723 for (4,1).
        gaps = {
            g: abs(math.log(1000 / 1400) - math.log(g.cols / g.rows)) for g in MEDIUM
        }
        assert gaps[GridSpec(2, 2)] == pytest.approx(0.336, abs=5e-4)
        assert gaps[GridSpec(1, 4)] == pytest.approx(1.050, abs=5e-4)
        assert gaps[GridSpec(4, 1)] == pytest.approx(1.723, abs=5e-4)
        assert select_grid(1000, 1400, MEDIUM) == GridSpec(2, 2)

    def test_tie_break_prefers_square_then_wide(self):
        # Aspect 2:1 sits exactly between (2,2) and (4,1); squareness wins.
        assert select_grid(1000, 500, MEDIUM) == GridSpec(2, 2)
        # Without a square option the wider grid wins the exact tie.
        assert select_grid(100, 100, (GridSpec(1, 4), GridSpec(4, 1))) == GridSpec(4, 1)

    def test_empty_set_raises(self):
        with pytest.raises(EmptyGridSet):
            select_grid(10, 10, ())

    def test_bad_dims_raise(self):
        with pytest.raises(InvalidDimension):
            select_grid(0, 10, MEDIUM)

    @settings(max_examples=300, deadline=None)
    @given(w=st.integers(1, 8000), h=st.integers(1, 8000))
    def test_equals_exhaustive_oracle(self, w, h):
        for grids in (MEDIUM, HIGH):
            assert select_grid(w, h, grids) == select_oracle(w, h, grids)

    @settings(max_examples=300, deadline=None)
    @given(w=st.integers(1, 8000), h=st.integers(1, 8000))
    def test_swapping_dims_transposes_selection(self, w, h):
        for grids in (MEDIUM, HIGH):
            assert select_grid(h, w, grids) == select_grid(w, h, grids).transpose()


class TestPlanCrops:
    def test_square_default_plan(self):
        plan = plan_crops(336, 336, PipelineConfig())
        assert plan.low_target == (336, 336)
        assert plan.medium_grid == GridSpec(2, 2)
        assert plan.medium_target == (672, 672)
        assert len(plan.medium_rects) == 4
        assert plan.high_grid == GridSpec(6, 6)
        assert plan.high_target == (2016, 2016)
        assert len(plan.high_rects) == 36

    def test_wide_input_hits_published_max_resolution(self):
        plan = plan_crops(4000, 1000, PipelineConfig())
        assert plan.high_grid == GridSpec(12, 3)
        assert plan.high_target == (4032, 1008)

    def test_tall_input_plan(self):
        plan = plan_crops(100, 390, PipelineConfig())
        assert plan.medium_grid == GridSpec(1, 4)
        assert plan.medium_target == (336, 1344)
        assert plan.high_grid == GridSpec(3, 12)
        assert plan.high_target == (1008, 4032)

    def test_rects_are_row_major_disjoint_cover(self):
        plan = plan_crops(512, 700, PipelineConfig())
        r = 336
        for rects, grid, target in (
            (plan.medium_rects, plan.medium_grid, plan.medium_target),
            (plan.high_rects, plan.high_grid, plan.high_target),
        ):
            assert len(rects) == grid.crop_count
            seen = set()
            for i, rect in enumerate(rects):
                assert rect.w == rect.h == r
                row, col = divmod(i, grid.cols)
                assert (rect.x, rect.y) == (col * r, row * r)
                assert rect.x + rect.w <= target[0] and rect.y + rect.h <= target[1]
                seen.add((rect.x, rect.y))
            assert len(seen) == len(rects)
            assert sum(rect.w * rect.h for rect in rects) == target[0] * target[1]

    def test_crop_counts_fixed_for_any_input(self):
        cfg = PipelineConfig()
        for w, h in [(1, 1), (50, 5000), (5000, 50), (799, 801), (10000, 10000)]:
            plan = plan_crops(w, h, cfg)
            assert len(plan.medium_rects) == 4
            assert len(plan.high_rects) == 36


class TestZoomRatio:
    def test_square_image(self):
        plan = plan_crops(336, 336, PipelineConfig())
        assert zoom_ratio(plan) == 6.0

    def test_native_equals_target(self):
        plan = plan_crops(4032, 1008, PipelineConfig())
        assert plan.high_target == (4032, 1008)
        assert zoom_ratio(plan) == 1.0

    def test_tall_image(self):
        plan = plan_crops(100, 390, PipelineConfig())
        assert zoom_ratio(plan) == pytest.approx(4032 / 390)
        assert zoom_ratio(plan) == pytest.approx(10.338, abs=5e-4)

    @settings(max_examples=200, deadline=None)
    @given(w=st.integers(1, 2016), h=st.integers(1, 2016))
    def test_at_least_one_when_inside_smallest_target(self, w, h):
        # Every default high grid has a long side of at least 6*336 = 2016,
        # so any image whose long side fits inside that is magnified.
        plan = plan_crops(w, h, PipelineConfig())
        assert zoom_ratio(plan) >= 1.0


class TestPipelineConfig:
    def test_defaults_are_consistent(self):
        cfg = PipelineConfig()
        assert cfg.grid_side == 24
        assert cfg.pooled_side == 6
        assert cfg.medium_crop_count == 4
        assert cfg.high_crop_count == 36

    def test_indivisible_stride_raises(self):
        with pytest.raises(IndivisibleGrid):
            PipelineConfig(pool_stride=5)

    def test_resolution_patch_mismatch_raises(self):
        with pytest.raises(ConfigError):
            PipelineConfig(resolution=340)

    def test_mixed_crop_counts_raise(self):
        with pytest.raises(ConfigError):
            PipelineConfig(medium_grids=(GridSpec(2, 2), GridSpec(1, 3)))

    def test_bad_policy_raises(self):
        with pytest.raises(ConfigError):
            PipelineConfig(separator_policy="sometimes")

    def test_zero_std_raises(self):
        with pytest.raises(ConfigError):
            PipelineConfig(normalization_std=(0.0, 1.0, 1.0))

    def test_mapping_roundtrip(self):
        cfg = PipelineConfig(pool_stride=2, encoder_dim=8, projection_dim=8)
        again = PipelineConfig.from_mapping(cfg.to_mapping())
        assert again == cfg

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            PipelineConfig.from_mapping({"stride": 4})

    def test_grids_accepted_as_pairs(self):
        cfg = PipelineConfig.from_mapping({"medium_grids": [[2, 2], [1, 4], [4, 1]]})
        assert cfg.medium_grids == MEDIUM

    def test_digest_tracks_every_field(self):
        base = PipelineConfig()
        assert base.digest() == PipelineConfig().digest()
        changed = [
            PipelineConfig(pool_stride=2),
            PipelineConfig(encoder_dim=8),
            PipelineConfig(projection_dim=8),
            PipelineConfig(separator_policy="none"),
            PipelineConfig(separator_fill=1.0),
            PipelineConfig(resolution=112, patch_size=14, pool_stride=2),
            PipelineConfig(normalization_mean=(0.5, 0.5, 0.5)),
            PipelineConfig(high_grids=(GridSpec(6, 6),)),
        ]
        digests = {cfg.digest() for cfg in changed} | {base.digest()}
        assert len(digests) == len(changed) + 1
