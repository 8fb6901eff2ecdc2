"""Blend and multi-band fusion, including the token <-> latent mapping."""

import numpy as np
import pytest

from specfuse import (
    AttentionWindow,
    FrequencyMask,
    FusionPlan,
    InvalidParameterError,
    InvalidPlanError,
    SeededRng,
    ShapeMismatchError,
    TokenSequence,
    VideoLatent,
    band_masks,
    fft3,
    fused_spectrum,
    gaussian_latent,
    gaussian_lowpass,
    latent_from_tokens,
    masked_attention,
    multiband_attention,
    multiband_fuse,
    project_qkv,
    spectral_blend,
    spectral_blend_attention,
    tokens_from_latent,
)
from specfuse.harness import block_weights


def random_tokens(t, tpf, d, seed) -> TokenSequence:
    feats = SeededRng(seed).normals(t * tpf * d).reshape(t * tpf, d)
    return TokenSequence(feats, np.repeat(np.arange(t), tpf))


def temporal_tone(shape, k: int) -> VideoLatent:
    c, t, h, w = shape
    wave = np.cos(2.0 * np.pi * k * np.arange(t) / t)
    return VideoLatent(np.broadcast_to(wave[None, :, None, None], shape).astype(np.float32))


class TestTokenLatentMapping:
    def test_roundtrip(self):
        lat = gaussian_latent((3, 4, 2, 5), SeededRng(1))
        back = latent_from_tokens(tokens_from_latent(lat), (2, 5))
        assert np.array_equal(back.data, lat.data)

    def test_token_order_is_frame_major_row_major(self):
        c, t, h, w = 2, 3, 2, 2
        lat = VideoLatent(np.arange(c * t * h * w, dtype=np.float32).reshape(c, t, h, w))
        toks = tokens_from_latent(lat)
        for ti in range(t):
            for y in range(h):
                for x in range(w):
                    token = toks.features[ti * h * w + y * w + x]
                    assert np.array_equal(token, lat.data[:, ti, y, x])

    def test_bad_spatial_factorization(self):
        lat = gaussian_latent((2, 3, 2, 5), SeededRng(2))
        with pytest.raises(ShapeMismatchError):
            latent_from_tokens(tokens_from_latent(lat), (3, 3))


class TestSpectralBlend:
    def test_identical_branches_pass_through(self):
        z = gaussian_latent((2, 8, 4, 4), SeededRng(3))
        lpf = gaussian_lowpass((8, 4, 4), 0.25)
        out = spectral_blend(z, z, lpf)
        assert np.abs(out.data - z.data).max() <= 1e-4

    def test_all_ones_filter_returns_global(self):
        zg = gaussian_latent((2, 8, 4, 4), SeededRng(4))
        zl = gaussian_latent((2, 8, 4, 4), SeededRng(5))
        out = spectral_blend(zg, zl, FrequencyMask(np.ones((8, 4, 4))))
        assert np.abs(out.data - zg.data).max() <= 1e-6

    def test_tone_split_keeps_both_tones(self):
        shape = (1, 16, 4, 4)
        low, high = temporal_tone(shape, 1), temporal_tone(shape, 6)
        fine_mask, coarse_mask = band_masks([1, 4], (16, 4, 4))  # split at pi/8
        out = spectral_blend(low, high, coarse_mask)  # low band from `low`, rest from `high`
        spec_out = fft3(out).data[0]
        expected = fft3(low).data[0] + fft3(high).data[0]
        assert np.abs(spec_out - expected).max() <= 1e-6

    def test_shape_mismatch(self):
        a = gaussian_latent((1, 4, 4, 4), SeededRng(6))
        b = gaussian_latent((1, 8, 4, 4), SeededRng(7))
        with pytest.raises(ShapeMismatchError):
            spectral_blend(a, b, gaussian_lowpass((4, 4, 4), 0.25))


class TestMultibandFuse:
    def test_identical_branches_pass_through(self):
        z = gaussian_latent((2, 16, 4, 4), SeededRng(8))
        masks = band_masks([1, 2, 4], (16, 4, 4))
        out = multiband_fuse([z, z, z], masks)
        assert np.abs(out.data - z.data).max() <= 1e-4

    def test_two_bands_equals_spectral_blend(self):
        zg = gaussian_latent((2, 8, 4, 4), SeededRng(9))
        zl = gaussian_latent((2, 8, 4, 4), SeededRng(10))
        lpf = gaussian_lowpass((8, 4, 4), 0.25)
        blended = spectral_blend(zg, zl, lpf)
        fused = multiband_fuse([zl, zg], [lpf.complement(), lpf])
        assert np.abs(blended.data - fused.data).max() <= 1e-6

    def test_three_tones_union(self):
        shape = (1, 32, 4, 4)
        masks = band_masks([1, 2, 4], (32, 4, 4))
        # k=1 -> pi/16 (coarse band), k=3 -> 3pi/16 (middle), k=8 -> pi/2 (fine).
        fine, mid, coarse = temporal_tone(shape, 8), temporal_tone(shape, 3), temporal_tone(shape, 1)
        out = multiband_fuse([fine, mid, coarse], masks)
        expected = fft3(fine).data + fft3(mid).data + fft3(coarse).data
        assert np.abs(fft3(out).data - expected).max() <= 1e-6

    def test_partition_violation_rejected(self):
        z = gaussian_latent((1, 8, 4, 4), SeededRng(11))
        half = FrequencyMask(np.full((8, 4, 4), 0.5))
        quarter = FrequencyMask(np.full((8, 4, 4), 0.25))
        with pytest.raises(InvalidPlanError):
            multiband_fuse([z, z], [half, quarter])

    def test_mismatched_lengths_rejected(self):
        z = gaussian_latent((1, 8, 4, 4), SeededRng(12))
        with pytest.raises(InvalidParameterError):
            multiband_fuse([z], band_masks([1, 2], (8, 4, 4)))


class TestFusionPlan:
    def test_text_roundtrip(self):
        plan = FusionPlan(t_alpha=8, alphas=(1, 2, 4), sparse_global=True,
                          domain_mode="radial", d0=0.3)
        assert FusionPlan.from_text(plan.to_text()) == plan

    def test_unknown_key_rejected(self):
        with pytest.raises(InvalidParameterError):
            FusionPlan.from_text("t_alpha = 8\nalphas = 1,2\nbogus = 1\n")

    def test_descending_alphas_rejected(self):
        with pytest.raises(InvalidPlanError):
            FusionPlan(t_alpha=8, alphas=(2, 1))

    def test_coverage_validation(self):
        plan = FusionPlan(t_alpha=8, alphas=(1, 2))
        plan.validate_for(16)
        with pytest.raises(InvalidPlanError):
            plan.validate_for(17)

    def test_branch_configs_mark_sparse_on_largest(self):
        plan = FusionPlan(t_alpha=8, alphas=(1, 2, 4), sparse_global=True)
        configs = plan.branch_configs((32, 4, 4))
        assert [c.sparse for c in configs] == [False, False, True]
        assert [c.alpha for c in configs] == [1, 2, 4]


class TestFusedAttention:
    def test_single_branch_is_plain_attention(self):
        toks = random_tokens(8, 16, 8, 13)
        weights = block_weights(8, SeededRng(14))
        plan = FusionPlan(t_alpha=8, alphas=(1,))
        out = multiband_attention(toks, weights, plan, (4, 4))
        q, k, v = project_qkv(toks, weights)
        plain = masked_attention(q, k, v, toks.frame_index, AttentionWindow.for_span(8, 8))
        assert np.abs(out.features - plain.features).max() <= 1e-4

    def test_short_input_reduction_chain(self):
        # T == t_alpha: every window saturates, all paths match plain attention.
        toks = random_tokens(8, 16, 8, 15)
        weights = block_weights(8, SeededRng(16))
        q, k, v = project_qkv(toks, weights)
        plain = masked_attention(q, k, v, toks.frame_index, AttentionWindow.global_for(8))
        blend = spectral_blend_attention(
            toks, weights, FusionPlan(t_alpha=8, alphas=(1, 2), domain_mode="radial"), (4, 4))
        banded = multiband_attention(
            toks, weights, FusionPlan(t_alpha=8, alphas=(1, 2)), (4, 4))
        assert np.abs(blend.features - plain.features).max() <= 1e-4
        assert np.abs(banded.features - plain.features).max() <= 1e-4

    def test_two_branch_paths_agree_with_shared_masks(self):
        toks = random_tokens(16, 16, 8, 17)
        weights = block_weights(8, SeededRng(18))
        plan = FusionPlan(t_alpha=8, alphas=(1, 2), domain_mode="radial", d0=0.25)
        blend = spectral_blend_attention(toks, weights, plan, (4, 4))
        lpf = gaussian_lowpass((16, 4, 4), 0.25, "radial")
        banded = multiband_attention(toks, weights, plan, (4, 4),
                                     masks=[lpf.complement(), lpf])
        assert np.abs(blend.features - banded.features).max() <= 1e-5

    def test_band_ownership(self):
        from specfuse.fusion import _branch_latents

        toks = random_tokens(32, 16, 8, 19)
        weights = block_weights(8, SeededRng(20))
        plan = FusionPlan(t_alpha=8, alphas=(1, 2, 4))
        fused = multiband_attention(toks, weights, plan, (4, 4))
        fused_spec = fft3(latent_from_tokens(fused, (4, 4))).data
        masks = band_masks(plan.alphas, (32, 4, 4))
        for mask, branch in zip(masks, _branch_latents(toks, weights, plan, (4, 4))):
            sel = mask.weights.astype(bool)
            assert np.abs((fused_spec - fft3(branch).data)[:, sel]).max() <= 1e-4

    def test_lpf_equal_one_returns_global_branch(self):
        toks = random_tokens(16, 16, 8, 21)
        weights = block_weights(8, SeededRng(22))
        plan = FusionPlan(t_alpha=8, alphas=(1, 2))
        ones = FrequencyMask(np.ones((16, 4, 4)))
        zeros = FrequencyMask(np.zeros((16, 4, 4)))
        out = multiband_attention(toks, weights, plan, (4, 4), masks=[zeros, ones])
        q, k, v = project_qkv(toks, weights)
        glob = masked_attention(q, k, v, toks.frame_index, AttentionWindow.global_for(16))
        assert np.abs(out.features - glob.features).max() <= 1e-4

    def test_sparse_substitution_stays_in_coarse_band(self):
        from specfuse.fusion import _branch_latents

        toks = random_tokens(32, 16, 8, 23)
        weights = block_weights(8, SeededRng(24))
        masks = band_masks((1, 2, 4), (32, 4, 4))
        dense = fused_spectrum(
            _branch_latents(toks, weights, FusionPlan(t_alpha=8, alphas=(1, 2, 4)), (4, 4)),
            masks)
        sparse = fused_spectrum(
            _branch_latents(toks, weights,
                            FusionPlan(t_alpha=8, alphas=(1, 2, 4), sparse_global=True),
                            (4, 4)),
            masks)
        outside = ~masks[-1].weights.astype(bool)
        inside = ~outside
        assert np.array_equal(dense.data[:, outside], sparse.data[:, outside])
        assert np.abs(dense.data[:, inside] - sparse.data[:, inside]).max() > 0.0

    def test_plan_must_cover_sequence(self):
        toks = random_tokens(32, 4, 4, 25)
        plan = FusionPlan(t_alpha=8, alphas=(1, 2))
        with pytest.raises(InvalidPlanError):
            multiband_attention(toks, (np.eye(4), np.eye(4), np.eye(4)), plan, (2, 2))
