"""Scene synthesis and stacked fusion blocks."""

import numpy as np
import pytest

from specfuse import (
    AttentionWindow,
    FusionPlan,
    InvalidParameterError,
    SeededRng,
    SyntheticScene,
    Tone,
    band_energy,
    fft3,
    make_scene,
    masked_attention,
    project_qkv,
    run_stack,
    scene_tokens,
    tokens_from_latent,
)


class TestMakeScene:
    def test_single_tone_band_placement(self):
        scene = SyntheticScene(shape=(1, 32, 4, 4), tones=(Tone("t", np.pi / 8, 1.0),))
        energies = band_energy(make_scene(scene), [np.pi / 8, np.pi / 4])
        assert energies[0] == pytest.approx(energies.sum(), rel=1e-9)

    def test_two_tones_split_bands(self):
        scene = SyntheticScene(
            shape=(1, 32, 4, 4),
            tones=(Tone("t", np.pi / 8, 1.0), Tone("t", np.pi / 2, 1.0)),
        )
        energies = band_energy(make_scene(scene), [np.pi / 8, np.pi / 4])
        assert energies[0] > 0.0 and energies[2] > 0.0
        assert energies[1] == pytest.approx(0.0, abs=1e-9)

    def test_empty_scene_is_zero(self):
        scene = SyntheticScene(shape=(2, 8, 4, 4))
        assert np.abs(make_scene(scene).data).max() == 0.0

    def test_peak_bin_placement(self):
        t, k = 32, 5
        scene = SyntheticScene(shape=(1, t, 2, 2), tones=(Tone("t", 2 * np.pi * k / t, 1.0),))
        profile = (np.abs(fft3(make_scene(scene)).data[0]) ** 2).sum(axis=(1, 2))
        assert int(profile.argmax()) in (k, t - k)
        assert int(round(2 * np.pi * k / t * t / (2 * np.pi))) == k

    def test_spatial_tone_axis(self):
        scene = SyntheticScene(shape=(1, 2, 16, 2), tones=(Tone("h", np.pi / 2, 2.0),))
        spec = np.abs(fft3(make_scene(scene)).data[0]) ** 2
        profile = spec.sum(axis=(0, 2))
        assert int(profile.argmax()) in (4, 12)

    def test_invalid_tone_rejected(self):
        with pytest.raises(InvalidParameterError):
            Tone("t", 4.0, 1.0)
        with pytest.raises(InvalidParameterError):
            Tone("x", 1.0, 1.0)
        with pytest.raises(InvalidParameterError):
            Tone("t", 1.0, 0.0)

    def test_noise_is_seeded(self):
        scene = SyntheticScene(shape=(2, 8, 4, 4), noise_level=0.5, seed=13)
        assert np.array_equal(make_scene(scene).data, make_scene(scene).data)

    def test_config_roundtrip(self):
        scene = SyntheticScene(
            shape=(4, 32, 8, 8),
            tones=(Tone("t", 0.125, 1.0), Tone("w", 0.5, 2.0)),
            noise_level=0.25,
            seed=42,
        )
        assert SyntheticScene.from_text(scene.to_text()) == scene

    def test_unknown_config_key(self):
        with pytest.raises(InvalidParameterError):
            SyntheticScene.from_text("shape = 1,2,2,2\nwhat = 3\n")


class TestRunStack:
    def test_depth_one_is_single_call(self):
        toks = scene_tokens(SyntheticScene(shape=(8, 16, 4, 4), noise_level=1.0, seed=1))
        plan = FusionPlan(t_alpha=8, alphas=(1, 2))
        from specfuse import spectral_blend_attention
        from specfuse.harness import block_weights

        stacked = run_stack(toks, plan, depth=1, seed=3, spatial=(4, 4))
        weights = block_weights(8, SeededRng(3))
        single = spectral_blend_attention(toks, weights, plan, (4, 4))
        assert np.array_equal(stacked.features, single.features)

    def test_depth_two_identity_short_input(self):
        # T == t_alpha with identity projections: two plain attention passes.
        toks = scene_tokens(SyntheticScene(shape=(4, 8, 4, 4), noise_level=1.0, seed=2))
        plan = FusionPlan(t_alpha=8, alphas=(1, 2), domain_mode="radial")
        out = run_stack(toks, plan, depth=2, seed=0, spatial=(4, 4), identity_weights=True)
        eye = (np.eye(4), np.eye(4), np.eye(4))
        ref = toks
        for _ in range(2):
            q, k, v = project_qkv(ref, eye)
            ref = masked_attention(q, k, v, ref.frame_index, AttentionWindow.global_for(8))
        assert np.abs(out.features - ref.features).max() <= 2e-4

    def test_three_scale_stack_reproducible(self):
        toks = scene_tokens(SyntheticScene(shape=(8, 32, 4, 4), noise_level=1.0, seed=5))
        plan = FusionPlan(t_alpha=8, alphas=(1, 2, 4))
        a = run_stack(toks, plan, depth=3, seed=11, spatial=(4, 4))
        b = run_stack(toks, plan, depth=3, seed=11, spatial=(4, 4))
        assert a.features.tobytes() == b.features.tobytes()

    def test_bad_depth(self):
        toks = scene_tokens(SyntheticScene(shape=(2, 8, 2, 2), noise_level=1.0, seed=6))
        with pytest.raises(InvalidParameterError):
            run_stack(toks, FusionPlan(t_alpha=8, alphas=(1, 2)), 0, 1, (2, 2))
