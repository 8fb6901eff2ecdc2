"""Windowed-attention and multi-band spectral fusion toolkit for video latents."""

from .analysis import (
    AttnMap,
    SnrReport,
    aggregate_attention,
    band_energy,
    diagonality,
    relative_snr,
    uniform_band_edges,
)
from .attention import (
    AttentionWindow,
    MacCounter,
    TokenSequence,
    attention_map,
    masked_attention,
    project_qkv,
    sparse_attention,
    uniform_keyframes,
)
from .errors import (
    BadMagicError,
    DegenerateInputError,
    InvalidParameterError,
    InvalidPlanError,
    InvalidShapeError,
    NonFiniteValueError,
    ShapeMismatchError,
    SpecfuseError,
    TensorFileError,
    TruncatedPayloadError,
    UnsupportedFormatError,
)
from .fusion import (
    BranchConfig,
    FusionPlan,
    fused_spectrum,
    latent_from_tokens,
    multiband_attention,
    multiband_fuse,
    spectral_blend,
    spectral_blend_attention,
    tokens_from_latent,
)
from .harness import SyntheticScene, Tone, block_weights, make_scene, run_stack, scene_tokens
from .noise_init import SpecMixParams, base_noise, center_distance, mixing_angle, specmix
from .spectral import (
    BandSpec,
    FrequencyMask,
    apply_mask,
    band_masks,
    band_specs,
    fft3,
    frequency_grid,
    gaussian_lowpass,
    ifft3,
    parseval_energy,
)
from .tensor_core import (
    SeededRng,
    SpectralTensor,
    VideoLatent,
    gaussian_latent,
    read_tensor,
    write_tensor,
)

__version__ = "0.1.0"
