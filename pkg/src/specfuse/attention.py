"""Scaled dot-product attention over frame-indexed token sequences.

Single-head only. Tokens carry a frame id; masks are defined on frame
indices and admit all tokens of an admitted frame. A local window of
span s admits key frames j with |i - j| < floor(s / 2) around the query
frame i; masked keys are excluded before the softmax, so they get zero
weight exactly. Logits and reductions run in float64 with max-subtracted
softmax.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, ShapeMismatchError


def _validate_frames(frame_index, n_tokens: int) -> np.ndarray:
    """Canonical token layout: frames 0..T-1, non-decreasing, equal counts."""
    frames = np.ascontiguousarray(frame_index, dtype=np.int64)
    if frames.shape != (n_tokens,):
        raise ShapeMismatchError("frame_index length must match token count")
    if n_tokens == 0:
        raise InvalidParameterError("token sequence must be non-empty")
    if (np.diff(frames) < 0).any():
        raise InvalidParameterError("frame_index must be non-decreasing")
    if frames[0] != 0:
        raise InvalidParameterError("frame ids must start at 0")
    counts = np.bincount(frames)
    if (counts != counts[0]).any():
        raise InvalidParameterError("every frame must own the same number of tokens")
    return frames


@dataclass(frozen=True, eq=False)
class TokenSequence:
    """Token features (n_tokens, d_model) plus per-token frame ids.

    Frame ids are non-decreasing and every frame in [0, T) owns the same
    number of tokens (the H*W spatial positions of that frame).
    """

    features: np.ndarray
    frame_index: np.ndarray

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=np.float64)
        if feats.ndim != 2:
            raise InvalidParameterError("features must be (n_tokens, d_model)")
        frames = _validate_frames(self.frame_index, feats.shape[0])
        feats.flags.writeable = False
        frames.flags.writeable = False
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "frame_index", frames)

    @property
    def num_tokens(self) -> int:
        return self.features.shape[0]

    @property
    def d_model(self) -> int:
        return self.features.shape[1]

    @property
    def num_frames(self) -> int:
        return int(self.frame_index[-1]) + 1

    @property
    def tokens_per_frame(self) -> int:
        return self.num_tokens // self.num_frames


@dataclass(frozen=True)
class AttentionWindow:
    """A branch's temporal extent: span in frames plus a kind tag."""

    span_frames: int
    kind: str = "local"

    def __post_init__(self):
        if self.span_frames < 1:
            raise InvalidParameterError(f"span_frames must be >= 1, got {self.span_frames}")
        if self.kind not in ("local", "global", "sparse"):
            raise InvalidParameterError(f"unknown window kind {self.kind!r}")

    @classmethod
    def local(cls, span_frames: int) -> "AttentionWindow":
        return cls(span_frames=span_frames, kind="local")

    @classmethod
    def global_for(cls, num_frames: int) -> "AttentionWindow":
        return cls(span_frames=num_frames, kind="global")

    @classmethod
    def for_span(cls, span_frames: int, num_frames: int) -> "AttentionWindow":
        """Local window, saturating to global once the span covers the sequence."""
        if span_frames >= num_frames:
            return cls.global_for(num_frames)
        return cls.local(span_frames)


@dataclass
class MacCounter:
    """Accumulates key-value multiply-accumulate counts across attention calls.

    Counts queries x admitted_keys x 2*d per block: one d-MAC for the
    logit, one for the value accumulation. Softmax arithmetic excluded.
    """

    macs: int = 0

    def add(self, n: int) -> None:
        self.macs += int(n)


def project_qkv(tokens: TokenSequence, weights) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Apply the three d_model x d_model projections row-wise (y = x @ W)."""
    w_q, w_k, w_v = (np.asarray(w, dtype=np.float64) for w in weights)
    d = tokens.d_model
    for name, w in (("query", w_q), ("key", w_k), ("value", w_v)):
        if w.shape != (d, d):
            raise ShapeMismatchError(f"{name} weights must be ({d}, {d}), got {w.shape}")
    feats = tokens.features
    return feats @ w_q, feats @ w_k, feats @ w_v


def _check_qkv(q, k, v, frame_index):
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if not (q.shape[0] == k.shape[0] == v.shape[0]):
        raise ShapeMismatchError("Q, K, V must agree on token count")
    if q.shape[1] != k.shape[1]:
        raise ShapeMismatchError("Q and K must share the key dimension")
    return q, k, v, _validate_frames(frame_index, q.shape[0])


def _frame_slices(frames: np.ndarray) -> tuple[int, int]:
    t = int(frames[-1]) + 1
    tpf = frames.shape[0] // t
    return t, tpf


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _admitted_range(i: int, radius: int, t: int) -> tuple[int, int]:
    # |i - j| < radius, relaxed to the query's own frame when radius == 0.
    if radius <= 0:
        return i, i + 1
    return max(0, i - radius + 1), min(t, i + radius)


def _attend(q, k, v, frames, admit, counter: MacCounter | None) -> np.ndarray:
    """Frame-blocked attention core.

    `admit(i)` returns the admitted key-token index array for query frame
    i. Rows are processed frame by frame; the reduction order inside a row
    is fixed, so results do not depend on scheduling.
    """
    t, tpf = _frame_slices(frames)
    scale = 1.0 / math.sqrt(q.shape[1])
    out = np.empty((q.shape[0], v.shape[1]), dtype=np.float64)
    for i in range(t):
        rows = slice(i * tpf, (i + 1) * tpf)
        keys = admit(i)
        logits = (q[rows] @ k[keys].T) * scale
        weights = _softmax_rows(logits)
        out[rows] = weights @ v[keys]
        if counter is not None:
            counter.add(tpf * keys.shape[0] * 2 * q.shape[1])
    return out


def _window_admit(window: AttentionWindow, t: int, tpf: int):
    all_tokens = np.arange(t * tpf)
    if window.kind == "global":
        if window.span_frames < t:
            raise InvalidParameterError("global window must span the whole sequence")
        return lambda i: all_tokens
    if window.kind != "local":
        raise InvalidParameterError(f"masked attention does not take {window.kind!r} windows")
    radius = window.span_frames // 2
    def admit(i: int) -> np.ndarray:
        lo, hi = _admitted_range(i, radius, t)
        return all_tokens[lo * tpf : hi * tpf]
    return admit


def masked_attention(q, k, v, frame_index, window: AttentionWindow,
                     counter: MacCounter | None = None) -> TokenSequence:
    """Windowed (or global) attention under the frame-distance mask rule."""
    q, k, v, frames = _check_qkv(q, k, v, frame_index)
    t, tpf = _frame_slices(frames)
    out = _attend(q, k, v, frames, _window_admit(window, t, tpf), counter)
    return TokenSequence(out, frames)


def uniform_keyframes(num_frames: int, fraction: float) -> np.ndarray:
    """ceil(fraction * T) evenly spaced frame ids, ascending, starting at 0.

    The j-th key frame is ceil(j * T / count); spacing is as even as
    integer indices allow and frame 0 is always included.
    """
    if not 0.0 < fraction <= 1.0:
        raise InvalidParameterError(f"fraction must lie in (0, 1], got {fraction}")
    if num_frames < 1:
        raise InvalidParameterError("num_frames must be >= 1")
    count = math.ceil(fraction * num_frames)
    return np.array([-(-j * num_frames // count) for j in range(count)], dtype=np.int64)


def sparse_attention(q, k, v, frame_index, keyframes,
                     counter: MacCounter | None = None) -> TokenSequence:
    """Attention whose keys are restricted to the given frames.

    With keyframes covering every frame this reduces to global attention
    bit-for-bit (same gather, same reduction order).
    """
    q, k, v, frames = _check_qkv(q, k, v, frame_index)
    t, tpf = _frame_slices(frames)
    keys = np.unique(np.asarray(list(keyframes), dtype=np.int64))
    if keys.size == 0:
        raise InvalidParameterError("keyframe set must be non-empty")
    if keys[0] < 0 or keys[-1] >= t:
        raise InvalidParameterError(f"keyframes must lie in [0, {t}), got {keys.tolist()}")
    key_tokens = (keys[:, None] * tpf + np.arange(tpf)[None, :]).reshape(-1)
    out = _attend(q, k, v, frames, lambda i: key_tokens, counter)
    return TokenSequence(out, frames)


def attention_map(q, k, frame_index, window: AttentionWindow | None = None,
                  keyframes=None) -> np.ndarray:
    """Dense (n, n) row-stochastic attention weights, zeros at masked keys.

    Exactly one of `window` / `keyframes` selects the mask; both None
    means global attention. Intended for structure diagnostics; memory is
    quadratic in the token count.
    """
    q, k, _, frames = _check_qkv(q, k, q, frame_index)
    t, tpf = _frame_slices(frames)
    n = t * tpf
    if window is not None and keyframes is not None:
        raise InvalidParameterError("pass either window or keyframes, not both")
    if keyframes is not None:
        keys = np.unique(np.asarray(list(keyframes), dtype=np.int64))
        if keys.size == 0:
            raise InvalidParameterError("keyframe set must be non-empty")
        if keys[0] < 0 or keys[-1] >= t:
            raise InvalidParameterError(f"keyframes must lie in [0, {t})")
        key_tokens = (keys[:, None] * tpf + np.arange(tpf)[None, :]).reshape(-1)
        admit = lambda i: key_tokens
    else:
        win = window if window is not None else AttentionWindow.global_for(t)
        admit = _window_admit(win, t, tpf)
    scale = 1.0 / math.sqrt(q.shape[1])
    weights = np.zeros((n, n), dtype=np.float64)
    for i in range(t):
        rows = weights[i * tpf : (i + 1) * tpf]
        keys_i = admit(i)
        logits = (q[i * tpf : (i + 1) * tpf] @ k[keys_i].T) * scale
        rows[:, keys_i] = _softmax_rows(logits)
    return weights
