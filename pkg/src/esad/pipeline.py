"""End-to-end glue: raw WAV bytes to feature vector to verdict."""

from __future__ import annotations

import numpy as np

from .audio import decode_wav, fix_length, resample
from .features import MfccConfig, flatten_feature_map, mfcc
from .network import DenseModel, forward
from .quant import QuantizedModel, quantized_forward


def prepare_clip(wav_bytes: bytes, cfg: MfccConfig):
    clip = decode_wav(wav_bytes)
    clip = resample(clip, cfg.sample_rate)
    return fix_length(clip, cfg.clip_samples)


def wav_to_vector(wav_bytes: bytes, cfg: MfccConfig) -> np.ndarray:
    """Raw (unnormalized) 1-D feature vector for one WAV byte stream."""
    return flatten_feature_map(mfcc(prepare_clip(wav_bytes, cfg), cfg))


def classify_wav(model, wav_bytes: bytes, threshold: float = 0.5):
    """Self-contained verdict for one WAV using the model's embedded config.

    Works with either flavor; returns (label, probability) where label is 1
    for anomalous.
    """
    if model.mfcc is None or model.norm_stats is None:
        raise ValueError("model lacks an embedded front-end config or normalization stats")
    vec = wav_to_vector(wav_bytes, model.mfcc)
    x = (vec - model.norm_stats.mean) / model.norm_stats.std
    if isinstance(model, QuantizedModel):
        prob = float(quantized_forward(model, x))
    elif isinstance(model, DenseModel):
        prob = float(forward(model, x))
    else:
        raise TypeError(f"cannot classify with {type(model).__name__}")
    return int(prob >= threshold), prob
