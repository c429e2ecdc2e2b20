"""Independent from-first-principles oracles used by the DSP tests.

These deliberately avoid the library's vectorized code paths: transforms
are direct summations and the mel/DCT stages are literal formula loops, so
agreement with the fast implementation is meaningful evidence.
"""

from __future__ import annotations

import math

import numpy as np


def direct_dft_power(frame, fft_size: int) -> np.ndarray:
    """|X_k|^2 for k = 0..fft_size/2 by direct summation of the DFT."""
    x = np.zeros(fft_size)
    x[: len(frame)] = frame
    n = np.arange(fft_size)
    out = np.zeros(fft_size // 2 + 1)
    for k in range(fft_size // 2 + 1):
        angle = -2.0 * np.pi * k * n / fft_size
        re = float(np.sum(x * np.cos(angle)))
        im = float(np.sum(x * np.sin(angle)))
        out[k] = re * re + im * im
    return out


def hann_periodic(length: int) -> np.ndarray:
    return np.array([0.5 - 0.5 * math.cos(2.0 * math.pi * k / length) for k in range(length)])


def mel_of(f: float) -> float:
    return 2595.0 * math.log10(1.0 + f / 700.0)


def hz_of(m: float) -> float:
    return 700.0 * (10.0 ** (m / 2595.0) - 1.0)


def ref_mel_filters(sample_rate, fft_size, n_mels, fmin, fmax) -> np.ndarray:
    n_bins = fft_size // 2 + 1
    edges = [
        hz_of(mel_of(fmin) + i * (mel_of(fmax) - mel_of(fmin)) / (n_mels + 1))
        for i in range(n_mels + 2)
    ]
    bank = np.zeros((n_mels, n_bins))
    for i in range(n_mels):
        left, center, right = edges[i], edges[i + 1], edges[i + 2]
        for k in range(n_bins):
            f = k * sample_rate / fft_size
            if left < f <= center:
                bank[i, k] = (f - left) / (center - left)
            elif center < f < right:
                bank[i, k] = (right - f) / (right - center)
            elif f == left and f == center:
                bank[i, k] = 1.0
    # the vectorized builder evaluates both slopes at the center; make the
    # literal version agree at exact center hits
    for i in range(n_mels):
        for k in range(n_bins):
            f = k * sample_rate / fft_size
            if abs(f - edges[i + 1]) < 1e-12:
                bank[i, k] = 1.0
    return bank


def ref_dct_ii_ortho(values, n_keep: int) -> np.ndarray:
    m = len(values)
    out = np.zeros(n_keep)
    for j in range(n_keep):
        acc = 0.0
        for i, v in enumerate(values):
            acc += v * math.cos(math.pi * j * (2 * i + 1) / (2 * m))
        scale = math.sqrt(1.0 / m) if j == 0 else math.sqrt(2.0 / m)
        out[j] = scale * acc
    return out


def ref_mfcc(samples, sample_rate, frame_len, hop, fft_size, n_mels, n_mfcc,
             fmin, fmax, log_floor) -> np.ndarray:
    """Literal MFCC chain; returns (n_mfcc, n_frames)."""
    window = hann_periodic(frame_len)
    bank = ref_mel_filters(sample_rate, fft_size, n_mels, fmin, fmax)
    n_frames = (len(samples) - frame_len) // hop + 1
    coeffs = np.zeros((n_mfcc, n_frames))
    for fi in range(n_frames):
        frame = samples[fi * hop : fi * hop + frame_len] * window
        power = direct_dft_power(frame, fft_size)
        mel = bank @ power
        log_mel = np.log(np.maximum(mel, log_floor))
        coeffs[:, fi] = ref_dct_ii_ortho(log_mel, n_mfcc)
    return coeffs


def mann_whitney_auc(scores, labels) -> float:
    """Pair-counting AUC: P(random positive outranks random negative), ties 1/2."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (pos.size * neg.size)


def brute_force_ap(scores, labels) -> float:
    """Step-wise AP over distinct thresholds, each point counted from scratch."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int(np.sum(labels == 1))
    thresholds = sorted(set(scores.tolist()), reverse=True)
    ap = 0.0
    prev_recall = 0.0
    for th in thresholds:
        predicted = scores >= th
        tp = int(np.sum(predicted & (labels == 1)))
        fp = int(np.sum(predicted & (labels == 0)))
        recall = tp / n_pos
        precision = tp / (tp + fp)
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap
