"""MFCC front end: framing, spectra, mel filterbank, DCT, and normalization.

The default configuration maps a 10,560-sample clip at 16 kHz to a 13x32
coefficient matrix which flattens to the 416-value model input.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, fields
from functools import lru_cache

import numpy as np

FEATURE_CACHE_MAGIC = b"ESFC"
NORM_STATS_MAGIC = b"ESNS"
STD_FLOOR = 1e-6


@dataclass(frozen=True)
class MfccConfig:
    """Front-end parameters; `clip_samples` is the fixed pre-framing length."""

    sample_rate: int = 16000
    frame_len: int = 640  # 40 ms at 16 kHz
    hop: int = 320  # 50% overlap
    fft_size: int = 1024
    n_mels: int = 40
    n_mfcc: int = 13
    fmin: float = 0.0
    fmax: float = 8000.0
    log_floor: float = 1e-10
    clip_samples: int = 10560  # 640 + 31 * 320 -> exactly 32 frames

    def __post_init__(self):
        if not (0 < self.hop <= self.frame_len <= self.fft_size):
            raise ValueError("need 0 < hop <= frame_len <= fft_size")
        if not (0 < self.n_mfcc <= self.n_mels):
            raise ValueError("need 0 < n_mfcc <= n_mels")
        if not (0 <= self.fmin < self.fmax <= self.sample_rate / 2):
            raise ValueError("need 0 <= fmin < fmax <= sample_rate/2")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")
        if self.clip_samples < self.frame_len:
            raise ValueError("clip_samples must cover at least one frame")

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def n_frames(self) -> int:
        return (self.clip_samples - self.frame_len) // self.hop + 1

    @property
    def feature_dim(self) -> int:
        return self.n_mfcc * self.n_frames


def mfcc_config_hash(cfg: MfccConfig) -> str:
    """Stable short hash of a config, used to pair caches with models."""
    canonical = "|".join(f"{f.name}={getattr(cfg, f.name)!r}" for f in fields(cfg))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def frame_signal(samples, cfg: MfccConfig) -> np.ndarray:
    """Slice samples into overlapping frames: frame i covers [i*hop, i*hop + frame_len)."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size < cfg.frame_len:
        raise ValueError(f"input of {x.size} samples is shorter than one {cfg.frame_len}-sample frame")
    n_frames = (x.size - cfg.frame_len) // cfg.hop + 1
    idx = np.arange(cfg.frame_len)[None, :] + cfg.hop * np.arange(n_frames)[:, None]
    return x[idx]


@lru_cache(maxsize=8)
def _hann(frame_len: int) -> np.ndarray:
    # periodic Hann, the usual STFT analysis variant
    k = np.arange(frame_len)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * k / frame_len)


def _power_spectra(frames: np.ndarray, cfg: MfccConfig) -> np.ndarray:
    windowed = frames * _hann(cfg.frame_len)
    spectrum = np.fft.rfft(windowed, n=cfg.fft_size, axis=-1)
    return spectrum.real**2 + spectrum.imag**2


def power_spectrum(frame, cfg: MfccConfig) -> np.ndarray:
    """Hann-window one frame, zero-pad to fft_size, return |X_k|^2 for k=0..fft_size/2."""
    x = np.asarray(frame, dtype=np.float64)
    if x.shape != (cfg.frame_len,):
        raise ValueError(f"frame must have exactly {cfg.frame_len} samples")
    return _power_spectra(x[None, :], cfg)[0]


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=8)
def mel_filterbank(cfg: MfccConfig) -> np.ndarray:
    """Unit-peak triangular mel filters evaluated at the FFT bin frequencies.

    Centers are equally spaced on the mel scale between fmin and fmax.
    Raises if the resolution is too fine: a filter that covers no FFT bin
    (spans less than one bin) cannot contribute any energy.
    """
    points_mel = np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax), cfg.n_mels + 2)
    points_hz = mel_to_hz(points_mel)
    bin_freqs = np.arange(cfg.n_bins) * (cfg.sample_rate / cfg.fft_size)
    bank = np.zeros((cfg.n_mels, cfg.n_bins))
    for i in range(cfg.n_mels):
        left, center, right = points_hz[i], points_hz[i + 1], points_hz[i + 2]
        rise = (bin_freqs - left) / (center - left)
        fall = (right - bin_freqs) / (right - center)
        tri = np.maximum(0.0, np.minimum(rise, fall))
        if not np.any(tri > 0.0):
            raise ValueError(
                f"mel filter {i} spans less than one FFT bin; "
                f"reduce n_mels or increase fft_size"
            )
        bank[i] = tri
    bank.setflags(write=False)
    return bank


@lru_cache(maxsize=8)
def _dct_matrix(n_mfcc: int, n_mels: int) -> np.ndarray:
    """Orthonormal DCT-II rows 0..n_mfcc-1 over n_mels log energies."""
    m = np.arange(n_mels)
    mat = np.cos(np.pi * np.arange(n_mfcc)[:, None] * (2 * m[None, :] + 1) / (2 * n_mels))
    mat *= np.sqrt(2.0 / n_mels)
    mat[0] = np.sqrt(1.0 / n_mels)
    mat.setflags(write=False)
    return mat


def mfcc(clip, cfg: MfccConfig) -> np.ndarray:
    """Coefficient-major MFCC matrix (n_mfcc, n_frames) for a fixed-length clip."""
    if clip.sample_rate != cfg.sample_rate:
        raise ValueError(f"clip rate {clip.sample_rate} != config rate {cfg.sample_rate}")
    if len(clip) != cfg.clip_samples:
        raise ValueError(f"clip length {len(clip)} != configured {cfg.clip_samples}")
    frames = frame_signal(clip.samples, cfg)
    spectra = _power_spectra(frames, cfg)
    mel_energy = spectra @ mel_filterbank(cfg).T
    log_mel = np.log(np.maximum(mel_energy, cfg.log_floor))
    coeffs = log_mel @ _dct_matrix(cfg.n_mfcc, cfg.n_mels).T
    return coeffs.T


@dataclass(frozen=True, eq=False)
class NormStats:
    """Per-dimension mean and population std (floored) from the train partition."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        std = np.asarray(self.std, dtype=np.float64)
        if mean.shape != std.shape or mean.ndim != 1:
            raise ValueError("mean and std must be 1-D arrays of equal length")
        if np.any(std < STD_FLOOR):
            raise ValueError(f"std entries must be >= {STD_FLOOR}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)


def fit_norm_stats(vectors) -> NormStats:
    """Per-dimension mean and population std over training vectors."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need at least 2 vectors to fit normalization stats")
    mean = x.mean(axis=0)
    std = np.maximum(x.std(axis=0), STD_FLOOR)
    return NormStats(mean, std)


def flatten_feature_map(fm) -> np.ndarray:
    """Row-major flatten: coefficient index outer, frame index inner."""
    fm = np.asarray(fm, dtype=np.float64)
    if fm.ndim != 2:
        raise ValueError("feature map must be 2-D")
    return fm.reshape(-1)


def flatten_and_normalize(fm, stats: NormStats | None = None) -> np.ndarray:
    vec = flatten_feature_map(fm)
    if stats is None:
        return vec
    if stats.mean.shape != vec.shape:
        raise ValueError(
            f"stats dimension {stats.mean.shape[0]} != vector dimension {vec.shape[0]}"
        )
    return (vec - stats.mean) / stats.std


def normalize_vectors(vectors, stats: NormStats) -> np.ndarray:
    x = np.asarray(vectors, dtype=np.float64)
    if x.shape[-1] != stats.mean.shape[0]:
        raise ValueError("vector dimension does not match stats")
    return (x - stats.mean) / stats.std


class CacheFormatError(ValueError):
    """Malformed feature cache or stats file."""


def write_feature_cache(path, ids, vectors) -> int:
    """Binary cache: magic 'ESFC', u32 count, then per clip u32 id + float32 values."""
    ids = np.asarray(ids, dtype=np.uint32)
    vecs = np.asarray(vectors, dtype=np.float32)
    if vecs.ndim != 2 or ids.shape[0] != vecs.shape[0]:
        raise ValueError("ids and vectors must have matching first dimension")
    blob = bytearray()
    blob += FEATURE_CACHE_MAGIC
    blob += struct.pack("<I", ids.size)
    for clip_id, vec in zip(ids, vecs):
        blob += struct.pack("<I", int(clip_id))
        blob += vec.astype("<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(blob)
    return len(blob)


def read_feature_cache(path):
    """Returns (ids uint32 array, vectors float32 matrix)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8 or blob[:4] != FEATURE_CACHE_MAGIC:
        raise CacheFormatError("not a feature cache file")
    (count,) = struct.unpack_from("<I", blob, 4)
    body = len(blob) - 8
    if count == 0:
        if body != 0:
            raise CacheFormatError("empty cache with trailing bytes")
        return np.zeros(0, dtype=np.uint32), np.zeros((0, 0), dtype=np.float32)
    if body % count != 0:
        raise CacheFormatError("cache size is not a multiple of the entry size")
    entry = body // count
    if entry < 8 or (entry - 4) % 4 != 0:
        raise CacheFormatError("cache entry size is not id + float32 values")
    dim = (entry - 4) // 4
    ids = np.zeros(count, dtype=np.uint32)
    vecs = np.zeros((count, dim), dtype=np.float32)
    pos = 8
    for i in range(count):
        (ids[i],) = struct.unpack_from("<I", blob, pos)
        vecs[i] = np.frombuffer(blob, dtype="<f4", count=dim, offset=pos + 4)
        pos += entry
    return ids, vecs


def write_norm_stats(path, stats: NormStats) -> None:
    """Binary sidecar: magic 'ESNS', u32 dim, float64 means, float64 stds."""
    dim = stats.mean.shape[0]
    with open(path, "wb") as fh:
        fh.write(NORM_STATS_MAGIC)
        fh.write(struct.pack("<I", dim))
        fh.write(stats.mean.astype("<f8").tobytes())
        fh.write(stats.std.astype("<f8").tobytes())


def read_norm_stats(path) -> NormStats:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8 or blob[:4] != NORM_STATS_MAGIC:
        raise CacheFormatError("not a norm stats file")
    (dim,) = struct.unpack_from("<I", blob, 4)
    if len(blob) != 8 + 16 * dim:
        raise CacheFormatError("norm stats payload size mismatch")
    mean = np.frombuffer(blob, dtype="<f8", count=dim, offset=8).copy()
    std = np.frombuffer(blob, dtype="<f8", count=dim, offset=8 + 8 * dim).copy()
    return NormStats(mean, std)
