"""WAV decoding, sample-rate conversion, and clip length normalization.

Everything here is a pure function over immutable clips, so batch decoding
can fan out across files without any locking.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class WavError(ValueError):
    """Base class for problems with a WAV byte stream."""


class NotWavError(WavError):
    """Input is not a RIFF/WAVE container."""


class UnsupportedWavError(WavError):
    """Container is well-formed but uses a codec or layout we do not decode."""


class TruncatedWavError(WavError):
    """Declared chunk sizes point past the end of the byte stream."""


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Mono audio: float64 samples nominally in [-1, 1] plus the rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("AudioClip samples must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise ValueError("AudioClip samples must be finite")
        rate = int(self.sample_rate)
        if rate <= 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", rate)

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


def _pcm_to_float(payload: bytes, bits: int) -> np.ndarray:
    if bits == 8:
        # 8-bit WAV is unsigned with midpoint 128
        x = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
        return (x - 128.0) / 128.0
    if bits == 16:
        return np.frombuffer(payload, dtype="<i2").astype(np.float64) / 32768.0
    if bits == 24:
        raw = np.frombuffer(payload, dtype=np.uint8).reshape(-1, 3)
        x = (
            raw[:, 0].astype(np.int32)
            | (raw[:, 1].astype(np.int32) << 8)
            | (raw[:, 2].astype(np.int32) << 16)
        )
        x -= (x & 0x800000) << 1  # sign-extend 24-bit values
        return x.astype(np.float64) / 8388608.0
    if bits == 32:
        return np.frombuffer(payload, dtype="<i4").astype(np.float64) / 2147483648.0
    raise UnsupportedWavError(f"unsupported PCM sample width: {bits} bits")


def decode_wav(data: bytes) -> AudioClip:
    """Decode a RIFF/WAVE byte stream to a mono clip.

    Supports 8/16/24/32-bit integer PCM and 32-bit float, any channel count.
    Multi-channel audio is mixed down by the per-frame arithmetic mean;
    integer samples are scaled by the type's maximum magnitude.
    """
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise NotWavError("not a RIFF/WAVE container")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        pos += 8
        if chunk_id == b"fmt ":
            if size < 16 or pos + 16 > len(data):
                raise TruncatedWavError("fmt chunk shorter than 16 bytes")
            fmt = list(struct.unpack_from("<HHIIHH", data, pos))
            if fmt[0] == 0xFFFE and size >= 40 and pos + 26 <= len(data):
                # WAVE_FORMAT_EXTENSIBLE: the real codec is the first two
                # bytes of the SubFormat GUID
                (fmt[0],) = struct.unpack_from("<H", data, pos + 24)
        elif chunk_id == b"data":
            if pos + size > len(data):
                raise TruncatedWavError("data chunk shorter than declared size")
            payload = data[pos : pos + size]
        pos += size + (size & 1)  # chunks are word-aligned

    if fmt is None:
        raise NotWavError("missing fmt chunk")
    if payload is None:
        raise TruncatedWavError("missing data chunk")

    audio_format, channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if channels < 1:
        raise UnsupportedWavError("zero channels declared")
    if sample_rate <= 0:
        raise UnsupportedWavError("non-positive sample rate declared")

    bytes_per_sample = bits // 8
    if bytes_per_sample == 0 or bits % 8 != 0:
        raise UnsupportedWavError(f"unsupported sample width: {bits} bits")
    frame_size = bytes_per_sample * channels
    if len(payload) % frame_size != 0:
        raise TruncatedWavError("data chunk is not a whole number of frames")

    if audio_format == 1:
        flat = _pcm_to_float(payload, bits)
    elif audio_format == 3:
        if bits != 32:
            raise UnsupportedWavError(f"float WAV must be 32-bit, got {bits}")
        flat = np.frombuffer(payload, dtype="<f4").astype(np.float64)
        if not np.all(np.isfinite(flat)):
            raise UnsupportedWavError("float WAV contains non-finite samples")
    else:
        raise UnsupportedWavError(f"unsupported codec 0x{audio_format:04x}")

    if channels > 1:
        flat = flat.reshape(-1, channels).mean(axis=1)
    return AudioClip(flat, sample_rate)


def encode_wav_pcm16(samples, sample_rate: int) -> bytes:
    """Encode mono or (n, channels) float samples as a 16-bit PCM WAV."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    channels = x.shape[1]
    q = np.clip(np.rint(x * 32768.0), -32768, 32767).astype("<i2")
    payload = q.tobytes()
    byte_rate = sample_rate * channels * 2
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH", 16, 1, channels, sample_rate, byte_rate, channels * 2, 16
    )
    header += b"data" + struct.pack("<I", len(payload))
    return header + payload


_KAISER_BETA = 8.6
_HALF_TAPS = 32  # per side, in output-phase units: 64 active taps per phase


@lru_cache(maxsize=32)
def _polyphase_bank(up: int, down: int):
    """Windowed-sinc anti-aliasing filter split into `up` phases.

    Designed at the virtual rate `input_rate * up` with cutoff at the lower
    of the two Nyquist frequencies, Kaiser-windowed, and scaled by `up` to
    compensate for zero stuffing. Row r holds the taps applied to outputs
    whose position lands on phase r of the upsampled grid.
    """
    half = _HALF_TAPS * up
    n = np.arange(-half, half + 1)
    cutoff = 1.0 / max(up, down)  # in units of the upsampled Nyquist
    h = up * cutoff * np.sinc(cutoff * n) * np.kaiser(2 * half + 1, _KAISER_BETA)
    n_taps = 2 * half // up + 1
    bank = np.zeros((up, n_taps))
    for r in range(up):
        taps = h[r::up]
        bank[r, : taps.size] = taps
    return bank, half, n_taps


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Band-limited polyphase resampling to `target_rate`.

    Output length is round(len * target_rate / input_rate). A clip already
    at the target rate is returned unchanged, which also makes resampling
    idempotent per rate.
    """
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if clip.samples.size == 0:
        raise ValueError("cannot resample an empty clip")
    if clip.sample_rate == target_rate:
        return clip

    g = math.gcd(clip.sample_rate, int(target_rate))
    up = int(target_rate) // g
    down = clip.sample_rate // g
    x = clip.samples
    # exact integer round-half-up of len * up / down
    n_out = (2 * x.size * up + down) // (2 * down)

    bank, half, n_taps = _polyphase_bank(up, down)
    j = np.arange(n_out)
    a = j * down + half  # position on the upsampled grid, center-aligned
    phase = a % up
    base = a // up
    x_pad = np.concatenate([np.zeros(n_taps), x, np.zeros(n_taps)])
    idx = base[:, None] - np.arange(n_taps)[None, :] + n_taps
    y = np.einsum("jk,jk->j", bank[phase], x_pad[idx])
    return AudioClip(y, int(target_rate))


def fix_length(clip: AudioClip, target_len: int) -> AudioClip:
    """Trim from the end or zero-pad at the end to exactly `target_len` samples."""
    if target_len <= 0:
        raise ValueError("target_len must be positive")
    x = clip.samples
    if x.size >= target_len:
        y = x[:target_len]
    else:
        y = np.concatenate([x, np.zeros(target_len - x.size)])
    return AudioClip(y, clip.sample_rate)
