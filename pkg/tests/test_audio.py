import struct

import numpy as np
import pytest
from scipy.signal import resample_poly

from esad.audio import (
    AudioClip,
    NotWavError,
    TruncatedWavError,
    UnsupportedWavError,
    decode_wav,
    encode_wav_pcm16,
    fix_length,
    resample,
)


def wav_bytes(payload: bytes, *, fmt=1, channels=1, rate=16000, bits=16) -> bytes:
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH", 16, fmt, channels, rate,
        rate * channels * bits // 8, channels * bits // 8, bits,
    )
    header += b"data" + struct.pack("<I", len(payload))
    return header + payload


class TestDecode:
    def test_single_16bit_sample_scaling(self):
        clip = decode_wav(wav_bytes(struct.pack("<h", 16384)))
        assert clip.sample_rate == 16000
        assert clip.samples.tolist() == [0.5]

    def test_stereo_mean_mixdown(self):
        clip = decode_wav(wav_bytes(struct.pack("<hh", 32767, 0), channels=2))
        assert clip.samples.shape == (1,)
        assert clip.samples[0] == pytest.approx(32767 / 32768 / 2)

    def test_four_second_clip_sample_count_vs_stdlib_decoder(self, tmp_path):
        # independent reference decoder: the stdlib wave module
        import wave

        rng = np.random.default_rng(0)
        x = rng.uniform(-0.5, 0.5, 4 * 44100)
        data = encode_wav_pcm16(x, 44100)
        clip = decode_wav(data)
        assert len(clip) == 176400

        path = tmp_path / "ref.wav"
        path.write_bytes(data)
        with wave.open(str(path), "rb") as ref:
            assert ref.getnframes() == len(clip)
            assert ref.getframerate() == clip.sample_rate
            raw = np.frombuffer(ref.readframes(ref.getnframes()), dtype="<i2")
        assert np.array_equal(raw / 32768.0, clip.samples)

    def test_8bit_24bit_32bit_and_float(self):
        clip8 = decode_wav(wav_bytes(bytes([255, 128, 0]), bits=8))
        assert clip8.samples == pytest.approx([127 / 128, 0.0, -1.0])

        val = -(2**23 - 5)
        payload = struct.pack("<i", val)[:3]
        clip24 = decode_wav(wav_bytes(payload, bits=24))
        assert clip24.samples[0] == pytest.approx(val / 2**23)

        clip32 = decode_wav(wav_bytes(struct.pack("<i", 2**30), bits=32))
        assert clip32.samples[0] == pytest.approx(0.5)

        clipf = decode_wav(wav_bytes(struct.pack("<f", -0.25), fmt=3, bits=32))
        assert clipf.samples[0] == pytest.approx(-0.25)

    def test_extensible_header_resolves_subformat(self):
        payload = struct.pack("<h", -16384)
        ext = struct.pack("<HHIIHH", 0xFFFE, 1, 16000, 32000, 2, 16)
        # cbSize, valid bits, channel mask, then the GUID whose first u16 is the codec
        ext += struct.pack("<HHIH", 22, 16, 1, 1) + b"\x00" * 14
        data = b"RIFF" + struct.pack("<I", 36 + 24 + len(payload)) + b"WAVE"
        data += b"fmt " + struct.pack("<I", len(ext)) + ext
        data += b"data" + struct.pack("<I", len(payload)) + payload
        assert decode_wav(data).samples.tolist() == [-0.5]

    def test_error_variants_are_distinct(self):
        with pytest.raises(NotWavError):
            decode_wav(b"OggS" + b"\x00" * 40)
        with pytest.raises(UnsupportedWavError):
            decode_wav(wav_bytes(b"\x00\x00", fmt=2))  # ADPCM
        truncated = wav_bytes(struct.pack("<hh", 1, 2))
        with pytest.raises(TruncatedWavError):
            decode_wav(truncated[:-2])

    def test_missing_data_chunk(self):
        data = b"RIFF" + struct.pack("<I", 28) + b"WAVE"
        data += b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, 16000, 32000, 2, 16)
        with pytest.raises(TruncatedWavError):
            decode_wav(data)

    def test_roundtrip_within_half_lsb(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(-1.0, 1.0, 5000)
        back = decode_wav(encode_wav_pcm16(x, 16000)).samples
        assert np.max(np.abs(back - x)) <= 1 / 32768


class TestResample:
    def test_same_rate_identity(self):
        clip = AudioClip(np.arange(100) / 100.0, 16000)
        assert resample(clip, 16000) is clip

    def test_48k_to_16k_sine(self):
        t = np.arange(48000) / 48000.0
        x = np.sin(2 * np.pi * 1000 * t)
        out = resample(AudioClip(x, 48000), 16000)
        assert len(out) == 16000
        assert out.sample_rate == 16000
        rms_in = np.sqrt(np.mean(x**2))
        rms_out = np.sqrt(np.mean(out.samples**2))
        assert abs(rms_out - rms_in) / rms_in < 0.01
        # interior samples track the analytic tone closely
        t_out = np.arange(16000) / 16000.0
        interior = slice(200, -200)
        analytic = np.sin(2 * np.pi * 1000 * t_out)
        assert np.max(np.abs(out.samples[interior] - analytic[interior])) < 0.01

    def test_against_reference_resampler(self):
        # band-limited content well inside both passbands, so any remaining
        # difference is numerical rather than filter-design detail
        rng = np.random.default_rng(3)
        t = np.arange(22050) / 22050.0
        x = np.zeros_like(t)
        for _ in range(20):
            x += rng.uniform(0.05, 0.3) * np.sin(
                2 * np.pi * rng.uniform(50, 5000) * t + rng.uniform(0, 6.28)
            )
        mine = resample(AudioClip(x, 22050), 16000).samples
        ref = resample_poly(x, 320, 441)
        n = min(mine.size, ref.size)
        interior = slice(200, n - 200)
        err = np.sqrt(np.mean((mine[interior] - ref[interior]) ** 2))
        assert err < 0.01 * np.sqrt(np.mean(x**2))

    def test_length_arithmetic_44100_to_16000(self):
        clip = AudioClip(np.zeros(4 * 44100), 44100)
        assert len(resample(clip, 16000)) == 64000

    def test_upsampling(self):
        t = np.arange(8000) / 8000.0
        x = np.sin(2 * np.pi * 440 * t)
        out = resample(AudioClip(x, 8000), 16000)
        assert len(out) == 16000
        t_out = np.arange(16000) / 16000.0
        analytic = np.sin(2 * np.pi * 440 * t_out)
        assert np.max(np.abs(out.samples[300:-300] - analytic[300:-300])) < 0.01

    def test_rate_idempotence(self):
        rng = np.random.default_rng(11)
        clip = AudioClip(rng.normal(0, 0.2, 11025), 11025)
        once = resample(clip, 16000)
        twice = resample(once, 16000)
        assert np.array_equal(once.samples, twice.samples)

    def test_empty_clip_rejected(self):
        with pytest.raises(ValueError):
            resample(AudioClip(np.zeros(0), 16000), 8000)

    def test_outputs_finite(self):
        rng = np.random.default_rng(5)
        for sr in (8000, 22050, 44100):
            clip = AudioClip(rng.uniform(-1, 1, sr // 2), sr)
            out = resample(clip, 16000)
            assert np.all(np.isfinite(out.samples))


class TestFixLength:
    def test_truncation(self):
        clip = AudioClip(np.array([1.0, 2.0, 3.0, 4.0, 5.0]) / 10, 16000)
        assert fix_length(clip, 3).samples.tolist() == [0.1, 0.2, 0.3]

    def test_padding(self):
        clip = AudioClip(np.array([0.1, 0.2, 0.3]), 16000)
        out = fix_length(clip, 5)
        assert out.samples.tolist() == [0.1, 0.2, 0.3, 0.0, 0.0]

    def test_padded_region_has_zero_energy(self):
        clip = AudioClip(np.ones(10) * 0.5, 16000)
        out = fix_length(clip, 64)
        assert np.all(out.samples[10:] == 0.0)

    def test_default_pipeline_length_gives_32_frames(self):
        from esad.features import MfccConfig, frame_signal

        clip = fix_length(AudioClip(np.ones(64000) * 0.1, 16000), 10560)
        assert len(clip) == 10560
        assert frame_signal(clip.samples, MfccConfig()).shape[0] == 32
