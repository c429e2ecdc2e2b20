"""Bit-exact model serialization (.esad files).

One file carries everything inference needs: the MFCC front-end
configuration, the normalization statistics, and the layer payloads. The
layout is little-endian throughout with a trailing CRC32 (IEEE) of all
preceding bytes; see docs/formats.md for the byte-by-byte description.

Float files store weights/biases as float32 and stats as float64. Int8
files store int8 weights, int32 biases, per-tensor float32 scales with
int32 zero points, and float16 stats (the stats are snapped to the float16
grid at quantization time, so this is lossless for quantized models and
keeps the file inside the 64 KiB device budget).
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .features import MfccConfig, NormStats
from .network import DenseModel
from .quant import QuantizedModel, QuantLayer, encode_multiplier

MODEL_MAGIC = b"ESAD"
FORMAT_VERSION = 1
FLAVOR_FLOAT32 = 0
FLAVOR_INT8 = 1


class ModelFormatError(ValueError):
    """Base class for .esad parsing failures."""


class BadMagicError(ModelFormatError):
    pass


class UnsupportedVersionError(ModelFormatError):
    pass


class CrcMismatchError(ModelFormatError):
    pass


class PayloadMismatchError(ModelFormatError):
    """Declared dimensions or sizes do not match the available bytes."""


def _pack_mfcc(cfg: MfccConfig) -> bytes:
    return struct.pack(
        "<IIIIIIIddd",
        cfg.sample_rate, cfg.frame_len, cfg.hop, cfg.fft_size,
        cfg.n_mels, cfg.n_mfcc, cfg.clip_samples,
        cfg.fmin, cfg.fmax, cfg.log_floor,
    )


_MFCC_BLOCK = struct.calcsize("<IIIIIIIddd")


def _unpack_mfcc(blob: bytes, pos: int):
    vals = struct.unpack_from("<IIIIIIIddd", blob, pos)
    cfg = MfccConfig(
        sample_rate=vals[0], frame_len=vals[1], hop=vals[2], fft_size=vals[3],
        n_mels=vals[4], n_mfcc=vals[5], clip_samples=vals[6],
        fmin=vals[7], fmax=vals[8], log_floor=vals[9],
    )
    return cfg, pos + _MFCC_BLOCK


def save(model, sink) -> int:
    """Serialize a DenseModel or QuantizedModel; returns the byte count."""
    if isinstance(model, DenseModel):
        blob = _encode(model, FLAVOR_FLOAT32)
    elif isinstance(model, QuantizedModel):
        blob = _encode(model, FLAVOR_INT8)
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    sink.write(blob)
    return len(blob)


def save_path(model, path) -> int:
    with open(path, "wb") as fh:
        return save(model, fh)


def _encode(model, flavor: int) -> bytes:
    out = bytearray()
    out += MODEL_MAGIC
    out += struct.pack("<HB", FORMAT_VERSION, flavor)

    if model.mfcc is not None:
        out += b"\x01" + _pack_mfcc(model.mfcc)
    else:
        out += b"\x00"

    stats = model.norm_stats
    if stats is None:
        out += struct.pack("<I", 0)
    else:
        dim = stats.mean.shape[0]
        out += struct.pack("<I", dim)
        if flavor == FLAVOR_FLOAT32:
            out += stats.mean.astype("<f8").tobytes()
            out += stats.std.astype("<f8").tobytes()
        else:
            out += stats.mean.astype("<f2").tobytes()
            out += stats.std.astype("<f2").tobytes()

    if flavor == FLAVOR_FLOAT32:
        out += struct.pack("<B", len(model.weights))
        for w, b in zip(model.weights, model.biases):
            out += struct.pack("<II", w.shape[1], w.shape[0])
            out += w.astype("<f4").tobytes()
            out += b.astype("<f4").tobytes()
    else:
        out += struct.pack("<B", len(model.layers))
        out += struct.pack("<fi", model.input_scale, model.input_zp)
        for layer in model.layers:
            out += struct.pack("<II", layer.weights.shape[1], layer.weights.shape[0])
            out += struct.pack("<fifi", layer.weight_scale, 0, layer.out_scale, layer.out_zp)
            out += layer.weights.astype("<i1").tobytes()
            out += layer.bias.astype("<i4").tobytes()

    out += struct.pack("<I", zlib.crc32(bytes(out)) & 0xFFFFFFFF)
    return bytes(out)


class _Cursor:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.blob):
            raise PayloadMismatchError(
                f"file ends at byte {len(self.blob)} but field at {self.pos} needs {size} bytes"
            )
        vals = struct.unpack_from(fmt, self.blob, self.pos)
        self.pos += size
        return vals

    def take_array(self, dtype, count):
        size = np.dtype(dtype).itemsize * count
        if self.pos + size > len(self.blob):
            raise PayloadMismatchError(
                f"file ends at byte {len(self.blob)} but payload at {self.pos} needs {size} bytes"
            )
        arr = np.frombuffer(self.blob, dtype=dtype, count=count, offset=self.pos).copy()
        self.pos += size
        return arr


def load(source):
    """Parse a .esad stream back into a DenseModel or QuantizedModel."""
    blob = source.read()
    if len(blob) < 7 or blob[:4] != MODEL_MAGIC:
        raise BadMagicError("not an ESAD model file")
    cur = _Cursor(blob)
    cur.pos = 4
    version, flavor = cur.take("<HB")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported format version {version}")
    if flavor not in (FLAVOR_FLOAT32, FLAVOR_INT8):
        raise PayloadMismatchError(f"unknown flavor byte {flavor}")

    (has_mfcc,) = cur.take("<B")
    mfcc_cfg = None
    if has_mfcc:
        if cur.pos + _MFCC_BLOCK > len(blob):
            raise PayloadMismatchError("file ends inside the front-end config block")
        try:
            mfcc_cfg, cur.pos = _unpack_mfcc(blob, cur.pos)
        except ValueError as exc:
            raise PayloadMismatchError(f"invalid front-end config: {exc}") from exc

    (stats_dim,) = cur.take("<I")
    stats = None
    if stats_dim:
        stats_dtype = "<f8" if flavor == FLAVOR_FLOAT32 else "<f2"
        mean = cur.take_array(stats_dtype, stats_dim).astype(np.float64)
        std = cur.take_array(stats_dtype, stats_dim).astype(np.float64)
        try:
            stats = NormStats(mean, np.maximum(std, 1e-6))
        except ValueError as exc:
            raise PayloadMismatchError(f"invalid normalization stats: {exc}") from exc

    (layer_count,) = cur.take("<B")
    if layer_count == 0:
        raise PayloadMismatchError("model declares zero layers")

    if flavor == FLAVOR_FLOAT32:
        weights, biases = [], []
        for _ in range(layer_count):
            in_dim, out_dim = cur.take("<II")
            _check_dims(in_dim, out_dim)
            weights.append(cur.take_array("<f4", in_dim * out_dim).reshape(out_dim, in_dim))
            biases.append(cur.take_array("<f4", out_dim))
        model = DenseModel(weights, biases, norm_stats=stats, mfcc=mfcc_cfg)
    else:
        in_scale, in_zp = cur.take("<fi")
        input_scale = float(in_scale)
        input_zp = int(in_zp)
        prev_scale, prev_zp = input_scale, input_zp
        layers = []
        for li in range(layer_count):
            in_dim, out_dim = cur.take("<II")
            _check_dims(in_dim, out_dim)
            w_scale, w_zp, out_scale, out_zp = cur.take("<fifi")
            if w_zp != 0:
                raise PayloadMismatchError("weight zero point must be 0 (symmetric)")
            q = cur.take_array("<i1", in_dim * out_dim).reshape(out_dim, in_dim)
            bias = cur.take_array("<i4", out_dim)
            w_scale = float(w_scale)
            out_scale = float(out_scale)
            mantissa, shift = encode_multiplier(prev_scale * w_scale / out_scale)
            layers.append(
                QuantLayer(
                    weights=q, bias=bias, weight_scale=w_scale,
                    in_scale=prev_scale, in_zp=prev_zp,
                    out_scale=out_scale, out_zp=int(out_zp),
                    mantissa=mantissa, shift=shift,
                    relu=li < layer_count - 1,
                )
            )
            prev_scale, prev_zp = out_scale, int(out_zp)
        model = QuantizedModel(
            layers=layers, input_scale=input_scale, input_zp=input_zp,
            norm_stats=stats, mfcc=mfcc_cfg,
        )

    if cur.pos + 4 != len(blob):
        raise PayloadMismatchError(
            f"layer payloads end at byte {cur.pos} but file has {len(blob)} bytes"
        )
    (crc_stored,) = struct.unpack_from("<I", blob, cur.pos)
    crc_actual = zlib.crc32(blob[: cur.pos]) & 0xFFFFFFFF
    if crc_stored != crc_actual:
        raise CrcMismatchError(
            f"CRC mismatch: stored {crc_stored:#010x}, computed {crc_actual:#010x}"
        )
    return model


def load_path(path):
    with open(path, "rb") as fh:
        return load(fh)


def _check_dims(in_dim: int, out_dim: int):
    if in_dim == 0 or out_dim == 0 or in_dim > 1 << 20 or out_dim > 1 << 20:
        raise PayloadMismatchError(f"implausible layer dimensions {in_dim}x{out_dim}")


def _stats_equal(a: NormStats | None, b: NormStats | None) -> bool:
    if a is None or b is None:
        return a is b
    return a.mean.tobytes() == b.mean.tobytes() and a.std.tobytes() == b.std.tobytes()


def dense_models_equal(a: DenseModel, b: DenseModel) -> bool:
    if len(a.weights) != len(b.weights) or a.mfcc != b.mfcc:
        return False
    if not _stats_equal(a.norm_stats, b.norm_stats):
        return False
    for wa, wb, ba, bb in zip(a.weights, b.weights, a.biases, b.biases):
        if wa.shape != wb.shape or wa.tobytes() != wb.tobytes() or ba.tobytes() != bb.tobytes():
            return False
    return True


def quantized_models_equal(a: QuantizedModel, b: QuantizedModel) -> bool:
    if len(a.layers) != len(b.layers) or a.mfcc != b.mfcc:
        return False
    if (a.input_scale, a.input_zp) != (b.input_scale, b.input_zp):
        return False
    if not _stats_equal(a.norm_stats, b.norm_stats):
        return False
    for la, lb in zip(a.layers, b.layers):
        if la.weights.shape != lb.weights.shape:
            return False
        if la.weights.tobytes() != lb.weights.tobytes() or la.bias.tobytes() != lb.bias.tobytes():
            return False
        scalar_fields = ("weight_scale", "in_scale", "in_zp", "out_scale",
                         "out_zp", "mantissa", "shift", "relu")
        if any(getattr(la, f) != getattr(lb, f) for f in scalar_fields):
            return False
    return True
