"""Post-training int8 quantization and the integer inference path.

Scheme: per-tensor symmetric int8 weights (zero point 0, -128 unused),
int32 biases at scale input_scale * weight_scale, asymmetric int8
activations calibrated from representative data. The forward pass is
integer-only between input quantization and the final logit, which is
dequantized and passed through a float sigmoid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .features import MfccConfig, NormStats
from .network import DenseModel, forward, sigmoid

INT8_MIN = -128
INT8_MAX = 127
WEIGHT_MAX = 127  # symmetric weights never use -128


def round_half_away(x):
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def encode_multiplier(multiplier: float):
    """Encode a positive real multiplier as (mantissa, shift).

    The effective value is mantissa * 2**(-31 - shift) with the mantissa
    normalized to [2**30, 2**31), which is the fixed-point form consumed
    by requantize.
    """
    if not (multiplier > 0 and math.isfinite(multiplier)):
        raise ValueError(f"multiplier must be positive and finite, got {multiplier}")
    frac, exp = math.frexp(multiplier)  # multiplier = frac * 2**exp, frac in [0.5, 1)
    mantissa = round(frac * (1 << 31))
    if mantissa == 1 << 31:
        mantissa >>= 1
        exp += 1
    return mantissa, -exp


def requantize(acc, mantissa: int, shift: int, zero_point: int):
    """Integer-only rescale of int32 accumulators to int8 (backend-dispatched)."""
    return kernels.requantize(acc, mantissa, shift, zero_point)


@dataclass(frozen=True)
class AffineParams:
    """Activation quantization: real ~= scale * (q - zero_point)."""

    scale: float
    zero_point: int
    range_min: float
    range_max: float


def affine_from_range(range_min: float, range_max: float) -> AffineParams:
    """Min/max calibration mapped onto the int8 grid.

    A degenerate range (max == min) is widened by +-1e-3 so the scale stays
    positive.
    """
    lo = float(range_min)
    hi = float(range_max)
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
        raise ValueError(f"bad calibration range [{lo}, {hi}]")
    if hi == lo:
        lo -= 1e-3
        hi += 1e-3
    scale = (hi - lo) / 255.0
    zero_point = int(np.clip(round_half_away(-128.0 - lo / scale), INT8_MIN, INT8_MAX))
    return AffineParams(scale=scale, zero_point=zero_point, range_min=lo, range_max=hi)


@dataclass(frozen=True)
class QuantParams:
    """Calibrated activation parameters: model input plus each layer output."""

    input: AffineParams
    layer_outputs: tuple


def calibrate(model: DenseModel, rep_vectors, clip_fraction: float = 0.0) -> QuantParams:
    """Observe activation ranges over a representative, already-normalized set.

    clip_fraction > 0 switches from min/max to symmetric percentile clipping
    (e.g. 0.001 ignores the extreme 0.1% tail on each side).
    """
    x = np.asarray(rep_vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("representative set must be a non-empty matrix of vectors")

    def observed_range(values):
        flat = np.asarray(values, dtype=np.float64).ravel()
        if clip_fraction > 0.0:
            return (
                float(np.quantile(flat, clip_fraction)),
                float(np.quantile(flat, 1.0 - clip_fraction)),
            )
        return float(flat.min()), float(flat.max())

    _, cache = forward(model, x, want_cache=True)
    boundaries = [observed_range(x)]
    # hidden activations post-ReLU, then the raw output logit
    for act in cache["acts"][1:]:
        boundaries.append(observed_range(act))
    boundaries.append(observed_range(cache["pre_acts"][-1]))
    return QuantParams(
        input=affine_from_range(*boundaries[0]),
        layer_outputs=tuple(affine_from_range(lo, hi) for lo, hi in boundaries[1:]),
    )


@dataclass(eq=False)
class QuantLayer:
    weights: np.ndarray  # (out, in) int8
    bias: np.ndarray  # (out,) int32
    weight_scale: float  # float32-rounded
    in_scale: float
    in_zp: int
    out_scale: float
    out_zp: int
    mantissa: int
    shift: int
    relu: bool


@dataclass(eq=False)
class QuantizedModel:
    layers: list
    input_scale: float
    input_zp: int
    norm_stats: NormStats | None = None
    mfcc: MfccConfig | None = None

    @property
    def layer_sizes(self) -> tuple:
        return (self.layers[0].weights.shape[1],) + tuple(
            l.weights.shape[0] for l in self.layers
        )


def _f32(x: float) -> float:
    return float(np.float32(x))


def quantize_weights(model: DenseModel, qparams: QuantParams) -> QuantizedModel:
    """Quantize a trained model against calibrated activation params.

    All scales are rounded to float32 before deriving biases and fixed-point
    multipliers so that serialization round-trips bit-exactly. Normalization
    stats are snapped to the float16 grid: the int8 file stores them as
    float16 to stay inside the 64 KiB footprint, and the snap keeps the
    in-memory model equal to its serialized form.
    """
    if len(qparams.layer_outputs) != len(model.weights):
        raise ValueError("calibration does not cover every layer")
    in_scale = _f32(qparams.input.scale)
    in_zp = qparams.input.zero_point
    input_params = (in_scale, in_zp)

    layers = []
    n_layers = len(model.weights)
    for li, (w, b) in enumerate(zip(model.weights, model.biases)):
        w64 = w.astype(np.float64)
        max_abs = float(np.max(np.abs(w64))) if w64.size else 0.0
        w_scale = _f32(max_abs / WEIGHT_MAX) if max_abs > 0.0 else 1.0
        q = np.clip(round_half_away(w64 / w_scale), -WEIGHT_MAX, WEIGHT_MAX).astype(np.int8)
        bias_scale = in_scale * w_scale
        bias_q = np.clip(
            round_half_away(b.astype(np.float64) / bias_scale),
            np.iinfo(np.int32).min,
            np.iinfo(np.int32).max,
        ).astype(np.int32)
        out = qparams.layer_outputs[li]
        out_scale = _f32(out.scale)
        mantissa, shift = encode_multiplier(bias_scale / out_scale)
        layers.append(
            QuantLayer(
                weights=q,
                bias=bias_q,
                weight_scale=w_scale,
                in_scale=in_scale,
                in_zp=in_zp,
                out_scale=out_scale,
                out_zp=out.zero_point,
                mantissa=mantissa,
                shift=shift,
                relu=li < n_layers - 1,
            )
        )
        in_scale, in_zp = out_scale, out.zero_point

    stats = model.norm_stats
    if stats is not None:
        stats = NormStats(
            mean=stats.mean.astype(np.float16).astype(np.float64),
            std=np.maximum(stats.std.astype(np.float16).astype(np.float64), 1e-6),
        )
    return QuantizedModel(
        layers=layers,
        input_scale=input_params[0],
        input_zp=input_params[1],
        norm_stats=stats,
        mfcc=model.mfcc,
    )


def quantize_input(qm: QuantizedModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite values in quantized model input")
    q = round_half_away(x / qm.input_scale) + qm.input_zp
    return np.clip(q, INT8_MIN, INT8_MAX).astype(np.int8)


def quantized_logits_q(qm: QuantizedModel, x) -> np.ndarray:
    """Run the integer path; returns the final layer's int8 logit codes."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.shape[1] != qm.layers[0].weights.shape[1]:
        raise ValueError("input dimension does not match the quantized model")
    q = quantize_input(qm, batch)
    for layer in qm.layers:
        q = kernels.quantized_linear(
            q, layer.weights, layer.bias, layer.in_zp,
            layer.mantissa, layer.shift, layer.out_zp, layer.relu,
        )
    codes = q[:, 0]
    return codes[0] if single else codes


def dequantized_logit(qm: QuantizedModel, codes) -> np.ndarray:
    last = qm.layers[-1]
    return (np.asarray(codes, dtype=np.float64) - last.out_zp) * last.out_scale


def quantized_forward(qm: QuantizedModel, x):
    """Probability of the anomalous class from the int8 path.

    Thresholding the result at 0.5 is equivalent to comparing the int8 logit
    code against its zero point, so the decision is exact in the quantized
    domain.
    """
    codes = quantized_logits_q(qm, x)
    return sigmoid(dequantized_logit(qm, codes))
