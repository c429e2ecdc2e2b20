"""NumPy integer implementation of the int8 inference kernels.

Semantics are identical to the compiled core in _intcore.pyx: everything
between input quantization and the final logit is integer arithmetic, and
requantization rounds half away from zero. Kept free of float operations
so the path can be poisoned-tested.
"""

import numpy as np

BACKEND_NAME = "python"


def _round_shift(products, total_shift):
    # round-half-away-from-zero of products / 2**total_shift, integer only
    half = np.int64(1) << np.int64(total_shift - 1)
    pos = (products + half) >> np.int64(total_shift)
    neg = -((-products + half) >> np.int64(total_shift))
    return np.where(products >= 0, pos, neg)


def requantize(acc, mantissa: int, shift: int, zero_point: int):
    """Map int32 accumulators to int8 via the fixed-point multiplier.

    The effective multiplier is mantissa * 2**(-31 - shift) with mantissa
    in [2**30, 2**31). Result is clamped to [-128, 127].
    """
    total_shift = 31 + shift
    if not 1 <= total_shift <= 62:
        raise ValueError(f"unsupported requantize shift {shift}")
    if not (1 << 30) <= mantissa < (1 << 31):
        raise ValueError("mantissa must be a normalized q31 value")
    acc_arr = np.asarray(acc, dtype=np.int64)
    products = acc_arr * np.int64(mantissa)
    rounded = _round_shift(products, total_shift) + np.int64(zero_point)
    clamped = np.clip(rounded, -128, 127).astype(np.int8)
    return clamped if acc_arr.ndim else clamped[()]


def quantized_linear(q_in, weights, bias, in_zp: int, mantissa: int, shift: int,
                     out_zp: int, apply_relu: bool):
    """int8 dense layer: accumulate, add bias, requantize, optional ReLU.

    q_in is (batch, in) int8, weights (out, in) int8, bias (out,) int32.
    ReLU is max(out_zp, .) in the quantized domain. Returns (batch, out) int8.
    """
    q = np.asarray(q_in, dtype=np.int64)
    w = np.asarray(weights, dtype=np.int64)
    b = np.asarray(bias, dtype=np.int64)
    acc = (q - np.int64(in_zp)) @ w.T + b
    out = requantize(acc, mantissa, shift, out_zp)
    if apply_relu:
        out = np.maximum(out, np.int8(out_zp))
    return out.astype(np.int8)
