# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled int8 inference kernels.

Mirrors the arithmetic a microcontroller runtime would perform: int8
multiplies accumulated in integer registers, bias add, then a fixed-point
requantization (round half away from zero) back to int8. Must stay
bit-identical to the NumPy fallback in py_fallback.py.
"""

import numpy as np

BACKEND_NAME = "compiled"


cdef inline long long _round_shift(long long p, int total_shift) nogil:
    cdef long long half = (<long long> 1) << (total_shift - 1)
    if p >= 0:
        return (p + half) >> total_shift
    return -((-p + half) >> total_shift)


cdef inline signed char _requantize_one(long long acc, long long mantissa,
                                        int total_shift, int zero_point) nogil:
    cdef long long r = _round_shift(acc * mantissa, total_shift) + zero_point
    if r < -128:
        r = -128
    elif r > 127:
        r = 127
    return <signed char> r


def requantize(acc, mantissa, shift, zero_point):
    """Map int32 accumulators to int8 via the fixed-point multiplier.

    The effective multiplier is mantissa * 2**(-31 - shift) with mantissa
    in [2**30, 2**31). Result is clamped to [-128, 127].
    """
    cdef int total_shift = 31 + shift
    if not 1 <= total_shift <= 62:
        raise ValueError(f"unsupported requantize shift {shift}")
    if not (1 << 30) <= mantissa < (1 << 31):
        raise ValueError("mantissa must be a normalized q31 value")
    acc_arr = np.asarray(acc, dtype=np.int32)
    scalar = acc_arr.ndim == 0
    flat = np.ascontiguousarray(acc_arr).ravel()
    out = np.empty(flat.shape[0], dtype=np.int8)
    cdef int[::1] acc_view = flat
    cdef signed char[::1] out_view = out
    cdef long long mant = mantissa
    cdef int zp = zero_point
    cdef Py_ssize_t i, n = flat.shape[0]
    with nogil:
        for i in range(n):
            out_view[i] = _requantize_one(acc_view[i], mant, total_shift, zp)
    if scalar:
        return out[0]
    return out.reshape(acc_arr.shape)


def quantized_linear(q_in, weights, bias, in_zp, mantissa, shift, out_zp, apply_relu):
    """int8 dense layer: accumulate, add bias, requantize, optional ReLU.

    q_in is (batch, in) int8, weights (out, in) int8, bias (out,) int32.
    ReLU is max(out_zp, .) in the quantized domain. Returns (batch, out) int8.
    """
    cdef int total_shift = 31 + shift
    if not 1 <= total_shift <= 62:
        raise ValueError(f"unsupported requantize shift {shift}")
    if not (1 << 30) <= mantissa < (1 << 31):
        raise ValueError("mantissa must be a normalized q31 value")
    q_arr = np.ascontiguousarray(np.asarray(q_in, dtype=np.int8))
    w_arr = np.ascontiguousarray(np.asarray(weights, dtype=np.int8))
    b_arr = np.ascontiguousarray(np.asarray(bias, dtype=np.int32))
    if q_arr.ndim != 2 or w_arr.ndim != 2 or q_arr.shape[1] != w_arr.shape[1]:
        raise ValueError("q_in must be (batch, in) and weights (out, in)")
    if b_arr.shape[0] != w_arr.shape[0]:
        raise ValueError("bias length must match the output dimension")
    out = np.empty((q_arr.shape[0], w_arr.shape[0]), dtype=np.int8)

    cdef signed char[:, ::1] q = q_arr
    cdef signed char[:, ::1] w = w_arr
    cdef int[::1] b = b_arr
    cdef signed char[:, ::1] o = out
    cdef long long mant = mantissa
    cdef int zp_in = in_zp
    cdef int zp_out = out_zp
    cdef bint relu = apply_relu
    cdef Py_ssize_t n, j, k
    cdef Py_ssize_t n_rows = q_arr.shape[0]
    cdef Py_ssize_t n_out = w_arr.shape[0]
    cdef Py_ssize_t n_in = w_arr.shape[1]
    # centered inputs fit int16 and the dot product fits int32 (the no-overflow
    # bound is enforced by tests), which lets the C compiler vectorize
    row_buf = np.empty(n_in, dtype=np.int16)
    cdef short[::1] xrow = row_buf
    cdef int acc
    cdef signed char val
    with nogil:
        for n in range(n_rows):
            for k in range(n_in):
                xrow[k] = <short> (q[n, k] - zp_in)
            for j in range(n_out):
                acc = b[j]
                for k in range(n_in):
                    acc += <int> xrow[k] * <int> w[j, k]
                val = _requantize_one(acc, mant, total_shift, zp_out)
                if relu and val < zp_out:
                    val = <signed char> zp_out
                o[n, j] = val
    return out
