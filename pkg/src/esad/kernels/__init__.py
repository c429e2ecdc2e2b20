"""Integer inference kernels with import-time backend selection.

The compiled Cython core is preferred when present; otherwise the NumPy
fallback is used. Both expose the same functions with bit-identical
results. Set ESAD_KERNEL=python to force the fallback or ESAD_KERNEL=compiled
to require the extension.
"""

import os

_choice = os.environ.get("ESAD_KERNEL", "auto").lower()

if _choice in ("auto", "compiled", "c"):
    try:
        from . import _intcore as _impl
    except ImportError:
        if _choice != "auto":
            raise ImportError(
                "ESAD_KERNEL=compiled but the esad.kernels._intcore extension "
                "is not built; install the package with a C toolchain"
            )
        from . import py_fallback as _impl
elif _choice in ("python", "py"):
    from . import py_fallback as _impl
else:
    raise ValueError(f"unrecognized ESAD_KERNEL value: {_choice!r}")

requantize = _impl.requantize
quantized_linear = _impl.quantized_linear


def backend_name() -> str:
    return _impl.BACKEND_NAME
