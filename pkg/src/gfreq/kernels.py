"""Kernel dispatch: numba-compiled fast path with a pure-python fallback.

The kernel bodies live in _kernels_impl.py, written so the same source
runs under numba.njit or plain CPython. When numba is enabled, the
functions of gfreq._kernels_impl are wrapped with njit in place (the
module keeps its real import name, which numba's on-disk cache requires).
The pure-python chain is an independent second copy of the module, loaded
from the same file, left uncompiled.

Selection: the environment variable GFREQ_NUMBA controls the default
('0'/'false'/'off'/'no' disables compilation). When numba is missing or
fails to import, the python chain is used silently. Both chains stay
importable (PY_KERNELS / JIT_KERNELS) so tests and the benchmark script
can compare them directly; they produce bit-identical results.
"""

import importlib.util
import os

from . import _kernels_impl as _impl_mod

_KERNEL_NAMES = (
    "esu_count",
    "naive_count",
    "mhrw_run",
    "swap_chain",
    "mask_components",
    "keep_components",
)

_HELPER_NAMES = (
    "_mul32",
    "_mix32",
    "_rng_init",
    "_rng_u32",
    "_rng_unit",
    "_rng_below",
    "_subset_bitmask",
    "_enum_moves",
)


def _numba_requested():
    flag = os.environ.get("GFREQ_NUMBA", "").strip().lower()
    if flag in ("0", "false", "off", "no"):
        return False
    return True


def _load_python_copy():
    spec = importlib.util.spec_from_file_location(
        "gfreq._kernels_py", _impl_mod.__file__
    )
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def _jit_in_place():
    try:
        import numba
    except ImportError:
        return False
    try:
        for name in _HELPER_NAMES + _KERNEL_NAMES:
            setattr(
                _impl_mod, name, numba.njit(cache=True)(getattr(_impl_mod, name))
            )
    except Exception:
        return False
    return True


_py_mod = _load_python_copy()
PY_KERNELS = {name: getattr(_py_mod, name) for name in _KERNEL_NAMES}

NUMBA_ENABLED = _jit_in_place() if _numba_requested() else False
JIT_KERNELS = (
    {name: getattr(_impl_mod, name) for name in _KERNEL_NAMES}
    if NUMBA_ENABLED
    else None
)

_active = JIT_KERNELS if NUMBA_ENABLED else PY_KERNELS

esu_count = _active["esu_count"]
naive_count = _active["naive_count"]
mhrw_run = _active["mhrw_run"]
swap_chain = _active["swap_chain"]
mask_components = _active["mask_components"]
keep_components = _active["keep_components"]


def using_numba():
    """True when the compiled kernel chain is active."""
    return NUMBA_ENABLED
