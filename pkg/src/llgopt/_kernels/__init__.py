"""Pointwise vector-algebra kernels with a compiled core and NumPy fallback.

The compiled extension (``_native``, built from ``_native.pyx``) fuses the
cross-product heavy right-hand-side assemblies into single C loops.  When it
is not available (or when ``LLGOPT_KERNELS=numpy`` is set) the NumPy
implementations in ``_fallback`` are used instead; both expose the same
functions and produce identical results.

Set ``LLGOPT_KERNELS=native`` to require the compiled core (raises if it
cannot be imported).
"""

import os

from . import _fallback

_requested = os.environ.get("LLGOPT_KERNELS", "auto").lower()

if _requested == "numpy":
    _impl = _fallback
    IMPL_NAME = "numpy"
else:
    try:
        from . import _native as _impl

        IMPL_NAME = "native"
    except ImportError:
        if _requested == "native":
            raise
        _impl = _fallback
        IMPL_NAME = "numpy"

_FUNCTIONS = ("cross", "dot", "double_cross_rhs", "ep_pointwise",
              "tangent_pointwise", "adjoint_pointwise", "gradient_direction",
              "sphere_defect", "normalize")

numpy_impl = _fallback

try:
    from . import _native as native_impl
except ImportError:
    native_impl = None


def activate(name):
    """Rebind the module-level kernels to 'native' or 'numpy' at runtime.

    The solvers look the functions up through this module on every call,
    so switching here switches them too (used by the benchmark and the
    backend-parity tests).
    """
    global IMPL_NAME
    impl = {"native": native_impl, "numpy": numpy_impl}[name]
    if impl is None:
        raise RuntimeError(f"kernel implementation {name!r} is not available")
    for fn in _FUNCTIONS:
        globals()[fn] = getattr(impl, fn)
    IMPL_NAME = name


for _fn in _FUNCTIONS:
    globals()[_fn] = getattr(_impl, _fn)
