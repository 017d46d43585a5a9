"""Nonnegative least squares on the normal equations.

The compiled kernel is used when it was built; set ``MUBPILOT_PURE_PYTHON=1``
to force the pure-Python implementation (it is also the fallback when the
extension is missing).
"""

from __future__ import annotations

import os

import numpy as np

from . import _nnls_py

try:
    from . import _nnls_core
except ImportError:  # extension not built
    _nnls_core = None

_FORCE_PY = os.environ.get("MUBPILOT_PURE_PYTHON", "") not in ("", "0")

BACKEND = "python" if (_nnls_core is None or _FORCE_PY) else "compiled"
_KERNELS = {"python": _nnls_py.nnls_gram}
if _nnls_core is not None:
    _KERNELS["compiled"] = _nnls_core.nnls_gram


def available_backends() -> list[str]:
    return sorted(_KERNELS)


def nnls_gram(A: np.ndarray, c: np.ndarray, tol: float, max_iter: int,
              backend: str | None = None) -> tuple[np.ndarray, int, bool]:
    """Minimize ``x^T A x - 2 c^T x`` over ``x >= 0``.

    Returns ``(x, iterations, converged)`` where ``converged`` means the KKT
    conditions hold to ``tol``: gradient entries ``c - A x`` vanish on the
    support and are ``<= tol`` off it.

    ``c`` must lie in the range of ``A``, as it does for normal equations
    ``A = D^T D``, ``c = D^T y``; a singular ``A`` is fine under that condition.
    """
    name = backend or BACKEND
    if name not in _KERNELS:
        raise ValueError(f"unknown NNLS backend {name!r}; available: {available_backends()}")
    kernel = _KERNELS[name]
    return kernel(A, c, float(tol), int(max_iter))
