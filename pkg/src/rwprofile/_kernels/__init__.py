"""Hot numeric kernels with two interchangeable backends.

The numba backend JIT-compiles the inner loops; the numpy backend is a pure
vectorized fallback with identical semantics. Selection:

* ``RWPROFILE_BACKEND=numpy`` forces the fallback,
* ``RWPROFILE_BACKEND=numba`` requires numba (import error surfaces),
* unset / ``auto`` prefers numba when it is importable.

The numba import is deferred until the first kernel call so that CLI
startup does not pay for JIT machinery it may never use.
"""

from __future__ import annotations

import os

from . import numpy_backend

_impl = None
_name = None


def _select():
    global _impl, _name
    if _impl is not None:
        return _impl
    choice = os.environ.get("RWPROFILE_BACKEND", "auto").strip().lower()
    if choice in ("", "auto"):
        try:
            from . import numba_backend as impl
            _name = "numba"
        except ImportError:
            impl = numpy_backend
            _name = "numpy"
    elif choice == "numba":
        from . import numba_backend as impl
        _name = "numba"
    elif choice == "numpy":
        impl = numpy_backend
        _name = "numpy"
    else:
        raise ValueError(f"RWPROFILE_BACKEND={choice!r} (use auto, numba or numpy)")
    _impl = impl
    return impl


def active_backend() -> str:
    _select()
    return _name


def bin_counts(bin_idx, api_idx, n_bins, n_apis):
    return _select().bin_counts(bin_idx, api_idx, n_bins, n_apis)


def sliding_scores(counts, n_prev, n_curr, prev_len, curr_len, metric_id, weights):
    return _select().sliding_scores(counts, n_prev, n_curr, prev_len,
                                    curr_len, metric_id, weights)


def bocd_map(series, lam, mu0, kappa0, alpha0, beta0, keep_posterior):
    return _select().bocd_map(series, lam, mu0, kappa0, alpha0, beta0,
                              keep_posterior)


# metric ids shared by both backends
METRIC_COSINE = 0
METRIC_MANHATTAN = 1
METRIC_WEIGHTED = 2
METRIC_EUCLIDEAN = 3
