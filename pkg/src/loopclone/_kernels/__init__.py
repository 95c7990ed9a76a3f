"""Backend selection for the pairwise hot kernels.

Two interchangeable implementations exist: a compiled Cython extension
(``_fast``) and a pure NumPy fallback (``_numpy_impl``). The extension is
preferred when importable. Set ``LOOPCLONE_KERNELS=py`` to force the fallback
or ``LOOPCLONE_KERNELS=c`` to require the extension (ImportError if missing).
"""
import os

_requested = os.environ.get("LOOPCLONE_KERNELS", "").strip().lower()

if _requested == "py":
    from . import _numpy_impl as _impl
    BACKEND = "py"
elif _requested == "c":
    from . import _fast as _impl  # noqa: F401  (ImportError is the contract)
    BACKEND = "c"
elif _requested == "":
    try:
        from . import _fast as _impl
        BACKEND = "c"
    except ImportError:
        from . import _numpy_impl as _impl
        BACKEND = "py"
else:
    raise ValueError(
        f"LOOPCLONE_KERNELS must be 'c', 'py' or unset, got {_requested!r}"
    )

neighborhood_spreads = _impl.neighborhood_spreads
secant_excess_max = _impl.secant_excess_max
min_pairwise_dist = _impl.min_pairwise_dist

__all__ = [
    "BACKEND",
    "neighborhood_spreads",
    "secant_excess_max",
    "min_pairwise_dist",
]
