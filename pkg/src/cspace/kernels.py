"""Kernel backend selection.

The compiled extension is used when importable; set ``CSPACE_PURE=1`` to
force the pure-Python implementations.
"""
import os

from . import _pykernels as pure

BACKEND = "python"
_impl = pure
if os.environ.get("CSPACE_PURE") != "1":
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on build
        _impl = pure

delaunay_build = _impl.delaunay_build
bvh_closest = _impl.bvh_closest
ray_crossings = _impl.ray_crossings
fast_march = _impl.fast_march

__all__ = ["BACKEND", "pure", "delaunay_build", "bvh_closest",
           "ray_crossings", "fast_march"]
