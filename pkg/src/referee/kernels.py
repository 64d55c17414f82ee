"""Dispatch between the numba and numpy kernel implementations.

``referee.kernels.<name>`` resolves to the numba kernel when numba is usable
and ``REFEREE_DISABLE_NUMBA`` is unset, otherwise to the numpy one.
"""
from . import _kernels_numpy as numpy_impl
from ._accel import BACKEND, HAS_NUMBA

if HAS_NUMBA:
    from . import _kernels_numba as numba_impl
    _impl = numba_impl
else:
    numba_impl = None
    _impl = numpy_impl

feature_mask = _impl.feature_mask
free_per_column = _impl.free_per_column
r_referee = _impl.r_referee
farthest_feature = _impl.farthest_feature
a_referee = _impl.a_referee
shift_cosine_distances = _impl.shift_cosine_distances
linear_nearest = _impl.linear_nearest
kd_nearest = _impl.kd_nearest

__all__ = [
    "BACKEND", "numpy_impl", "numba_impl",
    "feature_mask", "free_per_column", "r_referee", "farthest_feature", "a_referee",
    "shift_cosine_distances", "linear_nearest", "kd_nearest",
]
