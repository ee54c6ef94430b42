"""Shared hypothesis strategies."""
import numpy as np
from hypothesis import strategies as st

from curvflow.curvature import builtin_speeds


def curvatures(n_min=2, n_max=5, lo=0.2, hi=5.0):
    return st.integers(n_min, n_max).flatmap(
        lambda n: st.lists(st.floats(lo, hi), min_size=n, max_size=n).map(np.array))


speeds = st.sampled_from(builtin_speeds())
