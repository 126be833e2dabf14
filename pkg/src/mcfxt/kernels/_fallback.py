"""Pure NumPy / Python versions of the compiled kernels."""

import numpy as np


def projected_power(phases, proj, out):
    amp = np.exp(-1j * np.asarray(phases)) @ proj
    out[:] = (amp.real**2 + amp.imag**2).sum(axis=1)


def count_extrema(values, threshold):
    n = len(values)
    if n == 0:
        return 0
    direction = 0
    count = 0
    hi = lo = ext = values[0]
    for v in values[1:]:
        if direction == 0:
            hi = max(hi, v)
            lo = min(lo, v)
            if v - lo >= threshold:
                direction, ext = 1, v
            elif hi - v >= threshold:
                direction, ext = -1, v
        elif direction == 1:
            if v > ext:
                ext = v
            elif ext - v >= threshold:
                count += 1
                direction, ext = -1, v
        else:
            if v < ext:
                ext = v
            elif v - ext >= threshold:
                count += 1
                direction, ext = 1, v
    return count
