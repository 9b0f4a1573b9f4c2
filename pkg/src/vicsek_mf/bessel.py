"""Modified Bessel ratio I1(x)/I0(x) by backward continued-fraction recurrence."""

import math

import numpy as np


def _depth(x):
    return int(40 + 1.5 * x + 10 * math.sqrt(x))


def bessel_ratio(x):
    """I1(x)/I0(x) for x >= 0 (odd extension for x < 0).

    Uses I_nu/I_{nu-1} = 1 / (2 nu / x + I_{nu+1}/I_nu), unwound from a deep
    truncation where the tail ratio is negligible.
    """
    x = float(x)
    if x == 0.0:
        return 0.0
    if x < 0:
        return -bessel_ratio(-x)
    r = 0.0
    for nu in range(_depth(x), 0, -1):
        r = 1.0 / (2.0 * nu / x + r)
    return r


bessel_ratio_vec = np.vectorize(bessel_ratio, otypes=[float])
