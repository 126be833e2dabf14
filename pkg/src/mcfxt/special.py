"""Modified Bessel function of the second kind, order one.

Two regimes are used:

* ``x <= 2``: the ascending series
  ``K1(x) = 1/x + ln(x/2) I1(x) - (x/4) sum_k [psi(k+1) + psi(k+2)] (x^2/4)^k / (k! (k+1)!)``
* ``x > 2``: Steed's evaluation of Temme's continued fraction, which
  converges quickly for moderate and large arguments and avoids the
  cancellation the series suffers there.

Both branches are accurate to a few ulp in double precision.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

_EULER_GAMMA = 0.57721566490153286061
_EPS = 1e-17
_MAXIT = 10_000


def _k1_series(x: float) -> float:
    y = 0.25 * x * x
    term = 1.0  # (x^2/4)^k / (k! (k+1)!)
    psi_k1 = -_EULER_GAMMA  # psi(k+1)
    psi_k2 = 1.0 - _EULER_GAMMA  # psi(k+2)
    i1_sum = 0.0
    psi_sum = 0.0
    k = 0
    while True:
        i1_sum += term
        psi_sum += (psi_k1 + psi_k2) * term
        k += 1
        term *= y / (k * (k + 1))
        psi_k1 += 1.0 / k
        psi_k2 += 1.0 / (k + 1)
        if term < _EPS * i1_sum:
            break
    i1 = 0.5 * x * i1_sum
    return 1.0 / x + math.log(0.5 * x) * i1 - 0.25 * x * psi_sum


def _k1_continued_fraction(x: float) -> float:
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    else:  # pragma: no cover - CF2 converges in < 100 steps for x > 2
        raise ArithmeticError(f"K1 continued fraction did not converge at x={x}")
    k0 = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s
    return k0 * (x + 0.5 - a1 * h) / x


def _bessel_k1_scalar(x: float) -> float:
    if not x > 0.0:
        raise DomainError(f"bessel_k1 requires x > 0, got {x!r}")
    if math.isinf(x):
        return 0.0
    if x <= 2.0:
        return _k1_series(x)
    return _k1_continued_fraction(x)


def bessel_k1(x):
    """Return K1(x) for scalar or array ``x`` (all entries must be > 0)."""
    if np.ndim(x) == 0:
        return _bessel_k1_scalar(float(x))
    arr = np.asarray(x, dtype=float)
    out = np.empty_like(arr)
    for idx, value in np.ndenumerate(arr):
        out[idx] = _bessel_k1_scalar(float(value))
    return out
