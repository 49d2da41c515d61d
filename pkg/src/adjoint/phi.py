"""phi-functions of exponential integrators.

    phi_1(h) = (e^h - 1) / h
    phi_2(h) = (e^h - h - 1) / h^2
    phi_{k+1}(h) = (phi_k(h) - phi_k(0)) / h
"""
from math import factorial

import numpy as np

from config import SERIES_CUTOFF

# phi_2(h) = sum_k h^k / (k + 2)!; 18 terms are exact to roundoff for |h| <= 1
_PHI2_TAYLOR = np.array([1.0 / factorial(k + 2) for k in range(18)])


def phi1(h: float) -> float:
    h = float(h)
    if abs(h) < SERIES_CUTOFF:
        return 1.0 + h / 2.0 + h * h / 6.0
    return float(np.expm1(h) / h)


def phi2(h: float) -> float:
    h = float(h)
    if abs(h) < SERIES_CUTOFF:
        return 0.5 + h / 6.0 + h * h / 24.0
    if abs(h) < 1.0:
        # closed form loses ~|log10 h| digits to cancellation here
        return float(np.polynomial.polynomial.polyval(h, _PHI2_TAYLOR))
    return float((np.expm1(h) - h) / (h * h))
