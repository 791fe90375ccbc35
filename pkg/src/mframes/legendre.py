"""Fully normalized associated Legendre functions.

The normalization is the geodesy one, for which the real harmonics
``Pbar_lm(cos t) cos(m p)`` and ``Pbar_lm(cos t) sin(m p)`` have unit mean
square over the sphere. No Condon-Shortley phase is applied.

The recurrence runs down each order column starting from the sectoral
term, which keeps it stable well beyond degree 100.
"""
import numpy as np


def alf_index(l, m):
    return l * (l + 1) // 2 + m


def fully_normalized_alf(lmax, x):
    """Return Pbar_lm(x) for 0 <= m <= l <= lmax.

    Parameters
    ----------
    lmax : int
        Maximum degree.
    x : array_like, shape (N,)
        Cosine of the colatitude, in [-1, 1].

    Returns
    -------
    ndarray, shape (N, (lmax + 1)(lmax + 2) / 2)
        Column ``alf_index(l, m)`` holds Pbar_lm.
    """
    x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
    u = np.sqrt(np.maximum(0.0, 1.0 - x * x))
    out = np.zeros((x.size, (lmax + 1) * (lmax + 2) // 2))
    sectoral = np.ones_like(x)
    for m in range(lmax + 1):
        if m == 1:
            sectoral = np.sqrt(3.0) * u
        elif m > 1:
            sectoral = np.sqrt((2 * m + 1) / (2.0 * m)) * u * sectoral
        out[:, alf_index(m, m)] = sectoral
        if m == lmax:
            break
        prev2 = sectoral
        prev1 = np.sqrt(2 * m + 3.0) * x * sectoral
        out[:, alf_index(m + 1, m)] = prev1
        for l in range(m + 2, lmax + 1):
            a = np.sqrt((2 * l - 1) * (2 * l + 1) / ((l - m) * (l + m)))
            b = np.sqrt((2 * l + 1) * (l + m - 1) * (l - m - 1) / ((l - m) * (l + m) * (2 * l - 3)))
            cur = a * x * prev1 - b * prev2
            out[:, alf_index(l, m)] = cur
            prev2, prev1 = prev1, cur
    return out
