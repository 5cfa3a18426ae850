"""Closed-form occupation probabilities for the ``family1`` and ``family2`` pulses.

The expressions are transcribed term by term rather than simplified, so a
transcription slip shows up in the comparison against direct integration
instead of being absorbed by algebra.  All functions broadcast over numpy
arrays in ``tau`` and ``xi``.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import Unsupported
from .pulse import Family

__all__ = [
    "QTriple",
    "p1_up",
    "p1_up_monotone",
    "p1_avg",
    "q_triple",
    "p2_up",
    "p2_avg",
    "trapping_xis",
]


class QTriple(NamedTuple):
    q1: np.ndarray
    q2: np.ndarray
    q3: np.ndarray


def _theta(xi):
    return np.sqrt(1.0 + xi * xi)


def p1_up(tau, xi):
    """Probability ``|psi_2(tau)|^2`` under the ``family1`` pulse, starting from ``(1, 0)``."""
    tau = np.asarray(tau, dtype=float)
    xi = np.asarray(xi, dtype=float)
    th = _theta(xi)
    x2 = xi * xi
    s = np.sin(th * tau)
    c = np.cos(th * tau)
    one_m3 = 1.0 - 3.0 * x2
    oscill = 4.0 * x2 * th * tau * one_m3 * np.sin(2.0 * th * tau)
    sin_term = (4.0 * x2 * th**4 * tau**2 + one_m3**2) * s * s
    cos_term = 16.0 * x2 * x2 * th**2 * tau**2 * c * c
    # smallest-magnitude term first
    out = (oscill + sin_term + cos_term) / (th**6 * (1.0 + 4.0 * x2 * tau**2))
    return out[()] if out.ndim == 0 else out


def p1_up_monotone(tau):
    """``family1`` probability at ``xi^2 = 1/3``: ``tau^2 / (1 + 4 tau^2 / 3)``."""
    tau = np.asarray(tau, dtype=float)
    out = tau**2 / (1.0 + 4.0 * tau**2 / 3.0)
    return out[()] if out.ndim == 0 else out


def p1_avg(xi):
    """Infinite-time average of :func:`p1_up`."""
    x2 = np.asarray(xi, dtype=float) ** 2
    out = (1.0 + 5.0 * x2) / (2.0 * (1.0 + x2) ** 2)
    return out[()] if out.ndim == 0 else out


def q_triple(tau, xi) -> QTriple:
    """The auxiliary polynomials ``Q1, Q2, Q3`` of the ``family2`` probability."""
    tau = np.asarray(tau, dtype=float)
    xi = np.asarray(xi, dtype=float)
    th = _theta(xi)
    x2 = xi * xi
    x4 = x2 * x2
    x6 = x4 * x2
    q1 = 1.0 - 10.0 * x2 + 5.0 * x4
    q2 = (
        64.0 * x6 * th**4 * tau**6
        + 48.0 * x4 * (1.0 - 18.0 * x2 - 19.0 * x4) * tau**4
        + 36.0 * x2 * (3.0 - 2.0 * x2 + 11.0 * x4) * tau**2
        + 9.0 * q1
    )
    q3 = 12.0 * x2 * th * tau * (
        th**2 * (16.0 * x4 * tau**4 + 7.0) + 2.0 * (4.0 * x2 * tau**2 + 1.0) * (1.0 - 5.0 * x2)
    )
    q1 = np.broadcast_to(q1, np.broadcast(tau, xi).shape)
    return QTriple(q1, q2, q3)


def p2_up(tau, xi):
    """Probability ``|psi_2(tau)|^2`` under the ``family2`` pulse, starting from ``(1, 0)``."""
    tau = np.asarray(tau, dtype=float)
    xi = np.asarray(xi, dtype=float)
    th = _theta(xi)
    x2 = xi * xi
    x4 = x2 * x2
    x6 = x4 * x2
    q1, q2, q3 = q_triple(tau, xi)
    smooth = (
        16.0 * x4 * th**2 * tau**2
        * (
            16.0 * x4 * th**4 * tau**4
            + 24.0 * x2 * (3.0 - 14.0 * x2 + 7.0 * x4) * tau**2
            + 9.0 * (9.0 - 6.0 * x2 + x4)
        )
    )
    oscill = q1 * (q2 * np.sin(th * tau) ** 2 + q3 * np.sin(2.0 * th * tau))
    den = th**10 * (9.0 + 108.0 * x2 * tau**2 + 48.0 * x4 * tau**4 + 64.0 * x6 * tau**6)
    out = (oscill + smooth) / den
    return out[()] if out.ndim == 0 else out


def p2_avg(xi):
    """Infinite-time average of :func:`p2_up`."""
    x2 = np.asarray(xi, dtype=float) ** 2
    out = (1.0 - 2.0 * x2 + 13.0 * x2 * x2) / (2.0 * (1.0 + x2) ** 3)
    return out[()] if out.ndim == 0 else out


def trapping_xis(family) -> list[float]:
    """Positive ``xi`` at which the oscillating part of the probability vanishes.

    ``family1``: ``1 - 3 xi^2 = 0``.  ``family2``: ``Q1 = 5 xi^4 - 10 xi^2 + 1 = 0``.
    Negative mirrors are also roots and are not listed.  At the smaller
    ``family2`` root the probability overshoots once (to about 0.52) before
    settling at the average, so "no oscillation" does not mean monotone there.
    """
    family = Family(family)
    if family is Family.FAMILY1:
        return [math.sqrt(1.0 / 3.0)]
    if family is Family.FAMILY2:
        r = 2.0 / math.sqrt(5.0)
        return [math.sqrt(1.0 - r), math.sqrt(1.0 + r)]
    raise Unsupported(f"no closed-form trapping condition is known for {family.value}")
