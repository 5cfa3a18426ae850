"""Long-time averages of probability series and peak location over ``xi``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from . import analytic
from .dynamics import DissipationRates, evolve_bloch, evolve_schrodinger
from .errors import InvalidParams, NotUnimodal, WindowTooSmall
from .pulse import Family, PulseParams, make_pulse

__all__ = [
    "AverageResult",
    "time_average",
    "analytic_source",
    "numeric_source",
    "find_peak",
    "golden_section_max",
]

MIN_PERIODS = 100
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class AverageResult:
    value: float
    window: float
    error_estimate: float


def time_average(source, window: float, theta: float = 1.0, samples_per_period: int = 32) -> AverageResult:
    """Cesaro mean ``(1/T) int_0^T P(tau) dtau`` by the trapezoidal rule.

    Parameters
    ----------
    source : callable
        Maps an array of times to probabilities (a scalar result is
        broadcast, so constants are allowed).
    window : float
        Averaging window ``T``.
    theta : float
        Half the dominant angular frequency of ``P``; the grid resolves each
        period ``pi / theta`` with ``samples_per_period`` points and the
        window must hold at least 100 periods.

    The error estimate is the change between the ``T/2`` and ``T`` averages.
    """
    if not (math.isfinite(window) and window > 0):
        raise InvalidParams(f"window must be positive, got {window!r}")
    if not theta > 0:
        raise InvalidParams(f"theta must be positive, got {theta!r}")
    period = math.pi / theta
    if window < MIN_PERIODS * period:
        raise WindowTooSmall(
            f"window {window:g} holds {window / period:.1f} periods of frequency 2*theta; "
            f"need at least {MIN_PERIODS}"
        )
    n = math.ceil(window / (period / samples_per_period))
    n += n % 2
    tau = np.linspace(0.0, window, n + 1)
    values = np.broadcast_to(np.asarray(source(tau), dtype=float), tau.shape)
    full = trapezoid(values, tau) / window
    half = trapezoid(values[: n // 2 + 1], tau[: n // 2 + 1]) / (window / 2)
    return AverageResult(value=float(full), window=float(window), error_estimate=float(abs(full - half)))


def analytic_source(family, xi: float):
    """Closed-form ``P_up(tau)`` of ``family1`` or ``family2`` as an averaging source."""
    family = Family(family)
    f = {Family.FAMILY1: analytic.p1_up, Family.FAMILY2: analytic.p2_up}.get(family)
    if f is None:
        raise InvalidParams(f"no closed form for {family.value}")
    return lambda tau: f(tau, xi)


def numeric_source(params: PulseParams, rates: DissipationRates | None = None, tol: float = 1e-8):
    """Integrated ``P_up(tau)``; Schroedinger when ``rates`` is None, Bloch otherwise."""
    pulse = make_pulse(params)

    def source(tau):
        if rates is None:
            return evolve_schrodinger(pulse, tau[-1], tol, tau).p_up
        return evolve_bloch(pulse, rates, tau[-1], tol, tau).p_up

    return source


def golden_section_max(f, a: float, b: float, tol: float) -> tuple[float, float]:
    """Shrink ``[a, b]`` around the maximum of a unimodal ``f`` until ``b - a <= tol``."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return a, b


def find_peak(
    avg_of_xi,
    lo: float,
    hi: float,
    tol: float,
    n_scan: int = 64,
    plateau: float = 1e-6,
    n_refine: int = 64,
):
    """Locate the maximum of ``avg_of_xi`` on ``[lo, hi]``.

    A coarse scan of ``n_scan`` points brackets the maximum, golden-section
    search refines it to an interval of width ``tol``, and the midpoint is
    returned together with its value.  Scan points within ``plateau`` of the
    best one count as part of the peak; several separated groups of them
    raise :class:`NotUnimodal`.  A completely flat scan returns the middle of
    ``[lo, hi]``.

    Finite-window averages carry a small ripple in ``xi`` (the boundary term
    of the integral oscillates like ``sin(2 theta T) / T``), so a broad peak
    is not unimodal on a fine scale.  A second scan of ``n_refine`` points
    inside the coarse bracket picks the highest ripple before golden-section
    search; ``n_refine=0`` skips it.
    """
    if not lo < hi:
        raise InvalidParams(f"need lo < hi, got [{lo}, {hi}]")
    if not tol > 0:
        raise InvalidParams(f"tol must be positive, got {tol!r}")
    xs = np.linspace(lo, hi, n_scan)
    vals = np.array([avg_of_xi(x) for x in xs], dtype=float)
    near = vals >= vals.max() - plateau
    starts = np.flatnonzero(near & ~np.concatenate(([False], near[:-1])))
    if len(starts) > 1:
        raise NotUnimodal(f"{len(starts)} separated maxima near {xs[starts].round(6).tolist()}")
    if near.all():
        mid = 0.5 * (lo + hi)
        return mid, float(avg_of_xi(mid))
    idx = np.flatnonzero(near)
    a = xs[max(idx[0] - 1, 0)]
    b = xs[min(idx[-1] + 1, n_scan - 1)]
    if n_refine > 2:
        fine = np.linspace(a, b, n_refine)
        j = int(np.argmax([avg_of_xi(x) for x in fine]))
        a, b = fine[max(j - 1, 0)], fine[min(j + 1, n_refine - 1)]
    a, b = golden_section_max(avg_of_xi, a, b, tol)
    mid = float(0.5 * (a + b))
    return mid, float(avg_of_xi(mid))
