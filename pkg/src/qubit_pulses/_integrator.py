"""Dormand-Prince 5(4) integrator with PI step control and dense output.

The stepping loop is compiled with numba and integrates one of the systems
registered in :mod:`._rhs` (real state vectors, parameters packed in a
float array).  The 5th-order solution is propagated (local
extrapolation); the embedded 4th-order one only feeds the error estimate.

Error control is per unit step, normalised by the integration horizon: a
step of length ``h`` may commit a local error of at most ``tol * h / t_end``,
so the accumulated error over the whole run stays of order ``tol``.
Samples between steps use the pair's quartic continuous extension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from ._rhs import SYSTEMS, rhs
from .errors import NonFiniteState, StepSizeUnderflow

C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# b5 - b4
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40

# quartic dense output: y(t + s h) = y + h * sum_i k_i * (P[i] . (s, s^2, s^3, s^4))
P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
# PI controller; the error per unit step scales like h^4
BETA = 0.04
ALPHA = 0.25 - 0.75 * BETA

_OK, _UNDERFLOW, _NONFINITE, _BUDGET = 0, 1, 2, 3


@dataclass(frozen=True)
class IntegratorStats:
    tol: float
    n_steps: int
    n_rejected: int
    max_consecutive_rejections: int
    n_rhs: int


@numba.njit(cache=True)
def _norm(err, y0, y1, tol):
    acc = 0.0
    for i in range(err.size):
        sc = tol + tol * max(abs(y0[i]), abs(y1[i]))
        acc += (err[i] / sc) ** 2
    return math.sqrt(acc / err.size)


@numba.njit(cache=True)
def _dopri(system, y0, t_end, tol, t_eval, params, max_steps):
    n = y0.size
    y = y0.copy()
    out = np.empty((t_eval.size, n))
    counters = np.zeros(4, dtype=np.int64)  # steps, rejected, max consecutive, rhs calls
    j = 0
    while j < t_eval.size and t_eval[j] <= 0.0:
        out[j] = y
        j += 1

    t = 0.0
    f = rhs(system, t, y, params)
    # initial step (Hairer, Norsett & Wanner, II.4)
    zeros = np.zeros(n)
    d0 = _norm(y, zeros, zeros, tol)
    d1 = _norm(f, zeros, zeros, tol)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    f1 = rhs(system, t + h0, y + h0 * f, params)
    d2 = _norm(f1 - f, zeros, zeros, tol) / h0
    h1 = max(1e-6, h0 * 1e-3) if max(d1, d2) <= 1e-15 else (0.01 / max(d1, d2)) ** 0.2
    h = min(100.0 * h0, h1, t_end)
    n_rhs = 2
    err_prev = 1e-4
    n_steps = 0
    n_rej = 0
    consecutive = 0
    max_consec = 0
    rejected_last = False
    status = _OK
    eps = np.finfo(np.float64).eps

    while t < t_end:
        if n_steps + n_rej >= max_steps:
            status = _BUDGET
            break
        h_min = 16.0 * eps * max(1.0, abs(t))
        if h < h_min:
            status = _UNDERFLOW
            break
        last = t + h >= t_end
        if last:
            h = t_end - t

        k1 = f
        k2 = rhs(system, t + C2 * h, y + h * (A21 * k1), params)
        k3 = rhs(system, t + C3 * h, y + h * (A31 * k1 + A32 * k2), params)
        k4 = rhs(system, t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3), params)
        k5 = rhs(system, t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4), params)
        k6 = rhs(system, t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5), params)
        y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
        k7 = rhs(system, t + h, y_new, params)
        n_rhs += 6

        err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        en = _norm(err, y, y_new, tol) * (t_end / h)
        if not (math.isfinite(en) and np.all(np.isfinite(y_new))):
            if h <= 2.0 * h_min:
                status = _NONFINITE
                break
            en = np.inf

        if en <= 1.0:
            t_new = t_end if last else t + h
            while j < t_eval.size and t_eval[j] <= t_new:
                s = (t_eval[j] - t) / h
                for i in range(n):
                    acc = 0.0
                    ks = (k1[i], k2[i], k3[i], k4[i], k5[i], k6[i], k7[i])
                    for m in range(7):
                        acc += ks[m] * s * (P[m, 0] + s * (P[m, 1] + s * (P[m, 2] + s * P[m, 3])))
                    out[j, i] = y[i] + h * acc
                j += 1
            if en > 0.0:
                fac = SAFETY * en ** (-ALPHA) * err_prev**BETA
            else:
                fac = MAX_FACTOR
            fac = min(MAX_FACTOR, max(MIN_FACTOR, fac))
            if rejected_last:
                fac = min(fac, 1.0)
            err_prev = max(en, 1e-4)
            t = t_new
            y = y_new
            f = k7
            h *= fac
            n_steps += 1
            consecutive = 0
            rejected_last = False
        else:
            fac = max(MIN_FACTOR, SAFETY * en ** (-0.25)) if math.isfinite(en) else MIN_FACTOR
            h *= fac
            n_rej += 1
            consecutive += 1
            max_consec = max(max_consec, consecutive)
            rejected_last = True

    counters[0] = n_steps
    counters[1] = n_rej
    counters[2] = max_consec
    counters[3] = n_rhs
    return out, y, counters, status, t


def integrate(system, y0, t_end, tol, t_eval, params=None, max_steps=50_000_000):
    """Integrate ``y' = f(t, y, params)`` from ``t = 0`` to ``t_end``.

    Parameters
    ----------
    system : {"schrodinger", "bloch", "linear"}
        Right-hand side; ``"linear"`` is ``y' = M y`` with ``M`` stored
        row-major in ``params``.
    y0 : array_like
        Initial state at ``t = 0``.
    t_end : float
        Final time; the last step lands on it exactly.
    tol : float
        Relative and absolute tolerance on the error accumulated over
        ``[0, t_end]``.
    t_eval : array_like
        Sorted sample times in ``[0, t_end]``.
    params : ndarray, optional
        Packed parameters for the right-hand side.

    Returns
    -------
    ys : ndarray, shape ``(len(t_eval), len(y0))``
    y_end : ndarray
        State at ``t_end`` (a step endpoint, not interpolated).
    stats : IntegratorStats

    Raises
    ------
    StepSizeUnderflow
        If the step size collapses or the step budget runs out.
    NonFiniteState
        If the state overflows.
    """
    y0 = np.ascontiguousarray(y0, dtype=float).ravel()
    t_eval = np.ascontiguousarray(t_eval, dtype=float).ravel()
    params = np.zeros(1) if params is None else np.ascontiguousarray(params, dtype=float)
    out, y_end, counters, status, t_stop = _dopri(SYSTEMS[system], y0, float(t_end), float(tol), t_eval, params, max_steps)
    if status == _UNDERFLOW:
        raise StepSizeUnderflow(f"step size underflowed at t={t_stop:.6g} with tol={tol:g}")
    if status == _BUDGET:
        raise StepSizeUnderflow(f"step budget of {max_steps} exhausted at t={t_stop:.6g}")
    if status == _NONFINITE:
        raise NonFiniteState(f"state became non-finite near t={t_stop:.6g}")
    stats = IntegratorStats(
        tol=float(tol),
        n_steps=int(counters[0]),
        n_rejected=int(counters[1]),
        max_consecutive_rejections=int(counters[2]),
        n_rhs=int(counters[3]),
    )
    return out, y_end, stats
