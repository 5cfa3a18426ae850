"""Exactly solvable bias pulses for the driven two-level system.

Everything is dimensionless: energies are measured in units of the
tunnelling amplitude Delta and time is ``tau = Delta * t``.  The families
are

* ``constant``: ``eps(tau) = xi``
* ``family1``:  ``eps(tau) = xi - 4 xi / (1 + 4 xi^2 tau^2)``
* ``family2``:  the two-fold transformed rational pulse
* ``family3``:  ``eps(tau) = xi + 2 omega^2 / (b cos(2 omega tau + phi) - xi)``
  with ``b = sqrt(xi^2 - omega^2) > 0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InconsistentFigureParams, InvalidParams, NonFinite

__all__ = [
    "Family",
    "PulseParams",
    "BiasPulse",
    "make_pulse",
    "eval_bias",
    "family3_limit_phase",
    "params_from_b",
    "pulse_range",
]


class Family(str, enum.Enum):
    CONSTANT = "constant"
    FAMILY1 = "family1"
    FAMILY2 = "family2"
    FAMILY3 = "family3"


_FAMILY_CODE = {Family.CONSTANT: 0, Family.FAMILY1: 1, Family.FAMILY2: 2, Family.FAMILY3: 3}


@dataclass(frozen=True)
class PulseParams:
    """Raw pulse parameters.

    ``omega`` and ``phi`` are only read by ``family3``.
    """

    family: Family
    xi: float
    omega: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))


@dataclass(frozen=True)
class BiasPulse:
    """A validated pulse with its derived constants.

    Build instances with :func:`make_pulse`; calling the pulse evaluates the
    bias at the given time(s).
    """

    params: PulseParams
    theta: float = field(init=False)
    b: float = field(init=False)

    def __post_init__(self):
        p = self.params
        object.__setattr__(self, "theta", math.sqrt(1.0 + p.xi * p.xi))
        b = math.sqrt(p.xi * p.xi - p.omega * p.omega) if p.family is Family.FAMILY3 else 0.0
        object.__setattr__(self, "b", b)

    @property
    def family(self) -> Family:
        return self.params.family

    @property
    def xi(self) -> float:
        return self.params.xi

    def __call__(self, tau):
        return eval_bias(self, tau)

    @property
    def effective_family(self) -> Family:
        """Family actually evaluated.

        For ``family3`` with ``omega^2 == 0`` (exactly or by underflow) the
        formula is ``0/0`` wherever ``b cos(2 omega tau + phi) = xi``.  The
        pulse is then replaced by its ``omega -> 0`` limit: ``family1`` when
        the phase puts the pole at every ``tau`` (``phi = 0`` for ``xi > 0``,
        ``phi = pi`` for ``xi < 0``, modulo ``2 pi``), the constant ``xi``
        otherwise.
        """
        p = self.params
        if p.family is not Family.FAMILY3 or p.omega * p.omega > 0:
            return p.family
        shift = p.phi if p.xi > 0 else p.phi - math.pi
        if shift - 2.0 * math.pi * round(shift / (2.0 * math.pi)) == 0.0:
            return Family.FAMILY1
        return Family.CONSTANT

    def kernel_params(self) -> np.ndarray:
        """Packed ``[family code, xi, omega, phi, b]`` for :func:`bias_kernel`."""
        p = self.params
        return np.array([_FAMILY_CODE[self.effective_family], p.xi, p.omega, p.phi, self.b])


def _check_finite(**values):
    for name, v in values.items():
        if not math.isfinite(v):
            raise NonFinite(f"{name} must be finite, got {v!r}")


def make_pulse(params: PulseParams) -> BiasPulse:
    """Validate ``params`` and return a :class:`BiasPulse`.

    Raises
    ------
    NonFinite
        If any field is NaN or infinite.
    InvalidParams
        If ``family3`` has ``omega < 0`` or ``xi^2 - omega^2 <= 0``.
    """
    _check_finite(xi=params.xi, omega=params.omega, phi=params.phi)
    if params.family is Family.FAMILY3:
        if params.omega < 0:
            raise InvalidParams(f"family3 requires omega >= 0, got {params.omega}")
        b2 = params.xi**2 - params.omega**2
        if not b2 > 0:
            raise InvalidParams(
                f"family3 requires b^2 = xi^2 - omega^2 > 0, got "
                f"xi={params.xi}, omega={params.omega} (b^2={b2:.6g})"
            )
    return BiasPulse(params)


def params_from_b(xi: float, b: float, phi: float = 0.0) -> PulseParams:
    """Family-3 parameters from ``(xi, b, phi)`` using ``omega^2 = xi^2 - b^2``.

    Raises :class:`InconsistentFigureParams` when no real ``omega`` with
    ``b^2 = xi^2 - omega^2 > 0`` exists.
    """
    _check_finite(xi=xi, b=b, phi=phi)
    omega2 = xi * xi - b * b
    if b == 0 or omega2 < 0:
        raise InconsistentFigureParams(
            f"no family3 pulse has xi={xi:.6g}, b={b:.6g}: the constraint "
            f"b^2 = xi^2 - omega^2 > 0 would need omega^2 = {omega2:.6g}, "
            f"which is negative (b^2={b * b:.6g} > xi^2={xi * xi:.6g})"
            if omega2 < 0
            else "family3 requires b > 0"
        )
    return PulseParams(Family.FAMILY3, xi=xi, omega=math.sqrt(omega2), phi=phi)


@numba.njit(cache=True)
def _family2(xi, u2):
    # u2 = (xi tau)^2, scalar or array
    u4 = u2 * u2
    u6 = u4 * u2
    return xi * (45.0 - 180.0 * u2 - 144.0 * u4 + 64.0 * u6) / (9.0 + 108.0 * u2 + 48.0 * u4 + 64.0 * u6)


@numba.njit(cache=True)
def _family3_denominator(xi, omega, phi, b, tau):
    arg = 2.0 * omega * tau + phi
    if xi > 0:
        # b cos(a) - xi rewritten without cancellation for small omega
        s = math.sin(0.5 * arg)
        return -(omega * omega / (xi + b) + 2.0 * b * s * s)
    return b * math.cos(arg) - xi


def _family3_denominator_array(xi, omega, phi, b, tau):
    arg = 2.0 * omega * tau + phi
    if xi > 0:
        s = np.sin(0.5 * arg)
        return -(omega * omega / (xi + b) + 2.0 * b * s * s)
    return b * np.cos(arg) - xi


@numba.njit(cache=True)
def bias_kernel(tau, p):
    """Scalar bias for packed parameters ``p`` (see :meth:`BiasPulse.kernel_params`)."""
    code = int(p[0])
    xi = p[1]
    if code == 0:
        return xi
    if code == 1:
        return xi - 4.0 * xi / (1.0 + 4.0 * xi * xi * tau * tau)
    if code == 2:
        u2 = xi * xi * tau * tau
        return _family2(xi, u2)
    omega, phi, b = p[2], p[3], p[4]
    return xi + 2.0 * omega * omega / _family3_denominator(xi, omega, phi, b, tau)


def eval_bias(pulse: BiasPulse, tau):
    """Bias ``eps(tau)`` in units of Delta; accepts scalars or arrays."""
    p = pulse.params
    tau = np.asarray(tau, dtype=float)
    xi = p.xi
    family = pulse.effective_family
    if family is Family.CONSTANT:
        out = np.full_like(tau, xi)
    elif family is Family.FAMILY1:
        out = xi - 4.0 * xi / (1.0 + 4.0 * xi * xi * tau * tau)
    elif family is Family.FAMILY2:
        out = _family2(xi, (xi * tau) ** 2)
    else:
        den = _family3_denominator_array(xi, p.omega, p.phi, pulse.b, tau)
        out = xi + 2.0 * p.omega**2 / den
    out = np.asarray(out, dtype=float)
    return out[()] if out.ndim == 0 else out


def family3_limit_phase(xi: float, omega: float) -> float:
    """Phase for which ``family3`` reduces to ``family1`` as ``omega -> 0``."""
    _check_finite(xi=xi, omega=omega)
    b2 = xi * xi - omega * omega
    if not b2 > 0:
        raise InvalidParams(f"family3 requires b^2 = xi^2 - omega^2 > 0, got {b2:.6g}")
    b = math.sqrt(b2)
    return math.atan(omega / (2.0 * xi)) - 0.5 * math.atan(omega / b)


def pulse_range(pulse: BiasPulse) -> tuple[float, float]:
    """Infimum and supremum of ``eps`` over all real ``tau``.

    ``family1`` returns ``(-3 xi, xi)`` for ``xi > 0``; the supremum is only
    approached as ``tau -> inf``.  ``family2`` is located numerically on a
    grid of step ``1e-2 / max(|xi|, 1)`` followed by bounded refinement.
    """
    p = pulse.params
    xi = p.xi
    if p.family is Family.CONSTANT or xi == 0:
        return (xi, xi)
    if p.family is Family.FAMILY1:
        return (min(-3 * xi, xi), max(-3 * xi, xi))
    if p.family is Family.FAMILY3:
        # denominator extremes b cos = +-b, simplified with omega^2 = xi^2 - b^2
        return (-xi - 2 * pulse.b, -xi + 2 * pulse.b)
    return _family2_range(xi)


def _family2_range(xi):
    # eps is even in tau and tends to xi; scan until xi*tau = 50, where the
    # rational tail is within ~1e-3 of its limit and monotone.
    a = abs(xi)
    step = 1e-2 / max(a, 1.0)
    tau = np.arange(0.0, 50.0 / a + step, step)
    g = _family2(xi, (xi * tau) ** 2)

    def refine(sign):
        i = int(np.argmin(sign * g))
        lo, hi = tau[max(i - 1, 0)], tau[min(i + 1, len(tau) - 1)]
        if hi - lo <= 0:
            return float(g[i])
        res = minimize_scalar(
            lambda t: sign * _family2(xi, (xi * t) ** 2),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-8},
        )
        return float(sign * min(res.fun, sign * g[i]))

    lo, hi = refine(+1.0), refine(-1.0)
    return (min(lo, xi), max(hi, xi))
