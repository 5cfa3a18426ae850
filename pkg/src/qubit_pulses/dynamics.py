"""Time evolution of the qubit: pure-state Schroedinger and dissipative Bloch equations.

Units: Delta = hbar = 1, so ``H(tau) = sigma_x + eps(tau) sigma_z``.  The
density matrix is ``rho = (1 + X sigma_x + Y sigma_y + Z sigma_z) / 2`` and
the probability of the second basis state ("current up") is
``p_up = |psi_2|^2 = (1 - Z) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._integrator import IntegratorStats, integrate
from .errors import InvalidParams, NotNormalized
from .pulse import BiasPulse

__all__ = [
    "QubitAmplitudes",
    "BlochVector",
    "DissipationRates",
    "Trajectory",
    "bloch_from_amplitudes",
    "prob_plus",
    "prob_minus",
    "evolve_schrodinger",
    "evolve_bloch",
    "inverse_population_time",
]

TOL_MIN, TOL_MAX = 1e-12, 1e-4


class QubitAmplitudes(NamedTuple):
    psi1: complex
    psi2: complex


class BlochVector(NamedTuple):
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class DissipationRates:
    """Phenomenological dephasing and relaxation rates in units of Delta."""

    gamma_phi: float = 0.0
    gamma_relax: float = 0.0

    def __post_init__(self):
        for name in ("gamma_phi", "gamma_relax"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidParams(f"{name} must be finite and >= 0, got {v!r}")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution.  All columns share the ``tau`` axis.

    ``psi`` holds the complex amplitudes (shape ``(n, 2)``) for pure-state
    runs and is ``None`` for Bloch runs.
    """

    tau: np.ndarray
    epsilon: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    p_up: np.ndarray
    p_plus: np.ndarray
    stats: IntegratorStats
    psi: np.ndarray | None = None

    COLUMNS = ("tau", "epsilon", "X", "Y", "Z", "p_up", "p_plus")

    def __post_init__(self):
        for name in ("tau", "epsilon", "x", "y", "z", "p_up", "p_plus", "psi"):
            arr = getattr(self, name)
            if arr is not None:
                arr.setflags(write=False)

    def __len__(self):
        return len(self.tau)

    def as_array(self) -> np.ndarray:
        """Columns stacked as ``(n, 7)`` in :attr:`COLUMNS` order."""
        return np.column_stack([self.tau, self.epsilon, self.x, self.y, self.z, self.p_up, self.p_plus])

    def rows(self):
        return map(tuple, self.as_array().tolist())

    @property
    def norm(self) -> np.ndarray:
        if self.psi is None:
            raise AttributeError("norm is only defined for pure-state trajectories")
        return np.sum(np.abs(self.psi) ** 2, axis=1)

    @property
    def bloch_length2(self) -> np.ndarray:
        return self.x**2 + self.y**2 + self.z**2


def _bloch_arrays(psi1, psi2):
    c = psi1 * np.conj(psi2)
    return 2.0 * c.real, -2.0 * c.imag, np.abs(psi1) ** 2 - np.abs(psi2) ** 2


def bloch_from_amplitudes(psi) -> BlochVector:
    """Bloch vector of ``|psi><psi|``: ``X - iY = 2 psi_1 psi_2^*``, ``Z = |psi_1|^2 - |psi_2|^2``."""
    psi1, psi2 = complex(psi[0]), complex(psi[1])
    norm = abs(psi1) ** 2 + abs(psi2) ** 2
    if abs(norm - 1.0) > 1e-6:
        raise NotNormalized(f"|psi1|^2 + |psi2|^2 = {norm!r}, expected 1")
    x, y, z = _bloch_arrays(psi1, psi2)
    return BlochVector(float(x), float(y), float(z))


def prob_plus(bloch, epsilon):
    """Occupation of the upper energy level at bias ``epsilon``.

    Levels are labelled in the flux-qubit convention ``-(sigma_x + eps sigma_z)``,
    whose upper level is the lower eigenvector of ``sigma_x + eps sigma_z``:

        P+ = (1 - (X + eps Z) / sqrt(1 + eps^2)) / 2

    Accepts scalars or arrays.
    """
    x, _, z = bloch
    epsilon = np.asarray(epsilon, dtype=float)
    out = 0.5 * (1.0 - (np.asarray(x) + epsilon * np.asarray(z)) / np.sqrt(1.0 + epsilon**2))
    return out[()] if np.ndim(out) == 0 else out


def prob_minus(bloch, epsilon):
    """Occupation of the lower energy level; ``prob_plus + prob_minus = 1`` on the sphere."""
    x, _, z = bloch
    epsilon = np.asarray(epsilon, dtype=float)
    out = 0.5 * (1.0 + (np.asarray(x) + epsilon * np.asarray(z)) / np.sqrt(1.0 + epsilon**2))
    return out[()] if np.ndim(out) == 0 else out


def _check_run(tau_end, tol, sample_grid):
    if not (math.isfinite(tau_end) and tau_end > 0):
        raise InvalidParams(f"tau_end must be positive and finite, got {tau_end!r}")
    if not (TOL_MIN <= tol <= TOL_MAX):
        raise InvalidParams(f"tol must lie in [{TOL_MIN:g}, {TOL_MAX:g}], got {tol!r}")
    if sample_grid is None:
        return np.linspace(0.0, tau_end, 1001)
    grid = np.asarray(sample_grid, dtype=float).ravel()
    if grid.size == 0:
        return np.array([0.0])
    if not np.all(np.isfinite(grid)) or grid[0] < 0 or grid[-1] > tau_end * (1 + 1e-12):
        raise InvalidParams("sample_grid must lie within [0, tau_end]")
    if np.any(np.diff(grid) <= 0):
        raise InvalidParams("sample_grid must be strictly increasing")
    grid = np.minimum(grid, tau_end)
    if grid[0] > 0:
        grid = np.concatenate(([0.0], grid))
    return grid


def evolve_schrodinger(
    pulse: BiasPulse,
    tau_end: float,
    tol: float = 1e-9,
    sample_grid=None,
    psi0=(1.0, 0.0),
) -> Trajectory:
    """Integrate ``i psi' = (sigma_x + eps(tau) sigma_z) psi`` from ``psi0``.

    Parameters
    ----------
    pulse : BiasPulse
    tau_end : float
        Final dimensionless time.
    tol : float
        Per-step relative and absolute tolerance, in ``[1e-12, 1e-4]``.
    sample_grid : array_like, optional
        Output times in ``[0, tau_end]``; ``0`` is prepended when missing.
        Defaults to 1001 evenly spaced points.
    psi0 : pair of complex
        Initial amplitudes, must be normalized.
    """
    grid = _check_run(tau_end, tol, sample_grid)
    bloch_from_amplitudes(psi0)
    p1, p2 = complex(psi0[0]), complex(psi0[1])
    y0 = np.array([p1.real, p1.imag, p2.real, p2.imag])
    sol, _, stats = integrate("schrodinger", y0, tau_end, tol, grid, pulse.kernel_params())
    psi = sol[:, 0::2] + 1j * sol[:, 1::2]
    x, y, z = _bloch_arrays(psi[:, 0], psi[:, 1])
    epsilon = np.asarray(pulse(grid), dtype=float) * np.ones_like(grid)
    return Trajectory(
        tau=grid,
        epsilon=epsilon,
        x=x,
        y=y,
        z=z,
        p_up=np.abs(psi[:, 1]) ** 2,
        p_plus=prob_plus((x, y, z), epsilon),
        stats=stats,
        psi=psi,
    )


def evolve_bloch(
    pulse: BiasPulse,
    rates: DissipationRates = DissipationRates(),
    tau_end: float = 100.0,
    tol: float = 1e-9,
    sample_grid=None,
    initial=(0.0, 0.0, 1.0),
) -> Trajectory:
    """Integrate the phenomenological Bloch equations.

    ::

        X' = -2 eps Y - G_phi X
        Y' = -2 Z + 2 eps X - G_phi Y
        Z' =  2 Y - G_relax (Z - Z(0))

    Relaxation pulls ``Z`` back to its initial value, not to a thermal state.
    """
    grid = _check_run(tau_end, tol, sample_grid)
    x0, y0, z0 = (float(v) for v in initial)
    if x0 * x0 + y0 * y0 + z0 * z0 > 1.0 + 1e-12:
        raise InvalidParams("initial Bloch vector lies outside the unit ball")
    params = np.concatenate((pulse.kernel_params(), (rates.gamma_phi, rates.gamma_relax, z0)))
    sol, _, stats = integrate("bloch", np.array((x0, y0, z0)), tau_end, tol, grid, params)
    x, y, z = sol[:, 0], sol[:, 1], sol[:, 2]
    epsilon = np.asarray(pulse(grid), dtype=float) * np.ones_like(grid)
    return Trajectory(
        tau=grid,
        epsilon=epsilon,
        x=x,
        y=y,
        z=z,
        p_up=(1.0 - z) / 2.0,
        p_plus=prob_plus((x, y, z), epsilon),
        stats=stats,
    )


def inverse_population_time(traj: Trajectory, level: float = 0.5) -> float:
    """Total time with ``p_plus > level``, crossings located by linear interpolation."""
    dt = np.diff(traj.tau)
    d = traj.p_plus - level
    a, b = d[:-1], d[1:]
    both = (a > 0) & (b > 0)
    one = (a > 0) ^ (b > 0)
    frac = np.maximum(a[one], b[one]) / np.abs(b[one] - a[one])
    return float(dt[both].sum() + (frac * dt[one]).sum())
