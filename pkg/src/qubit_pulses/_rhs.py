"""Compiled right-hand sides, selected by an integer system code."""

import numba
import numpy as np

from .pulse import bias_kernel

SCHRODINGER, BLOCH, LINEAR = 0, 1, 2
SYSTEMS = {"schrodinger": SCHRODINGER, "bloch": BLOCH, "linear": LINEAR}


@numba.njit(cache=True)
def schrodinger(t, y, p):
    # y = (Re psi1, Im psi1, Re psi2, Im psi2); psi' = -i (sigma_x + eps sigma_z) psi
    e = bias_kernel(t, p)
    out = np.empty(4)
    out[0] = y[3] + e * y[1]
    out[1] = -(y[2] + e * y[0])
    out[2] = y[1] - e * y[3]
    out[3] = -(y[0] - e * y[2])
    return out


@numba.njit(cache=True)
def bloch(t, v, p):
    # p = pulse params (5) + (gamma_phi, gamma_relax, Z(0))
    e = bias_kernel(t, p)
    gp, gr, z0 = p[5], p[6], p[7]
    out = np.empty(3)
    out[0] = -2.0 * e * v[1] - gp * v[0]
    out[1] = -2.0 * v[2] + 2.0 * e * v[0] - gp * v[1]
    out[2] = 2.0 * v[1] - gr * (v[2] - z0)
    return out


@numba.njit(cache=True)
def linear(t, y, p):
    # y' = M y with M stored row-major in p
    n = y.size
    out = np.zeros(n)
    for i in range(n):
        for k in range(n):
            out[i] += p[i * n + k] * y[k]
    return out


@numba.njit(cache=True)
def rhs(system, t, y, p):
    if system == SCHRODINGER:
        return schrodinger(t, y, p)
    if system == BLOCH:
        return bloch(t, y, p)
    return linear(t, y, p)
