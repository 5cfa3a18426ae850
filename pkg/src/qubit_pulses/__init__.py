"""Driven qubit under exactly solvable time-dependent bias pulses.

The package evaluates the pulse families, their closed-form occupation
probabilities and long-time averages, and integrates the Schroedinger and
phenomenological Bloch equations to check them.
"""

from .analytic import p1_avg, p1_up, p1_up_monotone, p2_avg, p2_up, q_triple, trapping_xis
from .averaging import AverageResult, find_peak, time_average
from .dynamics import (
    BlochVector,
    DissipationRates,
    QubitAmplitudes,
    Trajectory,
    bloch_from_amplitudes,
    evolve_bloch,
    evolve_schrodinger,
    inverse_population_time,
    prob_minus,
    prob_plus,
)
from .errors import (
    InconsistentFigureParams,
    InvalidParams,
    NonFinite,
    NonFiniteState,
    NotNormalized,
    NotUnimodal,
    NumericalError,
    QubitPulseError,
    StepSizeUnderflow,
    Unsupported,
    WindowTooSmall,
)
from .pulse import (
    BiasPulse,
    Family,
    PulseParams,
    eval_bias,
    family3_limit_phase,
    make_pulse,
    params_from_b,
    pulse_range,
)

__version__ = "0.1.0"
