import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qubit_pulses import analytic
from qubit_pulses.dynamics import evolve_schrodinger
from qubit_pulses.errors import Unsupported
from qubit_pulses.pulse import Family, PulseParams, make_pulse

SQRT5 = math.sqrt(5)


class TestP1:
    def test_zero_time(self):
        assert analytic.p1_up(0.0, 0.7) == 0.0

    def test_unbiased_rabi(self):
        tau = np.linspace(0, 10, 101)
        np.testing.assert_allclose(analytic.p1_up(tau, 0.0), np.sin(tau) ** 2, atol=1e-15)

    def test_trapping_value(self):
        assert analytic.p1_up(3.0, 1 / math.sqrt(3)) == pytest.approx(9 / 13, abs=1e-12)

    def test_reduces_to_monotone_form(self):
        tau = np.linspace(0, 100, 1001)
        np.testing.assert_allclose(analytic.p1_up(tau, math.sqrt(1 / 3)), analytic.p1_up_monotone(tau), atol=1e-12)

    def test_monotone_form(self):
        assert analytic.p1_up_monotone(0.0) == 0.0
        assert analytic.p1_up_monotone(100.0) == pytest.approx(0.749944, abs=1e-6)
        assert analytic.p1_up_monotone(1e8) == pytest.approx(0.75, abs=1e-12)
        v = analytic.p1_up_monotone(np.linspace(0, 100, 10_000))
        assert np.all(np.diff(v) >= 0)

    def test_average(self):
        assert analytic.p1_avg(0.0) == 0.5
        assert analytic.p1_avg(math.sqrt(0.6)) == pytest.approx(0.78125, rel=1e-15)

    def test_average_argmax(self):
        # d p1_avg / d(xi^2) changes sign across xi^2 = 3/5
        f = lambda s: analytic.p1_avg(math.sqrt(s))
        h = 1e-6
        assert f(0.6 - h) < f(0.6) > f(0.6 + h)
        assert (f(0.6 + h) - f(0.6 - h)) / (2 * h) == pytest.approx(0.0, abs=1e-8)

    def test_asymptotic_frequency(self):
        xi = math.sqrt(0.6)
        tau = np.linspace(200, 400, 200_001)
        p = analytic.p1_up(tau, xi) - analytic.p1_avg(xi)
        crossings = np.count_nonzero(np.signbit(p[1:]) != np.signbit(p[:-1]))
        omega = math.pi * crossings / (tau[-1] - tau[0])
        assert omega == pytest.approx(4 * math.sqrt(2 / 5), rel=5e-3)


class TestQ:
    def test_unbiased(self):
        q1, q2, q3 = analytic.q_triple(np.array([0.0, 1.0, 5.0]), 0.0)
        np.testing.assert_array_equal(q1, 1.0)
        np.testing.assert_array_equal(q2, 9.0)
        np.testing.assert_array_equal(q3, 0.0)

    @pytest.mark.parametrize("x2", [1 - 2 / SQRT5, 1 + 2 / SQRT5])
    def test_q1_roots(self, x2):
        assert analytic.q_triple(1.0, math.sqrt(x2)).q1 == pytest.approx(0.0, abs=1e-14)

    def test_shapes_broadcast(self):
        q = analytic.q_triple(np.linspace(0, 1, 5)[:, None], np.array([0.5, 1.0]))
        assert all(a.shape == (5, 2) for a in q)


class TestP2:
    def test_zero_time(self):
        assert analytic.p2_up(0.0, 1.3) == 0.0

    def test_oracle_point(self):
        tr = evolve_schrodinger(make_pulse(PulseParams(Family.FAMILY2, 0.5)), 2.0, 1e-10, [2.0])
        assert analytic.p2_up(2.0, 0.5) == pytest.approx(tr.p_up[-1], abs=1e-6)

    def test_average(self):
        assert analytic.p2_avg(0.0) == 0.5
        assert analytic.p2_avg(1.0) == 0.75

    def test_average_peak(self):
        xi = np.linspace(0.5, 3, 250_001)
        v = analytic.p2_avg(xi)
        assert xi[np.argmax(v)] == pytest.approx(1.46, abs=0.01)
        assert v.max() == pytest.approx(0.91, abs=0.005)

    def test_upper_root_monotone(self):
        tau = np.linspace(0, 100, 10_000)
        v = analytic.p2_up(tau, math.sqrt(1 + 2 / SQRT5))
        assert np.all(np.diff(v) >= -1e-12)

    def test_lower_root_oscillation_free(self):
        # Q1 = 0 removes the oscillating bracket, but the smooth remainder
        # overshoots once before decaying to the average
        xi = math.sqrt(1 - 2 / SQRT5)
        tau = np.linspace(0, 100, 10_000)
        v = analytic.p2_up(tau, xi)
        d = np.sign(np.diff(v))
        d = d[d != 0]
        assert np.count_nonzero(d[1:] != d[:-1]) == 1
        assert v.max() > 0.6
        assert v[-1] == pytest.approx(analytic.p2_avg(xi), abs=1e-3)


def test_trapping_xis():
    assert analytic.trapping_xis("family1") == [pytest.approx(0.57735, abs=1e-5)]
    lo, hi = analytic.trapping_xis(Family.FAMILY2)
    assert (lo, hi) == (pytest.approx(0.32492, abs=1e-5), pytest.approx(1.37638, abs=1e-5))
    with pytest.raises(Unsupported):
        analytic.trapping_xis("family3")


@settings(max_examples=100, deadline=None)
@given(xi=st.floats(0, 5), tau=st.floats(0, 1e3))
def test_probabilities_in_unit_interval(xi, tau):
    for f in (analytic.p1_up, analytic.p2_up):
        assert -1e-12 <= f(tau, xi) <= 1 + 1e-12
    for f in (analytic.p1_avg, analytic.p2_avg):
        assert 0 <= f(xi) <= 1


def test_scalar_and_array_agree():
    tau = np.linspace(0, 5, 7)
    np.testing.assert_array_equal(analytic.p2_up(tau, 0.8), [analytic.p2_up(t, 0.8) for t in tau])
    assert isinstance(analytic.p1_up(1.0, 0.5), float)
