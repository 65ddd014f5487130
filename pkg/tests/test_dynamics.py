import math
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dragphase import kernels
from dragphase.atmosphere import density
from dragphase.config import Environment, SatelliteParams
from dragphase.dynamics import (
    ConstellationState,
    ReentryError,
    SatState,
    angular_momentum,
    circular_cluster,
    drag_accel_tangential,
    integrate,
    propagate_interval,
    relative_speed,
    rk4_step,
    specific_energy,
    state_derivative,
)

DAY = 86400.0


def circular(env, altitude=475.0):
    r = env.r_earth + altitude
    return SatState(r, 0.0, 0.0, math.sqrt(env.mu_earth / r**3))


# -- relative speed -------------------------------------------------------


def test_relative_speed_polar_orbit_ignores_rotation():
    env = Environment(inclination=90.0)
    assert relative_speed(7000.0, 1.1e-3, env) == pytest.approx(7000.0 * 1.1e-3, abs=1e-15)


def test_relative_speed_corotating_equatorial_is_zero():
    env = Environment(inclination=0.0)
    assert relative_speed(7000.0, env.omega_earth, env) == 0.0


def test_relative_speed_hand_oracle():
    # 30-digit evaluation of 6853.137·(1.1128e-3 - 7.2921159e-5·cos 97.2°)
    got = relative_speed(6853.137, 1.1128e-3, Environment())
    assert got == pytest.approx(7.68880471990905395508524127365, rel=1e-14)


# -- drag ----------------------------------------------------------------


def test_drag_reference_state_oracle(sat, env):
    # 30-digit evaluation with the scale-height oracle in the 460-480 km bracket
    got = drag_accel_tangential(circular(env), 0.03, sat, env)
    assert got == pytest.approx(-5.02538051085277334306015117236e-10, rel=1e-12)


def test_drag_linear_in_area(sat, env):
    s = circular(env)
    assert drag_accel_tangential(s, 0.02, sat, env) == pytest.approx(
        2.0 * drag_accel_tangential(s, 0.01, sat, env), rel=1e-15
    )


def test_drag_larger_when_lower(sat, env):
    lo = SatState(env.r_earth + 400.0, 0.0, 0.0, 1.13e-3)
    hi = SatState(env.r_earth + 475.0, 0.0, 0.0, 1.13e-3)
    assert abs(drag_accel_tangential(lo, 0.02, sat, env)) > abs(drag_accel_tangential(hi, 0.02, sat, env))


def test_area_outside_envelope_rejected(sat, env):
    with pytest.raises(ValueError):
        drag_accel_tangential(circular(env), 0.5, sat, env)
    c = circular_cluster(2, 475.0, env)
    with pytest.raises(ValueError):
        propagate_interval(c, [0.01, 0.0], DAY, 10.0, sat, env)


# -- derivative ------------------------------------------------------------


def test_circular_zero_drag_has_no_radial_acceleration(sat, env):
    d = state_derivative(circular(env), 0.02, sat, env, drag=False)
    assert abs(d[1]) < 1e-18
    assert d[3] == 0.0


def test_drag_decelerates_instantaneously(sat, env):
    assert state_derivative(circular(env), 0.02, sat, env)[3] < 0.0


def _oracle_rhs(x, area, sat, env):
    r, rd, _, w = x
    rho = density(r - env.r_earth, env.atmosphere)
    v = r * (w - env.omega_earth * math.cos(math.radians(env.inclination)))
    a = -0.5 * sat.c_d / sat.mass * rho * v * v * area * 1e-6
    return np.array([rd, r * w * w - env.mu_earth / r**2, w, (-2.0 * rd * w + a) / r])


def _oracle_flow(x, h, area, sat, env, steps=20):
    x = np.array(x, dtype=float)
    dt = h / steps
    for _ in range(steps):
        k1 = _oracle_rhs(x, area, sat, env)
        k2 = _oracle_rhs(x + 0.5 * dt * k1, area, sat, env)
        k3 = _oracle_rhs(x + 0.5 * dt * k2, area, sat, env)
        k4 = _oracle_rhs(x + dt * k3, area, sat, env)
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


@pytest.mark.parametrize(
    "state",
    [
        (6853.137, 0.05, 0.3, 1.12e-3),
        (6700.0, -0.2, 10.0, 1.2e-3),
        (7100.0, 0.01, -1.0, 1.05e-3),
    ],
)
def test_derivative_matches_finite_difference(state, sat, env):
    h = 1e-3
    fwd = _oracle_flow(state, h, 0.02, sat, env)
    bwd = _oracle_flow(state, -h, 0.02, sat, env)
    fd = (fwd - bwd) / (2 * h)
    got = np.array(state_derivative(SatState(*state), 0.02, sat, env))
    assert np.allclose(got, fd, rtol=1e-6, atol=0.0)


def test_rk4_small_step_consistency(sat, env):
    r = env.r_earth + 475.0
    # every first-order increment nonzero, so each component is a real check
    s = SatState(r, 1e-6, 0.0, 1.0001 * math.sqrt(env.mu_earth / r**3))
    dt = 1e-4
    step = rk4_step(s, 0.02, dt, sat, env).as_array() - s.as_array()
    lin = dt * np.array(state_derivative(s, 0.02, sat, env))
    # θ starts at 0, so its increment is free of cancellation: strict bound
    assert abs(step[2] - lin[2]) < 1e-8 * abs(lin[2])
    # r and ω increments are resolved only to the ulp of the state itself
    ulp = np.spacing(np.abs(s.as_array()))
    assert np.all(np.abs(step - lin) <= 1e-8 * np.abs(lin) + 4 * ulp)


def test_rk4_rejects_nonpositive_step(sat, env):
    with pytest.raises(ValueError):
        rk4_step(circular(env), 0.02, 0.0, sat, env)


def test_scalar_rk4_agrees_with_batch_kernel(sat, env):
    s = SatState(env.r_earth + 475.0, 0.003, 0.2, 1.11e-3)
    x = s
    for _ in range(360):
        x = rk4_step(x, 0.02, 10.0, sat, env)
    out, _ = integrate([s.as_array()], sat.ballistic(0.02), 3600.0, 10.0, env)
    assert np.allclose(out[0], x.as_array(), rtol=1e-12, atol=1e-15)


# -- conservation ------------------------------------------------------------


@pytest.mark.parametrize("speed_factor", [1.0, 1.001, 1.01])
def test_zero_drag_orbit_conserves_and_returns(speed_factor, env):
    r0 = env.r_earth + 475.0
    s = np.array([[r0, 0.0, 0.0, speed_factor * math.sqrt(env.mu_earth / r0**3)]])
    energy = specific_energy(s, env.mu_earth)[0]
    a = -env.mu_earth / (2.0 * energy)
    period = 2.0 * math.pi * math.sqrt(a**3 / env.mu_earth)
    n = math.ceil(period / 10.0)
    out, stop = integrate(s, [0.0], period, period / n, env)
    assert stop[0] == -1
    assert abs(out[0, 0] - r0) < 1e-6
    assert abs(out[0, 1]) < 1e-9
    assert abs(specific_energy(out, env.mu_earth)[0] / energy - 1.0) < 1e-9
    assert abs(angular_momentum(out)[0] / angular_momentum(s)[0] - 1.0) < 1e-9
    assert out[0, 2] == pytest.approx(2.0 * math.pi, abs=1e-9)


def test_angular_momentum_decreases_with_drag(sat, env):
    c = circular_cluster(3, 475.0, env)
    new = propagate_interval(c, [0.01, 0.02, 0.03], DAY, 10.0, sat, env)
    assert np.all(angular_momentum(new.states) < angular_momentum(c.states))


# -- interval propagation ------------------------------------------------------


def test_drag_paradox(sat, env):
    c = circular_cluster(4, 475.0, env)
    new = propagate_interval(c, sat.area_max, DAY, 10.0, sat, env)
    assert np.all(new.r < c.r)
    assert np.all(new.omega > c.omega)
    assert new.epoch == DAY


def test_identical_inputs_identical_outputs(sat, env):
    c = circular_cluster(5, 475.0, env)
    new = propagate_interval(c, 0.02, DAY, 10.0, sat, env)
    assert np.all(new.states == new.states[0])
    again = propagate_interval(c, 0.02, DAY, 10.0, sat, env)
    assert np.array_equal(new.states, again.states)


def test_batch_equals_independent_propagations(sat, env):
    rng = np.random.default_rng(3)
    base = circular_cluster(6, 475.0, env).states.copy()
    base[:, 0] += rng.uniform(-30, 30, 6)
    base[:, 1] = rng.uniform(-1e-4, 1e-4, 6)
    base[:, 2] = rng.uniform(0, 6, 6)
    areas = rng.uniform(sat.area_min, sat.area_max, 6)
    c = ConstellationState(0.0, base)
    together = propagate_interval(c, areas, DAY, 10.0, sat, env)
    for i in range(6):
        alone = propagate_interval(ConstellationState(0.0, base[i : i + 1]), areas[i], DAY, 10.0, sat, env)
        assert np.array_equal(alone.states[0], together.states[i])


def test_monotone_actuation(sat, env):
    areas = np.linspace(sat.area_min, sat.area_max, 5)
    c = circular_cluster(5, 475.0, env)
    new = propagate_interval(c, areas, DAY, 10.0, sat, env)
    assert np.all(np.diff(new.r) < 0)
    assert np.all(np.diff(new.theta) > 0)


@settings(max_examples=20, deadline=None)
@given(
    st.floats(300, 700),
    st.floats(0.01, 0.03),
    st.floats(0.01, 0.03),
)
def test_monotone_actuation_property(altitude, a1, a2):
    sat, env = SatelliteParams(), Environment()
    lo, hi = sorted((a1, a2))
    c = circular_cluster(2, altitude, env)
    new = propagate_interval(c, [lo, hi], 6 * 3600.0, 10.0, sat, env)
    assert new.r[1] <= new.r[0]
    assert new.theta[1] >= new.theta[0]


def test_requires_whole_number_of_steps(sat, env):
    c = circular_cluster(2, 475.0, env)
    with pytest.raises(ValueError):
        propagate_interval(c, 0.02, 95.0, 10.0, sat, env)


def test_reentry_reports_satellite(sat, env):
    c = ConstellationState(0.0, [[env.r_earth + 475.0, 0, 0, 1.1e-3], [env.r_earth + 101.0, 0, 0, 1.25e-3]])
    with pytest.raises(ReentryError) as info:
        propagate_interval(c, 0.03, DAY, 10.0, sat, env)
    assert info.value.sat == 1
    assert info.value.step > 0


@pytest.mark.skipif(not kernels.NUMBA_AVAILABLE, reason="numba not installed")
def test_numba_and_numpy_paths_agree(sat, env):
    rng = np.random.default_rng(11)
    states = circular_cluster(8, 475.0, env).states.copy()
    states[:, 0] += rng.uniform(-50, 50, 8)
    states[:, 1] = rng.uniform(-1e-4, 1e-4, 8)
    k = sat.ballistic(rng.uniform(sat.area_min, sat.area_max, 8))
    atm = env.atmosphere
    args = (
        states, k, 8640, 10.0, env.mu_earth, env.atmosphere_rate, env.r_earth,
        atm.altitude, atm.log_rho, atm.log_slope, env.r_earth + 100.0, env.r_earth + 1000.0,
    )
    a, sa = kernels.propagate_numba(*args)
    b, sb = kernels.propagate_numpy(*args)
    assert np.array_equal(sa, sb)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-18)


def test_env_flag_selects_numpy(monkeypatch):
    monkeypatch.setenv("DRAGPHASE_DISABLE_NUMBA", "1")
    assert not kernels.numba_enabled()
    monkeypatch.delenv("DRAGPHASE_DISABLE_NUMBA")
    assert kernels.numba_enabled() == kernels.NUMBA_AVAILABLE
    assert "DRAGPHASE_DISABLE_NUMBA" not in os.environ
