"""Nonlinear "truth" model: planar polar two-body motion with tangential drag.

    r''      = r ω² - μ / r²
    θ'' = ω' = (-2 r' ω + a_drag) / r
    a_drag   = -½ (C_D/m) ρ(h) |v_rel|² A,     v_rel = r (ω - ω_E cos i)

Radial drag is neglected (near-circular orbits). θ is kept unwrapped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from dragphase import kernels
from dragphase.atmosphere import density
from dragphase.config import Environment, SatelliteParams


class ReentryError(RuntimeError):
    """A satellite left the atmosphere table range during propagation."""

    def __init__(self, sat: int, step: int, altitude: float):
        super().__init__(
            f"satellite {sat} left the atmosphere range at fine step {step} "
            f"(altitude {altitude:.3f} km)"
        )
        self.sat = sat
        self.step = step
        self.altitude = altitude


@dataclass(frozen=True)
class SatState:
    r: float  # km
    r_dot: float  # km/s
    theta: float  # rad, unwrapped
    omega: float  # rad/s

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.r_dot, self.theta, self.omega])


class ConstellationState:
    """Epoch (s since start) plus an ``(N, 4)`` array of ``(r, r_dot, theta, omega)`` rows."""

    __slots__ = ("epoch", "states")

    def __init__(self, epoch: float, states):
        arr = np.array(states, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 4:
            raise ValueError(f"states must have shape (N, 4), got {arr.shape}")
        arr.setflags(write=False)
        self.epoch = float(epoch)
        self.states = arr

    @classmethod
    def from_sats(cls, epoch: float, sats) -> "ConstellationState":
        return cls(epoch, [s.as_array() for s in sats])

    @property
    def n_sats(self) -> int:
        return self.states.shape[0]

    @property
    def r(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def r_dot(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def theta(self) -> np.ndarray:
        return self.states[:, 2]

    @property
    def omega(self) -> np.ndarray:
        return self.states[:, 3]

    def sat(self, i: int) -> SatState:
        return SatState(*self.states[i].tolist())

    def sats(self) -> list[SatState]:
        return [self.sat(i) for i in range(self.n_sats)]

    def altitude(self, env: Environment) -> np.ndarray:
        return self.r - env.r_earth

    def permuted(self, order) -> "ConstellationState":
        return ConstellationState(self.epoch, self.states[np.asarray(order)])

    def __repr__(self):
        return f"ConstellationState(epoch={self.epoch}, n_sats={self.n_sats})"


def circular_cluster(n_sats: int, altitude: float, env: Environment) -> ConstellationState:
    """All satellites co-located on a circular orbit, θ = 0."""
    r0 = env.r_earth + altitude
    w0 = math.sqrt(env.mu_earth / r0**3)
    return ConstellationState(0.0, np.tile([r0, 0.0, 0.0, w0], (n_sats, 1)))


def relative_speed(r, omega, env: Environment):
    """Speed relative to the co-rotating atmosphere, r·(ω - ω_E·cos i), km/s."""
    return r * (omega - env.atmosphere_rate)


def drag_accel_tangential(s: SatState, area: float, p: SatelliteParams, env: Environment) -> float:
    _check_area(area, p)
    rho = density(s.r - env.r_earth, env.atmosphere)
    v = relative_speed(s.r, s.omega, env)
    return -p.ballistic(area) * rho * v * v


def state_derivative(s: SatState, area: float, p: SatelliteParams, env: Environment, *, drag=True):
    """Time derivative of ``s`` in field order: ``(r', r'', θ', ω')``.

    ``drag=False`` gives the two-body (ρ ≡ 0) variant; ``area`` is then ignored.
    """
    a_t = drag_accel_tangential(s, area, p, env) if drag else 0.0
    r_ddot = s.r * s.omega**2 - env.mu_earth / s.r**2
    w_dot = (-2.0 * s.r_dot * s.omega + a_t) / s.r
    return (s.r_dot, r_ddot, s.omega, w_dot)


def rk4_step(s: SatState, area: float, dt: float, p, env, *, drag=True) -> SatState:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")

    def f(x):
        return state_derivative(SatState(*x), area, p, env, drag=drag)

    x0 = (s.r, s.r_dot, s.theta, s.omega)
    k1 = f(x0)
    k2 = f([x + 0.5 * dt * k for x, k in zip(x0, k1)])
    k3 = f([x + 0.5 * dt * k for x, k in zip(x0, k2)])
    k4 = f([x + dt * k for x, k in zip(x0, k3)])
    return SatState(
        *(x + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d) for x, a, b, c, d in zip(x0, k1, k2, k3, k4))
    )


def _check_area(area, p: SatelliteParams):
    a = np.asarray(area, dtype=float)
    slack = 1e-12 * p.area_max
    if np.any(a < p.area_min - slack) or np.any(a > p.area_max + slack):
        raise ValueError(f"drag area outside [{p.area_min}, {p.area_max}] m²: {area}")


def _n_steps(dt_total: float, dt_fine: float) -> int:
    if not (dt_total > 0 and dt_fine > 0):
        raise ValueError("dt_total and dt_fine must be positive")
    ratio = dt_total / dt_fine
    n = int(round(ratio))
    if abs(ratio - n) > 1e-9 * ratio:
        raise ValueError(f"dt_total={dt_total} is not an integer multiple of dt_fine={dt_fine}")
    return n


def integrate(states, ballistic, dt_total, dt_fine, env: Environment, floor_altitude=None):
    """Low-level batch integration; returns ``(new_states, stop_step)``.

    ``floor_altitude`` defaults to the bottom of the atmosphere table.
    """
    atm = env.atmosphere
    n = _n_steps(dt_total, dt_fine)
    floor = atm.h_min if floor_altitude is None else floor_altitude
    return kernels.propagate_batch(
        np.asarray(states, dtype=float),
        np.asarray(ballistic, dtype=float),
        n,
        dt_fine,
        env.mu_earth,
        env.atmosphere_rate,
        env.r_earth,
        atm.altitude,
        atm.log_rho,
        atm.log_slope,
        env.r_earth + floor,
        env.r_earth + atm.h_max,
    )


def propagate_interval(
    c: ConstellationState, areas, dt_total: float, dt_fine: float, p: SatelliteParams, env: Environment
) -> ConstellationState:
    """Integrate every satellite with its own fixed area for ``dt_total`` seconds."""
    areas = np.broadcast_to(np.asarray(areas, dtype=float), (c.n_sats,))
    _check_area(areas, p)
    new, stop = integrate(c.states, p.ballistic(areas), dt_total, dt_fine, env)
    hit = np.flatnonzero(stop >= 0)
    if hit.size:
        i = int(hit[0])
        raise ReentryError(i, int(stop[i]), float(new[i, 0] - env.r_earth))
    return ConstellationState(c.epoch + dt_total, new)


def propagate_with_floor(
    c: ConstellationState, areas, dt_total, dt_fine, p, env, floor_altitude: float
):
    """Like :func:`propagate_interval` but stops satellites at ``floor_altitude``.

    Returns ``(state, stop_step)``; stopped satellites keep their state at the
    step where they crossed the floor.
    """
    areas = np.broadcast_to(np.asarray(areas, dtype=float), (c.n_sats,))
    _check_area(areas, p)
    floor = max(floor_altitude, env.atmosphere.h_min)
    new, stop = integrate(c.states, p.ballistic(areas), dt_total, dt_fine, env, floor)
    return ConstellationState(c.epoch + dt_total, new), stop


def specific_energy(states, mu):
    s = np.asarray(states, dtype=float)
    r, rd, w = s[..., 0], s[..., 1], s[..., 3]
    return 0.5 * (rd**2 + r**2 * w**2) - mu / r


def angular_momentum(states):
    s = np.asarray(states, dtype=float)
    return s[..., 0] ** 2 * s[..., 3]
