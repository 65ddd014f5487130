"""Drag sensitivities of radius and angular rate, and minimum-drag references.

For a near-circular orbit the orbit-averaged rates per unit drag area are

    dr/dt = S_R · A,   S_R = -(C_D/m) ρ |v_rel|² √(r³/μ)
    dω/dt = S_Ω · A,   S_Ω = (3/2)(C_D/m) ρ |v_rel|² / r

(units: km/(m²·s) and rad/(m²·s²)). The daily linear model is

    r(k+1) = r(k) + Δt S_R u(k)
    ω(k+1) = ω(k) + Δt S_Ω u(k)
    θ(k+1) = θ(k) + Δt ω(k) + ½ Δt² S_Ω u(k)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dragphase.atmosphere import AltitudeRangeError, density
from dragphase.config import M2_TO_KM2, Environment, SatelliteParams
from dragphase.dynamics import ConstellationState, relative_speed


def _drag_scale(r, omega, p: SatelliteParams, env: Environment):
    rho = density(np.asarray(r) - env.r_earth, env.atmosphere)
    v = relative_speed(np.asarray(r), np.asarray(omega), env)
    return p.c_d / p.mass * rho * v * v * M2_TO_KM2


def s_radius(r, omega, p: SatelliteParams, env: Environment):
    out = -_drag_scale(r, omega, p, env) * np.sqrt(np.asarray(r) ** 3 / env.mu_earth)
    return float(out) if np.ndim(out) == 0 else out


def s_omega(r, omega, p: SatelliteParams, env: Environment):
    out = 1.5 * _drag_scale(r, omega, p, env) / np.asarray(r)
    return float(out) if np.ndim(out) == 0 else out


class ReferenceRangeError(AltitudeRangeError):
    """The minimum-drag reference leaves the atmosphere table on day ``day``.

    Horizons up to ``day`` are still buildable.
    """

    def __init__(self, day: int, exc: AltitudeRangeError):
        super().__init__(exc.h, *exc.bounds)
        self.args = (f"reference leaves the atmosphere table on day {day}: {exc}",)
        self.day = day


@dataclass(frozen=True, eq=False)
class ReferenceTrajectory:
    """Minimum-drag reference, ``(N, T)`` arrays indexed ``[sat, day]``."""

    r_bar: np.ndarray  # km
    omega_bar: np.ndarray  # rad/s
    s_r: np.ndarray  # km / (m² s)
    s_omega: np.ndarray  # rad / (m² s²)
    dt: float  # s, one command interval

    @property
    def n_sats(self) -> int:
        return self.r_bar.shape[0]

    @property
    def horizon(self) -> int:
        return self.r_bar.shape[1]

    def truncate(self, horizon: int) -> "ReferenceTrajectory":
        """The first ``horizon`` days; the recursion does not depend on the total length."""
        if not 1 <= horizon <= self.horizon:
            raise ValueError(f"horizon {horizon} outside [1, {self.horizon}]")
        sl = np.s_[:, :horizon]
        return ReferenceTrajectory(
            self.r_bar[sl], self.omega_bar[sl], self.s_r[sl], self.s_omega[sl], self.dt
        )


def build_reference(
    c0: ConstellationState, horizon: int, p: SatelliteParams, env: Environment, dt: float
) -> ReferenceTrajectory:
    """Iterate the daily linear model at ``u = area_min`` from each satellite's state."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    n = c0.n_sats
    r_bar = np.empty((n, horizon))
    w_bar = np.empty((n, horizon))
    s_r = np.empty((n, horizon))
    s_w = np.empty((n, horizon))
    r = c0.r.copy()
    w = c0.omega.copy()
    for k in range(horizon):
        r_bar[:, k] = r
        w_bar[:, k] = w
        try:
            s_r[:, k] = s_radius(r, w, p, env)
            s_w[:, k] = s_omega(r, w, p, env)
        except AltitudeRangeError as exc:
            raise ReferenceRangeError(k, exc) from None
        r = r + dt * s_r[:, k] * p.area_min
        w = w + dt * s_w[:, k] * p.area_min
    return ReferenceTrajectory(r_bar, w_bar, s_r, s_w, float(dt))
