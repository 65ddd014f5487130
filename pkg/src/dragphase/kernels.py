"""Fixed-step RK4 propagation of many uncoupled satellites.

Two interchangeable backends integrate the planar polar equations of motion
with tangential drag:

* ``propagate_numba``: per-satellite scalar loops compiled with numba.
* ``propagate_numpy``: vectorised over satellites, Python loop over steps.

``propagate_batch`` picks numba when it is importable, unless the environment
variable ``DRAGPHASE_DISABLE_NUMBA`` is set to 1/true/yes/on.

State rows are ``(r, r_dot, theta, omega)`` in km, km/s, rad, rad/s.
``ballistic`` is ½·C_D·A/m in km²/kg per satellite; zero disables drag and the
atmosphere lookup. A satellite whose radius leaves ``[r_floor, r_ceiling]``
at the start of a step is frozen there and its step index reported in
``stop_step`` (``-1`` when it ran to completion).
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = "DRAGPHASE_DISABLE_NUMBA"

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def numba_enabled() -> bool:
    disabled = os.environ.get(_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}
    return NUMBA_AVAILABLE and not disabled


@njit(cache=True)
def _log_density(h, alt, log_rho, slope):
    n = alt.shape[0]
    # bracket search; ends extrapolate, callers keep h in range via the floor check
    lo = 0
    hi = n - 2
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if alt[mid] <= h:
            lo = mid
        else:
            hi = mid - 1
    return log_rho[lo] + (h - alt[lo]) * slope[lo]


@njit(cache=True)
def _deriv(r, rd, w, k, mu, atm_rate, r_earth, alt, log_rho, slope):
    acc_r = r * w * w - mu / (r * r)
    a_t = 0.0
    if k != 0.0:
        rho = np.exp(_log_density(r - r_earth, alt, log_rho, slope))
        v_rel = r * (w - atm_rate)
        a_t = -k * rho * v_rel * v_rel
    w_dot = (-2.0 * rd * w + a_t) / r
    return rd, acc_r, w, w_dot


@njit(cache=True)
def _propagate_numba(
    states, ballistic, n_steps, dt, mu, atm_rate, r_earth, alt, log_rho, slope, r_floor, r_ceiling
):
    n = states.shape[0]
    out = states.copy()
    stop = np.full(n, -1, dtype=np.int64)
    half = 0.5 * dt
    sixth = dt / 6.0
    for i in range(n):
        r = states[i, 0]
        rd = states[i, 1]
        th = states[i, 2]
        w = states[i, 3]
        k = ballistic[i]
        for s in range(n_steps):
            if not (r >= r_floor and r <= r_ceiling):
                stop[i] = s
                break
            a1, b1, c1, d1 = _deriv(r, rd, w, k, mu, atm_rate, r_earth, alt, log_rho, slope)
            a2, b2, c2, d2 = _deriv(
                r + half * a1, rd + half * b1, w + half * d1,
                k, mu, atm_rate, r_earth, alt, log_rho, slope,
            )
            a3, b3, c3, d3 = _deriv(
                r + half * a2, rd + half * b2, w + half * d2,
                k, mu, atm_rate, r_earth, alt, log_rho, slope,
            )
            a4, b4, c4, d4 = _deriv(
                r + dt * a3, rd + dt * b3, w + dt * d3,
                k, mu, atm_rate, r_earth, alt, log_rho, slope,
            )
            r = r + sixth * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
            rd = rd + sixth * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
            th = th + sixth * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
            w = w + sixth * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
        out[i, 0] = r
        out[i, 1] = rd
        out[i, 2] = th
        out[i, 3] = w
    return out, stop


def _deriv_numpy(r, rd, w, k, mu, atm_rate, r_earth, alt, log_rho, slope):
    acc_r = r * w * w - mu / (r * r)
    h = r - r_earth
    idx = np.clip(np.searchsorted(alt, h, side="right") - 1, 0, alt.size - 2)
    rho = np.exp(log_rho[idx] + (h - alt[idx]) * slope[idx])
    v_rel = r * (w - atm_rate)
    a_t = np.where(k != 0.0, -k * rho * v_rel * v_rel, 0.0)
    w_dot = (-2.0 * rd * w + a_t) / r
    return rd, acc_r, w, w_dot


def propagate_numpy(
    states, ballistic, n_steps, dt, mu, atm_rate, r_earth, alt, log_rho, slope, r_floor, r_ceiling
):
    states = np.asarray(states, dtype=float)
    k = np.asarray(ballistic, dtype=float)
    r, rd, th, w = (states[:, j].copy() for j in range(4))
    stop = np.full(states.shape[0], -1, dtype=np.int64)
    active = np.ones(states.shape[0], dtype=bool)
    half = 0.5 * dt
    sixth = dt / 6.0
    args = (mu, atm_rate, r_earth, alt, log_rho, slope)
    with np.errstate(over="ignore", invalid="ignore"):
        for s in range(n_steps):
            leaving = active & ~((r >= r_floor) & (r <= r_ceiling))
            if leaving.any():
                stop[leaving] = s
                active &= ~leaving
                if not active.any():
                    break
            a1, b1, c1, d1 = _deriv_numpy(r, rd, w, k, *args)
            a2, b2, c2, d2 = _deriv_numpy(r + half * a1, rd + half * b1, w + half * d1, k, *args)
            a3, b3, c3, d3 = _deriv_numpy(r + half * a2, rd + half * b2, w + half * d2, k, *args)
            a4, b4, c4, d4 = _deriv_numpy(r + dt * a3, rd + dt * b3, w + dt * d3, k, *args)
            r = np.where(active, r + sixth * (a1 + 2.0 * a2 + 2.0 * a3 + a4), r)
            rd = np.where(active, rd + sixth * (b1 + 2.0 * b2 + 2.0 * b3 + b4), rd)
            th = np.where(active, th + sixth * (c1 + 2.0 * c2 + 2.0 * c3 + c4), th)
            w = np.where(active, w + sixth * (d1 + 2.0 * d2 + 2.0 * d3 + d4), w)
    return np.stack([r, rd, th, w], axis=1), stop


def propagate_numba(
    states, ballistic, n_steps, dt, mu, atm_rate, r_earth, alt, log_rho, slope, r_floor, r_ceiling
):
    if not NUMBA_AVAILABLE:
        raise RuntimeError("numba is not installed")
    return _propagate_numba(
        np.ascontiguousarray(states, dtype=np.float64),
        np.ascontiguousarray(ballistic, dtype=np.float64),
        int(n_steps), float(dt), float(mu), float(atm_rate), float(r_earth),
        np.ascontiguousarray(alt, dtype=np.float64),
        np.ascontiguousarray(log_rho, dtype=np.float64),
        np.ascontiguousarray(slope, dtype=np.float64),
        float(r_floor), float(r_ceiling),
    )


def propagate_batch(*args):
    """Dispatch to the numba kernel or the numpy fallback (see module docstring)."""
    if numba_enabled():
        return propagate_numba(*args)
    return propagate_numpy(*args)
