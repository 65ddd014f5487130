"""Experiment drivers: horizon search, open loop, shrinking-horizon MPC, lifetime."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from dragphase.config import Environment, SatelliteParams, Scenario
from dragphase.dynamics import (
    ConstellationState,
    ReentryError,
    circular_cluster,
    propagate_interval,
    propagate_with_floor,
)
from dragphase.lp_builder import (
    LinearProgram,
    SpacingTarget,
    assemble,
    box_infeasible,
    predict_final,
    schedule_from_x,
)
from dragphase.metrics import DayRecord, PhaseReport, RunLog
from dragphase.sensitivity import ReferenceRangeError, ReferenceTrajectory, build_reference
from dragphase.simplex import LpSolution, feasibility, solve

log = logging.getLogger(__name__)


class HorizonInfeasibleError(RuntimeError):
    """No horizon up to ``horizon_max`` gives a feasible LP."""

    def __init__(self, horizon_max: int, gap: float, best_gap: float, state=None):
        super().__init__(
            f"no feasible horizon in [1, {horizon_max}] days; phase-1 gap at "
            f"{horizon_max} days = {gap:.6g}, smallest gap = {best_gap:.6g}"
        )
        self.horizon_max = horizon_max
        self.gap = gap
        self.best_gap = best_gap
        self.state = state


class ControlError(RuntimeError):
    """An LP that should have been solvable was not (carries the state snapshot)."""

    def __init__(self, message: str, state: ConstellationState | None = None):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class CommandSchedule:
    u: np.ndarray  # (N, T) areas, m²

    @property
    def horizon(self) -> int:
        return self.u.shape[1]

    def check(self, p: SatelliteParams, tol: float = 1e-9) -> None:
        span = p.area_max - p.area_min
        if np.any(self.u < p.area_min - tol * span) or np.any(self.u > p.area_max + tol * span):
            raise ValueError("command outside the area envelope")

    def clipped(self, p: SatelliteParams) -> np.ndarray:
        """Commands clipped into the envelope (removes solver round-off)."""
        return np.clip(self.u, p.area_min, p.area_max)


@dataclass
class Plan:
    lp: LinearProgram
    ref: ReferenceTrajectory
    solution: LpSolution
    schedule: CommandSchedule | None

    @property
    def horizon(self) -> int:
        return self.lp.horizon


def initial_state(scn: Scenario, env: Environment) -> ConstellationState:
    return circular_cluster(scn.n_sats, scn.altitude0, env)


def plan(c: ConstellationState, horizon: int, scn, p, env, target=None) -> Plan:
    target = target or SpacingTarget.equal_spacing(c.n_sats)
    ref = build_reference(c, horizon, p, env, scn.dt_command)
    lp = assemble(c, horizon, ref, target, scn, p)
    sol = solve(lp, scn.solver)
    sched = None
    if sol.ok:
        sched = CommandSchedule(schedule_from_x(sol.x, c.n_sats, horizon))
        sched.check(p)
    return Plan(lp, ref, sol, sched)


def predicted_drop(c: ConstellationState, pl: Plan) -> float:
    r_t, _, _ = predict_final(c, pl.ref, pl.schedule.u)
    return float(np.max(c.r - r_t))


def find_min_horizon(c0: ConstellationState, scn: Scenario, p, env, target=None) -> int:
    """Smallest feasible horizon in ``[1, horizon_max]``, scanning upward.

    Rows that cannot be met anywhere in the area box certify infeasibility
    without a phase-1 solve; no monotonicity in the horizon is assumed.
    """
    target = target or SpacingTarget.equal_spacing(c0.n_sats)
    h_max = scn.horizon_max
    try:
        ref_full = build_reference(c0, h_max, p, env, scn.dt_command)
    except ReferenceRangeError as exc:
        if exc.day == 0:
            raise
        # near reentry the reference cannot reach horizon_max
        h_max = exc.day
        ref_full = build_reference(c0, h_max, p, env, scn.dt_command)
    best = math.inf
    gap = math.inf
    for horizon in range(1, h_max + 1):
        lp = assemble(c0, horizon, ref_full.truncate(horizon), target, scn, p)
        if box_infeasible(lp, scn.solver.feas_tol) and horizon < h_max:
            continue
        ok, gap, _ = feasibility(lp, scn.solver)
        if ok:
            return horizon
        best = min(best, gap)
    raise HorizonInfeasibleError(h_max, gap, best, c0)


def _one_day_theta(c: ConstellationState, pl: Plan, scn) -> np.ndarray:
    dt = scn.dt_command
    u0 = pl.schedule.u[:, 0]
    return c.theta + dt * c.omega + 0.5 * dt**2 * pl.ref.s_omega[:, 0] * u0


def run_open_loop(c0: ConstellationState, horizon: int, scn, p, env, target=None):
    """Solve once at day 0 and apply all ``horizon`` daily commands without feedback."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    target = target or SpacingTarget.equal_spacing(c0.n_sats)
    pl = plan(c0, horizon, scn, p, env, target)
    if not pl.solution.ok:
        raise ControlError(f"open-loop LP at T={horizon} is {pl.solution.status}", c0)
    runlog = RunLog(c0, target, env.r_earth)
    u = pl.schedule.clipped(p)
    c = c0
    for k in range(horizon):
        solved = k == 0
        rec = DayRecord(
            phase="open-loop",
            areas=u[:, k].copy(),
            lp_horizon=horizon if solved else 0,
            lp_status=pl.solution.status if solved else "",
            lp_objective=pl.solution.objective if solved else math.nan,
            lp_iterations=pl.solution.iterations if solved else 0,
        )
        c = propagate_interval(c, u[:, k], scn.dt_command, scn.dt_fine, p, env)
        runlog.append(c, rec)
    rep = runlog.report("open-loop", 0, horizon=horizon, predicted_drop=predicted_drop(c0, pl))
    return runlog, rep


def run_mpc(
    c0: ConstellationState,
    horizon: int,
    scn,
    p,
    env,
    target=None,
    *,
    phase: str = "acquisition",
    runlog: RunLog | None = None,
):
    """Shrinking-horizon MPC: re-solve every day with the remaining horizon, apply day 0.

    If a re-solve turns infeasible, or the horizon runs out while the truth
    spacing errors are still outside ``eps_theta``, the remaining horizon is
    reset to the minimum feasible one from the current state (a recovery).
    Appends to ``runlog`` when given.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    target = target or SpacingTarget.equal_spacing(c0.n_sats)
    if runlog is None:
        runlog = RunLog(c0, target, env.r_earth)
    start = runlog.n_days
    c = c0
    end = horizon
    k = 0
    first_drop = math.nan
    recoveries = 0
    while k < end:
        pl = plan(c, end - k, scn, p, env, target)
        if not pl.solution.ok and k == 0:
            raise ControlError(f"{phase} LP at T={horizon} is {pl.solution.status}", c)
        if not pl.solution.ok:
            log.warning(
                "%s day %d: LP with %d-day horizon is %s; searching a new horizon",
                phase, k, end - k, pl.solution.status,
            )
            new_h = find_min_horizon(c, scn, p, env, target)
            recoveries += 1
            end = k + new_h
            pl = plan(c, new_h, scn, p, env, target)
            if not pl.solution.ok:
                raise ControlError(
                    f"{phase} day {k}: recovered horizon {new_h} still {pl.solution.status}", c
                )
        if k == 0:
            first_drop = predicted_drop(c, pl)
        u0 = pl.schedule.clipped(p)[:, 0]
        rec = DayRecord(
            phase=phase,
            areas=u0.copy(),
            lp_horizon=pl.horizon,
            lp_status=pl.solution.status,
            lp_objective=pl.solution.objective,
            lp_iterations=pl.solution.iterations,
            lp_residual=pl.solution.max_primal_residual,
            predicted_theta=_one_day_theta(c, pl, scn),
        )
        c = propagate_interval(c, u0, scn.dt_command, scn.dt_fine, p, env)
        runlog.append(c, rec)
        k += 1
        if k == end and runlog.max_spacing_error() > scn.eps_theta:
            # the plan ran out but truth is still outside the band: re-plan
            log.warning(
                "%s day %d: horizon ended with spacing error %.4g deg; searching a new horizon",
                phase, k, runlog.max_spacing_error(),
            )
            end = k + find_min_horizon(c, scn, p, env, target)
            recoveries += 1
    rep = runlog.report(
        phase, start, horizon=end, predicted_drop=first_drop, recoveries=recoveries
    )
    return runlog, rep


def run_constant_area(c0: ConstellationState, days: int, area: float, scn, p, env):
    """Baseline: every satellite held at ``area`` for ``days`` days. Returns the final state."""
    c = c0
    for _ in range(days):
        c = propagate_interval(c, area, scn.dt_command, scn.dt_fine, p, env)
    return c


def constant_area_drop(c0, days, area, scn, p, env) -> float:
    c = run_constant_area(c0, days, area, scn, p, env)
    return float(np.max(c0.r - c.r))


def constant_area_lifetime(c0, area, scn, p, env, max_days: int = 20000) -> float:
    """Days until the lowest satellite reaches ``reentry_altitude`` at fixed ``area``.

    Resolved to one fine step; ``inf`` if it survives ``max_days``.
    """
    chunk = 50
    c = c0
    day = 0
    while day < max_days:
        span = min(chunk, max_days - day)
        c, stop = propagate_with_floor(
            c, area, span * scn.dt_command, scn.dt_fine, p, env, scn.reentry_altitude
        )
        if np.any(stop >= 0):
            step = int(stop[stop >= 0].min())
            return day + step * scn.dt_fine / scn.dt_command
        day += span
    return math.inf


def run_horizon_sweep(c0, horizons, scn, p, env, target=None, runs=None):
    """MPC at each horizon; one row per horizon. Failures are recorded, not raised.

    ``runs``, when a dict, receives the ``RunLog`` of each successful horizon.
    """
    rows = []
    for horizon in horizons:
        row = {
            "horizon_days": int(horizon),
            "max_altitude_drop_km": math.nan,
            "max_spacing_error_deg": math.nan,
            "predicted_drop_km": math.nan,
            "status": "ok",
            "error": "",
        }
        try:
            runlog, rep = run_mpc(c0, int(horizon), scn, p, env, target)
        except (ControlError, HorizonInfeasibleError, ReentryError, ValueError) as exc:
            log.error("sweep T=%s failed: %s", horizon, exc)
            row["status"] = "error"
            row["error"] = f"{type(exc).__name__}: {exc}"
        else:
            row["max_altitude_drop_km"] = rep.max_altitude_drop
            row["max_spacing_error_deg"] = rep.max_spacing_error
            row["predicted_drop_km"] = rep.predicted_drop
            if runs is not None:
                runs[int(horizon)] = runlog
        rows.append(row)
    return rows


@dataclass
class LifetimeResult:
    runlog: RunLog
    reports: list[PhaseReport]
    lifetime_days: float
    reentered: bool


def run_station_keeping(runlog: RunLog, scn, p, env, max_days: int | None = None) -> RunLog:
    """Minimum-drag drift with MPC maintenance bursts, continuing ``runlog``.

    A burst starts when the largest spacing error exceeds the maintenance
    threshold; its horizon is the minimum feasible one from the current state.
    Stops when the lowest satellite is at or below ``reentry_altitude`` at a
    day boundary, or once ``max_days`` more days have been logged.
    """
    target = runlog.target
    threshold = scn.maintenance_threshold_deg
    stop_at = None if max_days is None else runlog.n_days + max_days

    def done() -> bool:
        if runlog.min_altitude() <= scn.reentry_altitude:
            return True
        return stop_at is not None and runlog.n_days >= stop_at

    drift_start = runlog.n_days
    while not done():
        c = runlog.current
        if runlog.max_spacing_error() > threshold:
            if runlog.n_days > drift_start:
                runlog.report("drift", drift_start)
            try:
                t_m = find_min_horizon(c, scn, p, env, target)
            except HorizonInfeasibleError as exc:
                raise ControlError(
                    f"maintenance LP infeasible at day {runlog.n_days}: {exc}", c
                ) from exc
            run_mpc(c, t_m, scn, p, env, target, phase="maintenance", runlog=runlog)
            drift_start = runlog.n_days
            continue
        new = propagate_interval(c, p.area_min, scn.dt_command, scn.dt_fine, p, env)
        runlog.append(new, DayRecord(phase="drift", areas=np.full(c.n_sats, p.area_min)))
    if runlog.n_days > drift_start:
        runlog.report("drift", drift_start)
    return runlog


def run_lifetime(c0: ConstellationState, scn, p, env, target=None) -> LifetimeResult:
    """Acquisition at the minimum feasible horizon, then station keeping until reentry.

    ``scn.lifetime_max_days`` caps the total number of simulated days.
    """
    target = target or SpacingTarget.equal_spacing(c0.n_sats)
    runlog = RunLog(c0, target, env.r_earth)
    t_acq = find_min_horizon(c0, scn, p, env, target)
    run_mpc(c0, t_acq, scn, p, env, target, phase="acquisition", runlog=runlog)
    remaining = None
    if scn.lifetime_max_days is not None:
        remaining = max(scn.lifetime_max_days - runlog.n_days, 0)
    run_station_keeping(runlog, scn, p, env, remaining)
    reentered = runlog.min_altitude() <= scn.reentry_altitude
    days = _reentry_time(runlog, scn, p, env) if reentered else float(runlog.n_days)
    return LifetimeResult(runlog, list(runlog.reports), days, reentered)


def _reentry_time(runlog: RunLog, scn, p, env) -> float:
    """Fractional day at which the lowest satellite first reaches ``reentry_altitude``.

    The logged day that crosses the threshold is replayed with a floor stop,
    so the result is resolved to one fine step.
    """
    k = next(j for j in range(len(runlog.states)) if runlog.min_altitude(j) <= scn.reentry_altitude)
    if k == 0:
        return 0.0
    _, stop = propagate_with_floor(
        runlog.states[k - 1], runlog.days[k - 1].areas, scn.dt_command, scn.dt_fine,
        p, env, scn.reentry_altitude,
    )
    hit = stop[stop >= 0]
    if hit.size == 0:
        return float(k)
    return k - 1 + int(hit.min()) * scn.dt_fine / scn.dt_command
