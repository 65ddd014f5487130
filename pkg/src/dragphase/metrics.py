"""Run logs, spacing metrics and CSV output."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from dragphase.dynamics import ConstellationState
from dragphase.lp_builder import SpacingTarget


def spacing_errors(theta, target: SpacingTarget) -> np.ndarray:
    """``D θ - Δ_des`` in degrees; the last entry is the wrap-around pair (N, 1)."""
    return np.degrees(target.d_matrix @ np.asarray(theta, dtype=float) - target.delta_des)


@dataclass
class PhaseReport:
    phase: str  # acquisition | drift | maintenance | open-loop
    start_day: int
    end_day: int
    start_epoch: float
    end_epoch: float
    max_spacing_error: float  # deg, max |error| at phase end
    max_altitude_drop: float  # km, max_i r_i(start) - r_i(end)
    n_solves: int = 0
    total_iterations: int = 0
    statuses: dict = field(default_factory=dict)
    horizon: int = 0
    predicted_drop: float = math.nan  # km, from the first LP of the phase
    recoveries: int = 0

    @property
    def days(self) -> int:
        return self.end_day - self.start_day


@dataclass
class DayRecord:
    phase: str
    areas: np.ndarray
    lp_horizon: int = 0
    lp_status: str = ""
    lp_objective: float = math.nan
    lp_iterations: int = 0
    lp_residual: float = math.nan  # max primal residual, equilibrated units
    predicted_theta: np.ndarray | None = None  # one-day linear prediction, rad


class RunLog:
    """Daily truth states plus what was applied and solved on each day.

    ``states[k]`` is the constellation at the start of day ``k``;
    ``days[k]`` describes the transition from day ``k`` to ``k + 1``.
    """

    def __init__(self, initial: ConstellationState, target: SpacingTarget, r_earth: float):
        self.target = target
        self.r_earth = r_earth
        self.states: list[ConstellationState] = [initial]
        self.days: list[DayRecord] = []
        self.reports: list[PhaseReport] = []

    @property
    def n_sats(self) -> int:
        return self.states[0].n_sats

    @property
    def n_days(self) -> int:
        return len(self.days)

    @property
    def current(self) -> ConstellationState:
        return self.states[-1]

    def append(self, new_state: ConstellationState, record: DayRecord) -> None:
        self.states.append(new_state)
        self.days.append(record)

    def spacing_errors(self, k: int = -1) -> np.ndarray:
        return spacing_errors(self.states[k].theta, self.target)

    def max_spacing_error(self, k: int = -1) -> float:
        return float(np.abs(self.spacing_errors(k)).max())

    def min_altitude(self, k: int = -1) -> float:
        return float(self.states[k].r.min() - self.r_earth)

    def report(self, phase: str, start: int, end: int | None = None, **extra) -> PhaseReport:
        """Build (and keep) the phase summary for days ``start..end``."""
        end = self.n_days if end is None else end
        s0, s1 = self.states[start], self.states[end]
        recs = self.days[start:end]
        statuses: dict[str, int] = {}
        for rec in recs:
            if rec.lp_status:
                statuses[rec.lp_status] = statuses.get(rec.lp_status, 0) + 1
        rep = PhaseReport(
            phase=phase,
            start_day=start,
            end_day=end,
            start_epoch=s0.epoch,
            end_epoch=s1.epoch,
            max_spacing_error=self.max_spacing_error(end),
            max_altitude_drop=float(np.max(s0.r - s1.r)),
            n_solves=sum(statuses.values()),
            total_iterations=sum(r.lp_iterations for r in recs),
            statuses=statuses,
            **extra,
        )
        self.reports.append(rep)
        return rep


def _f(v) -> str:
    return format(float(v), ".17g")


def write_run_csv(log: RunLog | None, out_dir) -> list[Path]:
    """Write ``states.csv``, ``spacing.csv``, ``daily.csv`` and ``summary.csv``.

    ``None`` (an empty log) produces header-only files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / name for name in ("states.csv", "spacing.csv", "daily.csv", "summary.csv")]
    states_p, spacing_p, daily_p, summary_p = paths

    with open(states_p, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "sat", "r_km", "omega_rad_s", "theta_rad", "area_m2"])
        if log is not None:
            for k, st in enumerate(log.states):
                areas = log.days[k].areas if k < log.n_days else np.full(st.n_sats, math.nan)
                for i in range(st.n_sats):
                    w.writerow([k, i, _f(st.r[i]), _f(st.omega[i]), _f(st.theta[i]), _f(areas[i])])

    with open(spacing_p, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "pair", "error_deg"])
        if log is not None:
            for k in range(len(log.states)):
                for j, e in enumerate(log.spacing_errors(k)):
                    w.writerow([k, j, _f(e)])

    with open(daily_p, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            [
                "day",
                "phase",
                "min_altitude_km",
                "max_abs_spacing_error_deg",
                "lp_horizon",
                "lp_status",
                "lp_objective",
                "lp_iterations",
            ]
        )
        if log is not None:
            for k in range(len(log.states)):
                rec = log.days[k] if k < log.n_days else None
                w.writerow(
                    [
                        k,
                        rec.phase if rec else "",
                        _f(log.min_altitude(k)),
                        _f(log.max_spacing_error(k)),
                        rec.lp_horizon if rec else 0,
                        rec.lp_status if rec else "",
                        _f(rec.lp_objective) if rec else _f(math.nan),
                        rec.lp_iterations if rec else 0,
                    ]
                )

    with open(summary_p, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            [
                "phase",
                "start_day",
                "end_day",
                "horizon_days",
                "max_spacing_error_deg",
                "max_altitude_drop_km",
                "predicted_drop_km",
                "n_solves",
                "total_iterations",
                "recoveries",
            ]
        )
        if log is not None:
            for rep in log.reports:
                w.writerow(
                    [
                        rep.phase,
                        rep.start_day,
                        rep.end_day,
                        rep.horizon,
                        _f(rep.max_spacing_error),
                        _f(rep.max_altitude_drop),
                        _f(rep.predicted_drop),
                        rep.n_solves,
                        rep.total_iterations,
                        rep.recoveries,
                    ]
                )
    return paths


def read_states_csv(path):
    """Parse ``states.csv`` into ``(day, sat, values)`` with ``values`` of shape (rows, 4)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    day = np.array([int(r[0]) for r in rows], dtype=int)
    sat = np.array([int(r[1]) for r in rows], dtype=int)
    vals = np.array([[float(v) for v in r[2:]] for r in rows], dtype=float).reshape(-1, 4)
    return day, sat, vals
