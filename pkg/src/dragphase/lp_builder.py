"""Assembly of the daily phasing linear program.

Decision vector ``x = [U, t]`` with ``U[i*T + k] = u_i(k)`` (m²) and ``t`` the
epigraph variable for ``max_U min_i r_i(T)``. General rows, in order:

    block 0  radius epigraph   -Δt S̄_R U - t            <= r(0)
    block 1  +θ spacing         Δt² D S̄_α U             <= ε_θ - D[θ(0) + Δt T ω(0)] + Δ_des
    block 2  -θ spacing        -Δt² D S̄_α U             <= ε_θ + D[θ(0) + Δt T ω(0)] - Δ_des
    block 3  +ω spacing         Δt D S̄_Ω U              <= ε_ω - D ω(0)
    block 4  -ω spacing        -Δt D S̄_Ω U              <= ε_ω + D ω(0)

Area bounds are per-variable bounds, not rows. Coefficients are built in LP
units (km, rad, days, m²) and each row is then divided by its largest
absolute coefficient; ``row_scale`` holds those divisors' reciprocals so
``a_matrix = row_scale[:, None] * A_lp_units``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from dragphase.config import SECONDS_PER_DAY, SatelliteParams, Scenario
from dragphase.dynamics import ConstellationState
from dragphase.sensitivity import ReferenceTrajectory

ROW_BLOCKS = ("radius", "theta+", "theta-", "omega+", "omega-")


@dataclass(frozen=True, eq=False)
class SpacingTarget:
    d_matrix: np.ndarray
    delta_des: np.ndarray

    @classmethod
    def equal_spacing(cls, n: int) -> "SpacingTarget":
        if n < 2:
            raise ValueError("need at least two satellites")
        d = np.eye(n) - np.roll(np.eye(n), 1, axis=1)
        delta = np.full(n, 2.0 * math.pi / n)
        delta[-1] = -2.0 * math.pi * (n - 1) / n
        return cls(d, delta)

    def __post_init__(self):
        d = self.d_matrix
        if np.any((d == 1).sum(axis=1) != 1) or np.any((d == -1).sum(axis=1) != 1):
            raise ValueError("each D row needs exactly one +1 and one -1")
        if np.any(d.sum(axis=1) != 0):
            raise ValueError("D rows must sum to zero")
        if abs(self.delta_des.sum()) > 1e-9:
            raise ValueError("desired spacings must sum to zero")

    @property
    def n_sats(self) -> int:
        return self.delta_des.size


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``min cost·x  s.t.  a_matrix x <= b,  lower <= x <= upper``."""

    cost: np.ndarray
    a_matrix: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    row_scale: np.ndarray = field(default=None)
    n_sats: int = 0
    horizon: int = 0

    def __post_init__(self):
        m, n = self.a_matrix.shape
        if self.cost.shape != (n,) or self.b.shape != (m,):
            raise ValueError("cost/b dimensions do not match a_matrix")
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("bounds dimensions do not match a_matrix")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")
        if self.row_scale is None:
            object.__setattr__(self, "row_scale", np.ones(m))

    @property
    def shape(self) -> tuple[int, int]:
        return self.a_matrix.shape

    def block(self, name: str) -> slice:
        n = self.n_sats
        j = ROW_BLOCKS.index(name)
        return slice(j * n, (j + 1) * n)

    def unscaled(self) -> tuple[np.ndarray, np.ndarray]:
        """``(A, b)`` in LP units, before row equilibration."""
        return self.a_matrix / self.row_scale[:, None], self.b / self.row_scale

    def residuals(self, x, *, scaled=False) -> np.ndarray:
        """``A x - b`` per row; non-positive means satisfied."""
        if scaled:
            return self.a_matrix @ x - self.b
        a, b = self.unscaled()
        return a @ x - b


def build_s_bar(ref: ReferenceTrajectory):
    """Block-diagonal ``(S̄_R, S̄_Ω, S̄_α)``, each ``N × N·T``, in the reference's units.

    Row ``i`` holds satellite ``i``'s per-day coefficients in columns
    ``i*T .. i*T+T-1``; S̄_α weights day ``k`` by ``T - k - ½``.
    """
    n, horizon = ref.n_sats, ref.horizon
    weights = (horizon - 0.5) - np.arange(horizon)
    s_r = np.zeros((n, n * horizon))
    s_w = np.zeros((n, n * horizon))
    s_a = np.zeros((n, n * horizon))
    for i in range(n):
        cols = slice(i * horizon, (i + 1) * horizon)
        s_r[i, cols] = ref.s_r[i]
        s_w[i, cols] = ref.s_omega[i]
        s_a[i, cols] = weights * ref.s_omega[i]
    return s_r, s_w, s_a


def assemble(
    c0: ConstellationState,
    horizon: int,
    ref: ReferenceTrajectory,
    target: SpacingTarget,
    scn: Scenario,
    p: SatelliteParams,
    *,
    equilibrate: bool = True,
) -> LinearProgram:
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if ref.horizon != horizon:
        ref = ref.truncate(horizon)
    n = c0.n_sats
    if ref.n_sats != n or target.n_sats != n:
        raise ValueError("state, reference and target disagree on the number of satellites")

    day = SECONDS_PER_DAY
    dt = ref.dt / day
    s_r, s_w, s_a = build_s_bar(ref)
    s_r = s_r * day  # km / (m² day)
    s_w = s_w * day**2  # rad / (m² day²)
    s_a = s_a * day**2
    d = target.d_matrix
    r0 = c0.r
    w0 = c0.omega * day  # rad/day
    eps_theta = scn.eps_theta_rad
    eps_omega = scn.eps_omega * day

    n_u = n * horizon
    theta_drift = d @ (c0.theta + dt * horizon * w0)
    theta_rows = dt**2 * (d @ s_a)
    omega_rows = dt * (d @ s_w)

    a = np.zeros((5 * n, n_u + 1))
    a[0:n, :n_u] = -dt * s_r
    a[0:n, n_u] = -1.0
    a[n : 2 * n, :n_u] = theta_rows
    a[2 * n : 3 * n, :n_u] = -theta_rows
    a[3 * n : 4 * n, :n_u] = omega_rows
    a[4 * n : 5 * n, :n_u] = -omega_rows
    b = np.concatenate(
        [
            r0,
            eps_theta - theta_drift + target.delta_des,
            eps_theta + theta_drift - target.delta_des,
            eps_omega - d @ w0,
            eps_omega + d @ w0,
        ]
    )

    if equilibrate:
        peak = np.abs(a).max(axis=1)
        scale = np.where(peak > 0, 1.0 / np.where(peak > 0, peak, 1.0), 1.0)
    else:
        scale = np.ones(5 * n)
    cost = np.zeros(n_u + 1)
    cost[-1] = 1.0
    lower = np.concatenate([np.full(n_u, p.area_min), [-np.inf]])
    upper = np.concatenate([np.full(n_u, p.area_max), [np.inf]])
    return LinearProgram(
        cost=cost,
        a_matrix=a * scale[:, None],
        b=b * scale,
        lower=lower,
        upper=upper,
        row_scale=scale,
        n_sats=n,
        horizon=horizon,
    )


def schedule_from_x(x, n_sats: int, horizon: int) -> np.ndarray:
    """Area commands as an ``(N, T)`` array from an LP solution vector."""
    return np.asarray(x[: n_sats * horizon]).reshape(n_sats, horizon)


def predict_final(c0: ConstellationState, ref: ReferenceTrajectory, u) -> tuple:
    """Matrix-form linear prediction of ``(r(T), ω(T), θ(T))`` in km, rad/s, rad."""
    s_r, s_w, s_a = build_s_bar(ref)
    flat = np.asarray(u, dtype=float).reshape(-1)
    dt, horizon = ref.dt, ref.horizon
    r_t = c0.r + dt * (s_r @ flat)
    w_t = c0.omega + dt * (s_w @ flat)
    th_t = c0.theta + dt * horizon * c0.omega + dt**2 * (s_a @ flat)
    return r_t, w_t, th_t


def box_infeasible(lp: LinearProgram, tol: float = 1e-9) -> bool:
    """True if some row cannot be met anywhere in the variable box.

    A sound certificate of infeasibility that ignores row interactions.
    """
    a, b = lp.a_matrix, lp.b
    lo = np.where(a > 0, lp.lower, lp.upper)
    with np.errstate(invalid="ignore"):
        terms = np.where(a != 0, a * lo, 0.0)
    row_min = terms.sum(axis=1)
    return bool(np.any(row_min > b + tol))


def write_lp(lp: LinearProgram, path) -> None:
    """Plain-text dump (see ``docs/lp_format.md``)."""
    fmt = lambda v: format(float(v), ".17g")  # noqa: E731
    m, n = lp.shape
    with open(path, "w") as fh:
        fh.write(f"# dragphase-lp 1 rows={m} cols={n} n_sats={lp.n_sats} horizon={lp.horizon}\n")
        fh.write("minimize " + " ".join(fmt(v) for v in lp.cost) + "\n")
        for i in range(m):
            row = " ".join(fmt(v) for v in lp.a_matrix[i])
            fh.write(f"row {row} <= {fmt(lp.b[i])}\n")
        for j in range(n):
            fh.write(f"bound {j} {fmt(lp.lower[j])} {fmt(lp.upper[j])}\n")
        fh.write("scale " + " ".join(fmt(v) for v in lp.row_scale) + "\n")


def read_lp(path) -> LinearProgram:
    cost = None
    rows, rhs = [], []
    lower, upper = {}, {}
    scale = None
    meta = {}
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            tag = parts[0]
            if tag == "#":
                meta = dict(kv.split("=") for kv in parts[3:])
            elif tag == "minimize":
                cost = np.array(parts[1:], dtype=float)
            elif tag == "row":
                if parts[-2] != "<=":
                    raise ValueError(f"unsupported row sense {parts[-2]!r}")
                rows.append(np.array(parts[1:-2], dtype=float))
                rhs.append(float(parts[-1]))
            elif tag == "bound":
                lower[int(parts[1])] = float(parts[2])
                upper[int(parts[1])] = float(parts[3])
            elif tag == "scale":
                scale = np.array(parts[1:], dtype=float)
            else:
                raise ValueError(f"unknown LP dump line tag {tag!r}")
    n = cost.size
    return LinearProgram(
        cost=cost,
        a_matrix=np.array(rows).reshape(len(rows), n),
        b=np.array(rhs),
        lower=np.array([lower[j] for j in range(n)]),
        upper=np.array([upper[j] for j in range(n)]),
        row_scale=scale,
        n_sats=int(meta.get("n_sats", 0)),
        horizon=int(meta.get("horizon", 0)),
    )
