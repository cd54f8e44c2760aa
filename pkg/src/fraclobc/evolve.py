"""Monotone explicit time stepping for u_t + (-Delta)^s u = |Du|^p with
zero exterior data, boundary-trace monitoring and LOBC detection, and the
ordinary-differential-inequality machinery for the eigenfunction method.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .barrier import validate_exponents
from .core import Grid, GridFunction, extend_to_grid
from .errors import BoundsViolated, InsufficientData, StepCollapse
from .fraclap import FracLapOperator, apply_values
from .spectral import EigenPair, inverse_power_integral

MONITOR_COLUMNS = (
    "t", "z", "trace_left", "trace_right", "sup_norm", "lip_estimate", "dt",
)


@dataclass(frozen=True)
class SolverConfig:
    s: float
    p: float
    n: int
    T: float
    cfl_safety: float = 0.9
    lobc_threshold: float = 0.05      # fraction of ||u0||_inf
    record_every: int = 100           # snapshot cadence in steps
    lobc_fit_nodes: int = 8
    lobc_persistence: int = 10
    disable_gradient: bool = False
    stop_on_lobc: bool = False
    max_steps: int = 5_000_000
    # run the inf/sup-convolution pipeline on the snapshot series before
    # the dz/dt fit (for when h-level noise dominates the monitors)
    regularize_for_zdot: bool = False
    reg_scale: float = 0.01
    zone: str = field(init=False)

    def __post_init__(self):
        if not (0 < self.cfl_safety <= 1):
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.T <= 0 or self.n < 3 or self.p <= 1:
            raise ValueError("need T > 0, n >= 3, p > 1")
        object.__setattr__(
            self, "zone", validate_exponents(self.s, self.p).zone
        )


@dataclass(frozen=True)
class OdeWitness:
    """Closed-form blow-up certificate for dy/dt >= C y^p, y(t0) = M0."""

    t0: float
    t1: float
    C: float
    M0: float
    blowup_time: float


def ode_blowup(C: float, p: float, M0: float, t0: float = 0.0) -> OdeWitness:
    if C <= 0 or M0 <= 0 or p <= 1:
        raise ValueError("need C > 0, M0 > 0, p > 1")
    t_star = t0 + M0 ** (1.0 - p) / (C * (p - 1.0))
    return OdeWitness(t0=t0, t1=t_star, C=C, M0=M0, blowup_time=t_star)


def godunov_slopes(values: np.ndarray, h: float) -> np.ndarray:
    """Monotone slope field G_i = max((u_{i-1}-u_i)_+, (u_{i+1}-u_i)_+)/h
    with virtual zero values at both endpoints."""
    padded = np.concatenate(([0.0], values, [0.0]))
    left = np.maximum(padded[:-2] - padded[1:-1], 0.0)
    right = np.maximum(padded[2:] - padded[1:-1], 0.0)
    return np.maximum(left, right) / h


def godunov_gradient_term(u: GridFunction, i: int, p: float) -> float:
    """G_i^p at one node (nondecreasing in the neighbors, nonincreasing
    in u_i, which is what makes the explicit update monotone)."""
    if not (0 <= i < u.grid.n):
        raise IndexError(f"node index {i} out of range")
    if p <= 1:
        raise ValueError("p must exceed 1")
    return float(godunov_slopes(u.values, u.grid.h)[i] ** p)


def _trace_fit_vector(grid: Grid, s: float, k: int) -> np.ndarray:
    """Row of the least-squares pseudo-inverse giving the intercept of
    u ~ tau + c d^s on the k nodes nearest one boundary."""
    d = grid.h * np.arange(1, k + 1)
    X = np.column_stack([np.ones(k), d**s])
    return np.linalg.pinv(X)[0]


def lobc_trace(u: GridFunction, side: str, k: int = 8, s: float = 0.75) -> float:
    """Boundary-trace intercept tau of the fit u ~ tau + c d^s on the k
    nodes nearest the given boundary; tau near 0 means classical
    attainment of the boundary data."""
    if k < 2 or k > u.grid.n:
        raise ValueError("need 2 <= k <= n")
    v = _trace_fit_vector(u.grid, s, k)
    vals = u.values[:k] if side == "left" else u.values[::-1][:k]
    return float(v @ vals)


@dataclass
class Trajectory:
    config: SolverConfig
    grid: Grid
    snapshots: list              # [(t, GridFunction), ...]
    monitors: dict               # column name -> np.ndarray
    lobc_time: Optional[float]
    collapse_time: Optional[float]
    u0_sup: float
    eigen: EigenPair
    steps: int
    budget_exhausted: bool = False


def step(
    u: GridFunction,
    op: FracLapOperator,
    cfg: SolverConfig,
    dt: float | None = None,
) -> tuple[GridFunction, float]:
    """One explicit monotone Euler step; returns (u_next, dt).

    The time step keeps the update nondecreasing in every input value:
    dt <= cfl / (max diagonal + p L^{p-1} / h) with L the current
    one-sided slope bound.  Raises StepCollapse when that step underflows
    the horizon-relative floor (gradient blow-up surrogate).  Passing
    ``dt`` overrides the choice (used by ordered-pair comparison tests,
    which need a common step).
    """
    h = u.grid.h
    G = godunov_slopes(u.values, h)
    if dt is None:
        dt = _monotone_dt(op, cfg, G, h)
        if dt < _dt_floor(cfg):
            raise StepCollapse(f"dt = {dt:g} underflowed the floor")
    rhs = -apply_values(op, u.values)
    if not cfg.disable_gradient:
        rhs = rhs + G**cfg.p
    return GridFunction(u.grid, u.values + dt * rhs), dt


def _dt_floor(cfg: SolverConfig) -> float:
    return max(cfg.T * 1e-15, 1e-300)


def _monotone_dt(op, cfg, G, h):
    L = float(np.max(G))
    denom = float(np.max(op._row_diagonal))
    if not cfg.disable_gradient and L > 0:
        denom += cfg.p * L ** (cfg.p - 1.0) / h
    return cfg.cfl_safety / denom


def run(u0: GridFunction, cfg: SolverConfig, eigen: EigenPair,
        op: FracLapOperator | None = None) -> Trajectory:
    """March to T (or StepCollapse / step budget), recording monitors at
    every accepted step and snapshots every ``record_every`` steps.

    LOBC is declared at the first time a boundary-trace intercept exceeds
    lobc_threshold * ||u0||_inf for ``lobc_persistence`` consecutive
    records; the run is tagged with that onset time.
    """
    if np.any(u0.values < 0):
        raise ValueError("initial data must be nonnegative")
    from .fraclap import assemble  # local import to avoid cycle at module load

    grid = u0.grid
    if op is None:
        op = assemble(grid, cfg.s)
    h = grid.h
    M = float(np.max(u0.values))
    dt_floor = _dt_floor(cfg)

    phi = extend_to_grid(eigen.phi1, grid).values
    fit_vec = _trace_fit_vector(grid, cfg.s, cfg.lobc_fit_nodes)
    k_fit = cfg.lobc_fit_nodes

    # index range of the eigen subdomain inside the run grid
    k_eta = int(round((eigen.phi1.grid.domain.a - grid.domain.a) / h))
    sl_eta = slice(k_eta, grid.n - k_eta)
    phi_eta = eigen.phi1.values
    if phi_eta.size != grid.n - 2 * k_eta:
        raise ValueError("eigen grid does not nest inside the run grid")

    mon = {c: [] for c in MONITOR_COLUMNS}
    extras = {c: [] for c in
              ("eta_l1", "eta_tv", "eta_edge", "grad_l1", "gradp_phi")}
    snapshots = [(0.0, u0)]
    u = u0.values.copy()
    t = 0.0
    lobc_time = None
    collapse_time = None
    streak = 0
    streak_start = None
    steps = 0
    budget_exhausted = False

    def record(dt_used):
        zval = h * float(u @ phi)
        tl = float(fit_vec @ u[:k_fit])
        tr = float(fit_vec @ u[::-1][:k_fit])
        G = godunov_slopes(u, h)
        mon["t"].append(t)
        mon["z"].append(zval)
        mon["trace_left"].append(tl)
        mon["trace_right"].append(tr)
        mon["sup_norm"].append(float(np.max(np.abs(u))))
        mon["lip_estimate"].append(float(np.max(G)))
        mon["dt"].append(dt_used)
        ue = u[sl_eta]
        extras["eta_l1"].append(h * float(np.sum(np.abs(ue))))
        extras["eta_tv"].append(float(np.sum(np.abs(np.diff(ue)))))
        extras["eta_edge"].append(float(max(abs(ue[0]), abs(ue[-1]))))
        padded = np.concatenate(([0.0], u, [0.0]))
        gc = np.abs((padded[2:] - padded[:-2]) / (2 * h))[sl_eta]
        extras["grad_l1"].append(h * float(np.sum(gc)))
        extras["gradp_phi"].append(h * float(np.sum(gc**cfg.p * phi_eta)))
        return tl, tr

    record(0.0)

    while t < cfg.T and steps < cfg.max_steps:
        G = godunov_slopes(u, h)
        dt = min(_monotone_dt(op, cfg, G, h), cfg.T - t)
        if dt < dt_floor:
            collapse_time = t
            break
        rhs = -apply_values(op, u)
        if not cfg.disable_gradient:
            rhs = rhs + G**cfg.p
        u_new = u + dt * rhs
        tol = 1e-9 * max(M, 1.0)
        if np.min(u_new) < -tol or np.max(u_new) > M + tol:
            raise BoundsViolated(
                f"u left [0, {M}] at t={t + dt}: "
                f"range [{np.min(u_new)}, {np.max(u_new)}]"
            )
        u = np.clip(u_new, 0.0, M)
        t += dt
        steps += 1
        tl, tr = record(dt)

        if max(tl, tr) > cfg.lobc_threshold * M:
            if streak == 0:
                streak_start = t
            streak += 1
            if streak >= cfg.lobc_persistence and lobc_time is None:
                lobc_time = streak_start
                if cfg.stop_on_lobc:
                    break
        else:
            streak = 0
            streak_start = None

        if steps % cfg.record_every == 0:
            snapshots.append((t, GridFunction(grid, u)))
    else:
        if steps >= cfg.max_steps:
            budget_exhausted = True

    if not snapshots or snapshots[-1][0] < t:
        snapshots.append((t, GridFunction(grid, u)))

    monitors = {c: np.asarray(v) for c, v in mon.items()}
    monitors.update({c: np.asarray(v) for c, v in extras.items()})
    return Trajectory(
        config=cfg,
        grid=grid,
        snapshots=snapshots,
        monitors=monitors,
        lobc_time=lobc_time,
        collapse_time=collapse_time,
        u0_sup=M,
        eigen=eigen,
        steps=steps,
        budget_exhausted=budget_exhausted,
    )


@dataclass(frozen=True)
class ZdotReport:
    """Fit of dz/dt >= -lambda1 z + C5 z^p - slack plus the per-record
    Hoelder and Poincare intermediate inequalities."""

    C5: float
    slack: float
    degenerate: bool
    n_records: int
    holder_ok: bool
    poincare_ok: bool
    holder_margin: float     # min (rhs - lhs) over records
    poincare_margin: float
    segment: tuple[int, int]  # record range used for the fit


def _regularized_series(traj: Trajectory, eigen: EigenPair):
    """Monitor-equivalent series rebuilt from the inf/sup-regularized
    snapshot fields (the config toggle regularize_for_zdot)."""
    from .regularize import RegParams, SpaceTimeFunction, double_regularize

    times = np.array([t for t, _ in traj.snapshots])
    keep = np.concatenate(([True], np.diff(times) > 0))
    vals = np.array([u.values for _, u in traj.snapshots])[keep]
    times = times[keep]
    if times.size < 3:
        raise InsufficientData("too few snapshots to regularize")
    f = SpaceTimeFunction(traj.grid, times, vals)
    scale = traj.config.reg_scale
    w = double_regularize(f, RegParams(scale, scale, scale / 2))

    grid = traj.grid
    h = grid.h
    phi = extend_to_grid(eigen.phi1, grid).values
    k_eta = int(round((eigen.phi1.grid.domain.a - grid.domain.a) / h))
    sl = slice(k_eta, grid.n - k_eta)
    phi_eta = eigen.phi1.values
    cols = {c: [] for c in
            ("t", "z", "eta_l1", "eta_tv", "eta_edge", "grad_l1",
             "gradp_phi")}
    for tk, row in zip(w.times, w.values):
        ue = row[sl]
        padded = np.concatenate(([0.0], row, [0.0]))
        gc = np.abs((padded[2:] - padded[:-2]) / (2 * h))[sl]
        cols["t"].append(tk)
        cols["z"].append(h * float(row @ phi))
        cols["eta_l1"].append(h * float(np.sum(np.abs(ue))))
        cols["eta_tv"].append(float(np.sum(np.abs(np.diff(ue)))))
        cols["eta_edge"].append(float(max(abs(ue[0]), abs(ue[-1]))))
        cols["grad_l1"].append(h * float(np.sum(gc)))
        cols["gradp_phi"].append(
            h * float(np.sum(gc ** traj.config.p * phi_eta))
        )
    return {c: np.asarray(v) for c, v in cols.items()}


def zdot_inequality_check(traj: Trajectory, eigen: EigenPair, p: float) -> ZdotReport:
    """Largest C5 >= 0 with dz/dt >= -lambda1 z + C5 z^p - slack at >= 95%
    of growth-segment records, plus the discrete Hoelder and Poincare
    steps on every record."""
    if traj.config.regularize_for_zdot:
        series = _regularized_series(traj, eigen)
    else:
        series = traj.monitors
    t = series["t"]
    z = series["z"]
    if t.size < 20:
        raise InsufficientData(f"only {t.size} monitor records")
    lam = eigen.lambda1

    zmax = float(np.max(np.abs(z)))
    if zmax < 1e-12:
        return ZdotReport(C5=0.0, slack=0.0, degenerate=True,
                          n_records=t.size, holder_ok=True, poincare_ok=True,
                          holder_margin=0.0, poincare_margin=0.0,
                          segment=(0, 0))

    # discrete Hoelder step: integral |Dw| <= C4^{(p-1)/p} (integral |Dw|^p phi)^{1/p}
    C4 = inverse_power_integral(eigen, p)
    lhs_h = series["grad_l1"]
    rhs_h = C4 ** ((p - 1) / p) * series["gradp_phi"] ** (1 / p)
    holder_margin = float(np.min(rhs_h - lhs_h))
    holder_ok = bool(holder_margin >= -1e-9 * max(1.0, np.max(rhs_h)))

    # discrete Poincare step: integral |w| <= |Omega^eta| (edge sup + TV)
    width_eta = eigen.phi1.grid.domain.width
    lhs_p = series["eta_l1"]
    rhs_p = width_eta * (series["eta_edge"] + series["eta_tv"])
    poincare_margin = float(np.min(rhs_p - lhs_p))
    poincare_ok = bool(poincare_margin >= -1e-9 * max(1.0, np.max(rhs_p)))

    # growth segment: from the minimum preceding the peak up to the peak
    imax = int(np.argmax(z))
    imin = int(np.argmin(z[: imax + 1])) if imax > 0 else 0
    lo, hi = imin, imax
    if hi - lo < 10:
        lo, hi = 0, t.size - 1

    zdot = np.gradient(z, t)
    seg = slice(lo + 1, hi)  # interior records of the segment
    zs, zds = z[seg], zdot[seg]
    good = zs > 1e-12
    if np.count_nonzero(good) < 5:
        return ZdotReport(C5=0.0, slack=0.0, degenerate=True,
                          n_records=t.size, holder_ok=holder_ok,
                          poincare_ok=poincare_ok,
                          holder_margin=holder_margin,
                          poincare_margin=poincare_margin,
                          segment=(lo, hi))
    ratio = (zds[good] + lam * zs[good]) / zs[good] ** p
    C5 = float(max(0.0, np.percentile(ratio, 5.0)))
    violation = -(zds[good] + lam * zs[good] - C5 * zs[good] ** p)
    slack = float(max(0.0, np.max(violation)))
    return ZdotReport(
        C5=C5, slack=slack, degenerate=False, n_records=t.size,
        holder_ok=holder_ok, poincare_ok=poincare_ok,
        holder_margin=holder_margin, poincare_margin=poincare_margin,
        segment=(lo, hi),
    )


def lobc_threshold_estimate(
    eigen: EigenPair, p: float, C5: float, T: float, t0: float = 0.0
) -> float:
    """Predicted initial-mass threshold: the blow-up ODE level M0 for the
    window (t0, T) with C = C5/2, against the drift-domination level
    (2 lambda1 / C5)^{1/(p-1)}, plus one."""
    if C5 <= 0:
        raise ValueError("C5 must be positive (from a calibration run)")
    if T <= t0:
        raise ValueError("need T > t0")
    C = C5 / 2.0
    M0 = (C * (p - 1.0) * (T - t0)) ** (-1.0 / (p - 1.0))
    drift = (2.0 * eigen.lambda1 / C5) ** (1.0 / (p - 1.0))
    return float(max(M0, drift) + 1.0)


def write_monitors_csv(traj: Trajectory, path) -> None:
    """Published monitor schema: t, z, trace_left, trace_right, sup_norm,
    lip_estimate, dt."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MONITOR_COLUMNS)
        cols = [traj.monitors[c] for c in MONITOR_COLUMNS]
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])


def write_snapshot_csv(t: float, u: GridFunction, path) -> None:
    """One snapshot per file, columns x, u."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "u"])
        for x, v in zip(u.grid.nodes, u.values):
            w.writerow([repr(float(x)), repr(float(v))])
