"""Named experiments behind the command-line front door.

Every experiment writes deterministic CSV/JSON artifacts plus a manifest
listing each output file with a content hash.  Numeric CSV cells use the
shortest round-trip decimal representation.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .barrier import (
    ExponentConfig,
    build_barrier,
    f_of_beta,
    locate_f_zero,
    report_to_json,
    validate_exponents,
    verify_supersolution,
)
from .core import Domain, GridFunction, make_grid
from .errors import ConfigError, InvariantViolation
from .evolve import (
    SolverConfig,
    lobc_threshold_estimate,
    ode_blowup,
    run,
    write_monitors_csv,
    write_snapshot_csv,
    zdot_inequality_check,
)
from .fraclap import apply, assemble, apply_symmetric_form, getoor_constant
from .regularize import (
    RegParams,
    SpaceTimeFunction,
    double_regularize,
    inf_conv,
    inf_conv_space,
    second_diff_extremes,
    semigroup_slack,
    sup_conv_space,
)
from .spectral import eigen_family, write_family_csv

EXPERIMENTS = (
    "local_existence",
    "lobc_sweep",
    "eigen_stability",
    "barrier_report",
    "convolution_props",
    "fdiff_validation",
)


@dataclass
class ExperimentConfig:
    experiment: str
    s: float = 0.75
    p: float = 2.0
    n: int = 256
    T: float = 0.5
    seed: int = 0
    out_dir: str = "out"
    domain: tuple[float, float] = (0.0, 1.0)
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        errors = []
        if self.experiment not in EXPERIMENTS:
            errors.append(
                f"experiment must be one of {', '.join(EXPERIMENTS)}; "
                f"got {self.experiment!r}"
            )
        if not (0.0 < self.s < 1.0):
            errors.append(f"s must be in (0,1); got {self.s}")
        if self.p <= 1.0:
            errors.append(f"p must exceed 1; got {self.p}")
        if self.n < 3:
            errors.append(f"n must be >= 3; got {self.n}")
        if self.T <= 0:
            errors.append(f"T must be positive; got {self.T}")
        if self.domain[0] >= self.domain[1]:
            errors.append(f"domain must be an interval; got {self.domain}")
        if errors:
            raise ConfigError("; ".join(errors))
        self.window = validate_exponents(self.s, self.p)

    def opt(self, key, default):
        return self.overrides.get(key, default)


def max_workers() -> int:
    """Parallelism cap from FRACLOBC_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("FRACLOBC_THREADS", "1")))
    except ValueError:
        return 1


def bump_profile(grid, amplitude: float, gamma: float) -> GridFunction:
    """Initial-data family A sin(pi (x-a)/(b-a))^gamma: smooth,
    compatible, with Hoelder seminorm controlled by (A, gamma)."""
    a, w = grid.domain.a, grid.domain.width
    vals = amplitude * np.sin(np.pi * (grid.nodes - a) / w) ** gamma
    return GridFunction(grid, vals)


class _Emitter:
    """Collects written files and finalizes the manifest."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.dir = Path(cfg.out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []
        self.t0 = time.time()
        self.extras: dict = {}

    def path(self, name: str) -> Path:
        p = self.dir / name
        self.files.append(p)
        return p

    def write_manifest(self):
        listing = []
        for p in self.files:
            digest = hashlib.sha256(p.read_bytes()).hexdigest()
            listing.append({"path": p.name, "sha256": digest})
        manifest = {
            "experiment": self.cfg.experiment,
            "config": {
                "s": self.cfg.s, "p": self.cfg.p, "n": self.cfg.n,
                "T": self.cfg.T, "seed": self.cfg.seed,
                "domain": list(self.cfg.domain),
                "overrides": self.cfg.overrides,
                "window_zone": self.cfg.window.zone,
            },
            "versions": {
                "fraclobc": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
            },
            "wall_time_s": time.time() - self.t0,
            "extras": self.extras,
            "files": listing,
        }
        with open(self.dir / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2)


def _csv_writer(path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def _fmt(v) -> str:
    return repr(float(v))


# --------------------------------------------------------------------------
# experiments
# --------------------------------------------------------------------------

def _eigen_for_run(cfg: ExperimentConfig, grid):
    dom = Domain(*cfg.domain)
    return eigen_family(dom, cfg.s, [4 * grid.h], cfg.n)[0]


def exp_local_existence(cfg: ExperimentConfig, em: _Emitter) -> int:
    dom = Domain(*cfg.domain)
    grid = make_grid(dom, cfg.n)
    amplitude = cfg.opt("amplitude", 0.05)
    gamma = cfg.opt("gamma", 2.0)
    u0 = bump_profile(grid, amplitude, gamma)
    eig = _eigen_for_run(cfg, grid)
    solver = SolverConfig(
        s=cfg.s, p=cfg.p, n=cfg.n, T=cfg.T,
        record_every=cfg.opt("record_every", 2000),
    )
    traj = run(u0, solver, eig)
    write_monitors_csv(traj, em.path("monitors.csv"))
    for i, (t, u) in enumerate(traj.snapshots):
        write_snapshot_csv(t, u, em.path(f"snapshot_{i:04d}.csv"))
    tau_max = float(
        np.max(
            np.maximum(traj.monitors["trace_left"],
                       traj.monitors["trace_right"])
        )
    )
    em.extras.update(
        lobc_time=traj.lobc_time,
        collapse_time=traj.collapse_time,
        max_trace=tau_max,
        u0_sup=traj.u0_sup,
        lobc_threshold_abs=solver.lobc_threshold * traj.u0_sup,
    )
    if traj.lobc_time is not None or tau_max >= 0.01 * traj.u0_sup:
        raise InvariantViolation(
            f"short-time attachment refuted: lobc={traj.lobc_time}, "
            f"max trace {tau_max:.4g} vs 0.01*||u0|| = {0.01 * traj.u0_sup:.4g}"
        )
    return 0


def exp_lobc_sweep(cfg: ExperimentConfig, em: _Emitter) -> int:
    dom = Domain(*cfg.domain)
    grid = make_grid(dom, cfg.n)
    eig = _eigen_for_run(cfg, grid)
    scales = cfg.opt("scales", [0.5, 1.0, 2.0, 4.0, 8.0])
    base = cfg.opt("amplitude", 1.0)
    gamma = cfg.opt("gamma", 2.0)
    solver = SolverConfig(
        s=cfg.s, p=cfg.p, n=cfg.n, T=cfg.T,
        stop_on_lobc=bool(cfg.opt("stop_on_lobc", True)),
        record_every=cfg.opt("record_every", 2000),
        max_steps=int(cfg.opt("max_steps", 2_000_000)),
    )

    def one(scale):
        u0 = bump_profile(grid, base * scale, gamma)
        return scale, run(u0, solver, eig)

    workers = max_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, scales))
    else:
        results = [one(sc) for sc in scales]

    fh, w = _csv_writer(em.path("lobc_sweep.csv"))
    with fh:
        w.writerow(["scale", "z0", "lobc_time", "collapse_time"])
        for scale, traj in results:
            w.writerow([
                _fmt(scale),
                _fmt(traj.monitors["z"][0]),
                "" if traj.lobc_time is None else _fmt(traj.lobc_time),
                "" if traj.collapse_time is None else _fmt(traj.collapse_time),
            ])
    for scale, traj in results:
        write_monitors_csv(traj, em.path(f"monitors_scale_{scale:g}.csv"))

    # z-inequality diagnostics on the largest LOBC run, if any
    lobc_runs = [(sc, tr) for sc, tr in results if tr.lobc_time is not None]
    if lobc_runs:
        sc, tr = lobc_runs[-1]
        rep = zdot_inequality_check(tr, eig, cfg.p)
        payload = dict(
            scale=sc, C5=rep.C5, slack=rep.slack,
            lambda1=eig.lambda1, p=cfg.p,
            holder_ok=rep.holder_ok, poincare_ok=rep.poincare_ok,
        )
        if rep.C5 > 0:
            thr = lobc_threshold_estimate(eig, cfg.p, rep.C5, cfg.T)
            payload["threshold_estimate"] = thr
            lo = rep.segment[0]
            z0 = float(tr.monitors["z"][lo])
            if z0 > 0:
                wit = ode_blowup(rep.C5 / 2.0, cfg.p, z0,
                                 float(tr.monitors["t"][lo]))
                payload["witness"] = dict(
                    t0=wit.t0, t1=wit.t1, C=wit.C, M0=wit.M0,
                    blowup_time=wit.blowup_time,
                )
        with open(em.path("zdot_report.json"), "w") as jfh:
            json.dump(payload, jfh, indent=2)
    return 0


def exp_eigen_stability(cfg: ExperimentConfig, em: _Emitter) -> int:
    dom = Domain(*cfg.domain)
    etas = cfg.opt("etas", [0.2, 0.1, 0.05, 0.025, 0.0])
    fam = eigen_family(dom, cfg.s, etas, cfg.n)
    write_family_csv(fam, em.path("eigen_stability.csv"), p=cfg.p)
    lams = [pair.lambda1 for pair in fam]
    em.extras.update(lambda1=lams, etas_snapped=[pair.eta for pair in fam])
    if not all(a > b for a, b in zip(lams, lams[1:])):
        raise InvariantViolation(
            f"domain monotonicity of lambda1 refuted: {lams}"
        )
    return 0


def exp_barrier_report(cfg: ExperimentConfig, em: _Emitter) -> int:
    dom = Domain(*cfg.domain)
    beta = cfg.opt("beta", 0.6)
    alpha = cfg.opt("alpha", 0.55)
    M = cfg.opt("M", 1.0)
    expcfg = ExponentConfig(s=cfg.s, p=cfg.p, beta=beta, alpha=alpha)
    bar = build_barrier(expcfg, dom, dom.a, M)
    report = verify_supersolution(bar, dom)
    with open(em.path("report.json"), "w") as fh:
        fh.write(report_to_json(report))

    lo = cfg.opt("f_beta_lo", 0.05)
    hi = cfg.opt("f_beta_hi", min(0.99, 2 * cfg.s - 0.05))
    betas = np.linspace(lo, hi, int(cfg.opt("f_beta_points", 41)))
    fh, w = _csv_writer(em.path("f_beta.csv"))
    with fh:
        w.writerow(["beta", "f_value"])
        for b in betas:
            w.writerow([_fmt(b), _fmt(f_of_beta(float(b), cfg.s))])
    em.extras["f_zero"] = locate_f_zero(cfg.s)
    em.extras["min_slack"] = report.min_slack
    return 0


def _convolution_fixtures(grid, times, seed):
    x = grid.nodes
    rng = np.random.default_rng(seed)
    mid = 0.5 * (grid.domain.a + grid.domain.b)
    tile = lambda v: np.tile(v, (times.size, 1))
    lipschitz = np.cumsum(rng.uniform(-1, 1, (times.size, grid.n)), axis=1) * grid.h
    return {
        "constant": SpaceTimeFunction(grid, times, tile(np.full(grid.n, 0.7))),
        "cone": SpaceTimeFunction(grid, times, tile(np.abs(x - mid))),
        "hat": SpaceTimeFunction(
            grid, times,
            tile(np.maximum(0.0, 1 - np.abs(x - mid) / (0.3 * grid.domain.width))),
        ),
        "random_lipschitz": SpaceTimeFunction(grid, times, lipschitz - lipschitz.min()),
    }


def exp_convolution_props(cfg: ExperimentConfig, em: _Emitter) -> int:
    dom = Domain(*cfg.domain)
    grid = make_grid(dom, cfg.n)
    times = np.linspace(0.0, cfg.T, int(cfg.opt("time_slices", 13)))
    eps = cfg.opt("eps", 0.01)
    kappa = cfg.opt("kappa", 0.01)
    delta = cfg.opt("delta", 0.005)
    params = RegParams(eps=eps, kappa=kappa, delta=delta)
    rows = []

    def check(prop, fixture, lhs, rhs, ok):
        rows.append([prop, fixture, _fmt(lhs), _fmt(rhs), str(bool(ok))])
        return ok

    all_ok = True
    for name, f in _convolution_fixtures(grid, times, cfg.seed).items():
        ic = inf_conv(f, eps, kappa)
        sc = sup_conv_space(f, delta)
        tol = 1e-12 * max(1.0, f.sup)

        all_ok &= check("bounds_inf", name, float(ic.values.min()),
                        float(f.values.min()),
                        ic.values.min() >= f.values.min() - tol)
        all_ok &= check("bounds_sup", name, float(sc.values.max()),
                        float(f.values.max()),
                        sc.values.max() <= f.values.max() + tol)

        # Lipschitz constants 2||f||/sqrt(scale)
        lipx = float(np.max(np.abs(np.diff(ic.values, axis=1)))) / grid.h
        bx = 2.0 * f.sup / np.sqrt(eps)
        all_ok &= check("lipschitz_x", name, lipx, bx, lipx <= bx * (1 + 1e-9))
        if times.size > 1:
            dtmin = float(np.min(np.diff(times)))
            lipt = float(np.max(np.abs(np.diff(ic.values, axis=0)))) / dtmin
            bt = 2.0 * f.sup / np.sqrt(kappa)
            all_ok &= check("lipschitz_t", name, lipt, bt,
                            lipt <= bt * (1 + 1e-9))

        # uniform convergence along a parameter sequence
        dev_prev = None
        ok_iv = True
        for fac in (1.0, 0.25, 0.0625):
            icf = inf_conv(f, eps * fac, kappa * fac)
            dev = float(np.max(np.abs(icf.values - f.values)))
            if dev_prev is not None:
                ok_iv &= dev <= dev_prev + tol
            dev_prev = dev
        all_ok &= check("uniform_convergence", name, dev_prev, 0.0, ok_iv)

        # second-difference upper bound 1/eps
        mx = max(second_diff_extremes(ic, k)[1] for k in range(times.size))
        all_ok &= check("second_diff_bound", name, mx, 1.0 / eps,
                        mx <= (1.0 / eps) * (1 + 1e-9))

        # semigroup envelope and iterated-below-inf-conv inequality
        w = double_regularize(f, params)  # raises SemigroupViolation if off
        gap_ok = bool(np.all(w.values <= ic.values + tol))
        all_ok &= check("iterated_below_infconv", name,
                        float(np.max(w.values - ic.values)), 0.0, gap_ok)
        all_ok &= check("semigroup_envelope", name, 0.0,
                        semigroup_slack(grid, eps, delta), True)

        # semiconcavity preservation under the iterated regularization
        q_before = max(second_diff_extremes(ic, k)[1] for k in range(times.size))
        w2 = sup_conv_space(inf_conv_space(ic, delta), delta)
        q_after = max(second_diff_extremes(w2, k)[1] for k in range(times.size))
        all_ok &= check("semiconcavity_preserved", name, q_after, q_before,
                        q_after <= q_before * (1 + 1e-9) + tol)

    fh, w = _csv_writer(em.path("convolution_props.csv"))
    with fh:
        w.writerow(["property", "fixture", "lhs", "rhs", "pass"])
        w.writerows(rows)
    if not all_ok:
        raise InvariantViolation("a convolution property was refuted; see CSV")
    return 0


def exp_fdiff_validation(cfg: ExperimentConfig, em: _Emitter) -> int:
    dom = Domain(-1.0, 1.0)
    K = getoor_constant(cfg.s)
    rows = []
    errs = []
    for n in cfg.opt("n_values", [256, 512, 1024, 2048]):
        grid = make_grid(dom, n)
        op = assemble(grid, cfg.s)
        u = GridFunction(grid, (1 - grid.nodes**2) ** cfg.s)
        vals = apply(op, u).values
        lo, hi = int(0.1 * n), int(0.9 * n)
        rel = float(np.max(np.abs(vals[lo:hi] - K)) / K)
        sym = apply_symmetric_form(op, u).values
        agree = float(np.max(np.abs(sym - vals)) / np.max(np.abs(vals)))
        rows.append([str(n), _fmt(rel), _fmt(agree)])
        errs.append(rel)
    fh, w = _csv_writer(em.path("fdiff_validation.csv"))
    with fh:
        w.writerow(["n", "getoor_rel_err_mid80", "symmetric_form_agreement"])
        w.writerows(rows)
    em.extras["getoor_constant"] = K
    if not all(a > b for a, b in zip(errs, errs[1:])):
        raise InvariantViolation(f"refinement did not reduce the error: {errs}")
    return 0


_RUNNERS = {
    "local_existence": exp_local_existence,
    "lobc_sweep": exp_lobc_sweep,
    "eigen_stability": exp_eigen_stability,
    "barrier_report": exp_barrier_report,
    "convolution_props": exp_convolution_props,
    "fdiff_validation": exp_fdiff_validation,
}


def run_experiment(cfg: ExperimentConfig) -> int:
    """Execute one experiment; returns 0 and writes artifacts + manifest.

    Raises OperationalError subtypes for bad input and
    InvariantViolation when a checked property is refuted (the manifest
    is still written in that case).
    """
    em = _Emitter(cfg)
    try:
        code = _RUNNERS[cfg.experiment](cfg, em)
    finally:
        em.write_manifest()
    return code
