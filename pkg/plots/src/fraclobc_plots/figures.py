"""Figure renderers, one per kind.

Each renderer takes the input directory, an output path and a style
mapping, draws with matplotlib (Agg) and writes the file.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from dataclasses import dataclass, field  # noqa: E402
from typing import Mapping  # noqa: E402

from . import io  # noqa: E402

KINDS = (
    "snapshots", "z_curve", "eigen_stability", "trace", "f_beta",
    "barrier_slack",
)


def _new_axes(style):
    fig, ax = plt.subplots(figsize=(6.4, 4.0), dpi=int(style.get("dpi", 120)))
    ax.grid(True, alpha=0.3)
    return fig, ax


def _finish(fig, ax, out, title, xlabel, ylabel):
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


def render_snapshots(input_dir, out, style):
    snaps = io.read_snapshots(input_dir)
    fig, ax = _new_axes(style)
    cmap = plt.get_cmap(style.get("cmap", "viridis"))
    for k, (name, cols) in enumerate(snaps):
        color = cmap(k / max(1, len(snaps) - 1))
        ax.plot(cols["x"], cols["u"], color=color, lw=1.2,
                label=name if len(snaps) <= 8 else None)
    if len(snaps) <= 8:
        ax.legend(fontsize=8)
    _finish(fig, ax, out, "solution snapshots", "x", "u")


def render_z_curve(input_dir, out, style):
    name = style.get("monitors", "monitors.csv")
    mon = io.read_monitors(input_dir, name)
    fig, ax = _new_axes(style)
    ax.plot(mon["t"], mon["z"], lw=1.4, label="z(t)")
    try:
        rep = io.read_json(input_dir, "zdot_report.json")
    except io.MissingInput:
        rep = None
    if rep and "witness" in rep:
        wit = rep["witness"]
        p = rep["p"]
        t0, M0, C = wit["t0"], wit["M0"], wit["C"]
        t = np.linspace(t0, min(wit["blowup_time"] * 0.999, max(mon["t"])), 256)
        if t.size and t[-1] > t0:
            envelope = (M0 ** (1 - p) - C * (p - 1) * (t - t0)) ** (-1 / (p - 1))
            ax.plot(t, envelope, "--", lw=1.2,
                    label="blow-up envelope")
    ax.legend(fontsize=8)
    _finish(fig, ax, out, "eigenfunction mass", "t", "z")


def render_eigen_stability(input_dir, out, style):
    fam = io.read_eigen_family(input_dir)
    fig, ax = _new_axes(style)
    ax.plot(fam["eta"], fam["lambda1"], "o-", lw=1.2)
    ax.invert_xaxis()  # stability is read toward eta -> 0
    _finish(fig, ax, out, "principal eigenvalue vs domain shrink",
            "eta", "lambda1")


def render_trace(input_dir, out, style):
    name = style.get("monitors", "monitors.csv")
    mon = io.read_monitors(input_dir, name)
    fig, ax = _new_axes(style)
    ax.plot(mon["t"], mon["trace_left"], lw=1.2, label="left intercept")
    ax.plot(mon["t"], mon["trace_right"], lw=1.2, label="right intercept")
    thr = style.get("threshold")
    if thr is None:
        try:
            manifest = io.read_manifest(input_dir)
            thr = manifest.get("extras", {}).get("lobc_threshold_abs")
        except io.MissingInput:
            thr = None
    if thr is not None:
        ax.axhline(float(thr), color="k", ls=":", lw=1.0,
                   label="detection threshold")
    ax.legend(fontsize=8)
    _finish(fig, ax, out, "boundary-trace intercepts", "t", "tau")


def render_f_beta(input_dir, out, style):
    data = io.read_f_beta(input_dir)
    beta = np.asarray(data["beta"])
    val = np.asarray(data["f_value"])
    fig, ax = _new_axes(style)
    ax.plot(beta, val, lw=1.4)
    ax.axhline(0.0, color="k", lw=0.8)
    sign_change = np.nonzero(np.diff(np.sign(val)) > 0)[0]
    if sign_change.size:
        i = sign_change[0]
        b0 = beta[i] - val[i] * (beta[i + 1] - beta[i]) / (val[i + 1] - val[i])
        ax.axvline(b0, color="r", ls="--", lw=1.0, label=f"zero at {b0:.3f}")
        ax.legend(fontsize=8)
    _finish(fig, ax, out, "sign-change integral", "beta", "F")


def render_barrier_slack(input_dir, out, style):
    rep = io.read_barrier_report(input_dir)
    d = np.array([smp["d"] for smp in rep["samples"]])
    slack = np.array([smp["slack"] for smp in rep["samples"]])
    fig, ax = _new_axes(style)
    pos = slack > 0
    ax.loglog(d[pos], slack[pos], "o", ms=4, label="slack > 0")
    if np.any(~pos):
        ax.loglog(d[~pos], -slack[~pos], "x", ms=5, color="r",
                  label="violation (|slack|)")
    ax.legend(fontsize=8)
    _finish(fig, ax, out,
            f"supersolution slack (min {rep['min_slack']:.2e})",
            "distance to boundary", "slack")


RENDERERS = {
    "snapshots": render_snapshots,
    "z_curve": render_z_curve,
    "eigen_stability": render_eigen_stability,
    "trace": render_trace,
    "f_beta": render_f_beta,
    "barrier_slack": render_barrier_slack,
}


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: kind, experiment output directory, image path
    and free-form style overrides."""

    kind: str
    input_dir: str
    output: str
    style: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in RENDERERS:
            raise ValueError(
                f"unknown figure kind {self.kind!r}; choose from {KINDS}"
            )


def render(kind, input_dir, out, style=None):
    """Render one figure kind from an experiment output directory."""
    if kind not in RENDERERS:
        raise ValueError(f"unknown figure kind {kind!r}; choose from {KINDS}")
    RENDERERS[kind](input_dir, out, dict(style or {}))
    return out


def render_figure(spec: FigureSpec):
    """Render per a FigureSpec; returns the written image path."""
    return render(spec.kind, spec.input_dir, spec.output, spec.style)
