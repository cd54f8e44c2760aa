"""Exponent-window bookkeeping, the sign-change integral F, the two
distance/cone estimates with empirical constants, and the constructive
boundary barrier with its supersolution verification.

The barrier near a boundary point y is

    v_y(x) = lambda * M * |x - y|^alpha + mu * M * d(x)^alpha,

whose coefficients are selected so that, on the boundary collar,
(-Delta)^s v_y dominates |Dv_y|^p and v_y dominates every admissible
initial datum of Hoelder seminorm M.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import Domain, dist
from .errors import (
    CollarCollapse,
    NonPositiveC1,
    SupersolutionViolated,
)
from .fraclap import normalization_constant, quad_pointwise

GOLDEN_RECIPROCAL = (np.sqrt(5.0) - 1.0) / 2.0  # 0.618..., lower edge for s


@dataclass(frozen=True)
class ExponentWindow:
    """Classification of an (s, p) pair against the admissible window."""

    s: float
    p: float
    zone: str             # classical | open_strip | inside | above_window
    window: tuple[float, float]
    window_empty: bool
    beta_star: float


def validate_exponents(s: float, p: float) -> ExponentWindow:
    """Classify (s, p): classical zone p <= 2s, the open strip
    2s < p <= s+1, the admissible window s+1 < p < s/(1-s), or above it."""
    if not (0 < s < 1):
        raise ValueError(f"s must lie in (0,1), got {s}")
    lo, hi = s + 1.0, s / (1.0 - s)
    if p <= 2 * s:
        zone = "classical"
    elif p <= lo:
        zone = "open_strip"
    elif p < hi:
        zone = "inside"
    else:
        zone = "above_window"
    return ExponentWindow(
        s=s,
        p=p,
        zone=zone,
        window=(lo, hi),
        window_empty=lo >= hi,  # exactly when s <= reciprocal golden ratio
        beta_star=critical_beta(s, p),
    )


def critical_beta(s: float, p: float) -> float:
    """Critical Hoelder exponent (p - 2s) / (p - 1)."""
    if p <= 1:
        raise ValueError(f"p must exceed 1, got {p}")
    return (p - 2.0 * s) / (p - 1.0)


@dataclass(frozen=True)
class ExponentConfig:
    """Validated exponent quadruple for the barrier construction."""

    s: float
    p: float
    beta: float
    alpha: float

    def __post_init__(self):
        if not (0 < self.s < 1):
            raise ValueError(f"s={self.s} outside (0,1)")
        if not (self.s + 1 < self.p < self.s / (1 - self.s)):
            raise ValueError(
                f"p={self.p} outside the window ({self.s + 1}, "
                f"{self.s / (1 - self.s)})"
            )
        bstar = critical_beta(self.s, self.p)
        if not (bstar < self.alpha < min(self.beta, self.s)):
            raise ValueError(
                f"alpha={self.alpha} outside ({bstar}, "
                f"{min(self.beta, self.s)})"
            )


def f_of_beta(beta: float, s: float, tol: float = 1e-6) -> float:
    """Sign-change integral of the barrier construction:

        F(beta; s) = int_R ((1+t)_+^beta + (1-t)_+^beta - 2) / |t|^{1+2s} dt,

    negative for beta in (0, s), zero at beta = s (the exponent-s profile
    is harmonic for the order-s operator), positive on (s, 2s).
    """
    if not (0 < beta < 1):
        raise ValueError(f"beta must lie in (0,1), got {beta}")
    if beta >= 2 * s:
        raise ValueError(f"beta={beta} >= 2s={2*s}: integral diverges")

    def profile(t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 0, np.maximum(t, 0.0) ** beta, 0.0)

    if beta == 1.0:
        bound = 0.0
    else:
        bound = beta * abs(1 - beta) * 0.5 ** (beta - 2)
    val = quad_pointwise(
        s,
        profile,
        1.0,
        inner_radius=0.5,
        outer_radius=8.0,
        second_deriv_bound=bound,
        tol=tol * normalization_constant(s) / 2,
        breakpoints=(1.0,),
        tail_right=("power", 1.0, beta, 1.0),
        tail_left="zero",
    )
    return -2.0 * val / normalization_constant(s)


def locate_f_zero(s: float, lo: float = 0.05, hi: float = 0.99,
                  xtol: float = 1e-3) -> float:
    """Bisection for the sign change of F(.; s); lands at beta = s."""
    hi = min(hi, 2 * s - 1e-3)
    flo, fhi = f_of_beta(lo, s), f_of_beta(hi, s)
    if flo >= 0 or fhi <= 0:
        raise ValueError(f"no sign change bracketed on [{lo}, {hi}]")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if f_of_beta(mid, s) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _sample_distances(delta: float, per_decade: int = 64, decades: int = 4):
    """Log-spaced collar distances from delta down over `decades` decades."""
    return np.geomspace(delta, delta * 10.0 ** (-decades),
                        per_decade * decades + 1)


def _relative_distance_power(width: float, d: float, sign: float, alpha: float):
    """d(x* + t)^alpha in offset coordinates around the collar point x*
    at distance d from the boundary (sign +1: left collar, -1: right).

    Working in offsets keeps the evaluation exact even when d is far
    below the float resolution of the absolute boundary coordinate.
    """

    def f(t):
        t = np.asarray(t, dtype=float)
        return np.clip(np.minimum(d + sign * t, width - d - sign * t),
                       0.0, None) ** alpha

    return f


def lemma31_constant(
    s: float,
    alpha: float,
    domain: Domain,
    delta: float,
    per_decade: int = 64,
    decades: int = 4,
) -> float:
    """Empirical constant c1 in (-Delta)^s d^alpha >= c1 d^(alpha-2s) on
    the collar {d < delta}, sampled at log-spaced distances from the
    boundary (the two collars agree by the symmetry of d)."""
    if not (0 < alpha < s):
        raise ValueError(f"need 0 < alpha < s, got alpha={alpha}, s={s}")
    width = domain.width
    ratios = []
    for d in _sample_distances(delta, per_decade, decades):
        f = _relative_distance_power(width, d, +1.0, alpha)
        scale = d ** (alpha - 2 * s)
        bound = alpha * (1 - alpha) * (d / 2) ** (alpha - 2)
        breaks = sorted({d, abs(width / 2 - d), width - d})
        val = quad_pointwise(
            s, f, 0.0,
            inner_radius=d / 2,
            outer_radius=width + d,
            second_deriv_bound=bound,
            tol=1e-4 * scale,
            breakpoints=breaks,
        )
        ratios.append(val / scale)
    c1 = float(np.min(ratios))
    if c1 <= 0:
        raise NonPositiveC1(
            f"empirical c1 = {c1} <= 0 for alpha={alpha}, s={s}"
        )
    return c1


def lemma32_constant(
    s: float,
    alpha: float,
    x_lo: float = 1e-2,
    x_hi: float = 10.0,
    samples: int = 17,
) -> float:
    """Empirical constant c2 >= 0 with (-Delta)^s |.|^alpha >= -c2 |x|^(alpha-2s):
    max over log-spaced samples of the scaled negative part (y = 0 by
    translation invariance)."""
    if not (0 < alpha < 2 * s):
        raise ValueError(f"need 0 < alpha < 2s, got alpha={alpha}, s={s}")

    def cone(t):
        return np.abs(np.asarray(t, dtype=float)) ** alpha

    worst = 0.0
    for x in np.geomspace(x_lo, x_hi, samples):
        scale = x ** (alpha - 2 * s)
        bound = (
            alpha * abs(1 - alpha) * (x / 2) ** (alpha - 2)
            if alpha != 1.0
            else 1e-30
        )
        val = quad_pointwise(
            s, cone, float(x),
            inner_radius=x / 2,
            outer_radius=10.0 * x,
            second_deriv_bound=bound,
            tol=1e-5 * scale,
            breakpoints=(float(x),),
            tail_right=("power", 1.0, alpha, float(x)),
            tail_left=("power", 1.0, alpha, -float(x)),
        )
        worst = max(worst, -val / scale)
    return float(worst)


@dataclass(frozen=True)
class Barrier:
    """Coefficients of the boundary barrier at one boundary point."""

    config: ExponentConfig
    y: float
    lambda_coef: float
    mu_coef: float
    M: float
    delta_collar: float
    c1: float
    c2: float

    def __post_init__(self):
        if self.mu_coef < 1 or self.lambda_coef <= 0:
            raise ValueError("need mu >= 1 and lambda > 0")
        if not (0 < self.delta_collar <= 1):
            raise ValueError("collar width must lie in (0, 1]")
        if self.M <= 0:
            raise ValueError("M must be positive")


def build_barrier(
    cfg: ExponentConfig,
    domain: Domain,
    y: float,
    M: float,
    per_decade: int = 16,
    decades: int = 3,
) -> Barrier:
    """Constructive coefficient selection for the barrier at y.

    lambda makes the cone term dominate |x-y|^beta away from the collar,
    mu makes the distance-term estimate win over the cone estimate
    (mu c1 - lambda c2 > mu c1 / 2), and the collar width shrinks by
    halving until the gradient term is beaten with margin mu c1 / 4.
    """
    if y not in (domain.a, domain.b):
        raise ValueError(f"y must be a boundary point of {domain}")
    if M <= 0:
        raise ValueError("M must be positive")
    s, p, beta, alpha = cfg.s, cfg.p, cfg.beta, cfg.alpha

    delta_cap = min(1.0, domain.width / 4.0)
    c1 = lemma31_constant(s, alpha, domain, delta_cap,
                          per_decade=per_decade, decades=decades)
    c2 = lemma32_constant(s, alpha)

    # smallest lambda with lambda r^alpha > r^beta on r <= width
    lam = (1.0 + 1e-6) * domain.width ** (beta - alpha)
    mu = max(1.0, 2.0 * lam * c2 / c1 + 1.0)

    # The collar halves until the gradient margin holds.  For alpha just
    # above beta* the exponent is tiny and the collar becomes extremely
    # thin (delta^expo decays glacially); that is intrinsic to the
    # construction, so the only hard stop is float representability of
    # the downstream collar quantities.
    expo = p * (alpha - 1.0) - (alpha - 2.0 * s)  # positive iff alpha > beta*
    delta = delta_cap
    while M ** (p - 1) * (mu + lam) ** p * delta**expo >= mu * c1 / 4.0:
        delta *= 0.5
        if delta < 1e-60:
            raise CollarCollapse(
                f"collar underflow (exponent {expo:.3g} <= 0?) for {cfg}"
            )
    return Barrier(
        config=cfg, y=y, lambda_coef=lam, mu_coef=mu, M=M,
        delta_collar=delta, c1=c1, c2=c2,
    )


def barrier_value(bar: Barrier, domain: Domain, x) -> np.ndarray:
    """v_y(x) = lambda M |x-y|^alpha + mu M d(x)^alpha (vectorized)."""
    x = np.asarray(x, dtype=float)
    a = bar.config.alpha
    return bar.lambda_coef * bar.M * np.abs(x - bar.y) ** a + \
        bar.mu_coef * bar.M * dist(domain, x) ** a


@dataclass(frozen=True)
class SupersolutionReport:
    """Sampled verification of the supersolution system on the collar."""

    barrier: Barrier
    domain: Domain
    min_slack: float
    dominates_initial_data: bool
    samples: list = field(repr=False, default_factory=list)
    # each sample: dict(x, d, frac_lap, grad_pow, slack)


def verify_supersolution(
    bar: Barrier,
    domain: Domain,
    per_decade: int = 8,
    decades: int = 3,
    raise_on_failure: bool = True,
    mu_factor: float = 1.0,
) -> SupersolutionReport:
    """Sample the collar (both sides) and check
    (-Delta)^s v_y >= |D v_y|^p pointwise, plus v_y >= M d^beta there.

    The nonlocal term is evaluated by quadrature on each power term
    separately; the gradient is analytic.  ``mu_factor`` scales the
    distance coefficient for negative-control diagnostics (e.g. 0.01
    reproduces the mu/100 control, which must fail).
    """
    s, p, alpha, beta = (
        bar.config.s, bar.config.p, bar.config.alpha, bar.config.beta,
    )
    a, b = domain.a, domain.b
    if bar.y not in (a, b):
        raise ValueError("barrier boundary point does not belong to domain")
    width = domain.width
    lamM = bar.lambda_coef * bar.M
    muM = bar.mu_coef * bar.M * mu_factor

    samples = []
    dominates = True
    # All quadratures run in offset coordinates around the collar point
    # (never forming the absolute x), so collars far below the float
    # resolution of the boundary coordinates stay exact.
    for side_anchor, sign in ((a, +1.0), (b, -1.0)):
        y_near = bar.y == side_anchor
        for d in _sample_distances(bar.delta_collar, per_decade, decades):
            scale = d ** (alpha - 2 * s)
            r = d if y_near else width - d  # |x - y| at this sample
            dpow_rel = _relative_distance_power(width, d, sign, alpha)
            # cone |x + t - y|^alpha in the same offset coordinates
            off = sign * r if y_near else -sign * r

            def cone_rel(t, off=off):
                t = np.asarray(t, dtype=float)
                return np.abs(off + t) ** alpha

            bound_d = alpha * (1 - alpha) * (d / 2) ** (alpha - 2)
            bound_c = alpha * (1 - alpha) * (r / 2) ** (alpha - 2)
            breaks_d = sorted({d, abs(width / 2 - d), width - d})
            lap_d = quad_pointwise(
                s, dpow_rel, 0.0,
                inner_radius=d / 2,
                outer_radius=width + d,
                second_deriv_bound=bound_d,
                tol=1e-4 * scale,
                breakpoints=breaks_d,
            )
            lap_c = quad_pointwise(
                s, cone_rel, 0.0,
                inner_radius=r / 2,
                outer_radius=10.0 * max(r, width),
                second_deriv_bound=bound_c,
                tol=1e-4 * min(scale, r ** (alpha - 2 * s)),
                breakpoints=(r,),
                tail_right=("power", 1.0, alpha, off),
                tail_left=("power", 1.0, alpha, -off),
            )
            frac_lap = muM * lap_d + lamM * lap_c
            # analytic gradient: both power terms are smooth off the kinks
            cone_slope = 1.0 if off > 0 else -1.0
            grad = (
                lamM * alpha * r ** (alpha - 1) * cone_slope
                + muM * alpha * d ** (alpha - 1) * sign
            )
            grad_pow = abs(grad) ** p
            slack = frac_lap - grad_pow
            value = lamM * r**alpha + muM * d**alpha
            dominates &= bool(value >= bar.M * d**beta - 1e-12)
            samples.append(
                dict(x=float(side_anchor + sign * d), d=float(d),
                     side="left" if sign > 0 else "right",
                     frac_lap=float(frac_lap),
                     grad_pow=float(grad_pow), slack=float(slack))
            )
    min_slack = min(smp["slack"] for smp in samples)
    report = SupersolutionReport(
        barrier=bar,
        domain=domain,
        min_slack=float(min_slack),
        dominates_initial_data=dominates,
        samples=samples,
    )
    if raise_on_failure and (min_slack < 0 or not dominates):
        worst = min(samples, key=lambda smp: smp["slack"])
        raise SupersolutionViolated(
            f"min slack {min_slack:.4g} at x={worst['x']:.6g} "
            f"(d={worst['d']:.3g})"
        )
    return report


def report_to_json(report: SupersolutionReport) -> str:
    """Serialize the verification report per the published schema."""
    bar = report.barrier
    payload = dict(
        s=bar.config.s,
        p=bar.config.p,
        alpha=bar.config.alpha,
        beta=bar.config.beta,
        M=bar.M,
        y=bar.y,
        domain=[report.domain.a, report.domain.b],
        **{"lambda": bar.lambda_coef},
        mu=bar.mu_coef,
        delta=bar.delta_collar,
        c1=bar.c1,
        c2=bar.c2,
        min_slack=report.min_slack,
        dominates_initial_data=report.dominates_initial_data,
        samples=report.samples,
    )
    return json.dumps(payload, indent=2)
