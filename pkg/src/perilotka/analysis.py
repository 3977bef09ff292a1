"""Hypothesis checks for existence and stability of periodic solutions.

Every checker returns a report listing each inequality with both sides and a
margin (positive means satisfied).  Verdicts are data: nothing here raises
because a condition fails.

Quantities on the extended real line use ``float('-inf')``; ``ext_log``
maps nonpositive arguments to ``-inf``, and ``exp(-inf) == 0`` feeds back
into the later formulas without special cases.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .coefficients import (
    PeriodicFunction, SampledPeriodicFunction, argmax, argmin, hat_mean,
    maximum, sup_inf,
)
from .dynamics import CoefficientSet
from .exceptions import DomainError
from .integrator import IntegratorConfig, Trajectory
from .orbits import PeriodicOrbit, find_orbit, logistic_closed_form

DET_THRESHOLD = 1e-12
KINK_TOL = 1e-9


def ext_log(x: float) -> float:
    """Natural log with ``ln x = -inf`` for ``x <= 0``."""
    return math.log(x) if x > 0 else -math.inf


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class Condition:
    """Requirement ``left < right``; ``margin = right - left``."""

    name: str
    left: float
    right: float
    description: str = ""

    @property
    def margin(self) -> float:
        m = self.right - self.left
        return m if not math.isnan(m) else -math.inf

    @property
    def verdict(self) -> bool:
        return self.margin > 0

    def to_record(self) -> dict:
        return {"name": self.name, "left": self.left, "right": self.right,
                "margin": self.margin, "verdict": self.verdict,
                "description": self.description}


@dataclass
class ConditionReport:
    title: str
    entries: list[Condition]
    data: dict = field(default_factory=dict)

    @property
    def verdict(self) -> bool:
        return all(c.verdict for c in self.entries)

    def __getitem__(self, name: str) -> Condition:
        for c in self.entries:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_record(self) -> dict:
        rec = {"title": self.title, "verdict": self.verdict,
               "entries": [c.to_record() for c in self.entries]}
        rec.update({k: v for k, v in self.data.items() if not isinstance(v, np.ndarray)})
        return rec

    def to_text(self) -> str:
        lines = [f"{self.title}: {'satisfied' if self.verdict else 'NOT satisfied'}"]
        for c in self.entries:
            mark = "ok  " if c.verdict else "FAIL"
            lines.append(f"  [{mark}] {c.name:<22} {c.left:>16.9g} < {c.right:<16.9g} "
                         f"margin {c.margin:+.6g}   {c.description}")
        return "\n".join(lines)


@dataclass(frozen=True)
class ExistenceBounds:
    """A-priori bounds on the log-densities of positive periodic solutions."""

    L11: float
    L21: float
    H11: float
    H21: float
    L12: float
    L22: float
    H12: float
    H22: float
    L31: float
    H31: float
    L32: float
    H32: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class _Stats:
    w: float
    a: tuple[float, float, float]
    b11: float
    b12: float
    b21: float
    b22: float
    c_over_gamma: tuple[float, float]
    d: tuple[float, float]
    alpha_l: float
    alpha_u: float
    beta_u: float
    gamma_l: float
    gamma_u: float


def _stats(p: CoefficientSet) -> _Stats:
    alpha_u, alpha_l = sup_inf(p.alpha)
    beta_u, _ = sup_inf(p.beta)
    gamma_u, gamma_l = sup_inf(p.gamma)
    return _Stats(
        w=p.period,
        a=(hat_mean(p.a1), hat_mean(p.a2), hat_mean(p.a3)),
        b11=hat_mean(p.b11), b12=hat_mean(p.b12), b21=hat_mean(p.b21), b22=hat_mean(p.b22),
        c_over_gamma=(hat_mean(p.c1 / p.gamma), hat_mean(p.c2 / p.gamma)),
        d=(hat_mean(p.d1), hat_mean(p.d2)),
        alpha_l=alpha_l, alpha_u=alpha_u, beta_u=beta_u, gamma_l=gamma_l, gamma_u=gamma_u,
    )


def _ratio_log(num: float, den: float) -> float:
    return ext_log(num / den) if den > 0 else ext_log(num) - ext_log(den)


def existence_bounds(params: CoefficientSet, stats: _Stats | None = None) -> ExistenceBounds:
    """Compute the ladder of ``L_ij`` / ``H_ij`` bounds from period statistics."""
    s = stats or _stats(params)
    a1, a2, a3 = s.a
    d1, d2 = s.d
    w = s.w
    L11 = _ratio_log(a1, s.b11)
    L21 = _ratio_log(a2, s.b22)
    H11 = L11 + 2 * a1 * w
    H21 = L21 + 2 * a2 * w
    L12 = _ratio_log(a1 - s.b12 * _exp(H21) - s.c_over_gamma[0], s.b11)
    L22 = _ratio_log(a2 - s.b21 * _exp(H11) - s.c_over_gamma[1], s.b22)
    H12 = L12 - 2 * a1 * w
    H22 = L22 - 2 * a2 * w
    L31 = _ratio_log(d1 * _exp(H11) + d2 * _exp(H21) - a3 * s.alpha_l, a3 * s.gamma_l)
    H31 = L31 + 2 * a3 * w
    L32 = ext_log((d1 - a3 * s.beta_u) * _exp(H12) + (d2 - a3 * s.beta_u) * _exp(H22)
                  - 2 * a3 * s.alpha_u) - ext_log(2 * a3 * s.gamma_u)
    H32 = L32 - 2 * a3 * w
    return ExistenceBounds(L11, L21, H11, H21, L12, L22, H12, H22, L31, H31, L32, H32)


def check_H2(params: CoefficientSet) -> ConditionReport:
    """Sufficient conditions for a strictly positive periodic solution."""
    s = _stats(params)
    B = existence_bounds(params, s)
    a1, a2, a3 = s.a
    d1, d2 = s.d
    det = s.b11 * s.b22 - s.b12 * s.b21
    entries = [
        Condition("b_det_nonzero", DET_THRESHOLD, abs(det),
                  "|<b11><b22> - <b12><b21>| > threshold"),
        Condition("prey1_floor", 0.0, a1 - s.b12 * _exp(B.H21) - s.c_over_gamma[0],
                  "<a1> - <b12> e^H21 - <c1/gamma> > 0"),
        Condition("prey2_floor", 0.0, a2 - s.b21 * _exp(B.H11) - s.c_over_gamma[1],
                  "<a2> - <b21> e^H11 - <c2/gamma> > 0"),
        Condition("predator_ceiling", a3 * s.alpha_l, d1 * _exp(B.H11) + d2 * _exp(B.H21),
                  "<d1> e^H11 + <d2> e^H21 > <a3> alpha_l"),
        Condition("predator_floor", 2 * a3 * s.alpha_u,
                  (d1 - a3 * s.beta_u) * _exp(B.H12) + (d2 - a3 * s.beta_u) * _exp(B.H22) + 0.0,
                  "(<d1> - <a3> beta_u) e^H12 + (<d2> - <a3> beta_u) e^H22 > 2 <a3> alpha_u"),
    ]
    return ConditionReport("existence of a positive periodic solution", entries, data={"bounds": B.as_dict()})


def _logistic_pair(params: CoefficientSet, n: int):
    out = []
    for species, a, b in ((1, params.a1, params.b11), (2, params.a2, params.b22)):
        if hat_mean(a) <= 0:
            raise DomainError(f"species {species}: mean growth rate <= 0, no logistic periodic solution")
        out.append(logistic_closed_form(a, b, n=n))
    return out


def check_E26(params: CoefficientSet, n: int = 512) -> ConditionReport:
    """Mutual invasibility of the two prey at their single-species cycles."""
    X1, X2 = _logistic_pair(params, n)
    entries = [
        Condition("prey1_invades", hat_mean(params.b12 * X2), hat_mean(params.a1),
                  "<a1> > <b12 X2>"),
        Condition("prey2_invades", hat_mean(params.b21 * X1), hat_mean(params.a2),
                  "<a2> > <b21 X1>"),
    ]
    return ConditionReport("boundary coexistence", entries)


def _sampled_boundary(orbit: PeriodicOrbit, n: int):
    t = np.arange(n) * (orbit.period / n)
    x = orbit.state_at(t)
    return (SampledPeriodicFunction(orbit.period, x[:, 0], "xbar1"),
            SampledPeriodicFunction(orbit.period, x[:, 1], "xbar2"))


def a12_function(params: CoefficientSet, orbit: PeriodicOrbit, n: int = 512) -> PeriodicFunction:
    """``A12(t) = max_{i != j} (a_ij + a_ji)^2 / (4 a_ii) - a_jj`` with ``a_ij = b_ij xbar_j``."""
    x1, x2 = _sampled_boundary(orbit, n)
    a11, a12 = params.b11 * x1, params.b12 * x2
    a21, a22 = params.b21 * x1, params.b22 * x2
    s = a12 + a21
    return maximum(s * s / (4.0 * a11) - a22, s * s / (4.0 * a22) - a11)


def boundary_orbit(params: CoefficientSet, tol: float = 1e-9,
                   cfg: IntegratorConfig | None = None) -> PeriodicOrbit:
    """Positive periodic orbit of the predator-free system, started from the logistic cycles."""
    X1 = logistic_closed_form(params.a1, params.b11, n=64)
    X2 = logistic_closed_form(params.a2, params.b22, n=64)
    return find_orbit(params, mode="boundary", tol=tol, cfg=cfg, x_init=[X1(0.0), X2(0.0), 0.0])


def check_E27(params: CoefficientSet, orbit: PeriodicOrbit | None = None,
              n: int = 512) -> ConditionReport:
    """Global stability criterion ``<A12> < 0`` for the boundary cycle.

    When ``orbit`` is omitted, boundary coexistence is checked first and the boundary orbit
    is solved for.
    """
    if orbit is None:
        e26 = check_E26(params, n)
        if not e26.verdict:
            raise DomainError("boundary coexistence conditions fail; no positive boundary cycle to test")
        orbit = boundary_orbit(params)
    elif orbit.mode != "boundary":
        raise DomainError(f"expected a boundary orbit, got mode {orbit.mode!r}")
    A = a12_function(params, orbit, n)
    t = A.grid(n)
    mean = hat_mean(A)
    entries = [Condition("A12_mean_negative", mean, 0.0, "<A12> < 0")]
    return ConditionReport("boundary stability", entries,
                           data={"A12_mean": mean, "A12_max": float(np.max(A(t))),
                                 "A12_min": float(np.min(A(t))), "A12_t": t, "A12": A(t)})


@dataclass
class StabilityReport:
    """Pointwise hypotheses for global attraction to ``(xbar1, xbar2, 0)``."""

    hypothesis_i: bool
    hypothesis_ii: bool
    hypothesis_iii: bool
    margins: dict
    extremes: dict
    mu1: float
    A12_mean: float | None = None
    A12_t: np.ndarray | None = None
    A12: np.ndarray | None = None

    def to_record(self) -> dict:
        return {"hypothesis_i": self.hypothesis_i, "hypothesis_ii": self.hypothesis_ii,
                "hypothesis_iii": self.hypothesis_iii, "margins": self.margins,
                "extremes": self.extremes, "mu1": self.mu1, "A12_mean": self.A12_mean}

    def to_text(self) -> str:
        def yn(v):
            return "holds" if v else "fails"
        lines = [
            "boundary attraction hypotheses (pointwise in t)",
            f"  (i)   {yn(self.hypothesis_i)}   b_ij < b_jj and c1+c2+d1+d2 < beta a3",
            f"  (ii)  {yn(self.hypothesis_ii)}   c1+c2+d1+d2 < beta a3",
            f"  (iii) {yn(self.hypothesis_iii)}   d1+d2 < beta a3",
        ]
        lines += [f"  margin {k:<18} {v:+.9g}" for k, v in self.margins.items()]
        lines += [f"  {k:<25} {v:.9g}" for k, v in self.extremes.items()]
        lines.append(f"  mu1                       {self.mu1:+.9g}")
        if self.A12_mean is not None:
            lines.append(f"  <A12>                     {self.A12_mean:+.9g}")
        return "\n".join(lines)


def check_thm2(params: CoefficientSet, orbit: PeriodicOrbit | None = None,
               with_a12: bool = True) -> StabilityReport:
    """Evaluate the three attraction hypotheses as inequalities for every ``t``.

    Margins are minima over one period of the gap (larger minus smaller).
    ``mu1`` is minus the largest value over the period of
    ``(c1+c2+d1+d2 - beta a3)/beta`` and of ``b_ij - b_jj``.
    """
    p = params
    cd = p.c1 + p.c2 + p.d1 + p.d2
    dd = p.d1 + p.d2
    ba3 = p.beta * p.a3
    margins = {
        "b22-b12": argmin(p.b22 - p.b12)[1],
        "b11-b21": argmin(p.b11 - p.b21)[1],
        "beta*a3-(c+d)": argmin(ba3 - cd)[1],
        "beta*a3-(d1+d2)": argmin(ba3 - dd)[1],
    }
    extremes = {
        "min beta*a3": sup_inf(ba3)[1],
        "max c1+c2+d1+d2": sup_inf(cd)[0],
        "max d1+d2": sup_inf(dd)[0],
    }
    worst = max(argmax((cd - ba3) / p.beta)[1], argmax(p.b12 - p.b22)[1],
                argmax(p.b21 - p.b11)[1])
    report = StabilityReport(
        hypothesis_i=margins["b22-b12"] > 0 and margins["b11-b21"] > 0 and margins["beta*a3-(c+d)"] > 0,
        hypothesis_ii=margins["beta*a3-(c+d)"] > 0,
        hypothesis_iii=margins["beta*a3-(d1+d2)"] > 0,
        margins=margins, extremes=extremes, mu1=-worst,
    )
    if with_a12:
        try:
            e27 = check_E27(p, orbit)
        except DomainError:
            return report
        report.A12_mean = e27.data["A12_mean"]
        report.A12_t = e27.data["A12_t"]
        report.A12 = e27.data["A12"]
    return report


def lyapunov_V(x, xbar):
    """``|ln x1 - ln xbar1| + |ln x2 - ln xbar2| + x3``; vectorized over leading axes."""
    x = np.asarray(x, dtype=float)
    xbar = np.asarray(xbar, dtype=float)
    if np.any(x[..., :2] <= 0) or np.any(xbar[..., :2] <= 0):
        raise DomainError("Lyapunov function needs strictly positive prey densities")
    if np.any(x[..., 2] < 0):
        raise DomainError("predator density must be nonnegative")
    v = (np.abs(np.log(x[..., 0]) - np.log(xbar[..., 0]))
         + np.abs(np.log(x[..., 1]) - np.log(xbar[..., 1])) + x[..., 2])
    return float(v) if v.ndim == 0 else v


def dplusV_bound(params: CoefficientSet, t, x, xbar):
    """Upper bound on the right derivative of :func:`lyapunov_V` at ``(t, x)``.

    ``sum_{i != j} (b_ij - b_jj)|x_j - xbar_j| + (c1+c2+d1+d2 - beta a3) x3 / beta``.
    """
    p = params
    x = np.asarray(x, dtype=float)
    xbar = np.asarray(xbar, dtype=float)
    e1 = np.abs(x[..., 0] - xbar[..., 0])
    e2 = np.abs(x[..., 1] - xbar[..., 1])
    beta = p.beta(t)
    cd = p.c1(t) + p.c2(t) + p.d1(t) + p.d2(t)
    out = ((p.b12(t) - p.b22(t)) * e2 + (p.b21(t) - p.b11(t)) * e1
           + (cd - beta * p.a3(t)) * x[..., 2] / beta)
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class AttractionReport:
    t: np.ndarray
    V: np.ndarray
    delta: np.ndarray
    bound: np.ndarray
    dVdt: np.ndarray
    admissible: np.ndarray
    max_increment: float
    cumulative_drift: float
    terminal_delta: float
    worst_excess: float
    drift_tol: float
    derivative_tol: float

    @property
    def monotone(self) -> bool:
        return self.cumulative_drift <= self.drift_tol

    @property
    def derivative_ok(self) -> bool:
        return self.worst_excess <= self.derivative_tol

    def to_record(self) -> dict:
        return {"monotone": self.monotone, "derivative_ok": self.derivative_ok,
                "max_increment": self.max_increment, "cumulative_drift": self.cumulative_drift,
                "terminal_delta": self.terminal_delta, "worst_derivative_excess": self.worst_excess,
                "admissible_points": int(self.admissible.sum()), "samples": int(self.t.size)}

    def to_text(self) -> str:
        r = self.to_record()
        return "\n".join(["Lyapunov monitor"] + [f"  {k:<24} {v}" for k, v in r.items()])


def verify_attraction(params: CoefficientSet, traj: Trajectory, orbit: PeriodicOrbit,
                      samples_per_period: int = 64, fd_step: float = 1e-5,
                      drift_tol: float = 1e-6, derivative_tol: float = 1e-6) -> AttractionReport:
    """Monitor ``V`` and ``sum |x_i - xbar_i|`` along ``traj`` against a boundary orbit.

    ``dV/dt`` is a central difference of width ``2*fd_step``; it is compared
    with :func:`dplusV_bound` only where neither prey difference changes sign
    within the stencil and both exceed ``KINK_TOL`` in size.
    """
    if orbit.mode != "boundary":
        raise DomainError(f"attraction is measured against a boundary orbit, got {orbit.mode!r}")
    if samples_per_period < 10:
        raise DomainError("need at least 10 samples per period")
    w = orbit.period
    n = int(round((traj.t_end - traj.t0) / w * samples_per_period))
    t = traj.t0 + np.arange(n + 1) * ((traj.t_end - traj.t0) / n)
    x = traj.sample(t)
    xb = orbit.state_at(t)
    V = lyapunov_V(x, xb)
    delta = np.abs(x - xb).sum(axis=1)
    bound = dplusV_bound(params, t, x, xb)

    tp = np.minimum(t + fd_step, traj.t_end)
    tm = np.maximum(t - fd_step, traj.t0)
    xp, xm = traj.sample(tp), traj.sample(tm)
    xbp, xbm = orbit.state_at(tp), orbit.state_at(tm)
    dVdt = (lyapunov_V(xp, xbp) - lyapunov_V(xm, xbm)) / (tp - tm)
    gp = xp[:, :2] - xbp[:, :2]
    gm = xm[:, :2] - xbm[:, :2]
    g0 = x[:, :2] - xb[:, :2]
    admissible = np.all((np.sign(gp) == np.sign(gm)) & (np.sign(g0) == np.sign(gp))
                        & (np.abs(g0) > KINK_TOL), axis=1)

    inc = np.diff(V)
    excess = (dVdt - bound)[admissible]
    return AttractionReport(
        t=t, V=V, delta=delta, bound=bound, dVdt=dVdt, admissible=admissible,
        max_increment=float(max(inc.max(initial=0.0), 0.0)),
        cumulative_drift=float(inc[inc > 0].sum()),
        terminal_delta=float(delta[-1]),
        worst_excess=float(excess.max()) if excess.size else -math.inf,
        drift_tol=drift_tol, derivative_tol=derivative_tol,
    )
