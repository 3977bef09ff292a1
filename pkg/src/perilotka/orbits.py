"""Periodic orbits as fixed points of the period map.

Orbits are anchored at ``t = 0``.  ``find_orbit`` runs damped Newton on
``G(x) = P(x) - x`` with a forward-difference Jacobian, falling back to
plain iteration of ``P`` when Newton stalls.  Floquet multipliers come from
the variational equations integrated along the converged orbit.
"""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .coefficients import PeriodicCoefficient, SampledPeriodicFunction, adaptive_simpson
from .dynamics import MODES, CoefficientSet, embed, full_field, full_jacobian, subsystem
from .exceptions import DomainError, IntegrationError, OrbitError
from .integrator import IntegratorConfig, Trajectory, flow, integrate

log = logging.getLogger(__name__)

ORBIT_CONFIG = IntegratorConfig(rtol=1e-11, atol=1e-13)
NEWTON_MAX_ITER = 50
FALLBACK_PERIODS = 500
WARMUP_PERIODS = 40


@dataclass
class PeriodicOrbit:
    """A converged periodic solution of one invariant subsystem.

    Attributes
    ----------
    mode : str
        One of ``full``, ``boundary``, ``logistic-1``, ``logistic-2``.
    anchor : ndarray, shape (3,)
        State at ``t = 0``; inactive coordinates are exactly zero.
    trajectory : Trajectory
        One period of the orbit in full three-dimensional coordinates.
    residual : float
        ``max |P(anchor) - anchor|`` over the active coordinates.
    multipliers : ndarray of complex
        Floquet multipliers of the subsystem (one per active coordinate).
    monodromy : ndarray
        Subsystem monodromy matrix.
    """

    mode: str
    anchor: np.ndarray
    period: float
    trajectory: Trajectory
    residual: float
    multipliers: np.ndarray = field(default_factory=lambda: np.empty(0, complex))
    monodromy: np.ndarray | None = None
    iterations: int = 0
    method: str = "newton"

    @property
    def dim(self) -> int:
        return len(MODES[self.mode])

    @property
    def active(self) -> tuple[int, ...]:
        return MODES[self.mode]

    def state_at(self, t):
        """Orbit state at any time, using periodicity."""
        return self.trajectory.sample(np.mod(t, self.period))

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(self.multipliers))) if self.multipliers.size else math.nan

    def to_record(self) -> dict:
        return {
            "mode": self.mode,
            "period": self.period,
            "anchor": self.anchor.tolist(),
            "residual": self.residual,
            "multipliers": [[float(z.real), float(z.imag)] for z in self.multipliers],
            "spectral_radius": self.spectral_radius(),
            "iterations": self.iterations,
            "method": self.method,
        }

    def to_text(self) -> str:
        lines = [
            f"periodic orbit ({self.mode}, period {self.period:.12g})",
            "  anchor      " + ", ".join(f"{v:.12g}" for v in self.anchor),
            f"  residual    {self.residual:.3e}",
            "  multipliers " + ", ".join(f"{z.real:.9g}{z.imag:+.3g}j" for z in self.multipliers),
            f"  |mu|max     {self.spectral_radius():.9g}",
            f"  solved by   {self.method} ({self.iterations} iterations)",
        ]
        return "\n".join(lines)


def poincare(params: CoefficientSet, x0, cfg: IntegratorConfig | None = None,
             mode: str = "full") -> np.ndarray:
    """Period map: the state at ``t = period`` of the solution through ``x0`` at 0.

    ``x0`` has the dimension of the chosen subsystem.
    """
    f, _ = subsystem(params, mode)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != len(MODES[mode]):
        raise DomainError(f"mode {mode} expects {len(MODES[mode])} components, got {x0.size}")
    if np.any(x0 < 0):
        raise DomainError(f"period map needs a nonnegative state, got {x0.tolist()}")
    return flow(f, 0.0, x0, params.period, cfg)


def _check_guess(guess, mode):
    g = np.asarray(guess, dtype=float).reshape(-1)
    active = MODES[mode]
    if g.size == 3:
        inactive = [i for i in range(3) if i not in active]
        if np.any(g[inactive] != 0):
            raise DomainError(
                f"mode {mode} needs zeros in coordinates {[i + 1 for i in inactive]}, got {g.tolist()}"
            )
        g = g[list(active)]
    elif g.size != len(active):
        raise DomainError(f"guess for mode {mode} must have 3 or {len(active)} components")
    if np.any(g <= 0):
        raise DomainError(f"guess must be strictly positive in the active coordinates, got {g.tolist()}")
    return g


def _newton(P, x, tol, max_iter, polish=2):
    """Damped Newton on G(x) = P(x) - x.  Returns (x, |G|, iterations, converged).

    Once ``|G| < tol``, up to ``polish`` further full steps are taken while
    each at least halves the residual.
    """
    g = P(x) - x
    res = np.max(np.abs(g))
    it = 0
    extra = 0
    for it in range(1, max_iter + 1):
        if res < tol:
            if extra == polish:
                return x, res, it - 1, True
            extra += 1
        n = x.size
        J = np.empty((n, n))
        for j in range(n):
            step = max(1e-7, 1e-7 * abs(x[j]))
            xp = x.copy()
            xp[j] += step
            J[:, j] = (P(xp) - xp - g) / step
        try:
            delta = np.linalg.solve(J, -g)
        except np.linalg.LinAlgError:
            return x, res, it, res < tol
        if extra:
            trial = x + delta
            try:
                gt = P(trial) - trial
            except IntegrationError:
                return x, res, it, True
            if not (np.all(trial > 0) and np.max(np.abs(gt)) < res / 2):
                return x, res, it, True
        else:
            lam = 1.0
            while True:
                trial = x + lam * delta
                if np.all(trial > 0):
                    try:
                        gt = P(trial) - trial
                    except IntegrationError:
                        gt = None
                    if gt is not None and np.max(np.abs(gt)) < res:
                        break
                lam *= 0.5
                if lam < 1e-10:
                    return x, res, it, False
        x, g = trial, gt
        res = np.max(np.abs(g))
    return x, res, max_iter, res < tol


def find_orbit(params: CoefficientSet, guess=None, mode: str = "full", tol: float = 1e-9,
               cfg: IntegratorConfig | None = None, x_init=None) -> PeriodicOrbit:
    """Locate a periodic orbit of the subsystem selected by ``mode``.

    Parameters
    ----------
    guess : array_like, optional
        Starting point, either in full coordinates (inactive ones zero) or
        in subsystem coordinates.  When omitted, ``x_init`` (default all
        ones) is advanced ``WARMUP_PERIODS`` periods first.
    tol : float
        Acceptance threshold on ``max |P(x) - x|``.

    Raises
    ------
    OrbitError
        If neither Newton nor direct iteration reaches ``tol``.
    """
    if mode not in MODES:
        raise DomainError(f"unknown mode {mode!r}")
    cfg = cfg or ORBIT_CONFIG
    w = params.period
    f, _ = subsystem(params, mode)

    def P(x):
        return flow(f, 0.0, x, w, cfg)

    if guess is None:
        start = np.ones(3) if x_init is None else np.asarray(x_init, dtype=float)
        start = _check_guess(embed(start[list(MODES[mode])], mode), mode)
        x = flow(f, 0.0, start, WARMUP_PERIODS * w, cfg)
        if np.any(x <= 0):
            raise OrbitError("warm-up trajectory left the positive cone", best=x)
    else:
        x = _check_guess(guess, mode)

    x, res, iters, ok = _newton(P, x, tol, NEWTON_MAX_ITER)
    method = "newton"
    if not ok:
        log.info("Newton stalled at residual %.3e; iterating the period map", res)
        y = x
        for k in range(FALLBACK_PERIODS):
            y_next = P(y)
            r = np.max(np.abs(y_next - y))
            y = y_next
            if r < tol:
                break
        x2, res2, it2, ok = _newton(P, y, tol, NEWTON_MAX_ITER)
        iters += k + 1 + it2
        method = "newton+iteration"
        if res2 < res:
            x, res = x2, res2
        if not ok:
            raise OrbitError(f"no periodic orbit found (best residual {res:.3e})",
                             best=embed(x, mode), residual=res)
    res = float(np.max(np.abs(P(x) - x)))
    anchor = embed(x, mode)
    traj = integrate(lambda t, y: full_field(params, t, y), 0.0, anchor, w, cfg)
    orbit = PeriodicOrbit(mode=mode, anchor=anchor, period=w, trajectory=traj,
                          residual=res, iterations=iters, method=method)
    M, mults = monodromy(params, orbit, cfg=cfg)
    orbit.monodromy = M
    orbit.multipliers = mults
    return orbit


def monodromy(params: CoefficientSet, orbit: PeriodicOrbit, *, embedded: bool = False,
              cfg: IntegratorConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Monodromy matrix and Floquet multipliers along ``orbit``.

    Integrates ``Phi' = J(t, x(t)) Phi``, ``Phi(0) = I``, jointly with the
    orbit.  With ``embedded=True`` the linearization of the full
    three-dimensional system is used, which adds the transverse multipliers
    of a boundary orbit.
    """
    if orbit.residual > 1e-6:
        raise DomainError(f"orbit residual {orbit.residual:.3e} too large for a monodromy computation")
    cfg = cfg or ORBIT_CONFIG
    idx = [0, 1, 2] if embedded else list(orbit.active)
    d = len(idx)

    def rhs(t, z):
        x = z[:3]
        J = full_jacobian(params, t, x)[np.ix_(idx, idx)]
        phi = z[3:].reshape(d, d)
        return np.concatenate([full_field(params, t, x), (J @ phi).ravel()])

    z0 = np.concatenate([orbit.anchor, np.eye(d).ravel()])
    mask = np.r_[np.ones(3, bool), np.zeros(d * d, bool)]
    zT = integrate(rhs, 0.0, z0, orbit.period, cfg, nonneg=mask, dense=False).final
    M = zT[3:].reshape(d, d)
    return M, np.linalg.eigvals(M)


def trace_integral(params: CoefficientSet, orbit: PeriodicOrbit, *, embedded: bool = False) -> float:
    """``integral_0^period trace J(t, x(t)) dt`` by adaptive Gauss-Kronrod quadrature.

    By Liouville's formula ``det(monodromy) = exp(trace_integral)``.
    """
    idx = [0, 1, 2] if embedded else list(orbit.active)

    def tr(t):
        return float(np.trace(full_jacobian(params, t, orbit.state_at(t))[np.ix_(idx, idx)]))

    val, _ = quad(tr, 0.0, orbit.period, epsabs=1e-13, epsrel=1e-13, limit=500)
    return val


def period_balance(params: CoefficientSet, orbit: PeriodicOrbit) -> tuple[np.ndarray, np.ndarray]:
    """Mean growth against mean losses over one period of a full orbit.

    Each per-capita rate of a periodic solution integrates to zero over a
    period, so ``mean(a_i) * period`` must equal the period integral of the
    density-dependent terms (for the predator, of the two conversion terms).

    Returns
    -------
    lhs, rhs : ndarray of shape (3,)
        ``mean(a_i) * period`` and the matching integrals.
    """
    w = orbit.period
    p = params

    def terms(t):
        x1, x2, x3 = orbit.state_at(t)
        al, be, ga = p.alpha(t), p.beta(t), p.gamma(t)
        r1 = al + be * x1 + ga * x3
        r2 = al + be * x2 + ga * x3
        return np.array([
            p.b11(t) * x1 + p.b12(t) * x2 + p.c1(t) * x3 / r1,
            p.b21(t) * x1 + p.b22(t) * x2 + p.c2(t) * x3 / r2,
            p.d1(t) * x1 / r1 + p.d2(t) * x2 / r2,
        ])

    rhs = np.array([quad(lambda t, i=i: terms(t)[i], 0.0, w, epsabs=1e-12, epsrel=1e-12, limit=500)[0]
                    for i in range(3)])
    lhs = np.array([p.a1.mean, p.a2.mean, p.a3.mean]) * w
    return lhs, rhs


def logistic_value(a: PeriodicCoefficient, b: PeriodicCoefficient, t: float,
                   tol: float = 1e-11) -> float:
    """Closed-form positive periodic solution of ``X' = X (a - b X)`` at ``t``.

    ``X(t) = (exp(int_0^w a) - 1) / int_t^{t+w} b(s) exp(int_t^s a) ds``.
    Inner integrals are exact for trigonometric ``a``.
    """
    w = a.period
    numerator = math.expm1(a.integral(0.0, w))
    At = a.antiderivative(t)
    den = adaptive_simpson(lambda s: b(s) * np.exp(a.antiderivative(s) - At), t, t + w, tol)
    return numerator / den


@functools.lru_cache(maxsize=32)
def logistic_closed_form(a: PeriodicCoefficient, b: PeriodicCoefficient, n: int = 512,
                         tol: float = 1e-11) -> SampledPeriodicFunction:
    """Tabulate :func:`logistic_value` on ``n`` uniform points over a period.

    Raises
    ------
    DomainError
        When the mean growth rate is not positive; then no positive periodic
        solution exists.
    """
    if a.mean <= 0:
        raise DomainError(f"mean growth rate {a.mean} <= 0: no positive periodic solution")
    if not math.isclose(a.period, b.period, rel_tol=1e-12):
        raise DomainError("growth and self-limitation coefficients differ in period")
    t = np.arange(n) * (a.period / n)
    vals = np.array([logistic_value(a, b, ti, tol) for ti in t])
    if np.any(vals <= 0):
        raise DomainError("closed-form logistic solution is not positive; check b > 0")
    return SampledPeriodicFunction(a.period, vals, name="logistic")
