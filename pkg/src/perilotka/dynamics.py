"""Vector fields of the periodic two-prey / one-predator system.

State ``x = (x1, x2, x3)``: two competing prey and one predator.  The
predator takes prey ``i`` at the Beddington-DeAngelis rate

    c_i x_i x3 / (alpha + beta x_i + gamma x3)

and converts it at the same response with ``d_i`` in place of ``c_i``.
Fields return rates only; time stepping lives in :mod:`perilotka.integrator`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Callable

import numpy as np

from .coefficients import PeriodicCoefficient, check_positive
from .exceptions import DomainError

COEFFICIENT_NAMES = (
    "a1", "a2", "a3", "b11", "b12", "b21", "b22",
    "c1", "c2", "d1", "d2", "alpha", "beta", "gamma",
)

# active coordinates of each invariant subsystem
MODES = {
    "full": (0, 1, 2),
    "boundary": (0, 1),
    "logistic-1": (0,),
    "logistic-2": (1,),
}

LOG_OVERFLOW = 700.0


@dataclass(frozen=True)
class CoefficientSet:
    """The fourteen periodic coefficients of the model, sharing one period.

    Construction only enforces the common period.  Call
    :meth:`check_positive` (done by the scenario loader) to enforce strict
    positivity; degenerate sets with zero coefficients are still useful for
    testing sub-models.
    """

    a1: PeriodicCoefficient
    a2: PeriodicCoefficient
    a3: PeriodicCoefficient
    b11: PeriodicCoefficient
    b12: PeriodicCoefficient
    b21: PeriodicCoefficient
    b22: PeriodicCoefficient
    c1: PeriodicCoefficient
    c2: PeriodicCoefficient
    d1: PeriodicCoefficient
    d2: PeriodicCoefficient
    alpha: PeriodicCoefficient
    beta: PeriodicCoefficient
    gamma: PeriodicCoefficient

    def __post_init__(self):
        periods = {name: getattr(self, name).period for name in COEFFICIENT_NAMES}
        w = periods["a1"]
        bad = [n for n, p in periods.items() if not math.isclose(p, w, rel_tol=1e-12)]
        if bad:
            raise DomainError(f"coefficients {bad} do not share the period {w!r} of a1")
        # flattened form for fast scalar evaluation inside the integrator
        compiled = []
        freqs = set()
        for name in COEFFICIENT_NAMES:
            f = getattr(self, name)
            terms = tuple((h.k, h.sin, h.cos) for h in f.harmonics if h.sin or h.cos)
            freqs.update(k for k, _, _ in terms)
            compiled.append((f.mean, terms))
        object.__setattr__(self, "_compiled", tuple(compiled))
        object.__setattr__(self, "_harmonic_ks", tuple(sorted(freqs)))

    @property
    def period(self) -> float:
        return self.a1.period

    @classmethod
    def constant(cls, period: float = 1.0, **values: float) -> "CoefficientSet":
        """Set of constant coefficients; unspecified ones default to 1."""
        unknown = set(values) - set(COEFFICIENT_NAMES)
        if unknown:
            raise DomainError(f"unknown coefficient names {sorted(unknown)}")
        return cls(**{
            n: PeriodicCoefficient.constant(float(values.get(n, 1.0)), period)
            for n in COEFFICIENT_NAMES
        })

    def replace(self, **changes) -> "CoefficientSet":
        return replace(self, **changes)

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]

    def check_positive(self) -> None:
        """Raise :class:`DomainError` naming the first non-positive coefficient."""
        for name, f in self.items():
            ok, where = check_positive(f)
            if not ok:
                raise DomainError(f"coefficient {name} is not strictly positive (fails near t={where:.6g})")

    def values(self, t: float) -> tuple[float, ...]:
        """All fourteen coefficient values at scalar ``t``, in ``COEFFICIENT_NAMES`` order."""
        w = 2.0 * math.pi / self.period
        sc = {k: (math.sin(k * w * t), math.cos(k * w * t)) for k in self._harmonic_ks}
        out = []
        for mean, terms in self._compiled:
            v = mean
            for k, s, c in terms:
                sk, ck = sc[k]
                v += s * sk + c * ck
            out.append(v)
        return tuple(out)

    def to_dict(self) -> dict:
        return {name: f.to_dict() for name, f in self.items()}

    @classmethod
    def from_dict(cls, data: dict, period: float | None = None) -> "CoefficientSet":
        period = data.get("omega", period)
        missing = [n for n in COEFFICIENT_NAMES if n not in data]
        if missing:
            raise DomainError(f"missing coefficients {missing}")
        return cls(**{n: PeriodicCoefficient.from_dict(data[n], period) for n in COEFFICIENT_NAMES})


def bd_response(c, alpha, beta, gamma, t, prey, pred):
    """Beddington-DeAngelis term ``c*prey*pred / (alpha + beta*prey + gamma*pred)``."""
    return c(t) * prey * pred / (alpha(t) + beta(t) * prey + gamma(t) * pred)


def full_field(params: CoefficientSet, t: float, x) -> np.ndarray:
    a1, a2, a3, b11, b12, b21, b22, c1, c2, d1, d2, al, be, ga = params.values(t)
    x1, x2, x3 = (float(v) for v in x)
    den1 = al + be * x1 + ga * x3
    den2 = al + be * x2 + ga * x3
    return np.array([
        x1 * (a1 - b11 * x1 - b12 * x2) - c1 * x1 * x3 / den1,
        x2 * (a2 - b21 * x1 - b22 * x2) - c2 * x2 * x3 / den2,
        x3 * (-a3 + d1 * x1 / den1 + d2 * x2 / den2),
    ])


def full_jacobian(params: CoefficientSet, t: float, x) -> np.ndarray:
    """Analytic Jacobian of :func:`full_field` with respect to ``x``."""
    a1, a2, a3, b11, b12, b21, b22, c1, c2, d1, d2, al, be, ga = params.values(t)
    x1, x2, x3 = (float(v) for v in x)
    den1 = al + be * x1 + ga * x3
    den2 = al + be * x2 + ga * x3
    q1 = den1 * den1
    q2 = den2 * den2
    return np.array([
        [a1 - 2 * b11 * x1 - b12 * x2 - c1 * x3 * (al + ga * x3) / q1,
         -b12 * x1,
         -c1 * x1 * (al + be * x1) / q1],
        [-b21 * x2,
         a2 - b21 * x1 - 2 * b22 * x2 - c2 * x3 * (al + ga * x3) / q2,
         -c2 * x2 * (al + be * x2) / q2],
        [d1 * x3 * (al + ga * x3) / q1,
         d2 * x3 * (al + ga * x3) / q2,
         -a3 + d1 * x1 * (al + be * x1) / q1 + d2 * x2 * (al + be * x2) / q2],
    ])


def log_field(params: CoefficientSet, t: float, u) -> np.ndarray:
    """Right-hand side in log coordinates ``u_i = ln x_i``."""
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)) or np.any(np.abs(u) > LOG_OVERFLOW):
        raise DomainError(f"log-state {u.tolist()} outside |u| <= {LOG_OVERFLOW}")
    a1, a2, a3, b11, b12, b21, b22, c1, c2, d1, d2, al, be, ga = params.values(t)
    e1, e2, e3 = np.exp(u)
    den1 = al + be * e1 + ga * e3
    den2 = al + be * e2 + ga * e3
    return np.array([
        a1 - b11 * e1 - b12 * e2 - c1 * e3 / den1,
        a2 - b21 * e1 - b22 * e2 - c2 * e3 / den2,
        -a3 + d1 * e1 / den1 + d2 * e2 / den2,
    ])


def boundary_field(params: CoefficientSet, t: float, x) -> np.ndarray:
    """Two-prey competition system obtained with the predator absent."""
    a1, a2, _, b11, b12, b21, b22 = params.values(t)[:7]
    x1, x2 = (float(v) for v in x)
    return np.array([x1 * (a1 - b11 * x1 - b12 * x2), x2 * (a2 - b21 * x1 - b22 * x2)])


def logistic_field(a: PeriodicCoefficient, b: PeriodicCoefficient, t: float, X: float) -> float:
    return X * (a(t) - b(t) * X)


def subsystem(params: CoefficientSet, mode: str) -> tuple[Callable, Callable]:
    """``(field, jacobian)`` of the invariant subsystem named by ``mode``.

    Both callables take ``(t, y)`` with ``y`` of the subsystem's dimension.
    """
    try:
        active = MODES[mode]
    except KeyError:
        raise DomainError(f"unknown mode {mode!r}; expected one of {sorted(MODES)}") from None
    if mode == "full":
        return (lambda t, y: full_field(params, t, y)), (lambda t, y: full_jacobian(params, t, y))
    if mode == "boundary":
        return (lambda t, y: boundary_field(params, t, y)), (
            lambda t, y: full_jacobian(params, t, (y[0], y[1], 0.0))[:2, :2])
    i = active[0]
    a = params.a1 if i == 0 else params.a2
    b = params.b11 if i == 0 else params.b22

    def field(t, y):
        return np.array([logistic_field(a, b, t, float(y[0]))])

    def jac(t, y):
        return np.array([[a(t) - 2.0 * b(t) * float(y[0])]])

    return field, jac


def embed(y, mode: str) -> np.ndarray:
    """Place a subsystem state into the full three-dimensional state."""
    x = np.zeros(3)
    x[list(MODES[mode])] = y
    return x
