"""Periodic coefficient functions and their period statistics.

Every model parameter is a :class:`PeriodicCoefficient`, a truncated
trigonometric series

    f(t) = mean + sum_k [ s_k sin(k W t) + c_k cos(k W t) ],   W = 2 pi / period.

Coefficients combine pointwise with ``+ - * /`` (and :func:`maximum`) into
expression trees whose leaves may also be :class:`SampledPeriodicFunction`
objects, i.e. periodic cubic interpolants of tabulated values.  The three
statistics used throughout the analysis are the period average
(:func:`hat_mean`), the extremes (:func:`sup_inf`) and strict positivity
(:func:`check_positive`).
"""
from __future__ import annotations

import math
import operator
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .exceptions import DomainError, QuadratureError

EXTREMA_GRID = 4096
EXTREMA_TOL = 1e-10
QUAD_TOL = 1e-12
QUAD_MAX_DEPTH = 40
# |denominator| at or below this is treated as a division by zero
DIVISION_FLOOR = 1e-12

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class PeriodicFunction:
    """Base class: anything with a ``period`` that can be evaluated at ``t``.

    Subclasses implement ``__call__`` for scalar or array ``t``.  Arithmetic
    operators build :class:`CoefficientExpr` nodes.
    """

    period: float

    def __call__(self, t):  # pragma: no cover - abstract
        raise NotImplementedError

    def _wrap(self, other) -> "PeriodicFunction":
        if isinstance(other, PeriodicFunction):
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return PeriodicCoefficient.constant(float(other), self.period)
        return NotImplemented

    def _binary(self, op, other, reflected=False):
        other = self._wrap(other)
        if other is NotImplemented:
            return NotImplemented
        if reflected:
            return CoefficientExpr(op, other, self)
        return CoefficientExpr(op, self, other)

    def __add__(self, other):
        return self._binary("+", other)

    def __radd__(self, other):
        return self._binary("+", other, reflected=True)

    def __sub__(self, other):
        return self._binary("-", other)

    def __rsub__(self, other):
        return self._binary("-", other, reflected=True)

    def __mul__(self, other):
        return self._binary("*", other)

    def __rmul__(self, other):
        return self._binary("*", other, reflected=True)

    def __truediv__(self, other):
        return self._binary("/", other)

    def __rtruediv__(self, other):
        return self._binary("/", other, reflected=True)

    def __neg__(self):
        return self._binary("*", -1.0)

    def grid(self, n: int = EXTREMA_GRID) -> np.ndarray:
        """Uniform grid of ``n`` points on ``[0, period)``."""
        return np.arange(n) * (self.period / n)


@dataclass(frozen=True)
class Harmonic:
    k: int
    sin: float = 0.0
    cos: float = 0.0


@dataclass(frozen=True)
class PeriodicCoefficient(PeriodicFunction):
    """Truncated trigonometric series with period ``period``.

    Parameters
    ----------
    period : float
        Strictly positive period.
    mean : float
        Constant term, which is also the exact period average.
    harmonics : sequence of Harmonic
        ``Harmonic(k, sin, cos)`` adds ``sin*sin(kWt) + cos*cos(kWt)``.
    """

    period: float
    mean: float = 0.0
    harmonics: tuple[Harmonic, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not (self.period > 0 and math.isfinite(self.period)):
            raise DomainError(f"period must be positive and finite, got {self.period!r}")
        hs = tuple(h if isinstance(h, Harmonic) else Harmonic(*h) for h in self.harmonics)
        for h in hs:
            if int(h.k) != h.k or h.k < 1:
                raise DomainError(f"harmonic index must be a positive integer, got {h.k!r}")
        object.__setattr__(self, "harmonics", hs)
        object.__setattr__(self, "mean", float(self.mean))

    @classmethod
    def constant(cls, value: float, period: float) -> "PeriodicCoefficient":
        return cls(period, value, ())

    @classmethod
    def from_dict(cls, data: dict, period: float | None = None) -> "PeriodicCoefficient":
        """Parse ``{"mean": m, "harmonics": [{"k":1,"sin":s,"cos":c}], "omega": w}``.

        ``omega`` is the period.  When it is absent ``period`` is used.
        """
        w = data.get("omega", period)
        if w is None:
            raise DomainError("coefficient has no 'omega' and no default period")
        hs = tuple(
            Harmonic(int(h["k"]), float(h.get("sin", 0.0)), float(h.get("cos", 0.0)))
            for h in data.get("harmonics", ())
        )
        return cls(float(w), float(data.get("mean", 0.0)), hs)

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "harmonics": [{"k": h.k, "sin": h.sin, "cos": h.cos} for h in self.harmonics],
            "omega": self.period,
        }

    @property
    def frequency(self) -> float:
        return 2.0 * math.pi / self.period

    @property
    def is_constant(self) -> bool:
        return all(h.sin == 0.0 and h.cos == 0.0 for h in self.harmonics)

    def __call__(self, t):
        w = self.frequency
        if np.ndim(t) == 0:
            t = float(t)
            v = self.mean
            for h in self.harmonics:
                kt = h.k * w * t
                v += h.sin * math.sin(kt) + h.cos * math.cos(kt)
            return v
        t = np.asarray(t, dtype=float)
        v = np.full(t.shape, self.mean)
        for h in self.harmonics:
            kt = h.k * w * t
            v += h.sin * np.sin(kt) + h.cos * np.cos(kt)
        return v

    def antiderivative(self, t):
        """Exact primitive ``F`` with ``F(0) = 0``."""
        w = self.frequency
        t = np.asarray(t, dtype=float) if np.ndim(t) else float(t)
        sin, cos = (np.sin, np.cos) if np.ndim(t) else (math.sin, math.cos)
        v = self.mean * t
        for h in self.harmonics:
            kw = h.k * w
            v = v + (h.sin * (1.0 - cos(kw * t)) + h.cos * sin(kw * t)) / kw
        return v

    def integral(self, t0, t1):
        """Exact integral over ``[t0, t1]``."""
        return self.antiderivative(t1) - self.antiderivative(t0)

    def __repr__(self):
        terms = [f"{self.mean:g}"]
        for h in self.harmonics:
            if h.sin:
                terms.append(f"{h.sin:+g}*sin({h.k}Wt)")
            if h.cos:
                terms.append(f"{h.cos:+g}*cos({h.k}Wt)")
        return f"PeriodicCoefficient({' '.join(terms)}, period={self.period:.12g})"


class SampledPeriodicFunction(PeriodicFunction):
    """Periodic cubic spline through ``values`` on a uniform grid.

    ``values[i]`` is the function at ``i * period / len(values)``; the value
    at ``period`` is taken to equal ``values[0]``.
    """

    MIN_POINTS = 16

    def __init__(self, period: float, values: Sequence[float], name: str = "sampled"):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size < self.MIN_POINTS:
            raise DomainError(f"need at least {self.MIN_POINTS} samples, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DomainError("sampled values must be finite")
        if not period > 0:
            raise DomainError(f"period must be positive, got {period!r}")
        self.period = float(period)
        self.values = values
        self.name = name
        knots = np.arange(values.size + 1) * (self.period / values.size)
        self._spline = CubicSpline(knots, np.append(values, values[0]), bc_type="periodic")

    @classmethod
    def from_callable(cls, func: Callable, period: float, n: int = 512, name: str = "sampled"):
        t = np.arange(n) * (period / n)
        return cls(period, np.asarray(func(t), dtype=float), name=name)

    @property
    def knots(self) -> np.ndarray:
        return np.arange(self.values.size) * (self.period / self.values.size)

    def __call__(self, t):
        tt = np.mod(t, self.period)
        out = self._spline(tt)
        return float(out) if np.ndim(t) == 0 else out

    def derivative(self, t):
        tt = np.mod(t, self.period)
        out = self._spline(tt, 1)
        return float(out) if np.ndim(t) == 0 else out

    def __repr__(self):
        return f"SampledPeriodicFunction({self.name}, n={self.values.size}, period={self.period:.12g})"


_OPS = {
    "+": operator.add,
    "-": operator.sub,
    "*": operator.mul,
    "/": operator.truediv,
    "max": np.maximum,
}


class CoefficientExpr(PeriodicFunction):
    """Pointwise arithmetic node over two periodic operands.

    Division nodes reject denominators that come within ``DIVISION_FLOOR`` of
    zero on a refined grid at construction time.
    """

    def __init__(self, op: str, left: PeriodicFunction, right: PeriodicFunction):
        if op not in _OPS:
            raise DomainError(f"unknown operator {op!r}")
        if not math.isclose(left.period, right.period, rel_tol=1e-12, abs_tol=0.0):
            raise DomainError(
                f"operands have different periods: {left.period!r} vs {right.period!r}"
            )
        self.op = op
        self.left = left
        self.right = right
        self.period = left.period
        if op == "/":
            den = np.abs(right(right.grid(4 * EXTREMA_GRID)))
            if den.min() <= DIVISION_FLOOR:
                raise DomainError(f"denominator of {self!r} approaches zero (min |value| {den.min():.3g})")

    def __call__(self, t):
        a = self.left(t)
        b = self.right(t)
        if self.op == "/" and np.any(np.abs(b) <= DIVISION_FLOOR):
            raise DomainError(f"division by near-zero in {self!r}")
        return _OPS[self.op](a, b)

    def __repr__(self):
        if self.op == "max":
            return f"max({self.left!r}, {self.right!r})"
        return f"({self.left!r} {self.op} {self.right!r})"


def maximum(f: PeriodicFunction, g: PeriodicFunction) -> CoefficientExpr:
    """Pointwise maximum of two periodic functions."""
    return CoefficientExpr("max", f, f._wrap(g))


def eval_at(f: PeriodicFunction, t):
    """Evaluate ``f`` at ``t`` (scalar or array)."""
    return f(t)


def adaptive_simpson(func: Callable, a: float, b: float, tol: float = QUAD_TOL,
                     max_depth: int = QUAD_MAX_DEPTH) -> float:
    """Integrate ``func`` over ``[a, b]`` by adaptive Simpson bisection.

    ``func`` must accept arrays.  Each level refines all unconverged panels at
    once; a panel of width ``w`` is accepted when its Richardson error
    estimate is below ``tol * w / (b - a)``.

    Raises
    ------
    QuadratureError
        If panels remain unconverged after ``max_depth`` bisections.
    """
    if b == a:
        return 0.0
    width = b - a
    lo = np.array([a])
    hi = np.array([b])
    flo, fhi = (np.atleast_1d(func(np.array([a, b]))).astype(float))
    flo, fhi = np.array([flo]), np.array([fhi])
    fmid = np.atleast_1d(func((lo + hi) / 2)).astype(float)
    whole = (hi - lo) / 6.0 * (flo + 4 * fmid + fhi)
    total = 0.0
    for _ in range(max_depth):
        mid = (lo + hi) / 2
        lq = (lo + mid) / 2
        rq = (mid + hi) / 2
        vals = np.atleast_1d(func(np.concatenate([lq, rq]))).astype(float)
        flq, frq = vals[: lo.size], vals[lo.size:]
        left = (mid - lo) / 6.0 * (flo + 4 * flq + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4 * frq + fhi)
        diff = left + right - whole
        ok = np.abs(diff) <= 15.0 * tol * (hi - lo) / abs(width)
        total += float(np.sum((left + right + diff / 15.0)[ok]))
        keep = ~ok
        if not keep.any():
            return total
        lo, mid, hi = lo[keep], mid[keep], hi[keep]
        flo, fmid, fhi = flo[keep], fmid[keep], fhi[keep]
        flq, frq = flq[keep], frq[keep]
        left, right = left[keep], right[keep]
        lo = np.concatenate([lo, mid])
        hi = np.concatenate([mid, hi])
        flo, fhi = np.concatenate([flo, fmid]), np.concatenate([fmid, fhi])
        fmid = np.concatenate([flq, frq])
        whole = np.concatenate([left, right])
    estimate = total + float(np.sum(whole))
    raise QuadratureError(
        f"adaptive Simpson did not converge after {max_depth} levels "
        f"({lo.size} panels left)", estimate=estimate
    )


def hat_mean(f: PeriodicFunction, tol: float = QUAD_TOL) -> float:
    """Period average ``(1/period) * integral_0^period f(t) dt``.

    Exact for a :class:`PeriodicCoefficient`; adaptive Simpson otherwise.
    """
    if isinstance(f, PeriodicCoefficient):
        return f.mean
    return adaptive_simpson(f, 0.0, f.period, tol * f.period) / f.period


def _golden_max(g: Callable[[float], float], lo: float, hi: float, tol: float) -> tuple[float, float]:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    gc, gd = g(c), g(d)
    while b - a > tol:
        if gc >= gd:
            b, d, gd = d, c, gc
            c = b - _GOLDEN * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + _GOLDEN * (b - a)
            gd = g(d)
    t = 0.5 * (a + b)
    return t, g(t)


def argmax(f: PeriodicFunction, n: int = EXTREMA_GRID, tol: float = EXTREMA_TOL,
           candidates: int = 4) -> tuple[float, float]:
    """Location and value of the global maximum over one period.

    Grid search at ``n`` points, then golden-section refinement of the best
    ``candidates`` grid-local maxima.
    """
    t = f.grid(n)
    v = np.asarray(f(t), dtype=float)
    is_peak = (v >= np.roll(v, 1)) & (v >= np.roll(v, -1))
    peaks = np.flatnonzero(is_peak)
    if peaks.size == 0:  # pragma: no cover - a periodic sequence always has one
        peaks = np.array([int(np.argmax(v))])
    peaks = peaks[np.argsort(v[peaks])[::-1][:candidates]]
    h = f.period / n
    best_t, best_v = float(t[peaks[0]]), float(v[peaks[0]])
    for i in peaks:
        ti, vi = _golden_max(lambda s: float(f(s)), t[i] - h, t[i] + h, tol)
        if vi > best_v:
            best_t, best_v = ti, vi
    return best_t % f.period, best_v


def argmin(f: PeriodicFunction, n: int = EXTREMA_GRID, tol: float = EXTREMA_TOL) -> tuple[float, float]:
    neg = _negated(f) if isinstance(f, PeriodicCoefficient) else -f
    t, v = argmax(neg, n, tol)
    return t, -v


def _negated(f: PeriodicCoefficient) -> PeriodicCoefficient:
    return PeriodicCoefficient(
        f.period, -f.mean, tuple(Harmonic(h.k, -h.sin, -h.cos) for h in f.harmonics)
    )


def sup_inf(f: PeriodicFunction) -> tuple[float, float]:
    """``(sup, inf)`` of ``f`` over one period."""
    if isinstance(f, PeriodicCoefficient) and f.is_constant:
        return f.mean, f.mean
    return argmax(f)[1], argmin(f)[1]


def check_positive(f: PeriodicFunction) -> tuple[bool, float | None]:
    """Whether ``inf f > 0``; on failure also return where the minimum sits."""
    if isinstance(f, PeriodicCoefficient) and f.is_constant:
        return (True, None) if f.mean > 0 else (False, 0.0)
    t, v = argmin(f)
    return (True, None) if v > 0 else (False, t)
