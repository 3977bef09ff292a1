"""Adaptive Dormand-Prince 5(4) integration with dense output.

The population fields leave every coordinate plane invariant, so a
component can only go negative through roundoff.  Accepted states with a
component in ``(-snap, 0)`` have it set to exactly zero.  Deeper negative
excursions reject the step instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import DomainError, IntegrationError

# Dormand & Prince (1980), with Shampine's free quartic interpolant
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_ERR_EXPONENT = -1.0 / 5.0


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and limits for :func:`integrate`."""

    rtol: float = 1e-9
    atol: float = 1e-11
    first_step: float | None = None
    max_steps: int = 1_000_000
    snap: float = 1e-13
    max_step: float = math.inf

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise DomainError(f"tolerances must be positive (rtol={self.rtol}, atol={self.atol})")
        if self.max_steps < 1:
            raise DomainError("max_steps must be at least 1")
        if self.snap < 0:
            raise DomainError("snap threshold must be nonnegative")
        if self.first_step is not None and not self.first_step > 0:
            raise DomainError("first_step must be positive")

    def tightened(self, factor: float) -> "IntegratorConfig":
        return IntegratorConfig(self.rtol * factor, self.atol * factor, self.first_step,
                                self.max_steps, self.snap, self.max_step)


@dataclass(frozen=True)
class Trajectory:
    """Accepted step endpoints plus the stage slopes needed for interpolation.

    ``stages[i]`` holds the seven stage derivatives of the step from
    ``t[i]`` to ``t[i+1]``; it is ``None`` when dense output was not kept.
    """

    t: np.ndarray
    y: np.ndarray
    stages: np.ndarray | None
    nonneg: np.ndarray
    n_accepted: int = 0
    n_rejected: int = 0
    n_evals: int = 0
    rtol: float = 0.0
    atol: float = 0.0
    stats: dict = field(default_factory=dict)

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def final(self) -> np.ndarray:
        return self.y[-1].copy()

    @property
    def dim(self) -> int:
        return self.y.shape[1]

    def sample(self, t):
        """Interpolated state(s) at ``t``; see :func:`sample`."""
        return sample(self, t)

    __call__ = sample


def _rms(v: np.ndarray) -> float:
    return math.sqrt(float(np.dot(v, v)) / v.size)


def _initial_step(fun, t0, y0, f0, direction_span, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    y1 = y0 + h0 * f0
    f1 = fun(t0 + h0, y1)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 5.0)
    return min(100 * h0, h1, direction_span)


def integrate(field: Callable, t0: float, x0, t_end: float,
              cfg: IntegratorConfig | None = None, *, nonneg=True,
              dense: bool = True) -> Trajectory:
    """Integrate ``y' = field(t, y)`` from ``t0`` to ``t_end``.

    Parameters
    ----------
    field : callable
        ``field(t, y) -> ndarray`` of the same shape as ``y``.
    t0, t_end : float
        Time span, ``t_end > t0``.
    x0 : array_like
        Initial state.
    cfg : IntegratorConfig, optional
    nonneg : bool or array of bool
        Components subject to snap-to-zero (all of them by default).
    dense : bool
        Keep stage data for interpolation between step endpoints.

    Raises
    ------
    IntegrationError
        On step-size underflow or when ``cfg.max_steps`` is exhausted.  The
        partial trajectory is attached.
    """
    cfg = cfg or IntegratorConfig()
    y = np.array(x0, dtype=float).reshape(-1)
    d = y.size
    mask = np.broadcast_to(np.asarray(nonneg, dtype=bool), (d,)).copy()
    if not t_end > t0:
        raise DomainError(f"t_end ({t_end}) must exceed t0 ({t0})")
    if not np.all(np.isfinite(y)):
        raise DomainError("initial state must be finite")
    if np.any(y[mask] < 0):
        raise DomainError(f"initial state {y.tolist()} has negative constrained components")

    rtol, atol = cfg.rtol, cfg.atol
    t = float(t0)
    ts = [t]
    ys = [y.copy()]
    ks: list[np.ndarray] = []
    K = np.empty((7, d))
    f = np.asarray(field(t, y), dtype=float)
    n_evals = 1
    h = cfg.first_step or _initial_step(field, t, y, f, t_end - t, rtol, atol)
    n_evals += 0 if cfg.first_step else 1
    h = min(h, cfg.max_step)
    n_acc = n_rej = 0
    prev_rejected = False

    def partial(msg):
        traj = _build(ts, ys, ks if dense else None, mask, n_acc, n_rej, n_evals, cfg)
        return IntegrationError(msg, traj)

    while t < t_end:
        if n_acc >= cfg.max_steps:
            raise partial(f"max_steps={cfg.max_steps} exhausted at t={t}")
        min_h = 10.0 * np.spacing(t)
        if h < min_h:
            raise partial(f"step size underflow at t={t} (h={h:.3e})")
        last = t + h >= t_end - min_h
        if last:
            h = t_end - t
        K[0] = f
        for s in range(1, 6):
            K[s] = field(t + _C[s] * h, y + h * (_A[s] @ K[:s]))
        y_new = y + h * (_B @ K[:6])
        K[6] = field(t + h, y_new)
        n_evals += 6
        err = h * (_E @ K)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = _rms(err / scale)
        neg = mask & (y_new < 0)
        if err_norm <= 1.0 and not np.any(y_new[neg] <= -cfg.snap):
            if np.any(neg):
                y_new[neg] = 0.0
                K[6] = field(t + h, y_new)
                n_evals += 1
            t = t_end if last else t + h
            y = y_new
            f = K[6].copy()
            ts.append(t)
            ys.append(y.copy())
            if dense:
                ks.append(K.copy())
            n_acc += 1
            factor = _MAX_FACTOR if err_norm == 0 else min(_MAX_FACTOR, _SAFETY * err_norm ** _ERR_EXPONENT)
            if prev_rejected:
                factor = min(1.0, factor)
            h = min(h * factor, cfg.max_step)
            prev_rejected = False
        else:
            if err_norm > 1.0:
                h *= max(_MIN_FACTOR, _SAFETY * err_norm ** _ERR_EXPONENT)
            else:
                h *= 0.5
            n_rej += 1
            prev_rejected = True
    return _build(ts, ys, ks if dense else None, mask, n_acc, n_rej, n_evals, cfg)


def _build(ts, ys, ks, mask, n_acc, n_rej, n_evals, cfg) -> Trajectory:
    stages = np.array(ks) if ks is not None and ks else None
    return Trajectory(
        t=np.array(ts), y=np.array(ys), stages=stages, nonneg=mask,
        n_accepted=n_acc, n_rejected=n_rej, n_evals=n_evals,
        rtol=cfg.rtol, atol=cfg.atol,
    )


def flow(field: Callable, t0: float, x0, duration: float,
         cfg: IntegratorConfig | None = None, *, nonneg=True) -> np.ndarray:
    """State reached from ``x0`` at ``t0`` after ``duration``."""
    if duration == 0:
        return np.array(x0, dtype=float).reshape(-1)
    if duration < 0:
        raise DomainError("duration must be nonnegative")
    return integrate(field, t0, x0, t0 + duration, cfg, nonneg=nonneg, dense=False).final


def sample(traj: Trajectory, t):
    """Dense-output value of ``traj`` at time(s) ``t``.

    Step endpoints return the stored states exactly.  Constrained
    components are clipped at zero.
    """
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    if tt.size and (tt.min() < traj.t[0] or tt.max() > traj.t[-1]):
        raise DomainError(
            f"sample time outside [{traj.t[0]}, {traj.t[-1]}]: [{tt.min()}, {tt.max()}]"
        )
    n_steps = traj.t.size - 1
    idx = np.clip(np.searchsorted(traj.t, tt, side="right") - 1, 0, max(n_steps - 1, 0))
    out = traj.y[idx].copy()
    if n_steps > 0:
        exact_end = tt == traj.t[idx + 1]
        out[exact_end] = traj.y[idx[exact_end] + 1]
        inner = ~exact_end & (tt != traj.t[idx])
        if np.any(inner):
            if traj.stages is None:
                raise DomainError("trajectory was integrated without dense output")
            ii = idx[inner]
            h = traj.t[ii + 1] - traj.t[ii]
            theta = (tt[inner] - traj.t[ii]) / h
            powers = theta[:, None] ** np.arange(1, 5)
            weights = powers @ _P.T
            incr = np.einsum("mj,mjd->md", weights, traj.stages[ii])
            out[inner] = traj.y[ii] + h[:, None] * incr
    out[:, traj.nonneg] = np.maximum(out[:, traj.nonneg], 0.0)
    return out[0] if scalar else out
