"""Step-by-step driver around scipy's embedded Runge-Kutta steppers.

scipy's ``solve_ivp`` has no step-count limit and no notion of a
"step-size collapse" termination, both of which the lapse and geodesic
integrations need, so this module drives the ``OdeSolver`` classes
directly and assembles the dense output with ``OdeSolution``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import DOP853, RK45, OdeSolution
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .errors import DomainError

_STEPPERS = {"DOP853": DOP853, "RK45": RK45}


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and limits for every ODE integration in the package.

    ``method`` is ``"DOP853"`` (default), ``"RK45"`` or the fixed-step
    fallback ``"rk4"``, which uses ``max_step`` as its step (or 1/1000 of the
    span when ``max_step`` is infinite).
    """

    rel_tol: float = 1e-11
    abs_tol: float = 1e-13
    max_step: float = math.inf
    max_steps: int = 200_000
    singularity_floor: float = 1e-8
    method: str = "DOP853"

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "singularity_floor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.method not in (*_STEPPERS, "rk4"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class Event:
    """Zero crossing of ``fn(t, y)``; terminal events stop the run."""

    name: str
    fn: Callable[[float, np.ndarray], float]
    terminal: bool = True


@dataclass
class Run:
    """Output of :func:`integrate`.

    ``status`` is one of ``complete``, ``event``, ``max-steps``,
    ``step-collapse`` or ``failed``.  ``crossings`` lists ``(name, t)`` for
    every detected event, terminal or not.
    """

    t: np.ndarray
    y: np.ndarray
    sol: Callable
    status: str
    event: str | None = None
    message: str = ""
    crossings: list = field(default_factory=list)

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def ok(self) -> bool:
        return self.status == "complete"


class _Constant:
    def __init__(self, y):
        self.y = np.asarray(y, dtype=float)

    def __call__(self, t):
        t = np.asarray(t)
        if t.ndim == 0:
            return self.y.copy()
        return np.repeat(self.y[:, None], t.size, axis=1)


def _locate(g, dense, t_a, t_b):
    """Root of ``g(t, dense(t))`` bracketed in [t_a, t_b]."""
    lo, hi = min(t_a, t_b), max(t_a, t_b)
    try:
        return brentq(lambda s: g(s, dense(s)), lo, hi, xtol=1e-15 * max(1.0, abs(hi)), maxiter=200)
    except ValueError:
        return t_b


def integrate(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0: Sequence[float],
    t_end: float,
    config: IntegratorConfig,
    events: Sequence[Event] = (),
    min_step: float = 0.0,
) -> Run:
    """Integrate ``y' = fun(t, y)`` from ``t0`` towards ``t_end``.

    A :class:`DomainError` raised by ``fun`` during a step ends the run as a
    ``domain`` event at the last accepted point.
    """
    y0 = np.asarray(y0, dtype=float)
    if t_end == t0:
        return Run(np.array([t0]), y0[None, :], _Constant(y0), "complete")
    if config.method == "rk4":
        return _integrate_rk4(fun, t0, y0, t_end, config, events)

    stepper = _STEPPERS[config.method](
        fun, t0, y0, t_end, rtol=config.rel_tol, atol=config.abs_tol, max_step=config.max_step
    )
    ts, ys, dense = [t0], [y0], []
    g_prev = [ev.fn(t0, y0) for ev in events]
    crossings = []
    status, event, message = "complete", None, ""

    for _ in range(config.max_steps):
        try:
            stepper.step()
        except DomainError as exc:
            status, event, message = "event", "domain", str(exc)
            break
        if stepper.status == "failed":
            status, message = "failed", "step rejected repeatedly (stepper failed)"
            break
        t_new, y_new = stepper.t, stepper.y
        if not np.all(np.isfinite(y_new)):
            status, event, message = "event", "non-finite", f"non-finite state near t={t_new}"
            break
        interp = stepper.dense_output()
        stop_at = None
        try:
            g_all = [ev.fn(t_new, y_new) for ev in events]
        except DomainError as exc:
            status, event, message = "event", "domain", str(exc)
            break
        for k, ev in enumerate(events):
            g_new = g_all[k]
            if np.sign(g_new) != np.sign(g_prev[k]) or g_new == 0.0:
                t_cross = _locate(ev.fn, interp, stepper.t_old, t_new)
                crossings.append((ev.name, float(t_cross)))
                if ev.terminal and (stop_at is None or abs(t_cross - t0) < abs(stop_at[0] - t0)):
                    stop_at = (t_cross, ev.name)
            g_prev[k] = g_new
        if stop_at is not None:
            t_stop, name = stop_at
            ts.append(float(t_stop))
            ys.append(interp(t_stop))
            dense.append(interp)
            status, event = "event", name
            message = f"event {name} at t={t_stop!r}"
            break
        ts.append(t_new)
        ys.append(y_new.copy())
        dense.append(interp)
        if stepper.status == "finished":
            break
        if stepper.step_size is not None and stepper.step_size < min_step:
            status, message = "step-collapse", f"step size {stepper.step_size:.3e} below {min_step:.3e}"
            break
    else:
        status, message = "max-steps", f"exceeded {config.max_steps} steps"

    # crossings beyond a terminal event are not reachable
    if event is not None and status == "event":
        crossings = [c for c in crossings if abs(c[1] - t0) <= abs(ts[-1] - t0)]
    sol = OdeSolution(ts, dense) if dense else _Constant(y0)
    return Run(np.asarray(ts), np.asarray(ys), sol, status, event, message, crossings)


def _integrate_rk4(fun, t0, y0, t_end, config, events):
    span = t_end - t0
    h = config.max_step if math.isfinite(config.max_step) else abs(span) / 1000.0
    h = math.copysign(min(h, abs(span)), span)
    ts, ys, dys = [t0], [y0], [np.asarray(fun(t0, y0), dtype=float)]
    g_prev = [ev.fn(t0, y0) for ev in events]
    crossings = []
    status, event, message = "complete", None, ""
    t, y = t0, y0
    for _ in range(config.max_steps):
        step = h if abs(t_end - t) > abs(h) else t_end - t
        try:
            k1 = dys[-1]
            k2 = np.asarray(fun(t + step / 2, y + step / 2 * k1))
            k3 = np.asarray(fun(t + step / 2, y + step / 2 * k2))
            k4 = np.asarray(fun(t + step, y + step * k3))
            y_new = y + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t_new = t + step
            dy_new = np.asarray(fun(t_new, y_new), dtype=float)
        except DomainError as exc:
            status, event, message = "event", "domain", str(exc)
            break
        if not np.all(np.isfinite(y_new)):
            status, event, message = "event", "non-finite", f"non-finite state near t={t_new}"
            break
        seg = CubicHermiteSpline(sorted([t, t_new]), np.array([y, y_new] if step > 0 else [y_new, y]),
                                 np.array([dys[-1], dy_new] if step > 0 else [dy_new, dys[-1]]))
        stop = None
        try:
            g_all = [ev.fn(t_new, y_new) for ev in events]
        except DomainError as exc:
            status, event, message = "event", "domain", str(exc)
            break
        for k, ev in enumerate(events):
            g_new = g_all[k]
            if np.sign(g_new) != np.sign(g_prev[k]) or g_new == 0.0:
                tc = _locate(ev.fn, seg, t, t_new)
                crossings.append((ev.name, float(tc)))
                if ev.terminal and (stop is None or abs(tc - t0) < abs(stop[0] - t0)):
                    stop = (tc, ev.name)
            g_prev[k] = g_new
        if stop is not None:
            ts.append(stop[0])
            ys.append(seg(stop[0]))
            dys.append(np.asarray(fun(stop[0], ys[-1]), dtype=float))
            status, event, message = "event", stop[1], f"event {stop[1]} at t={stop[0]!r}"
            break
        t, y = t_new, y_new
        ts.append(t)
        ys.append(y)
        dys.append(dy_new)
        if t == t_end:
            break
    else:
        status, message = "max-steps", f"exceeded {config.max_steps} steps"
    T, Y, D = np.asarray(ts), np.asarray(ys), np.asarray(dys)
    if T.size < 2:
        return Run(T, Y, _Constant(y0), status, event, message, crossings)
    order = np.argsort(T)
    spline = CubicHermiteSpline(T[order], Y[order], D[order])
    return Run(T, Y, lambda s: spline(s).T, status, event, message, crossings)


class TwoSided:
    """Dense solution assembled from a backward and a forward run sharing t0."""

    def __init__(self, t0: float, backward: Run | None, forward: Run | None):
        self.t0 = t0
        self.backward = backward
        self.forward = forward

    @property
    def lo(self) -> float:
        return self.backward.t_end if self.backward is not None else self.t0

    @property
    def hi(self) -> float:
        return self.forward.t_end if self.forward is not None else self.t0

    @property
    def runs(self) -> list[Run]:
        return [r for r in (self.backward, self.forward) if r is not None]

    def __call__(self, t: float) -> np.ndarray:
        if not self.lo <= t <= self.hi:
            raise DomainError(f"t={t} outside integrated range [{self.lo}, {self.hi}]")
        run = self.forward if (t >= self.t0 and self.forward is not None) else self.backward
        if run is None:
            run = self.forward
        return np.asarray(run.sol(t), dtype=float)
