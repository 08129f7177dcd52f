"""Hybrid trajectory simulation with event detection and Zeno diagnostics.

Fixed-step integration (forward Euler or Heun) inside a location; guard
crossings are located by bisection over the step, the reset is applied, and
integration re-anchors at the crossing time. A run halts early with
``zeno=True`` once enough consecutive inter-event gaps fall below the dwell
threshold, recording a geometric estimate of the accumulation time.

Transition guards fire on a crossing: a guard already satisfied when a
location is entered does not auto-fire (trivially-true "spontaneous"
transitions are therefore never taken by the simulator; the reachability
engine explores them).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InitOutsideInvariant, MaxEventsExceeded
from .expressions import format_number
from .ir import AffineDynamics, Condition, ModelBundle, Transition
from .sets import Box

_GUARD_SLACK = 1e-9
_EVENT_CHECK_SLACK = 1e-6


class Integrator(str, Enum):
    EULER = "euler"
    HEUN = "heun"  # the second-order one-step scheme


@dataclass(frozen=True)
class SimOptions:
    step: float = 1e-3
    zeno_dwell: float = 1e-4
    zeno_count: int = 10
    max_events: int = 10_000
    horizon: float | None = None
    input_value: np.ndarray | None = None


@dataclass(frozen=True)
class SimEvent:
    time: float
    label: str | None
    source: str
    target: str
    pre_state: np.ndarray
    post_state: np.ndarray


@dataclass
class Trajectory:
    times: np.ndarray
    locations: list
    states: np.ndarray
    events: list
    zeno: bool = False
    zeno_time: float | None = None
    truncated: str | None = None

    @property
    def sample_count(self) -> int:
        return len(self.times)


def step(dyn: AffineDynamics, x, u, h: float, kind: Integrator) -> np.ndarray:
    """One integration step of x' = A x + B u + c.

    Euler: x + h f(x). Heun: x + (h/2)(f(x) + f(x + h f(x))); exact for
    constant-acceleration motion.
    """
    x = np.asarray(x, dtype=float)
    drive = dyn.c if dyn.m == 0 else dyn.b @ np.asarray(u, dtype=float) + dyn.c
    f0 = dyn.a @ x + drive
    if kind == Integrator.EULER:
        return x + h * f0
    f1 = dyn.a @ (x + h * f0) + drive
    return x + 0.5 * h * (f0 + f1)


def _substep(a_mat, drive, x, tau: float, kind: Integrator) -> np.ndarray:
    f0 = a_mat @ x + drive
    if kind == Integrator.EULER:
        return x + tau * f0
    f1 = a_mat @ (x + tau * f0) + drive
    return x + 0.5 * tau * (f0 + f1)


def _split_guard(guard: Condition):
    eqs = [c for c in guard.constraints if c.relation == "=="]
    ineqs = [c for c in guard.constraints if c.relation != "=="]
    return eqs, ineqs


def _guard_holds(guard: Condition, x, eq_slack: float) -> bool:
    for con in guard.constraints:
        slack = eq_slack if con.relation == "==" else _GUARD_SLACK
        if not con.satisfied(x, slack):
            return False
    return True


def detect_event(dyn: AffineDynamics, transition: Transition, x_before, t: float, h: float,
                 kind: Integrator, u) -> tuple | None:
    """Earliest guard crossing inside the step [t, t+h], if any.

    Equality constraints are crossing surfaces: the first one is root-found
    by bisection (to time tolerance 1e-9 * max(1, t)), then the whole
    conjunction is checked at the crossing. Pure-inequality guards bisect on
    the earliest point where the conjunction switches from false to true.
    Returns (tau, crossing_state) with tau relative to the step start, or
    None when the guard is not crossed. A guard already satisfied at the
    step start does not fire.
    """
    guard = transition.guard
    if guard.is_true:
        return None
    x0 = np.asarray(x_before, dtype=float)
    a_mat = dyn.a
    drive = dyn.c if dyn.m == 0 else dyn.b @ np.asarray(u, dtype=float) + dyn.c
    x1 = _substep(a_mat, drive, x0, h, kind)
    tol = 1e-9 * max(1.0, t)
    eqs, ineqs = _split_guard(guard)

    if eqs:
        con = eqs[0]
        g0 = float(con.coeffs @ x0) - con.bound
        g1 = float(con.coeffs @ x1) - con.bound
        if g0 * g1 > 0.0:
            return None
        if g0 == 0.0 and g1 == 0.0:
            return None  # sliding along the surface, not a crossing
        # keep bracket [a, b] with sign(g(a)) matching sign at the step start
        a, b = 0.0, h
        xa = x0
        while b - a > tol:
            mid = 0.5 * (a + b)
            xm = _substep(a_mat, drive, x0, mid, kind)
            gm = float(con.coeffs @ xm) - con.bound
            if (gm > 0.0) == (g0 > 0.0) and gm != 0.0:
                a, xa = mid, xm
            else:
                b = mid
        # report the bracket edge on the pre-crossing side: the state there
        # still satisfies the source invariant (e.g. x >= 0 for the ball)
        if _guard_holds(guard, xa, _EVENT_CHECK_SLACK):
            return a, xa
        return None

    # inequality-only guard: bisect the false->true switch
    if _guard_holds(guard, x0, _GUARD_SLACK):
        return None
    if not _guard_holds(guard, x1, _GUARD_SLACK):
        return None
    a, b = 0.0, h
    xb = x1
    while b - a > tol:
        mid = 0.5 * (a + b)
        xm = _substep(a_mat, drive, x0, mid, kind)
        if _guard_holds(guard, xm, _GUARD_SLACK):
            b, xb = mid, xm
        else:
            a = mid
    return b, xb


def _zeno_estimate(events: list) -> float:
    """Accumulation-time estimate: last event + geometric tail of its gaps."""
    last = events[-1]
    key = (last.source, last.target, last.label)
    series = [e.time for e in events if (e.source, e.target, e.label) == key]
    if len(series) < 3:
        series = [e.time for e in events]
    if len(series) < 3:
        return last.time
    g_prev = series[-2] - series[-3]
    g_last = series[-1] - series[-2]
    if g_prev <= 0.0 or g_last <= 0.0:
        return last.time
    ratio = g_last / g_prev
    if ratio >= 1.0:
        return last.time + g_last
    return last.time + g_last * ratio / (1.0 - ratio)


def simulate(bundle: ModelBundle, x0, kind: Integrator = Integrator.HEUN,
             options: SimOptions = SimOptions()) -> Trajectory:
    """Simulate one hybrid run from x0 in the bundle's initial location.

    Ends at the horizon, on Zeno accumulation (zeno flag set), or when the
    invariant is violated with no enabled transition (truncated). Among
    simultaneously enabled transitions the one declared first wins.
    """
    automaton = bundle.automaton.resolved()
    table = automaton.vars
    loc = automaton.location(bundle.initial.location)
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (table.n,):
        raise ValueError(f"x0 must have {table.n} entries")
    if not loc.invariant.satisfied(x, _GUARD_SLACK):
        raise InitOutsideInvariant(f"x0 violates invariant of {loc.name!r}")

    if options.input_value is not None:
        u = np.asarray(options.input_value, dtype=float)
    elif table.m:
        box = automaton.input_box()
        u = box.center
    else:
        u = np.zeros(0)

    horizon = options.horizon if options.horizon is not None else bundle.settings.horizon
    h = options.step

    times = [0.0]
    locs = [loc.name]
    states = [x.copy()]
    events: list = []
    zeno = False
    zeno_time = None
    truncated = None
    streak = 0
    t = 0.0

    outgoing = {l.name: automaton.transitions_from(l.name) for l in automaton.locations}

    while t < horizon - 1e-12:
        step_h = min(h, horizon - t)
        best = None
        for trans in outgoing[loc.name]:
            hit = detect_event(loc.dynamics, trans, x, t, step_h, kind, u)
            if hit is not None and (best is None or hit[0] < best[0]):
                best = (hit[0], trans, hit[1])
        if best is not None:
            tau, trans, x_cross = best
            t_event = t + tau
            if events and t_event <= events[-1].time:
                t_event = math.nextafter(events[-1].time, math.inf)
            x_post = trans.reset.apply(x_cross)
            target = automaton.location(trans.target)
            events.append(SimEvent(t_event, trans.label, trans.source, trans.target,
                                   x_cross.copy(), x_post.copy()))
            if len(events) > options.max_events:
                raise MaxEventsExceeded(f"more than {options.max_events} events without Zeno accumulation")
            if not target.invariant.satisfied(x_post, 1e-7):
                truncated = f"reset lands outside invariant of {target.name!r}"
                t = t_event
                loc = target
                x = x_post
                _append_sample(times, locs, states, t, loc.name, x)
                break
            gap = t_event - events[-2].time if len(events) >= 2 else math.inf
            streak = streak + 1 if gap < options.zeno_dwell else 0
            loc = target
            x = x_post
            t = t_event
            _append_sample(times, locs, states, t, loc.name, x)
            if streak >= options.zeno_count:
                zeno = True
                zeno_time = _zeno_estimate(events)
                break
            continue
        x_next = step(loc.dynamics, x, u, step_h, kind)
        if not loc.invariant.satisfied(x_next, _GUARD_SLACK):
            tau, x_edge = _invariant_exit(loc.dynamics, loc.invariant, x, step_h, kind, u)
            t += tau
            x = x_edge
            _append_sample(times, locs, states, t, loc.name, x)
            truncated = f"invariant of {loc.name!r} blocks continuation with no enabled transition"
            break
        t += step_h
        x = x_next
        _append_sample(times, locs, states, t, loc.name, x)

    return Trajectory(np.array(times), locs, np.array(states), events, zeno, zeno_time, truncated)


def _append_sample(times, locs, states, t, loc_name, x):
    if times and t <= times[-1]:
        t = math.nextafter(times[-1], math.inf)
    times.append(t)
    locs.append(loc_name)
    states.append(np.asarray(x, dtype=float).copy())


def _invariant_exit(dyn, invariant, x, h, kind, u):
    """Last time in [0, h] still (weakly) inside the invariant."""
    a_mat = dyn.a
    drive = dyn.c if dyn.m == 0 else dyn.b @ np.asarray(u, dtype=float) + dyn.c
    a, b = 0.0, h
    xa = np.asarray(x, dtype=float)
    while b - a > 1e-12 * max(1.0, h):
        mid = 0.5 * (a + b)
        xm = _substep(a_mat, drive, x, mid, kind)
        if invariant.satisfied(xm, _GUARD_SLACK):
            a, xa = mid, xm
        else:
            b = mid
    return a, xa


def sample_initial(box: Box, k: int, seed: int) -> list:
    """k deterministic points of the box; all corners come first when they fit."""
    if k < 1:
        raise ValueError("k must be >= 1")
    n = box.dim
    points = []
    if n <= 30 and k >= 2**n:
        for idx in range(2**n):
            corner = np.where(
                [(idx >> d) & 1 for d in range(n)], box.hi, box.lo
            ).astype(float)
            points.append(corner)
    rng = np.random.default_rng(seed)
    while len(points) < k:
        points.append(rng.uniform(box.lo, box.hi))
    return points[:k]


def trajectory_to_csv(traj: Trajectory, state_vars) -> str:
    lines = ["time,location," + ",".join(state_vars)]
    for t, loc, row in zip(traj.times, traj.locations, traj.states):
        values = ",".join(format_number(v) for v in row)
        lines.append(f"{format_number(t)},{loc},{values}")
    return "\n".join(lines) + "\n"


def events_to_csv(traj: Trajectory, state_vars) -> str:
    pre = ",".join(f"pre_{v}" for v in state_vars)
    post = ",".join(f"post_{v}" for v in state_vars)
    lines = [f"time,label,source,target,{pre},{post}"]
    for e in traj.events:
        pre_vals = ",".join(format_number(v) for v in e.pre_state)
        post_vals = ",".join(format_number(v) for v in e.post_state)
        lines.append(f"{format_number(e.time)},{e.label or ''},{e.source},{e.target},{pre_vals},{post_vals}")
    return "\n".join(lines) + "\n"
