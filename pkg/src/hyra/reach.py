"""Flowpipe reachability over affine hybrid automata.

Per location, the continuous flow is discretized in the classic way: a
first-interval enclosure Omega0 covering [0, step] (chord hull of the set
and its one-step image, bloated for curvature and inputs), then the
recurrence Omega_{k+1} = e^(A step) Omega_k (+) V where V is the one-step
input contribution. The drift part of V is the exact integral
(int_0^step e^(A s) ds) u_c, so autonomous models with pure drift propagate
without per-step bloat. For stiff dynamics the Omega0 construction
sub-steps internally so the curvature term stays meaningful.

Emitted segments store the invariant-clamped box hull of each interval set
(as a degenerate zonotope); propagation continues on the raw zonotope.
Successor flowpipes spawned from a guard-crossing window of width W widen
each emitted segment with the preceding ceil(W/step) segments, so a
trajectory jumping anywhere in the window stays covered by the segment
whose time interval contains the query time.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import HyraError, InitOutsideInvariant, StepTooLarge
from .expressions import format_number
from .ir import Condition, LinearConstraint, ModelBundle, validate
from .sets import (
    Box,
    DEFAULT_ORDER_CAP,
    Zonotope,
    box_hull,
    exp_with_integral,
    hull_zonotope,
    intersect_condition,
    linear_map,
    minkowski_sum,
    reduce_order,
    translate,
)

_MAX_SUBSTEPS = 1 << 16
_CONTAIN_SLACK = 1e-9


class Verdict(str, Enum):
    SAFE_PROVED = "SafeProved"
    POSSIBLY_UNSAFE = "PossiblyUnsafe"
    JUMP_BOUND_HIT = "JumpBoundHit"
    FIXPOINT_REACHED = "FixpointReached"


@dataclass(frozen=True)
class FlowpipeSegment:
    time_lo: float
    time_hi: float
    set: Zonotope
    location: str
    jump_depth: int

    def box(self) -> Box:
        return box_hull(self.set)


@dataclass
class ReachStats:
    segments: int = 0
    flowpipes: int = 0
    discarded: int = 0
    max_depth: int = 0
    wall_time: float = 0.0
    covered_time: float = 0.0
    termination: Verdict | None = None  # JumpBoundHit / FixpointReached, None = horizon


@dataclass
class ReachResult:
    segments: list
    verdict: Verdict
    stats: ReachStats
    first_violation: int | None = None  # index into segments


# ---------------------------------------------------------------------------
# Discretization


def _input_decomposition(dyn, input_box):
    """Constant part u_c = B u_center + c and symmetric radius bound mu0."""
    if dyn.m and input_box is not None:
        u_c = dyn.b @ input_box.center + dyn.c
        mu0 = float(np.max(np.abs(dyn.b) @ input_box.radius)) if dyn.m else 0.0
    else:
        u_c = dyn.c.copy()
        mu0 = 0.0
    return u_c, mu0


def _curvature(delta: float, tau: float) -> float:
    """e^(tau delta) - 1 - tau delta, the chord curvature factor."""
    return math.expm1(tau * delta) - tau * delta


def discretize(dyn, x0: Zonotope, input_box: Box | None, step: float,
               order_cap: int = DEFAULT_ORDER_CAP):
    """First-interval enclosure and one-step input set for one location.

    Returns (omega0, v_set, phi, alpha) where omega0 covers all trajectories
    over [0, step] from x0, v_set is the per-step input contribution for the
    recurrence, phi = e^(A step), and alpha is the curvature bloat radius
    used (reported for the forbidden-equality slack).

    The enclosure sub-steps internally whenever step * ||A||_inf exceeds the
    matrix-exponential scaling threshold, keeping the curvature term
    (e^(tau d) - 1 - tau d) * sup||X|| meaningful for stiff dynamics; the
    sanity abort compares that term against the initial-set radius.
    """
    a = dyn.a
    delta = float(np.linalg.norm(a, np.inf))
    u_c, mu0 = _input_decomposition(dyn, input_box)
    n = a.shape[0]

    substeps = 1
    while substeps < _MAX_SUBSTEPS and (step / substeps) * delta > 0.5:
        substeps *= 2
    tau = step / substeps
    if tau * delta > 0.5:
        raise StepTooLarge(
            f"step {format_number(step)} with ||A|| = {delta:g} cannot be discretized; reduce the step"
        )

    phi, phi1 = exp_with_integral(a, step)
    v_center = phi1 @ u_c
    if mu0 == 0.0:
        beta = 0.0
    elif delta > 0.0:
        beta = math.expm1(step * delta) / delta * mu0
    else:
        beta = step * mu0
    v_gens = np.diag(np.full(n, beta))[:, np.full(n, beta) > 0]
    v_set = Zonotope(v_center, v_gens)
    if substeps == 1:
        phi_tau, phi1_tau = phi, phi1
    else:
        phi_tau, phi1_tau = exp_with_integral(a, tau)
    drift_tau = phi1_tau @ u_c
    if delta > 0.0:
        beta_tau = math.expm1(tau * delta) / delta * mu0
        drift_curv = 2.0 * _curvature(delta, tau) / delta * float(np.max(np.abs(u_c)))
    else:
        beta_tau = tau * mu0
        drift_curv = 0.0

    x0_box = box_hull(x0)
    radius0 = float(np.max(x0_box.radius))
    alpha0 = 2.0 * _curvature(delta, tau) * x0_box.sup_norm() + drift_curv
    # sanity abort: bloat dwarfing the set makes the flowpipe meaningless;
    # degenerate (point-like) sets compare against 1% of their magnitude
    floor = max(radius0, 0.01 * max(1.0, x0_box.sup_norm()))
    if alpha0 + beta_tau > 10.0 * floor:
        raise StepTooLarge(
            f"bloating radius {alpha0 + beta_tau:g} exceeds 10x the initial-set radius "
            f"{radius0:g}; reduce the step"
        )

    omega = None
    current = x0
    for _ in range(substeps):
        cur_box = box_hull(current)
        alpha = 2.0 * _curvature(delta, tau) * cur_box.sup_norm() + drift_curv
        nxt = translate(linear_map(phi_tau, current), drift_tau)
        if beta_tau > 0.0:
            nxt = minkowski_sum(nxt, Box(np.full(n, -beta_tau), np.full(n, beta_tau)).to_zonotope())
        chord = hull_zonotope(current, nxt)
        bloat = alpha + beta_tau
        if bloat > 0.0:
            chord = minkowski_sum(chord, Box(np.full(n, -bloat), np.full(n, bloat)).to_zonotope())
        omega = chord if omega is None else hull_zonotope(omega, chord)
        omega = reduce_order(omega, order_cap)
        current = reduce_order(nxt, order_cap)
    return omega, v_set, phi, alpha0 + beta_tau


# ---------------------------------------------------------------------------
# Per-location flowpipe


def _box_inside_condition(box: Box, cond: Condition, slack: float = _CONTAIN_SLACK) -> bool:
    for con in cond.constraints:
        coeffs = con.coeffs
        max_val = float(np.where(coeffs >= 0, coeffs * box.hi, coeffs * box.lo).sum())
        min_val = float(np.where(coeffs >= 0, coeffs * box.lo, coeffs * box.hi).sum())
        if con.relation in ("<=", "<"):
            if max_val > con.bound + slack:
                return False
        elif con.relation in (">=", ">"):
            if min_val < con.bound - slack:
                return False
        else:
            if max_val > con.bound + slack or min_val < con.bound - slack:
                return False
    return True


@dataclass
class FlowpipeResult:
    """Emitted (skew-widened) segments plus the raw per-interval boxes.

    ``segments`` are what the flowpipe reports: each box hulled with the
    preceding ceil(window/step) raw boxes so a trajectory that entered the
    location anywhere in its jump window stays covered by the segment whose
    time label contains the query time. ``raw`` keeps the unslid boxes:
    guard detection works on those (states are elapsed-faithful there), with
    the entry skew accounted for in the successor's window width instead.
    """

    segments: list
    raw: list
    alpha: float


def flowpipe(location, init: Zonotope, input_box: Box | None, step: float, horizon: float,
             entry_time: float = 0.0, jump_depth: int = 0, window: float = 0.0,
             order_cap: int = DEFAULT_ORDER_CAP) -> "FlowpipeResult":
    """Segments covering [entry_time, horizon] inside one location.

    Stops early when a segment's intersection with the invariant is empty.
    ``window`` is the width of the guard-crossing window that produced
    ``init`` (zero for the model's initial set).
    """
    dyn = location.dynamics
    invariant = location.invariant
    init_box = box_hull(init)
    if not _box_inside_condition(init_box, invariant):
        raise InitOutsideInvariant(
            f"initial set of location {location.name!r} is not inside its invariant"
        )
    remaining = horizon - entry_time
    if remaining <= 1e-12:
        return FlowpipeResult([], [], 0.0)

    full_steps = int(math.floor(remaining / step + 1e-9))
    leftover = remaining - full_steps * step
    if leftover < 1e-9 * max(1.0, step):
        leftover = 0.0

    raw_boxes: list = []
    alpha_max = 0.0
    if full_steps > 0:
        omega, v_set, phi, alpha = discretize(dyn, init, input_box, step, order_cap)
        alpha_max = max(alpha_max, alpha)
        current = omega
        for _ in range(full_steps):
            clamped = intersect_condition(box_hull(current), invariant)
            if clamped is None:
                break
            raw_boxes.append(clamped)
            current = reduce_order(
                minkowski_sum(linear_map(phi, current), v_set), order_cap
            )
        else:
            if leftover > 0.0:
                # partial tail segment from the set covering the last interval
                omega_tail, _, _, alpha = discretize(dyn, current, input_box, leftover, order_cap)
                alpha_max = max(alpha_max, alpha)
                clamped = intersect_condition(box_hull(omega_tail), invariant)
                if clamped is not None:
                    raw_boxes.append(clamped)
    else:
        omega, _, _, alpha = discretize(dyn, init, input_box, leftover, order_cap)
        alpha_max = max(alpha_max, alpha)
        clamped = intersect_condition(box_hull(omega), invariant)
        if clamped is not None:
            raw_boxes.append(clamped)

    total_steps = full_steps + (1 if leftover > 0.0 else 0)
    m = int(math.ceil(window / step - 1e-9)) if window > 0 else 0
    raw_count = len(raw_boxes)
    if raw_count == 0:
        return FlowpipeResult([], [], alpha_max)
    raw_segments = []
    for k, raw in enumerate(raw_boxes):
        t_lo = entry_time + k * step
        t_hi = horizon if k == full_steps else min(entry_time + (k + 1) * step, horizon)
        raw_segments.append(FlowpipeSegment(t_lo, t_hi, raw.to_zonotope(), location.name, jump_depth))

    # Emitted segment k hulls raw boxes over elapsed [k-m, k]: a trajectory
    # that entered up to `window` later than the pipe start is elapsed-wise
    # behind by up to m segments. For the same reason the emission runs up
    # to m segments past the raw pipe's death.
    prefix = []
    running = None
    for raw in raw_boxes:
        running = raw if running is None else running.hull(raw)
        prefix.append(running)
    segments = []
    emit_count = raw_count if m == 0 else min(raw_count + m, total_steps)
    for k in range(emit_count):
        lo_idx = max(0, k - m)
        hi_idx = min(k, raw_count - 1)
        if lo_idx == 0:
            merged = prefix[hi_idx]
        else:
            merged = raw_boxes[hi_idx]
            for j in range(lo_idx, hi_idx):
                merged = merged.hull(raw_boxes[j])
        if m > 0:
            reclamped = intersect_condition(merged, invariant)
            if reclamped is not None:
                merged = reclamped
        t_lo = entry_time + k * step
        t_hi = horizon if k == full_steps else min(entry_time + (k + 1) * step, horizon)
        segments.append(
            FlowpipeSegment(t_lo, t_hi, merged.to_zonotope(), location.name, jump_depth)
        )
    return FlowpipeResult(segments, raw_segments, alpha_max)


# ---------------------------------------------------------------------------
# Discrete successors


def jump_successors(segments, transition):
    """Aggregated successors of one transition over a segment list.

    Consecutive segments whose boxes meet the guard form one crossing
    window; the guard-clamped boxes hull into a single set, the reset maps
    it, and the result is reported with the window's start time and width.
    Returns a list of (init_zonotope_pre_invariant, entry_time, window_width).
    """
    hits = []
    for idx, seg in enumerate(segments):
        clamped = intersect_condition(seg.box(), transition.guard)
        if clamped is not None:
            hits.append((idx, clamped))
    windows = []
    group: list = []
    prev_idx = None
    for idx, clamped in hits:
        if prev_idx is not None and idx != prev_idx + 1:
            windows.append(group)
            group = []
        group.append((idx, clamped))
        prev_idx = idx
    if group:
        windows.append(group)

    out = []
    for group in windows:
        agg = group[0][1]
        for _, clamped in group[1:]:
            agg = agg.hull(clamped)
        entry_time = segments[group[0][0]].time_lo
        window_width = segments[group[-1][0]].time_hi - entry_time
        reset = transition.reset
        succ = translate(linear_map(reset.r_matrix, agg.to_zonotope()), reset.r_offset)
        out.append((succ, entry_time, window_width))
    return out


# ---------------------------------------------------------------------------
# Safety and fixpoint machinery


def _widen_equalities(cond: Condition, slack: float) -> Condition:
    out = []
    for con in cond.constraints:
        if con.relation == "==" and slack > 0.0:
            out.append(LinearConstraint(con.coeffs, "<=", con.bound + slack))
            out.append(LinearConstraint(con.coeffs, ">=", con.bound - slack))
        else:
            out.append(con)
    return Condition(tuple(out))


def check_safety(segments, forbidden: Condition | None, eq_slack: float = 1e-9):
    """SafeProved iff no segment box meets the forbidden condition.

    Equality constraints are widened to a slab of half-width ``eq_slack``
    (exact-equality intersection of an over-approximation is ill-posed).
    Returns (verdict, index of the earliest offending segment or None).
    """
    if forbidden is None:
        return Verdict.SAFE_PROVED, None
    widened = _widen_equalities(forbidden, max(eq_slack, 1e-9))
    offender = None
    offender_time = math.inf
    for idx, seg in enumerate(segments):
        if intersect_condition(seg.box(), widened) is not None:
            if seg.time_lo < offender_time:
                offender = idx
                offender_time = seg.time_lo
    if offender is None:
        return Verdict.SAFE_PROVED, None
    return Verdict.POSSIBLY_UNSAFE, offender


def _box_contained(inner_lo, inner_hi, outer_lo, outer_hi, slack) -> bool:
    return bool(np.all(outer_lo - slack <= inner_lo) and np.all(inner_hi <= outer_hi + slack))


def _contained_in_union(lo, hi, pool, budget, slack) -> bool:
    """Exact-enough cover test of a box by a finite union of boxes.

    Splits along pool-box faces until each piece sits in a single pool box;
    gives up (returns False, which is sound for fixpoint use) when the
    split budget runs out.
    """
    for plo, phi in pool:
        if _box_contained(lo, hi, plo, phi, slack):
            return True
    if budget[0] <= 0:
        return False
    for plo, phi in pool:
        if np.any(np.maximum(plo, lo) > np.minimum(phi, hi) + slack):
            continue
        for d in range(len(lo)):
            for v in (plo[d], phi[d]):
                if lo[d] + slack < v < hi[d] - slack:
                    budget[0] -= 1
                    hi_left = hi.copy()
                    hi_left[d] = v
                    lo_right = lo.copy()
                    lo_right[d] = v
                    return _contained_in_union(lo, hi_left, pool, budget, slack) and _contained_in_union(
                        lo_right, hi, pool, budget, slack
                    )
    return False


def _fixpoint_covered(box: Box, pool: list) -> bool:
    if not pool:
        return False
    scale = max(1.0, float(np.max(np.abs(box.lo))), float(np.max(np.abs(box.hi))))
    slack = _CONTAIN_SLACK * scale
    return _contained_in_union(box.lo.copy(), box.hi.copy(), pool, [256], slack)


# ---------------------------------------------------------------------------
# Top-level exploration


@dataclass
class _Task:
    location: str
    init: Zonotope
    entry_time: float
    window: float

    @property
    def end_time(self) -> float:
        return self.entry_time + self.window


def _boxes_close(b1: Box, b2: Box) -> bool:
    """True when the hull of two boxes barely exceeds the larger box.

    Merging is only sound-AND-useful for near-coincident sets (e.g. the two
    orderings of near-simultaneous jumps); hulling sets in different phases
    destroys correlations and blows the flowpipe up.
    """
    hull_lo = np.minimum(b1.lo, b2.lo)
    hull_hi = np.maximum(b1.hi, b2.hi)
    width = np.maximum(b1.hi - b1.lo, b2.hi - b2.lo)
    scale = np.maximum(np.maximum(np.abs(hull_lo), np.abs(hull_hi)), 1.0)
    return bool(np.all(hull_hi - hull_lo <= 1.5 * width + 1e-9 * scale))


def _merge_level(tasks: list, step: float) -> list:
    """Merge same-location tasks with overlapping windows and close sets.

    Interleavings of near-simultaneous jumps (two balls bouncing within the
    same window) otherwise multiply flowpipes exponentially with depth; the
    hull of close, overlapping windows is a sound aggregate.
    """
    tasks = sorted(tasks, key=lambda t: (t.location, t.entry_time, t.window))
    merged: list = []
    for task in tasks:
        absorbed = False
        for i, other in enumerate(merged):
            if other.location != task.location:
                continue
            if task.entry_time > other.end_time + 0.5 * step or other.entry_time > task.end_time + 0.5 * step:
                continue
            b1, b2 = box_hull(other.init), box_hull(task.init)
            if not _boxes_close(b1, b2):
                continue
            box = b1.hull(b2)
            entry = min(other.entry_time, task.entry_time)
            end = max(other.end_time, task.end_time)
            merged[i] = _Task(task.location, box.to_zonotope(), entry, end - entry)
            absorbed = True
            break
        if not absorbed:
            merged.append(task)
    return merged


def reach(bundle: ModelBundle, order_cap: int = DEFAULT_ORDER_CAP) -> ReachResult:
    """Bounded-jump breadth-first flowpipe exploration with safety verdict.

    The verdict is the safety answer (SafeProved / PossiblyUnsafe); when the
    jump bound cut exploration or fixpoint containment drained the worklist,
    that is recorded in stats.termination.
    """
    started = time.perf_counter()
    automaton = bundle.automaton.resolved()
    report = validate(automaton)
    if not report.ok:
        raise HyraError("bundle does not validate: " + "; ".join(str(d) for d in report))
    settings = bundle.settings
    input_box = automaton.input_box()
    locations = {loc.name: loc for loc in automaton.locations}

    stats = ReachStats()
    segments_all: list = []
    alpha_max = 0.0
    jump_bound_cut = False
    any_discard = False
    processed: dict = {name: [] for name in locations}

    level = [_Task(bundle.initial.location, bundle.initial.box.to_zonotope(), 0.0, 0.0)]
    depth = 0
    while level and depth <= settings.max_jumps:
        next_level: list = []
        for task in level:
            location = locations[task.location]
            init_box = box_hull(task.init)
            if settings.fixpoint_check and _fixpoint_covered(init_box, processed[task.location]):
                stats.discarded += 1
                any_discard = True
                continue
            processed[task.location].append((init_box.lo, init_box.hi))
            pipe = flowpipe(
                location, task.init, input_box, settings.step, settings.horizon,
                task.entry_time, depth, task.window, order_cap,
            )
            alpha_max = max(alpha_max, pipe.alpha)
            stats.flowpipes += 1
            stats.max_depth = max(stats.max_depth, depth)
            segments_all.extend(pipe.segments)
            if not pipe.raw:
                continue
            for transition in automaton.transitions_from(task.location):
                successors = jump_successors(pipe.raw, transition)
                if not successors:
                    continue
                if depth >= settings.max_jumps:
                    jump_bound_cut = True
                    continue
                target = locations[transition.target]
                for succ, t_entry, w in successors:
                    clamped = intersect_condition(box_hull(succ), target.invariant)
                    if clamped is None:
                        continue
                    # late jumpers inherit the parent's entry skew
                    next_level.append(_Task(transition.target, clamped.to_zonotope(), t_entry, w + task.window))
        level = _merge_level(next_level, settings.step)
        depth += 1

    verdict, first_violation = check_safety(segments_all, settings.forbidden, max(1e-9, alpha_max))
    stats.segments = len(segments_all)
    stats.covered_time = max((s.time_hi for s in segments_all), default=0.0)
    if jump_bound_cut:
        stats.termination = Verdict.JUMP_BOUND_HIT
    elif any_discard:
        stats.termination = Verdict.FIXPOINT_REACHED
    stats.wall_time = time.perf_counter() - started
    return ReachResult(segments_all, verdict, stats, first_violation)


def segments_to_csv(result: ReachResult, state_vars) -> str:
    header = ["time_lo", "time_hi", "location", "jump_depth"]
    for var in state_vars:
        header.append(f"lo_{var}")
        header.append(f"hi_{var}")
    lines = [",".join(header)]
    for seg in result.segments:
        box = seg.box()
        row = [format_number(seg.time_lo), format_number(seg.time_hi), seg.location, str(seg.jump_depth)]
        for i in range(box.dim):
            row.append(format_number(box.lo[i]))
            row.append(format_number(box.hi[i]))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
