"""Shared helpers for the test suite."""

from pathlib import Path

import numpy as np

REPO_ROOT = Path(__file__).resolve().parents[1]
CORPUS_DIR = REPO_ROOT / "corpus"


class SegmentIndex:
    """Fast point-in-flowpipe queries over a segment list."""

    def __init__(self, segments):
        order = sorted(range(len(segments)), key=lambda i: segments[i].time_lo)
        self.time_lo = np.array([segments[i].time_lo for i in order])
        self.time_hi = np.array([segments[i].time_hi for i in order])
        boxes = [segments[i].box() for i in order]
        self.lo = np.array([b.lo for b in boxes])
        self.hi = np.array([b.hi for b in boxes])
        self.max_span = float(np.max(self.time_hi - self.time_lo)) if len(segments) else 0.0

    def covers(self, t: float, state, slack: float = 1e-6) -> bool:
        """True if some segment whose time interval contains t boxes the state."""
        right = np.searchsorted(self.time_lo, t + 1e-12, side="right")
        left = np.searchsorted(self.time_lo, t - self.max_span - 1e-12, side="left")
        if right <= left:
            return False
        sel = slice(left, right)
        time_ok = self.time_hi[sel] >= t - 1e-12
        inside = np.all(state >= self.lo[sel] - slack, axis=1) & np.all(
            state <= self.hi[sel] + slack, axis=1
        )
        return bool(np.any(time_ok & inside))


def simulation_inside_flowpipe(bundle, result, n_sims: int, seed: int, slack: float = 1e-6):
    """Count containment violations of seeded simulations against a reach result.

    Samples are only checked while the simulation's jump count stays within
    the bundle's jump bound. Returns (checked, violations, first_violation).
    """
    from hyra.simulate import Integrator, SimOptions, sample_initial, simulate

    index = SegmentIndex(result.segments)
    points = sample_initial(bundle.initial.box, n_sims, seed)
    options = SimOptions(step=bundle.settings.step / 10.0)
    checked = 0
    violations = 0
    first = None
    for x0 in points:
        traj = simulate(bundle, x0, Integrator.HEUN, options)
        event_times = [e.time for e in traj.events]
        next_event = 0
        for t, state in zip(traj.times, traj.states):
            while next_event < len(event_times) and event_times[next_event] <= t:
                next_event += 1
            if next_event > bundle.settings.max_jumps:
                break
            checked += 1
            if not index.covers(t, state, slack):
                violations += 1
                if first is None:
                    first = (float(t), state.copy())
    return checked, violations, first
