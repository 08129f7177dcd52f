import math

import numpy as np
import pytest

from hyra.corpus import build_bouncing_ball, build_platoon, build_tank
from hyra.errors import InitOutsideInvariant, StepTooLarge
from hyra.ir import (
    AffineDynamics,
    Condition,
    HybridAutomaton,
    InitialCondition,
    LinearConstraint,
    Location,
    ModelBundle,
    ReachSettings,
    VariableTable,
)
from hyra.reach import (
    Verdict,
    check_safety,
    discretize,
    flowpipe,
    jump_successors,
    reach,
    segments_to_csv,
)
from hyra.sets import Box, Zonotope, box_hull

GRAVITY = 9.81


def decay_bundle(step: float, horizon: float = 1.0) -> ModelBundle:
    table = VariableTable(("x",))
    dyn = AffineDynamics([[-1.0]], np.zeros((1, 0)), [0.0])
    automaton = HybridAutomaton("decay", table, (Location("flow", Condition(), dyn),), ())
    settings = ReachSettings(horizon, step, 0, None, None, False)
    return ModelBundle(automaton, settings, InitialCondition("flow", Box([1.0], [1.0])))


def frozen_location(n: int = 2) -> Location:
    return Location("still", Condition(), AffineDynamics.zero(n))


# ---------------------------------------------------------------------------
# discretize


def test_discretize_frozen_dynamics_is_exact():
    x0 = Box([0.0, 1.0], [1.0, 2.0]).to_zonotope()
    omega, v_set, phi, alpha = discretize(AffineDynamics.zero(2), x0, None, 0.1)
    assert np.array_equal(box_hull(omega).lo, [0.0, 1.0])
    assert np.array_equal(box_hull(omega).hi, [1.0, 2.0])
    assert not v_set.center.any() and v_set.order == 0
    assert np.array_equal(phi, np.eye(2))
    assert alpha == 0.0


@pytest.mark.parametrize("step", [0.1, 0.01])
def test_discretize_decay_encloses_first_interval(step):
    dyn = AffineDynamics([[-1.0]], np.zeros((1, 0)), [0.0])
    omega, _, _, _ = discretize(dyn, Zonotope.point([1.0]), None, step)
    box = box_hull(omega)
    assert box.lo[0] <= math.exp(-step)
    assert box.hi[0] >= 1.0


def test_discretize_free_fall_contains_analytic_states():
    # ball dynamics restricted to one ball: x' = v, v' = -g
    dyn = AffineDynamics([[0.0, 1.0], [0.0, 0.0]], np.zeros((2, 0)), [0.0, -GRAVITY])
    step = 0.01
    x0 = 10.1
    omega, _, _, _ = discretize(dyn, Zonotope.point([x0, 0.0]), None, step)
    box = box_hull(omega)
    for t in (0.0, step / 2.0, step):
        state = np.array([x0 - 0.5 * GRAVITY * t * t, -GRAVITY * t])
        assert box.contains(state, slack=1e-12)


def test_discretize_step_too_large():
    # ||A|| so extreme that even maximal sub-stepping cannot discretize it
    dyn = AffineDynamics([[0.0, 1e5], [-1e5, 0.0]], np.zeros((2, 0)), [0.0, 0.0])
    with pytest.raises(StepTooLarge):
        discretize(dyn, Zonotope.point([1.0, 0.0]), None, 1.0)


# ---------------------------------------------------------------------------
# flowpipe


def test_flowpipe_frozen_dynamics_identical_segments():
    init = Box([0.0, 0.0], [1.0, 1.0]).to_zonotope()
    pipe = flowpipe(frozen_location(), init, None, 0.1, 1.0)
    assert len(pipe.segments) == 10
    first = pipe.segments[0].box()
    for seg in pipe.segments:
        assert np.array_equal(seg.box().lo, first.lo)
        assert np.array_equal(seg.box().hi, first.hi)
    assert pipe.segments[0].time_lo == 0.0
    assert pipe.segments[-1].time_hi == pytest.approx(1.0)


def test_flowpipe_decay_box_at_one_second():
    bundle = decay_bundle(1e-3)
    result = reach(bundle)
    seg = [s for s in result.segments if s.time_lo <= 1.0 <= s.time_hi][-1]
    box = seg.box()
    assert box.lo[0] <= math.exp(-1.0) <= box.hi[0]
    assert box.hi[0] - box.lo[0] <= 0.01


def test_flowpipe_truncates_at_invariant_exit():
    bundle = build_bouncing_ball()
    automaton = bundle.automaton.resolved()
    pipe = flowpipe(
        automaton.location("always"), bundle.initial.box.to_zonotope(), None, 0.01, 40.0
    )
    # no retained segment lies entirely below ground
    for seg in pipe.segments:
        assert seg.box().hi[0] >= 0.0
    # the pipe dies shortly after the latest possible first impact
    latest_impact = math.sqrt(2 * 10.2 / GRAVITY)
    assert pipe.segments[-1].time_hi <= latest_impact + 0.03
    assert pipe.segments[-1].time_hi >= latest_impact - 0.01


def test_flowpipe_rejects_init_outside_invariant():
    bundle = build_bouncing_ball()
    automaton = bundle.automaton.resolved()
    below_ground = Box([-1.0, 0.0, 5.0, 0.0], [-0.5, 0.0, 5.0, 0.0]).to_zonotope()
    with pytest.raises(InitOutsideInvariant):
        flowpipe(automaton.location("always"), below_ground, None, 0.01, 1.0)


# ---------------------------------------------------------------------------
# jump_successors


def ball_pipe_and_transitions():
    bundle = build_bouncing_ball()
    automaton = bundle.automaton.resolved()
    pipe = flowpipe(
        automaton.location("always"), bundle.initial.box.to_zonotope(), None, 0.01, 40.0
    )
    return pipe, automaton.transitions


def test_ball_bounce_window_resets_velocity():
    pipe, transitions = ball_pipe_and_transitions()
    successors = jump_successors(pipe.raw, transitions[0])
    assert len(successors) == 1
    succ, entry, width = successors[0]
    box = box_hull(succ)
    # hit speeds near sqrt(2 g h0) scaled by the restitution
    slowest = 0.75 * math.sqrt(2 * GRAVITY * 10.0)
    fastest = 0.75 * math.sqrt(2 * GRAVITY * 10.2)
    assert box.lo[1] >= slowest - 0.75 * GRAVITY * width - 0.01
    assert box.hi[1] <= fastest + 0.75 * GRAVITY * width + 0.01
    assert box.lo[0] == box.hi[0] == 0.0  # clamped onto the guard plane
    assert entry == pytest.approx(math.sqrt(2 * 10.0 / GRAVITY), abs=0.02)


def test_disjoint_guard_gives_no_successors():
    pipe, _ = ball_pipe_and_transitions()
    table_n = 4
    coeffs = np.zeros(table_n)
    coeffs[0] = 1.0
    from hyra.ir import ResetMap, Transition

    unreachable = Transition(
        "always", "always", Condition((LinearConstraint(coeffs, ">=", 100.0),)), ResetMap.identity(table_n)
    )
    assert jump_successors(pipe.raw, unreachable) == []


def test_identity_reset_returns_the_clamped_window():
    from hyra.ir import ResetMap, Transition
    from hyra.sets import intersect_condition

    pipe, _ = ball_pipe_and_transitions()
    coeffs = np.zeros(4)
    coeffs[0] = 1.0
    touch = Transition(
        "always", "always", Condition((LinearConstraint(coeffs, "<=", 0.05),)), ResetMap.identity(4)
    )
    successors = jump_successors(pipe.raw, touch)
    assert successors
    succ, _, _ = successors[0]
    agg = None
    for seg in pipe.raw:
        clamped = intersect_condition(seg.box(), touch.guard)
        if clamped is not None:
            agg = clamped if agg is None else agg.hull(clamped)
    assert agg is not None
    assert np.array_equal(box_hull(succ).lo, agg.lo)
    assert np.array_equal(box_hull(succ).hi, agg.hi)


# ---------------------------------------------------------------------------
# reach + check_safety


def test_ball_reach_is_safe_for_the_stated_bad_set():
    result = reach(build_bouncing_ball())
    assert result.verdict == Verdict.SAFE_PROVED
    assert result.stats.termination == Verdict.JUMP_BOUND_HIT


def test_ball_reach_cannot_prove_tighter_threshold():
    bundle = build_bouncing_ball()
    coeffs = np.zeros(4)
    coeffs[1] = 1.0
    s = bundle.settings
    tighter = ReachSettings(
        s.horizon, s.step, s.max_jumps,
        Condition((LinearConstraint(coeffs, ">=", 10.0),)), s.output_vars, s.fixpoint_check,
    )
    result = reach(ModelBundle(bundle.automaton, tighter, bundle.initial))
    assert result.verdict == Verdict.POSSIBLY_UNSAFE
    assert result.first_violation is not None


def test_platoon_exploration_stops_at_the_jump_bound():
    result = reach(build_platoon())
    assert result.stats.max_depth == 2
    assert result.stats.termination == Verdict.JUMP_BOUND_HIT
    assert result.stats.covered_time == pytest.approx(12.0)


def test_tank_run_covers_the_horizon():
    result = reach(build_tank())
    assert result.verdict == Verdict.SAFE_PROVED
    intervals = sorted((s.time_lo, s.time_hi) for s in result.segments)
    reached = 0.0
    for lo, hi in intervals:
        if lo <= reached + 1e-9:
            reached = max(reached, hi)
    assert reached == pytest.approx(5.0)


def test_check_safety_on_empty_flowpipe_is_vacuously_safe():
    verdict, offender = check_safety([], Condition())
    assert verdict == Verdict.SAFE_PROVED and offender is None


def test_forbidden_true_flags_the_first_segment():
    bundle = decay_bundle(0.1)
    result = reach(bundle)
    verdict, offender = check_safety(result.segments, Condition())
    assert verdict == Verdict.POSSIBLY_UNSAFE
    assert result.segments[offender].time_lo == 0.0


def test_verdict_consistent_under_shrinking_forbidden():
    bundle = build_bouncing_ball()
    coeffs = np.zeros(4)
    coeffs[1] = 1.0
    result = reach(bundle)
    assert result.verdict == Verdict.SAFE_PROVED
    for bound in (10.8, 11.5, 20.0):  # subsets of v >= 10.7
        verdict, _ = check_safety(result.segments, Condition((LinearConstraint(coeffs, ">=", bound),)))
        assert verdict == Verdict.SAFE_PROVED


def test_equality_forbidden_checked_as_thin_slab():
    bundle = decay_bundle(0.1)
    result = reach(bundle)
    coeffs = np.array([1.0])
    hit, _ = check_safety(result.segments, Condition((LinearConstraint(coeffs, "==", 0.5),)))
    assert hit == Verdict.POSSIBLY_UNSAFE
    miss, _ = check_safety(result.segments, Condition((LinearConstraint(coeffs, "==", 2.0),)))
    assert miss == Verdict.SAFE_PROVED


def test_halving_the_step_never_loosens_the_final_box():
    coarse = reach(decay_bundle(2e-3))
    fine = reach(decay_bundle(1e-3))

    def final_box(result):
        seg = [s for s in result.segments if s.time_lo <= 1.0 <= s.time_hi][-1]
        return seg.box()

    cb, fb = final_box(coarse), final_box(fine)
    assert fb.lo[0] >= cb.lo[0] - 1e-9
    assert fb.hi[0] <= cb.hi[0] + 1e-9


def test_reach_is_bitwise_deterministic():
    first = reach(build_tank())
    second = reach(build_tank())
    assert first.verdict == second.verdict
    assert len(first.segments) == len(second.segments)
    for a, b in zip(first.segments, second.segments):
        assert a.time_lo == b.time_lo and a.time_hi == b.time_hi
        assert a.location == b.location and a.jump_depth == b.jump_depth
        assert np.array_equal(a.set.center, b.set.center)
        assert np.array_equal(a.set.generators, b.set.generators)


def test_random_affine_systems_contain_their_simulations():
    # seeded random continuous systems, no jumps: every dense simulation
    # sample must land in the segment covering its time
    from hyra.simulate import Integrator, SimOptions, sample_initial, simulate

    rng = np.random.default_rng(2718)
    for trial in range(8):
        n = int(rng.integers(1, 4))
        a = rng.uniform(-2.0, 2.0, size=(n, n))
        c = rng.uniform(-1.0, 1.0, size=n)
        center = rng.uniform(-1.0, 1.0, size=n)
        radius = rng.uniform(0.01, 0.3, size=n)
        table = VariableTable(tuple(f"s{i}" for i in range(n)))
        automaton = HybridAutomaton(
            f"rand{trial}",
            table,
            (Location("flow", Condition(), AffineDynamics(a, np.zeros((n, 0)), c)),),
            (),
        )
        bundle = ModelBundle(
            automaton,
            ReachSettings(1.0, 0.01, 0, None, None, False),
            InitialCondition("flow", Box(center - radius, center + radius)),
        )
        result = reach(bundle)
        segments = result.segments
        assert segments[-1].time_hi == pytest.approx(1.0)
        for x0 in sample_initial(bundle.initial.box, 10, seed=trial):
            traj = simulate(bundle, x0, Integrator.HEUN, SimOptions(step=0.001))
            for t, state in zip(traj.times, traj.states):
                candidates = [s for s in segments if s.time_lo - 1e-12 <= t <= s.time_hi + 1e-12]
                assert any(s.box().contains(state, 1e-6) for s in candidates), (
                    f"trial {trial}: escape at t={t}"
                )


def test_segment_csv_has_per_variable_bounds():
    result = reach(decay_bundle(0.1))
    text = segments_to_csv(result, ("x",))
    lines = text.splitlines()
    assert lines[0] == "time_lo,time_hi,location,jump_depth,lo_x,hi_x"
    assert len(lines) == 1 + len(result.segments)
