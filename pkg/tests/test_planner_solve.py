from __future__ import annotations

import time

import pytest

from pegring.planner import (
    AggregateMode,
    InvalidPlan,
    MissingDistance,
    Plan,
    Unsatisfiable,
    Violation,
    action,
    atom,
    check_executability,
    explain_plan,
    ground_externals,
    solve,
    solve_optimized,
)
from pegring.planner.domain import apply_action

from conftest import FIG_EXTERNALS, make_externals


def replay(plan: Plan, initial):
    """Replay a plan through the single-action apply; return the final state."""
    state = initial
    by_t = {}
    for ga, t in plan.steps:
        by_t.setdefault(t, []).append(ga)
    for t in sorted(by_t):
        for ga in by_t[t]:
            assert check_executability(state, ga) == "ok"
        merged = state
        for ga in sorted(by_t[t], key=lambda g: ("gemr".index(g.name[0]), g.args[0])):
            merged = apply_action(
                type(merged)(t=state.t, fluents=merged.fluents), ga)
        state = type(state)(t=state.t + 1, fluents=merged.fluents)
    return state


class TestFigurePlan:
    def test_skeleton_and_horizon(self, fig_initial):
        t0 = time.perf_counter()
        plan = solve(fig_initial, AggregateMode.PerStep)
        assert time.perf_counter() - t0 < 1.0
        assert plan.horizon <= 14
        moves = [(str(ga), t) for ga, t in plan.steps
                 if ga.name in ("move", "extract")]
        assert moves[:4] == [
            ("move(psm1,ring,red)", 1),
            ("extract(psm1,ring,red)", 3),
            ("move(psm1,peg,red)", 4),
            ("move(psm1,ring,yellow)", 6),
        ]
        names = [str(ga) for ga, _ in plan.steps]
        # red served single-arm, yellow handed over for psm2 to place
        assert "move(psm1,center)" in names
        assert "grasp(psm2,ring,yellow)" in names
        assert "move(psm2,peg,yellow)" in names
        assert names[-1] == "release(psm2)"

    def test_goal_state_reached(self, fig_initial):
        plan = solve(fig_initial)
        final = replay(plan, fig_initial)
        assert atom("on", "ring", "red", "peg", "red") in final.fluents
        assert atom("on", "ring", "yellow", "peg", "yellow") in final.fluents

    def test_determinism(self, fig_initial):
        a = solve(fig_initial)
        b = solve(fig_initial)
        assert "\n".join(a.render_lines()) == "\n".join(b.render_lines())


def test_goal_already_satisfied():
    st = make_externals(["reachable(psm1,ring,red)", "reachable(psm1,peg,red)",
                         "on(ring,red,peg,red)"])
    plan = solve(st)
    assert plan.horizon == 0 and plan.steps == ()


def test_empty_world_trivial():
    plan = solve(ground_externals(set()))
    assert plan.horizon == 0


def test_single_ring_same_side():
    st = make_externals(["reachable(psm1,ring,red)", "reachable(psm1,peg,red)"])
    plan = solve(st)
    assert plan.horizon == 4
    assert [ga.name for ga, _ in plan.steps] == ["move", "grasp", "move", "release"]


def test_unsatisfiable_no_peg():
    st = make_externals(["reachable(psm1,ring,red)"])
    with pytest.raises(Unsatisfiable):
        solve(st)


def test_unsatisfiable_peg_blocked_by_unreachable_ring():
    st = make_externals([
        "reachable(psm1,ring,red)", "reachable(psm1,peg,red)",
        "on(ring,blue,peg,red)",
    ])
    with pytest.raises(Unsatisfiable):
        solve(st, horizon_cap=12)


def test_scenario_b_parks_on_grey():
    st = make_externals([
        "reachable(psm1,ring,red)", "reachable(psm1,ring,yellow)",
        "reachable(psm1,ring,green)",
        "reachable(psm1,peg,red)", "reachable(psm1,peg,yellow)",
        "reachable(psm1,peg,green)", "reachable(psm1,peg,grey)",
        "on(ring,red,peg,yellow)", "on(ring,yellow,peg,red)",
        "on(ring,green,peg,green)",
    ])
    plan = solve(st)
    assert plan.horizon == 15
    names = [str(ga) for ga, _ in plan.steps]
    grey_park = names.index("move(psm1,peg,grey)")
    first_colored_place = min(
        names.index(n) for n in names
        if n in ("move(psm1,peg,red)", "move(psm1,peg,yellow)"))
    assert grey_park < first_colored_place
    # the already-placed green ring is left alone
    assert not any("green" in n and "move" in n for n in names)


def test_per_arm_dominates_per_step():
    st = make_externals([
        "reachable(psm1,ring,red)", "reachable(psm1,peg,red)",
        "reachable(psm2,ring,green)", "reachable(psm2,peg,green)",
    ])
    seq = solve(st, AggregateMode.PerStep)
    par = solve(st, AggregateMode.PerArm)
    assert seq.horizon == 8
    assert par.horizon == 4
    counts = {}
    for _, t in par.steps:
        counts[t] = counts.get(t, 0) + 1
    assert max(counts.values()) == 2


def test_per_arm_transfer_handoff_can_share_step():
    st = make_externals([
        "reachable(psm1,ring,red)", "reachable(psm2,peg,red)",
    ])
    par = solve(st, AggregateMode.PerArm)
    seq = solve(st, AggregateMode.PerStep)
    assert par.horizon <= seq.horizon
    final_ok = any(ga.name == "release" and ga.args[0] == "psm2"
                   for ga, _ in par.steps)
    assert final_ok


class TestExecutability:
    def test_grasp_with_closed_gripper(self):
        st = make_externals(["closed_gripper(psm1)", "reachable(psm1,ring,red)"])
        v = check_executability(st, action("grasp", "psm1", "ring", "red"))
        assert isinstance(v, Violation) and v.name == "grasp_with_closed_gripper"

    def test_extract_ok_with_in_hand(self):
        st = ground_externals({
            atom("on", "ring", "red", "peg", "grey"),
            atom("in_hand", "psm1", "ring", "red"),
            atom("reachable", "psm1", "ring", "red"),
        })
        assert check_executability(st, action("extract", "psm1", "ring", "red")) == "ok"

    def test_release_onto_occupied_peg(self):
        from pegring.planner.atoms import State
        st = ground_externals({
            atom("on", "ring", "blue", "peg", "red"),
            atom("in_hand", "psm1", "ring", "red"),
        })
        st = State(t=1, fluents=st.fluents | {atom("at", "psm1", "peg", "red")})
        v = check_executability(st, action("release", "psm1"))
        assert isinstance(v, Violation) and v.name == "occupied_peg"

    def test_move_before_extract(self):
        st = ground_externals({
            atom("on", "ring", "red", "peg", "grey"),
            atom("in_hand", "psm1", "ring", "red"),
            atom("reachable", "psm1", "peg", "red"),
        })
        v = check_executability(st, action("move", "psm1", "peg", "red"))
        assert isinstance(v, Violation) and v.name == "move_before_extract"


class TestExplain:
    def test_trace_matches_plan(self, fig_initial):
        plan = solve(fig_initial)
        trace = explain_plan(plan, fig_initial)
        assert len(trace) == plan.horizon
        assert trace[2].produced_effects == ("not on(ring,red,peg,grey)",)
        assert all(e.fired_preconditions for e in trace)

    def test_empty_plan_empty_trace(self):
        st = ground_externals(set())
        assert explain_plan(solve(st), st) == []

    def test_mutated_plan_invalid(self, fig_initial):
        plan = solve(fig_initial)
        # skip the grasp before the extract
        steps = tuple(s for s in plan.steps if s[1] != 2)
        broken = Plan(steps=steps, horizon=plan.horizon, mode=plan.mode)
        with pytest.raises(InvalidPlan):
            explain_plan(broken, fig_initial)


class TestOptimized:
    DIST = [
        "distance(psm1,ring,red,40)",
        "distance(psm1,ring,yellow,90)",
    ]

    def test_closest_ring_first(self):
        st = make_externals(FIG_EXTERNALS + self.DIST)
        plan = solve_optimized(st)
        assert str(plan.steps[0][0]) == "move(psm1,ring,red)"

    def test_swapped_distances_swap_first_grasp(self):
        swapped = ["distance(psm1,ring,red,90)", "distance(psm1,ring,yellow,40)"]
        st = make_externals(FIG_EXTERNALS + swapped)
        plan = solve_optimized(st)
        assert str(plan.steps[0][0]) == "move(psm1,ring,yellow)"

    def test_equal_distances_match_plain_solve(self):
        eq = ["distance(psm1,ring,red,50)", "distance(psm1,ring,yellow,50)"]
        st = make_externals(FIG_EXTERNALS + eq)
        st_plain = make_externals(FIG_EXTERNALS)
        assert solve_optimized(st).steps == solve(st_plain).steps

    def test_horizon_conservative(self):
        st = make_externals(FIG_EXTERNALS + self.DIST)
        assert solve_optimized(st).horizon == solve(st).horizon

    def test_missing_distance(self):
        st = make_externals(FIG_EXTERNALS + ["distance(psm1,ring,red,40)"])
        with pytest.raises(MissingDistance):
            solve_optimized(st)
