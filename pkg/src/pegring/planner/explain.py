"""Replay a plan step by step and report what fired and what changed."""

from __future__ import annotations

from dataclasses import dataclass

from .atoms import GroundAtom, State
from .domain import Domain, GroundAction, InvalidPlan
from .search import Plan


@dataclass(frozen=True)
class TraceEntry:
    """One executed step: action, satisfied preconditions, asserted effects."""

    t: int
    action: GroundAction
    fired_preconditions: tuple
    produced_effects: tuple  # "atom" for adds, "not atom" for deletes

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "action": str(self.action),
            "fired_preconditions": list(self.fired_preconditions),
            "produced_effects": list(self.produced_effects),
        }


def _fired_preconditions(dom: Domain, act, s: int) -> tuple:
    """Atoms that satisfied the executed action's precondition."""
    from .domain import ATC_BIT, ATR_BIT, CL_BIT, INH_BIT, _CIDX

    a = act.arm
    arm = act.ga.args[0]
    out = []
    if act.kind == "move":
        if act.cls == "center":
            held = [c for c in range(5) if s & INH_BIT[a][c]]
            if held:
                out.append(str(GroundAtom("in_hand", (arm, "ring", _color(held[0])))))
            else:
                other = 1 - a
                for c in range(5):
                    if s & INH_BIT[other][c]:
                        out.append(str(GroundAtom(
                            "in_hand", (_arm(other), "ring", _color(c)))))
        else:
            out.append(str(GroundAtom("reachable", (arm, act.cls, act.ga.args[2]))))
    elif act.kind == "grasp":
        c = act.color
        other = 1 - a
        if s & ATR_BIT[a][c]:
            out.append(str(GroundAtom("at", (arm, "ring", act.ga.args[2]))))
        else:
            out.append(str(GroundAtom("at", (arm, "center"))))
            out.append(str(GroundAtom("at", (_arm(other), "center"))))
            out.append(str(GroundAtom("in_hand", (_arm(other), "ring", act.ga.args[2]))))
    elif act.kind == "release":
        out.append(str(GroundAtom("closed_gripper", (arm,))))
    else:  # extract
        out.append(str(GroundAtom("in_hand", (arm, "ring", act.ga.args[2]))))
    return tuple(out)


def _arm(i: int) -> str:
    from .atoms import ARMS

    return ARMS[i]


def _color(i: int) -> str:
    from .atoms import COLORS

    return COLORS[i]


def explain_plan(plan: Plan, initial: State, peg_capacity=None) -> list:
    """Replay `plan` from `initial`; one TraceEntry per action.

    Raises InvalidPlan naming the first step whose executability fails.
    """
    from .domain import _BIT_ATOM

    dom = Domain.from_state(initial, peg_capacity)
    s = dom.encode(initial.fluents)
    trace = []
    by_t: dict[int, list] = {}
    for ga, t in plan.steps:
        by_t.setdefault(t, []).append(ga)
    for t in sorted(by_t):
        group = by_t[t]
        acts = [dom.find(ga) for ga in group]
        for act in acts:
            v = act.check(s, dom)
            if v is not None:
                raise InvalidPlan(f"step t={t} {act.ga}: {v}")
        pres = {id(a): _fired_preconditions(dom, a, s) for a in acts}
        s_next = s
        for act in sorted(acts, key=lambda a: a.kind_order):
            s2 = act.effects(s_next, dom)
            if s2 is None:
                raise InvalidPlan(f"step t={t} {act.ga}: occupied_peg")
            changed = s_next ^ s2
            adds = changed & s2
            dels = changed & s_next
            effects = []
            m = adds
            while m:
                low = m & -m
                effects.append(str(_BIT_ATOM[low]))
                m ^= low
            m = dels
            while m:
                low = m & -m
                effects.append(f"not {_BIT_ATOM[low]}")
                m ^= low
            trace.append(TraceEntry(
                t=t, action=act.ga,
                fired_preconditions=pres[id(act)],
                produced_effects=tuple(effects),
            ))
            s_next = s2
        s = s_next
    return trace
