"""Ground action semantics for the peg-and-ring domain.

States are encoded as integer bitmasks over the dynamic fluents (`on`,
`in_hand`, `closed_gripper`, `at`); `reachable` and `distance` atoms are
static context.  Action semantics follow the move/grasp/release/extract
schema family with a one-step delay between preconditions and effects:

  move(Arm, ring|peg, Color)  pre reachable(...)        eff at(...)
  move(Arm, center)           pre in_hand(Arm,ring,C)   eff at(Arm,center)
                              (receiving arm: relaxed to "other arm holds
                               a ring", so a hand-off partner can meet it)
  grasp(Arm, ring, Color)     pre at(Arm,ring,C)        eff in_hand, closed
                              (hand-off: at both-arms-center + other holds)
  release(Arm)                pre closed_gripper(Arm)   eff open; held ring
                              settles on the peg the arm is at, stays with
                              the other holder, or drops loose
  extract(Arm, ring, Color)   pre in_hand(Arm,ring,C)   eff not on(C, _)

Executability constraints: no grasp with a closed gripper, no transporting
a ring still threaded on a peg, no release onto a full peg, and no moving
away while both arms hold the same ring.
"""

from __future__ import annotations

from dataclasses import dataclass

from .atoms import ARMS, COLORS, GroundAtom, IllSorted, State

NC = len(COLORS)

# ---------------------------------------------------------------------------
# Bit layout of the dynamic state
# ---------------------------------------------------------------------------
_ON0 = 0                      # on(ring,c1,peg,c2): c1*NC + c2
_INH0 = _ON0 + NC * NC        # in_hand(a,ring,c): _INH0 + a*NC + c
_CL0 = _INH0 + 2 * NC         # closed_gripper(a)
_ATR0 = _CL0 + 2              # at(a,ring,c)
_ATP0 = _ATR0 + 2 * NC        # at(a,peg,c)
_ATC0 = _ATP0 + 2 * NC        # at(a,center)
_FALL0 = _ATC0 + 2            # fallen(ring,c): dropped off-peg, plan-level dead end
N_BITS = _FALL0 + NC

ON_BIT = [[1 << (_ON0 + c1 * NC + c2) for c2 in range(NC)] for c1 in range(NC)]
INH_BIT = [[1 << (_INH0 + a * NC + c) for c in range(NC)] for a in range(2)]
CL_BIT = [1 << (_CL0 + a) for a in range(2)]
ATR_BIT = [[1 << (_ATR0 + a * NC + c) for c in range(NC)] for a in range(2)]
ATP_BIT = [[1 << (_ATP0 + a * NC + c) for c in range(NC)] for a in range(2)]
ATC_BIT = [1 << (_ATC0 + a) for a in range(2)]
FALL_BIT = [1 << (_FALL0 + c) for c in range(NC)]

ON_ROW = [sum(ON_BIT[c1]) for c1 in range(NC)]               # ring c1 on any peg
ON_COL = [sum(ON_BIT[c1][c2] for c1 in range(NC)) for c2 in range(NC)]
INH_ARM = [sum(INH_BIT[a]) for a in range(2)]
INH_RING = [INH_BIT[0][c] | INH_BIT[1][c] for c in range(NC)]
AT_ARM = [sum(ATR_BIT[a]) + sum(ATP_BIT[a]) + ATC_BIT[a] for a in range(2)]
ATR_RING = [ATR_BIT[0][c] | ATR_BIT[1][c] for c in range(NC)]

_CIDX = {c: i for i, c in enumerate(COLORS)}
_AIDX = {a: i for i, a in enumerate(ARMS)}

_BIT_ATOM: dict[int, GroundAtom] = {}
for c1 in range(NC):
    for c2 in range(NC):
        _BIT_ATOM[ON_BIT[c1][c2]] = GroundAtom("on", ("ring", COLORS[c1], "peg", COLORS[c2]))
for a in range(2):
    _BIT_ATOM[CL_BIT[a]] = GroundAtom("closed_gripper", (ARMS[a],))
    _BIT_ATOM[ATC_BIT[a]] = GroundAtom("at", (ARMS[a], "center"))
    for c in range(NC):
        _BIT_ATOM[INH_BIT[a][c]] = GroundAtom("in_hand", (ARMS[a], "ring", COLORS[c]))
        _BIT_ATOM[ATR_BIT[a][c]] = GroundAtom("at", (ARMS[a], "ring", COLORS[c]))
        _BIT_ATOM[ATP_BIT[a][c]] = GroundAtom("at", (ARMS[a], "peg", COLORS[c]))
for c in range(NC):
    _BIT_ATOM[FALL_BIT[c]] = GroundAtom("fallen", ("ring", COLORS[c]))

_CLASS_ORDER = {"ring": 0, "peg": 1, "center": 2}
_KIND_ORDER = {"grasp": 0, "extract": 1, "move": 2, "release": 3}


@dataclass(frozen=True, order=True)
class GroundAction:
    """A fully instantiated action, e.g. move(psm1,ring,red)."""

    name: str
    args: tuple

    def __str__(self) -> str:
        return f"{self.name}({','.join(self.args)})"

    @property
    def arm(self) -> str:
        return self.args[0]


def action(name: str, *args: str) -> GroundAction:
    """Build and sort-check a ground action."""
    args = tuple(args)
    ok = (
        (name == "move" and ((len(args) == 2 and args[1] == "center")
                             or (len(args) == 3 and args[1] in ("ring", "peg")
                                 and args[2] in COLORS)))
        or (name == "grasp" and len(args) == 3 and args[1] == "ring" and args[2] in COLORS)
        or (name == "release" and len(args) == 1)
        or (name == "extract" and len(args) == 3 and args[1] == "ring" and args[2] in COLORS)
    )
    if not ok or args[0] not in ARMS:
        raise IllSorted(f"ill-sorted action {name}({','.join(map(str, args))})")
    return GroundAction(name, args)


@dataclass(frozen=True)
class Violation:
    """A named executability violation, suitable for the explanation feed."""

    name: str
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.name}: {self.detail}" if self.detail else self.name


class InvalidPlan(Exception):
    """A plan failed executability when replayed against its initial state."""


class _Act:
    """Internal ground action with bitmask semantics."""

    __slots__ = ("ga", "key", "arm", "other", "kind", "cls", "color", "kind_order")

    def __init__(self, ga: GroundAction):
        self.ga = ga
        self.arm = _AIDX[ga.args[0]]
        self.other = 1 - self.arm
        self.kind = ga.name
        self.cls = ga.args[1] if len(ga.args) > 1 else None
        self.color = _CIDX[ga.args[2]] if len(ga.args) > 2 else None
        self.key = (self.arm, ga.name, _CLASS_ORDER.get(self.cls, 0),
                    self.color if self.color is not None else -1)
        self.kind_order = (_KIND_ORDER[ga.name], self.arm)

    def __repr__(self) -> str:
        return f"_Act({self.ga})"

    # -- executability -----------------------------------------------------
    def check(self, s: int, dom: "Domain") -> Violation | None:
        """Named violation, or None when executable in state s."""
        a = self.arm
        if self.kind == "move":
            held = s & INH_ARM[a]
            if held:
                c = (held >> (_INH0 + a * NC)).bit_length() - 1
                if s & ON_ROW[c]:
                    return Violation("move_before_extract",
                                     f"ring {COLORS[c]} is still on a peg")
                if s & INH_BIT[self.other][c]:
                    return Violation("dual_hold_move",
                                     f"both arms hold ring {COLORS[c]}")
            if self.cls == "center":
                if not held and not (s & INH_ARM[self.other]):
                    return Violation("precondition_failed",
                                     "no transfer pending and hand empty")
            elif (ARMS[a], self.cls, COLORS[self.color]) not in dom.reachable:
                return Violation("precondition_failed",
                                 f"not reachable({ARMS[a]},{self.cls},{COLORS[self.color]})")
            elif self.cls == "ring" and s & FALL_BIT[self.color]:
                return Violation("ring_fallen",
                                 f"ring {COLORS[self.color]} was dropped off-peg")
            return None
        if self.kind == "grasp":
            if s & CL_BIT[a]:
                return Violation("grasp_with_closed_gripper",
                                 f"{ARMS[a]} gripper already closed")
            c = self.color
            if s & FALL_BIT[c]:
                return Violation("ring_fallen",
                                 f"ring {COLORS[c]} was dropped off-peg")
            other_holds = s & INH_BIT[self.other][c]
            if (s & ATR_BIT[a][c]) and not other_holds:
                return None
            if (s & ATC_BIT[a]) and (s & ATC_BIT[self.other]) and other_holds:
                return None
            return Violation("precondition_failed",
                             f"not at({ARMS[a]},ring,{COLORS[c]}) and no hand-off possible")
        if self.kind == "release":
            if not s & CL_BIT[a]:
                return Violation("precondition_failed",
                                 f"gripper of {ARMS[a]} is not closed")
            held = s & INH_ARM[a]
            if held:
                c = (held >> (_INH0 + a * NC)).bit_length() - 1
                if not s & INH_BIT[self.other][c]:
                    atp = s & sum(ATP_BIT[a])
                    if atp:
                        x = (atp >> (_ATP0 + a * NC)).bit_length() - 1
                        if (s & ON_COL[x]).bit_count() >= dom.capacity(COLORS[x]):
                            return Violation("occupied_peg",
                                             f"peg {COLORS[x]} already carries a ring")
            return None
        # extract
        if not s & INH_BIT[a][self.color]:
            return Violation("precondition_failed",
                             f"not in_hand({ARMS[a]},ring,{COLORS[self.color]})")
        return None

    # -- effects (assumes executability already established on the base state)
    def effects(self, s: int, dom: "Domain") -> int | None:
        a = self.arm
        if self.kind == "move":
            s2 = s & ~AT_ARM[a]
            held = s & INH_ARM[a]
            if held:
                c = (held >> (_INH0 + a * NC)).bit_length() - 1
                s2 &= ~ATR_BIT[self.other][c]
            if self.cls == "center":
                return s2 | ATC_BIT[a]
            if self.cls == "ring":
                return s2 | ATR_BIT[a][self.color]
            return s2 | ATP_BIT[a][self.color]
        if self.kind == "grasp":
            return s | INH_BIT[a][self.color] | CL_BIT[a]
        if self.kind == "release":
            s2 = s & ~CL_BIT[a]
            held = s & INH_ARM[a]
            if not held:
                return s2
            c = (held >> (_INH0 + a * NC)).bit_length() - 1
            s2 &= ~INH_BIT[a][c]
            if s & INH_BIT[self.other][c]:
                return s2  # the other arm keeps the ring
            if s & ON_ROW[c]:
                return s2  # never extracted: the ring stays threaded
            atp = s & sum(ATP_BIT[a])
            if atp:
                x = (atp >> (_ATP0 + a * NC)).bit_length() - 1
                if (s & ON_COL[x]).bit_count() >= dom.capacity(COLORS[x]):
                    return None  # would stack onto a full peg
                s2 |= ON_BIT[c][x]
                s2 &= ~ATR_RING[c]  # the ring settled onto the peg
            else:
                # dropped off-peg: unrecoverable within this plan
                s2 |= FALL_BIT[c]
                s2 &= ~ATR_RING[c]
            return s2
        # extract
        return s & ~ON_ROW[self.color]

    def step(self, s: int, dom: "Domain") -> int | None:
        if self.check(s, dom) is not None:
            return None
        return self.effects(s, dom)


class Domain:
    """Static context plus the ground action table for one planning instance."""

    def __init__(self, reachable, distances, peg_capacity=None, ring_colors=None):
        self.reachable = frozenset(reachable)
        self.distances = dict(distances)
        self.peg_capacity = dict(peg_capacity or {})
        rings = set(ring_colors or ())
        for (arm, cls, color) in self.reachable:
            if cls == "ring":
                rings.add(color)
        self.ring_colors = tuple(sorted(rings, key=_CIDX.get))
        self.goal_colors = tuple(
            c for c in COLORS
            if ("psm1", "ring", c) in self.reachable
            or ("psm2", "ring", c) in self.reachable)
        self.goal_mask = 0
        for c in self.goal_colors:
            self.goal_mask |= ON_BIT[_CIDX[c]][_CIDX[c]]
        self.static_atoms = frozenset(
            {GroundAtom("reachable", r) for r in self.reachable}
            | {GroundAtom("distance", (arm, "ring", c, v))
               for (arm, c), v in self.distances.items()})
        self.actions = self._ground_actions()
        self.actions_by_arm = (
            tuple(a for a in self.actions if a.arm == 0),
            tuple(a for a in self.actions if a.arm == 1),
        )
        # per goal ring: which arms reach the ring / its peg
        self.ring_reach = {}
        self.peg_reach = {}
        for c in self.goal_colors:
            self.ring_reach[c] = tuple(
                i for i, arm in enumerate(ARMS) if (arm, "ring", c) in self.reachable)
            self.peg_reach[c] = tuple(
                i for i, arm in enumerate(ARMS) if (arm, "peg", c) in self.reachable)

    @classmethod
    def from_state(cls, state: State, peg_capacity=None) -> "Domain":
        reachable = set()
        distances = {}
        rings = set()
        for a in state.fluents:
            if a.predicate == "reachable":
                reachable.add(a.args)
            elif a.predicate == "distance":
                distances[(a.args[0], a.args[2])] = a.args[3]
            elif a.predicate == "in_hand":
                rings.add(a.args[2])
            elif a.predicate == "on":
                rings.add(a.args[1])
        return cls(reachable, distances, peg_capacity, rings)

    def capacity(self, color: str) -> int:
        return self.peg_capacity.get(color, 1)

    def _ground_actions(self):
        acts = []
        for arm in ARMS:
            for c in self.ring_colors:
                if (arm, "ring", c) in self.reachable:
                    acts.append(_Act(GroundAction("move", (arm, "ring", c))))
            for c in COLORS:
                if (arm, "peg", c) in self.reachable:
                    acts.append(_Act(GroundAction("move", (arm, "peg", c))))
            acts.append(_Act(GroundAction("move", (arm, "center"))))
            for c in self.ring_colors:
                acts.append(_Act(GroundAction("grasp", (arm, "ring", c))))
                acts.append(_Act(GroundAction("extract", (arm, "ring", c))))
            acts.append(_Act(GroundAction("release", (arm,))))
        acts.sort(key=lambda a: a.key)
        return tuple(acts)

    # -- encoding -----------------------------------------------------------
    def encode(self, fluents) -> int:
        s = 0
        for a in fluents:
            if a.predicate == "on":
                s |= ON_BIT[_CIDX[a.args[1]]][_CIDX[a.args[3]]]
            elif a.predicate == "in_hand":
                s |= INH_BIT[_AIDX[a.args[0]]][_CIDX[a.args[2]]]
            elif a.predicate == "closed_gripper":
                s |= CL_BIT[_AIDX[a.args[0]]]
            elif a.predicate == "at":
                i = _AIDX[a.args[0]]
                if a.args[1] == "center":
                    s |= ATC_BIT[i]
                elif a.args[1] == "ring":
                    s |= ATR_BIT[i][_CIDX[a.args[2]]]
                else:
                    s |= ATP_BIT[i][_CIDX[a.args[2]]]
            elif a.predicate == "fallen":
                s |= FALL_BIT[_CIDX[a.args[1]]]
            # reachable / distance atoms are static context
        return s

    def decode(self, s: int) -> frozenset:
        out = set(self.static_atoms)
        while s:
            low = s & -s
            out.add(_BIT_ATOM[low])
            s ^= low
        return frozenset(out)

    def goal(self, s: int) -> bool:
        return (s & self.goal_mask) == self.goal_mask

    def find(self, ga: GroundAction) -> _Act:
        for a in self.actions:
            if a.ga == ga:
                return a
        return _Act(ga)


def check_executability(state: State, ga: GroundAction,
                        peg_capacity=None) -> str | Violation:
    """Check one action against a state: 'ok' or a named Violation."""
    dom = Domain.from_state(state, peg_capacity)
    act = dom.find(ga)
    v = act.check(dom.encode(state.fluents), dom)
    return "ok" if v is None else v


def apply_action(state: State, ga: GroundAction,
                 peg_capacity=None) -> State:
    """Apply one action to a state (raises InvalidPlan on violations)."""
    dom = Domain.from_state(state, peg_capacity)
    act = dom.find(ga)
    s = dom.encode(state.fluents)
    v = act.check(s, dom)
    if v is not None:
        raise InvalidPlan(f"{ga} at t={state.t}: {v}")
    s2 = act.effects(s, dom)
    if s2 is None:
        raise InvalidPlan(f"{ga} at t={state.t}: occupied_peg")
    return State(t=state.t + 1, fluents=dom.decode(s2))
