"""Ground atoms, sort checking, and grounding of external atoms.

The planner reasons over a fixed vocabulary of sorted predicates.  External
atoms (those injected from situation awareness) are `reachable`, `on`,
`closed_gripper`, `in_hand` and `distance`; the internal position fluent `at`
only ever arises from plan search.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

ARMS = ("psm1", "psm2")
COLORS = ("blue", "green", "grey", "red", "yellow")
CLASSES = ("ring", "peg", "center")

EXTERNAL_PREDICATES = ("reachable", "on", "closed_gripper", "in_hand", "distance")
FLUENT_PREDICATES = ("on", "closed_gripper", "in_hand", "at")


class PlannerError(Exception):
    """Base class for planner-level failures."""


class IllSorted(PlannerError):
    """An atom uses an unknown predicate, wrong arity or a bad constant."""


class Inconsistent(PlannerError):
    """A set of atoms violates a state invariant."""


@dataclass(frozen=True, order=True)
class GroundAtom:
    """A predicate with all arguments bound to sorted constants."""

    predicate: str
    args: tuple = ()

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(str(a) for a in self.args)})"


def atom(predicate: str, *args) -> GroundAtom:
    """Build and sort-check a ground atom."""
    a = GroundAtom(predicate, tuple(args))
    check_sorts(a)
    return a


def check_sorts(a: GroundAtom) -> None:
    """Validate predicate name, arity and argument sorts; raise IllSorted."""
    p, args = a.predicate, a.args
    if p == "reachable":
        _expect(a, len(args) == 3, "arity 3")
        _expect(a, args[0] in ARMS, f"bad arm {args[0]!r}")
        _expect(a, args[1] in ("ring", "peg"), f"bad class {args[1]!r}")
        _expect(a, args[2] in COLORS, f"bad color {args[2]!r}")
    elif p == "on":
        _expect(a, len(args) == 4, "arity 4")
        _expect(a, args[0] == "ring" and args[2] == "peg", "on(ring,C1,peg,C2)")
        _expect(a, args[1] in COLORS and args[3] in COLORS, "bad color")
    elif p == "closed_gripper":
        _expect(a, len(args) == 1, "arity 1")
        _expect(a, args[0] in ARMS, f"bad arm {args[0]!r}")
    elif p == "in_hand":
        _expect(a, len(args) == 3, "arity 3")
        _expect(a, args[0] in ARMS, f"bad arm {args[0]!r}")
        _expect(a, args[1] == "ring", "in_hand(Arm,ring,Color)")
        _expect(a, args[2] in COLORS, f"bad color {args[2]!r}")
    elif p == "at":
        ok = (len(args) == 2 and args[0] in ARMS and args[1] == "center") or (
            len(args) == 3
            and args[0] in ARMS
            and args[1] in ("ring", "peg")
            and args[2] in COLORS
        )
        _expect(a, ok, "at(Arm,center) or at(Arm,Class,Color)")
    elif p == "distance":
        _expect(a, len(args) == 4, "arity 4")
        _expect(a, args[0] in ARMS, f"bad arm {args[0]!r}")
        _expect(a, args[1] == "ring", "distance(Arm,ring,Color,Value)")
        _expect(a, args[2] in COLORS, f"bad color {args[2]!r}")
        _expect(a, isinstance(args[3], int) and not isinstance(args[3], bool)
                and args[3] >= 0, "distance value must be a nonnegative integer")
    elif p == "fallen":
        # internal fluent: a ring deliberately dropped off-peg mid-plan
        _expect(a, len(args) == 2 and args[0] == "ring" and args[1] in COLORS,
                "fallen(ring,Color)")
    else:
        raise IllSorted(f"unknown predicate {p!r} in {a}")


def _expect(a: GroundAtom, cond: bool, why: str) -> None:
    if not cond:
        raise IllSorted(f"ill-sorted atom {a}: {why}")


@dataclass(frozen=True)
class State:
    """A timestep plus the set of fluents holding at it."""

    t: int
    fluents: frozenset = field(default_factory=frozenset)

    def holds(self, a: GroundAtom) -> bool:
        return a in self.fluents

    def __iter__(self):
        return iter(self.fluents)


_ATOM_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\(([^()]*)\))?\s*\.?\s*$")


def parse_atom(text: str) -> GroundAtom:
    """Parse one atom like `reachable(psm1,ring,red).` (trailing dot optional)."""
    m = _ATOM_RE.match(text)
    if not m:
        raise IllSorted(f"cannot parse atom: {text!r}")
    pred = m.group(1)
    raw = m.group(2)
    args = []
    if raw is not None and raw.strip():
        for tok in raw.split(","):
            tok = tok.strip()
            args.append(int(tok) if re.fullmatch(r"\d+", tok) else tok)
    a = GroundAtom(pred, tuple(args))
    check_sorts(a)
    return a


def parse_instance(text: str) -> set:
    """Parse a domain instance file: one atom per line, `%` comments."""
    out = set()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("%"):
            continue
        out.add(parse_atom(line))
    return out


def render_instance(atoms) -> str:
    return "\n".join(f"{a}." for a in sorted(atoms)) + "\n"


def check_state_invariants(fluents: frozenset) -> None:
    """Raise Inconsistent on violations of the structural state invariants."""
    held_by = {}
    for a in fluents:
        if a.predicate == "in_hand":
            arm = a.args[0]
            if arm in held_by and held_by[arm] != a.args[2]:
                raise Inconsistent(
                    f"arm {arm} holds two rings: {held_by[arm]} and {a.args[2]}")
            held_by[arm] = a.args[2]
            if GroundAtom("closed_gripper", (arm,)) not in fluents:
                raise Inconsistent(f"in_hand({arm},ring,{a.args[2]}) without closed gripper")
    ring_on = {}
    for a in fluents:
        if a.predicate == "on":
            c = a.args[1]
            if c in ring_on and ring_on[c] != a.args[3]:
                raise Inconsistent(
                    f"ring {c} on two pegs: {ring_on[c]} and {a.args[3]}")
            ring_on[c] = a.args[3]


def ground_externals(externals, peg_capacity: dict | None = None) -> State:
    """Ground a set of external atoms into the plan-time initial state.

    Adds the derived closure (a held ring implies a closed gripper) and
    rejects ill-sorted atoms, non-external predicates and invariant
    violations.  `peg_capacity` optionally bounds how many rings one peg
    color may carry (default 1 per color); used for the occupancy check.
    """
    fluents = set()
    for a in externals:
        check_sorts(a)
        if a.predicate not in EXTERNAL_PREDICATES:
            raise IllSorted(f"{a} is not an external predicate")
        fluents.add(a)
    # derived closure: holding implies closed gripper
    for a in list(fluents):
        if a.predicate == "in_hand":
            fluents.add(GroundAtom("closed_gripper", (a.args[0],)))
    check_state_invariants(frozenset(fluents))
    capacity = dict(peg_capacity or {})
    occupancy = {}
    for a in fluents:
        if a.predicate == "on":
            occupancy[a.args[3]] = occupancy.get(a.args[3], 0) + 1
    for color, n in occupancy.items():
        if n > capacity.get(color, 1):
            raise Inconsistent(
                f"peg color {color} carries {n} rings, capacity {capacity.get(color, 1)}")
    return State(t=1, fluents=frozenset(fluents))
