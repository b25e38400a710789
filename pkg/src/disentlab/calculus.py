"""Fact-closure inference over consistency/restrictiveness atoms.

Facts are typed atoms C(I), R(I), D(I) over index sets.  D(I) is stored as
the conjunction C(I) and R(I).  The closure engine saturates an axiom set
under six rule schemas:

    complement    C(I) <-> R(~I)
    c_union       C(I) & C(J) => C(I | J)
    r_union       R(I) & R(J) => R(I | J)
    c_intersect   C(I) & C(J) => C(I & J)
    r_intersect   R(I) & R(J) => R(I & J)
    trivial       C({}), R({}), C(full), R(full)

r_union and c_intersect are only sound on supports whose zig-zag
connectivity holds for the participating sets; callers that care pass a
guard predicate which is consulted before those rules fire.  Every derived
atom carries a trace (rule name plus premises) back to the axioms.

The nuisance extension adds one unsupervisable index eta: eta-consistency
of I is plain consistency of I, eta-restrictiveness of I is plain
restrictiveness of I plus eta.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable, Sequence

from .errors import ArityTooLarge, CalculusError, FactParseError, NuisanceInAxiomIndexSet
from .indexset import ETA, IndexSet

MAX_UNIVERSE = 16

KIND_C = "C"
KIND_R = "R"
KIND_D = "D"

RuleGuard = Callable[[str, IndexSet, IndexSet], bool]


@dataclass(frozen=True, order=True)
class Fact:
    """A typed atom over an index set; kind is 'C', 'R', or 'D'."""

    kind: str
    index_set: IndexSet

    def __post_init__(self):
        if self.kind not in (KIND_C, KIND_R, KIND_D):
            raise CalculusError(f"unknown fact kind {self.kind!r}")

    def atoms(self) -> tuple[tuple[str, int], ...]:
        """Canonical C/R atoms: D expands to its two constituents."""
        if self.kind == KIND_D:
            return ((KIND_C, self.index_set.bits), (KIND_R, self.index_set.bits))
        return ((self.kind, self.index_set.bits),)

    def __str__(self) -> str:
        return f"{self.kind}{self.index_set}"


def fact(kind: str, indices: Iterable[int], n: int, nuisance: bool = False) -> Fact:
    return Fact(kind, IndexSet.of(indices, n, nuisance))


class FactSet:
    """A set of canonical C/R atoms with derivation traces."""

    def __init__(self, n: int, nuisance: bool = False):
        if n < 1:
            raise CalculusError(f"arity must be >= 1, got {n}")
        if n + (1 if nuisance else 0) > MAX_UNIVERSE:
            raise ArityTooLarge(f"universe of size {n} exceeds the cap of {MAX_UNIVERSE}")
        self.n = n
        self.nuisance = nuisance
        self.atoms: set[tuple[str, int]] = set()
        self.traces: dict[tuple[str, int], tuple[str, tuple]] = {}

    # -- membership ------------------------------------------------------------

    def _check(self, I: IndexSet):
        if (I.n, I.nuisance) != (self.n, self.nuisance):
            raise CalculusError(f"index set {I!r} outside this fact set's universe")

    def contains(self, f: Fact) -> bool:
        self._check(f.index_set)
        return all(a in self.atoms for a in f.atoms())

    def contains_eta(self, f: Fact) -> bool:
        """Query an eta-fact: the index set ranges over regular factors only."""
        return all(self.contains(lifted) for lifted in expand_eta_fact(f, self.n))

    def index_set(self, bits: int) -> IndexSet:
        return IndexSet(self.n, bits, self.nuisance)

    def facts(self) -> list[Fact]:
        return sorted(Fact(k, self.index_set(b)) for k, b in self.atoms)

    def derived_d(self) -> list[Fact]:
        """All D(I) whose two constituents are present."""
        c_bits = {b for k, b in self.atoms if k == KIND_C}
        r_bits = {b for k, b in self.atoms if k == KIND_R}
        return [Fact(KIND_D, self.index_set(b)) for b in sorted(c_bits & r_bits)]

    # -- construction ------------------------------------------------------------

    def _add(self, kind: str, bits: int, rule: str, premises: tuple) -> bool:
        atom = (kind, bits)
        if atom in self.atoms:
            return False
        self.atoms.add(atom)
        self.traces[atom] = (rule, premises)
        return True

    # -- traces --------------------------------------------------------------------

    def trace_lines(self, f: Fact) -> list[str]:
        """Replay the derivation of a fact back to axioms, premises first."""
        self._check(f.index_set)
        lines: list[str] = []
        seen: set[tuple[str, int]] = set()

        def visit(atom):
            if atom in seen:
                return
            seen.add(atom)
            rule, premises = self.traces[atom]
            for p in premises:
                visit(p)
            shown = ", ".join(str(Fact(k, self.index_set(b))) for k, b in premises)
            lines.append(f"{Fact(atom[0], self.index_set(atom[1]))} <= {rule}({shown})")

        for atom in f.atoms():
            if atom not in self.atoms:
                raise CalculusError(f"{f} is not in this fact set")
            visit(atom)
        return lines

    def __len__(self) -> int:
        return len(self.atoms)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FactSet)
            and (self.n, self.nuisance) == (other.n, other.nuisance)
            and self.atoms == other.atoms
        )


def closure(
    axioms: Iterable[Fact],
    n: int,
    nuisance: bool = False,
    guard: RuleGuard | None = None,
) -> FactSet:
    """Least fixpoint of the rule set over the axioms.

    The guard, when given, is consulted with (rule, I, J) before any
    union/intersection rule fires; returning False suppresses that single
    application.  Derivations are recorded for every atom.
    """
    fs = FactSet(n, nuisance)
    universe = n + (1 if nuisance else 0)
    mask = (1 << universe) - 1
    queue: deque[tuple[str, int]] = deque()

    def add(kind, bits, rule, premises):
        if fs._add(kind, bits, rule, premises):
            queue.append((kind, bits))

    for kind in (KIND_C, KIND_R):
        add(kind, 0, "trivial", ())
        add(kind, mask, "trivial", ())
    for f in axioms:
        fs._check(f.index_set)
        for kind, bits in f.atoms():
            add(kind, bits, "axiom", ())

    def allowed(rule, b1, b2):
        if guard is None:
            return True
        return guard(rule, fs.index_set(b1), fs.index_set(b2))

    while queue:
        kind, bits = queue.popleft()
        other = KIND_R if kind == KIND_C else KIND_C
        add(other, bits ^ mask, "complement", ((kind, bits),))
        partners = [b for k, b in fs.atoms if k == kind]
        for b2 in partners:
            premises = ((kind, bits), (kind, b2))
            union_rule = "c_union" if kind == KIND_C else "r_union"
            inter_rule = "c_intersect" if kind == KIND_C else "r_intersect"
            if allowed(union_rule, bits, b2):
                add(kind, bits | b2, union_rule, premises)
            if allowed(inter_rule, bits, b2):
                add(kind, bits & b2, inter_rule, premises)
    return fs


def entails(
    axioms: Iterable[Fact],
    query: Fact,
    n: int,
    nuisance: bool = False,
    guard: RuleGuard | None = None,
) -> tuple[bool, list[str]]:
    """Membership of the query in the closure, with its derivation trace.

    A False verdict means "not derivable from the rule set", not that the
    fact fails in every model.
    """
    fs = closure(axioms, n, nuisance, guard)
    if fs.contains(query):
        return True, fs.trace_lines(query)
    return False, []


# -- nuisance extension ----------------------------------------------------------------


def expand_eta_fact(f: Fact, n: int) -> list[Fact]:
    """Translate an eta-fact over regular factors into base facts over the
    universe with eta: C stays, R gains eta, D expands to both."""
    I = f.index_set
    if I.nuisance or I.n != n:
        raise NuisanceInAxiomIndexSet(
            f"eta-facts take index sets over the {n} regular factors, got {I!r}"
        )
    lifted = I.with_nuisance()
    eta = IndexSet.of([lifted.eta_index], n, True)
    if f.kind == KIND_C:
        return [Fact(KIND_C, lifted)]
    if f.kind == KIND_R:
        return [Fact(KIND_R, lifted.union(eta))]
    return [Fact(KIND_C, lifted), Fact(KIND_R, lifted.union(eta))]


def nuisance_closure(
    eta_axioms: Iterable[Fact],
    n: int,
    guard: RuleGuard | None = None,
) -> FactSet:
    """Closure over n factors plus the nuisance index.

    Axioms are eta-facts whose index sets range over the regular factors
    only (supervision cannot reference eta); they are expanded to base
    facts over the extended universe and then saturated as usual.
    """
    base_axioms: list[Fact] = []
    for f in eta_axioms:
        base_axioms.extend(expand_eta_fact(f, n))
    return closure(base_axioms, n, nuisance=True, guard=guard)


# -- supervision planning ------------------------------------------------------------------


def plan_supervision(
    n: int,
    goal: Sequence[Fact],
    candidates: Sequence,
    budget: int,
) -> list[tuple]:
    """Minimal candidate subsets whose guaranteed facts entail the goal.

    Each candidate supervision contributes consistency of its canonical
    index set as an axiom.  The search is exhaustive over subsets up to
    the budget and returns every achieving set of the smallest size
    (empty list if none exists within budget).
    """
    goal = list(goal)
    guarantees = [Fact(KIND_C, spec.guaranteed_index_set(n)) for spec in candidates]
    for size in range(0, min(budget, len(candidates)) + 1):
        winners = []
        for picks in combinations(range(len(candidates)), size):
            fs = closure([guarantees[i] for i in picks], n)
            if all(fs.contains(g) for g in goal):
                winners.append(tuple(candidates[i] for i in picks))
        if winners:
            return winners
    return []


# -- textual fact language ------------------------------------------------------------------

_FACT_RE = re.compile(r"^\s*(C|R|D)(eta)?\s*\{([^{}]*)\}\s*$")


def parse_facts(text: str, n: int, nuisance: bool = False) -> list[Fact]:
    """Parse a conjunction like ``C{1,2} & R{3}`` into facts.

    ``Ceta{..}`` / ``Reta{..}`` / ``Deta{..}`` are eta-fact sugar and
    require the nuisance universe, as does a literal ``eta`` index.
    """
    facts: list[Fact] = []
    text = text.strip()
    if not text:
        return facts
    for part in text.split("&"):
        m = _FACT_RE.match(part)
        if not m:
            raise FactParseError(f"cannot parse fact {part.strip()!r}")
        kind, eta_kind, body = m.group(1), m.group(2), m.group(3)
        indices: list[int] = []
        for tok in body.split(","):
            tok = tok.strip()
            if not tok:
                continue
            if tok == ETA:
                if not nuisance:
                    raise FactParseError("index 'eta' needs the nuisance universe")
                indices.append(n + 1)
            elif tok.isdigit():
                indices.append(int(tok))
            else:
                raise FactParseError(f"bad index {tok!r} in {part.strip()!r}")
        if eta_kind:
            if not nuisance:
                raise FactParseError(f"{kind}eta facts need the nuisance universe")
            base = Fact(kind, IndexSet.of(indices, n))
            facts.extend(expand_eta_fact(base, n))
        else:
            try:
                facts.append(Fact(kind, IndexSet.of(indices, n, nuisance)))
            except Exception as exc:
                raise FactParseError(f"bad fact {part.strip()!r}: {exc}") from exc
    return facts


def parse_fact(text: str, n: int, nuisance: bool = False) -> Fact:
    facts = parse_facts(text, n, nuisance)
    if len(facts) != 1:
        raise FactParseError(f"expected exactly one fact, got {len(facts)} in {text!r}")
    return facts[0]
