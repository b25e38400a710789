"""Empirical validation of every guarantee on desk-scale instances.

Each claim gets an independent check: a second straight-line enumeration
of the defining expectations (kept deliberately separate from the metrics
module's vectorized path), randomized soundness sweeps of the calculus
with the zig-zag guard, the named counterexample suite, and structural
assumption reports for worlds.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations as _combinations

import numpy as np

from .calculus import Fact, RuleGuard, closure, nuisance_closure
from .continuous import rotation_world
from .errors import SupportTooLarge
from .indexset import IndexSet
from .learner import enumerate_matched
from .metrics import (
    EvaluationTarget,
    holds,
    mc_match_check,
    normalized_consistency,
    normalized_restrictiveness,
)
from .supervision import SupervisionSpec
from .worlds import (
    CandidateModel,
    DiscreteWorld,
    random_world,
    schematic_world,
    zigzag_connected_support,
)

BRUTE_SUPPORT_CAP = 4096
FACT_TOL = 1e-12


# -- independent brute-force oracle ------------------------------------------------


def check_fact_brute(world: DiscreteWorld, model: CandidateModel, fact: Fact, tol: float = FACT_TOL) -> bool:
    """Evaluate a generator-based C/R/D fact by direct enumeration.

    This is a second implementation of the defining expectations, written
    as plain dictionary loops so it shares no code with the metrics path.
    """
    if world.support_size > BRUTE_SUPPORT_CAP:
        raise SupportTooLarge(f"support {world.support_size} exceeds {BRUTE_SUPPORT_CAP}")
    q = {}
    phi = {}
    for r in range(model.support_size):
        z = tuple(int(v) for v in model.support[r])
        q[z] = float(model.probs[r])
        phi[z] = tuple(int(v) for v in model.mapped[r])
    members = set(fact.index_set.members())
    if fact.kind == "C":
        return _brute_consistency_dev(q, phi, members, world.n) <= tol
    if fact.kind == "R":
        return _brute_restrictiveness_dev(q, phi, members, world.n) <= tol
    return (
        _brute_consistency_dev(q, phi, members, world.n) <= tol
        and _brute_restrictiveness_dev(q, phi, members, world.n) <= tol
    )


def _brute_consistency_dev(q, phi, members, n) -> float:
    cols = [i - 1 for i in sorted(members)]
    mass_by_key = {}
    for z, pz in q.items():
        key = tuple(z[c] for c in cols)
        mass_by_key[key] = mass_by_key.get(key, 0.0) + pz
    total = 0.0
    for z, pz in q.items():
        key = tuple(z[c] for c in cols)
        for z2, pz2 in q.items():
            if tuple(z2[c] for c in cols) != key:
                continue
            weight = pz * pz2 / mass_by_key[key]
            total += weight * sum(1 for c in cols if phi[z][c] != phi[z2][c])
    return total


def _brute_restrictiveness_dev(q, phi, members, n) -> float:
    rest = [i - 1 for i in range(1, n + 1) if i not in members]
    mass_by_key = {}
    for z, pz in q.items():
        key = tuple(z[c] for c in rest)
        mass_by_key[key] = mass_by_key.get(key, 0.0) + pz
    total = 0.0
    for z, pz in q.items():
        key = tuple(z[c] for c in rest)
        for z2, pz2 in q.items():
            if tuple(z2[c] for c in rest) != key:
                continue
            weight = pz * pz2 / mass_by_key[key]
            total += weight * sum(1 for c in rest if phi[z][c] != phi[z2][c])
    return total


# -- reports ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VerifyCheck:
    name: str
    status: str  # "pass" | "fail"
    statistic: float | None = None
    detail: str = ""
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "statistic": self.statistic,
            "detail": self.detail,
            "seed": self.seed,
        }


@dataclass
class VerificationReport:
    checks: list[VerifyCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.status == "pass" for c in self.checks)

    def add(self, name, ok, statistic=None, detail="", seed=None):
        self.checks.append(
            VerifyCheck(name, "pass" if ok else "fail", statistic, detail, seed)
        )

    def extend(self, other: "VerificationReport"):
        self.checks.extend(other.checks)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}

    def to_text(self) -> str:
        lines = []
        for c in self.checks:
            stat = "" if c.statistic is None else f"  statistic={c.statistic:.6g}"
            detail = f"  ({c.detail})" if c.detail else ""
            lines.append(f"[{c.status.upper():4}] {c.name}{stat}{detail}")
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


# -- zig-zag guard -------------------------------------------------------------------


def zigzag_guard(support) -> RuleGuard:
    """Guard that lets union/intersection rules fire only when the support
    is zig-zag connected for the participating index sets.

    Restrictiveness union needs connectivity for (I, J) directly;
    consistency intersection for the complements.  The other rules hold
    on any support and are never suppressed.
    """
    cache: dict = {}

    def ok(I: IndexSet, J: IndexSet) -> bool:
        key = frozenset((I.bits, J.bits))
        if key not in cache:
            cache[key] = zigzag_connected_support(support, I, J)
        return cache[key]

    def guard(rule: str, I: IndexSet, J: IndexSet) -> bool:
        if rule == "r_union":
            return ok(I, J)
        if rule == "c_intersect":
            return ok(I.complement(), J.complement())
        return True

    return guard


# -- calculus soundness sweep -----------------------------------------------------------


@dataclass
class SweepReport:
    trials: int
    facts_checked: int
    violations: list[dict]
    seed: int

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "facts_checked": self.facts_checked,
            "violations": self.violations,
            "seed": self.seed,
            "passed": self.passed,
        }


def _true_atoms(target: EvaluationTarget, n: int) -> set[tuple[str, int]]:
    """Exact truth of every C/R atom over all 2^n index sets."""
    truths = set()
    for bits in range(1 << n):
        I = IndexSet(n, bits)
        if holds(target, Fact("C", I)):
            truths.add(("C", bits))
        if holds(target, Fact("R", I)):
            truths.add(("R", bits))
    return truths


def _sweep_trial(trial_seed: int, n_max: int, card_max: int) -> tuple[int, list[dict]]:
    rng = np.random.default_rng(trial_seed)
    n = int(rng.integers(1, n_max + 1))
    cards = [int(rng.integers(2, card_max + 1)) for _ in range(n)]
    corr = float(rng.choice([0.0, float(rng.uniform(0.0, 1.0)), 1.0]))
    world = random_world(int(rng.integers(2**31)), n, cards, corr)
    model = CandidateModel(world, rng.permutation(world.support_size))
    target = EvaluationTarget.generator_based(model)

    truths = _true_atoms(target, n)
    axioms = [
        Fact(kind, IndexSet(n, bits))
        for kind, bits in sorted(truths)
        if rng.random() < 0.5
    ]
    derived = closure(axioms, n, guard=zigzag_guard(model.support))
    violations = []
    for kind, bits in sorted(derived.atoms):
        if (kind, bits) not in truths:
            violations.append(
                {
                    "trial_seed": trial_seed,
                    "fact": str(Fact(kind, IndexSet(n, bits))),
                    "axioms": [str(a) for a in axioms],
                    "perm": [int(v) for v in model.perm],
                }
            )
    return len(derived.atoms), violations


def soundness_sweep(
    seed: int = 0,
    trials: int = 1000,
    n_max: int = 3,
    card_max: int = 3,
    threads: int = 1,
) -> SweepReport:
    """Random worlds and bijections: every fact the guarded closure derives
    from true axioms must itself be true under exact evaluation."""
    trial_seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(trials)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda s: _sweep_trial(s, n_max, card_max), trial_seeds))
    else:
        results = [_sweep_trial(s, n_max, card_max) for s in trial_seeds]
    checked = sum(k for k, _ in results)
    violations = [v for _, vs in results for v in vs]
    return SweepReport(trials, checked, violations, seed)


def exhaustive_bijection_sweep(world: DiscreteWorld, use_guard: bool = True) -> SweepReport:
    """All bijections of one world, axioms = all true atoms, zero tolerance
    for unsound derivations."""
    n = world.n
    guard = zigzag_guard(world.support) if use_guard else None
    checked = 0
    violations = []
    from itertools import permutations

    for perm in permutations(range(world.support_size)):
        model = CandidateModel(world, perm)
        target = EvaluationTarget.generator_based(model)
        truths = _true_atoms(target, n)
        axioms = [Fact(kind, IndexSet(n, bits)) for kind, bits in sorted(truths)]
        derived = closure(axioms, n, guard=guard)
        checked += len(derived.atoms)
        for kind, bits in sorted(derived.atoms):
            if (kind, bits) not in truths:
                violations.append({"perm": list(perm), "fact": str(Fact(kind, IndexSet(n, bits)))})
    return SweepReport(-1, checked, violations, 0)


# -- named counterexamples ----------------------------------------------------------------


def run_counterexample_suite(seed: int = 0, samples: int = 50000) -> VerificationReport:
    """The four named constructions that separate the concepts.

    (a) a model consistent but not restrictive on factor 1, (b) the
    transpose, (c) the continuous rotation candidate that matches the
    labeled distribution yet is unrestricted, (d) the disconnected-support
    world where per-coordinate restrictiveness fails to combine.
    """
    report = VerificationReport()

    world, model = schematic_world("consistent-not-restrictive")
    target = EvaluationTarget.generator_based(model)
    I1 = IndexSet.of([1], 2)
    c = normalized_consistency(target, I1)
    r = normalized_restrictiveness(target, I1)
    ok = (
        c.score == 1.0
        and r.score == 0.0
        and holds(target, Fact("C", I1))
        and not holds(target, Fact("R", I1))
    )
    report.add("consistent-not-restrictive", ok, statistic=r.score)

    world, model = schematic_world("restrictive-not-consistent")
    target = EvaluationTarget.generator_based(model)
    c = normalized_consistency(target, I1)
    r = normalized_restrictiveness(target, I1)
    ok = (
        r.score == 1.0
        and c.score == 0.0
        and holds(target, Fact("R", I1))
        and not holds(target, Fact("C", I1))
    )
    report.add("restrictive-not-consistent", ok, statistic=c.score)

    oracle, candidate = rotation_world()
    target = EvaluationTarget.generator_based(candidate)
    I1c = IndexSet.of([1], 3)
    match = mc_match_check(
        candidate, oracle, SupervisionSpec("restricted-labeling", (1,)), seed=seed, samples=samples
    )
    c = normalized_consistency(target, I1c, mode="mc", samples=samples, seed=seed)
    r = normalized_restrictiveness(target, I1c, mode="mc", samples=samples, seed=seed)
    report.add(
        "rotation-distribution-match", match.passed, statistic=match.p_value, seed=seed
    )
    report.add(
        "rotation-consistent-unrestricted",
        c.score >= 0.99 and r.score <= 0.6,
        statistic=r.score,
        detail=f"consistency={c.score:.4f} restrictiveness={r.score:.4f}",
        seed=seed,
    )

    world, model = schematic_world("zigzag-violation")
    target = EvaluationTarget.generator_based(model)
    n = world.n
    r1, r2, r12 = (Fact("R", IndexSet.of(s, n)) for s in ([1], [2], [1, 2]))
    truths_ok = holds(target, r1) and holds(target, r2) and not holds(target, r12)
    unguarded = closure([r1, r2], n)
    guarded = closure([r1, r2], n, guard=zigzag_guard(model.support))
    detection_ok = unguarded.contains(r12) and not guarded.contains(r12)
    report.add(
        "zigzag-violation",
        truths_ok and detection_ok,
        detail="union rule misfires without the connectivity guard and is suppressed with it",
    )
    return report


# -- structural assumption checks --------------------------------------------------------------


@dataclass
class AssumptionReport:
    injective: bool
    encoder_inverts: bool
    zigzag_failures: list[tuple[tuple[int, ...], tuple[int, ...]]]

    @property
    def ok(self) -> bool:
        return self.injective and self.encoder_inverts and not self.zigzag_failures

    def to_dict(self) -> dict:
        return {
            "injective": self.injective,
            "encoder_inverts": self.encoder_inverts,
            "zigzag_failures": [
                {"I": list(i), "J": list(j)} for i, j in self.zigzag_failures
            ],
            "ok": self.ok,
        }


def check_assumptions(world: DiscreteWorld, max_set_size: int = 2) -> AssumptionReport:
    """Recoverability and connectivity report for a world.

    Checks generator injectivity on the support, exact inversion by the
    derived encoder, and zig-zag connectivity over all index-set pairs up
    to the given size.
    """
    ids = [world.generate(tuple(int(v) for v in t)) for t in world.support]
    injective = len(set(ids)) == len(ids)
    encoder_inverts = all(
        world.encode(world.generate(tuple(int(v) for v in t))) == tuple(int(v) for v in t)
        for t in world.support
    )
    sets = []
    for size in range(1, max_set_size + 1):
        sets.extend(_combinations(range(1, world.n + 1), size))
    failures = []
    for a in sets:
        for b in sets:
            if a > b:
                continue
            I, J = IndexSet.of(a, world.n), IndexSet.of(b, world.n)
            if not zigzag_connected_support(world.support, I, J):
                failures.append((a, b))
    return AssumptionReport(injective, encoder_inverts, failures)


# -- weak-supervision guarantee battery ------------------------------------------------------------


def _card_shapes(support_max: int) -> list[tuple[int, ...]]:
    shapes = []

    def grow(prefix, budget):
        if prefix:
            shapes.append(tuple(prefix))
        for k in range(2, budget + 1):
            grow(prefix + [k], budget // k)

    grow([], support_max)
    return sorted(shapes, key=lambda s: (len(s), s))


def theorem_battery(support_max: int = 6, seed: int = 0) -> list[DiscreteWorld]:
    """Worlds with enumerable supports: per shape one uniform prior, one
    correlated prior, and one degenerate diagonal-support prior."""
    from .worlds import uniform_world

    worlds = []
    rng = np.random.default_rng(seed)
    for shape in _card_shapes(support_max):
        worlds.append(uniform_world(shape))
        worlds.append(random_world(int(rng.integers(2**31)), len(shape), shape, 0.6))
        worlds.append(random_world(int(rng.integers(2**31)), len(shape), shape, 1.0))
    return worlds


def battery_specs(world: DiscreteWorld) -> list[SupervisionSpec]:
    """Every supervision kind applicable to a world: labeling and match
    pairing over each nonempty index set, share/change/rank per factor."""
    n = world.n
    specs: list[SupervisionSpec] = []
    for bits in range(1, 1 << n):
        indices = tuple(i + 1 for i in range(n) if bits >> i & 1)
        specs.append(SupervisionSpec("restricted-labeling", indices))
        specs.append(SupervisionSpec("match-pairing", indices))
    for i in range(1, n + 1):
        specs.append(SupervisionSpec("share-pairing", (i,)))
        specs.append(SupervisionSpec("change-pairing", (i,)))
        if world.ordered[i - 1]:
            specs.append(SupervisionSpec("rank-pairing", (i,)))
    return specs


def verify_theorem_guarantees(support_max: int = 6, seed: int = 0) -> VerificationReport:
    """Exhaustive checks of the distribution-matching guarantees.

    universality: every matched candidate of every battery world and
    supervision satisfies the guaranteed consistency fact;
    impossibility: labeling factor 1 of the uniform 2x2 world leaves
    exactly two of four matched candidates unrestricted on it;
    full disentanglement: complete share pairing forces a perfect
    information gap, while unsupervised matching admits a collapsed one.
    """
    from .learner import find_violating_model, verify_guarantee
    from .metrics import mig
    from .worlds import uniform_world

    report = VerificationReport()

    cases = 0
    matched_total = 0
    failures: list[str] = []
    for world in theorem_battery(support_max, seed):
        for spec in battery_specs(world):
            res = verify_guarantee(world, spec)
            cases += 1
            matched_total += res.matched_count
            if not res.ok:
                failures.append(f"{world!r} {spec.to_string()}")
    report.add(
        "theorem-guarantee-universality",
        not failures,
        statistic=float(matched_total),
        detail=f"{cases} (world, supervision) cases" + (f"; failures: {failures}" if failures else ""),
        seed=seed,
    )

    world22 = uniform_world((2, 2))
    label1 = SupervisionSpec("restricted-labeling", (1,))
    matched = enumerate_matched(world22, [label1])
    r1 = Fact("R", IndexSet.of([1], 2))
    violators = [
        m for m in matched if not holds(EvaluationTarget.generator_based(m), r1)
    ]
    witness = find_violating_model(world22, [label1], r1)
    report.add(
        "impossibility-witness-counts",
        len(matched) == 4 and len(violators) == 2 and witness is not None,
        statistic=float(len(violators)),
        detail=f"matched={len(matched)} violators={len(violators)}",
    )

    share_ok = True
    share_cases = 0
    for world in theorem_battery(support_max, seed):
        full = world.support_size == int(np.prod(world.cards))
        if world.n < 2 or not full or np.ptp(world.support_probs) > 0:
            continue  # the perfect-gap claim needs independent factors
        specs = [SupervisionSpec("share-pairing", (i,)) for i in range(1, world.n + 1)]
        for model in enumerate_matched(world, specs):
            share_cases += 1
            gaps = mig(EvaluationTarget.generator_based(model)).per_factor
            if any(g != 1.0 for g in gaps):
                share_ok = False
    report.add(
        "complete-share-perfect-information-gap",
        share_ok and share_cases > 0,
        statistic=float(share_cases),
    )

    unsup = enumerate_matched(world22, [])
    collapse = any(
        min(mig(EvaluationTarget.generator_based(m)).per_factor) == 0.0 for m in unsup
    )
    report.add("unsupervised-information-gap-collapse", collapse, statistic=float(len(unsup)))

    report.extend(check_nuisance_guarantee(uniform_world((2, 2, 2)), supervised=2))
    return report


# -- nuisance guarantee ---------------------------------------------------------------------------


def check_nuisance_guarantee(world: DiscreteWorld, supervised: int) -> VerificationReport:
    """Supervising every factor but the last (treated as the nuisance):
    share pairing on each supervised factor must leave only matched
    candidates that are eta-disentangled on all of them.

    eta-disentanglement of factor i means consistency of {i} plus
    restrictiveness of {i, eta}.
    """
    report = VerificationReport()
    n = world.n
    if supervised != n - 1:
        raise ValueError("the nuisance check supervises all factors except the last")

    eta_axioms = [Fact("C", IndexSet.of([i], supervised)) for i in range(1, supervised + 1)]
    fs = nuisance_closure(eta_axioms, supervised)
    closure_ok = all(
        fs.contains_eta(Fact("D", IndexSet.of([i], supervised)))
        for i in range(1, supervised + 1)
    )
    report.add("nuisance-closure-derives-eta-disentanglement", closure_ok)

    specs = [SupervisionSpec("share-pairing", (i,)) for i in range(1, supervised + 1)]
    matched = enumerate_matched(world, specs)
    bad = 0
    for model in matched:
        target = EvaluationTarget.generator_based(model)
        for i in range(1, supervised + 1):
            c_ok = holds(target, Fact("C", IndexSet.of([i], n)))
            r_ok = holds(target, Fact("R", IndexSet.of([i, n], n)))
            if not (c_ok and r_ok):
                bad += 1
                break
    report.add(
        "nuisance-matched-set-eta-disentangled",
        bad == 0 and len(matched) > 0,
        statistic=float(len(matched)),
        detail=f"{len(matched)} matched candidates, {bad} violating",
    )
    return report
