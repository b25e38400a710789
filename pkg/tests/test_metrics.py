import numpy as np
import pytest

from disentlab import (
    CandidateModel,
    EvaluationTarget,
    Fact,
    IndexSet,
    SupervisionSpec,
    holds,
    mc_match_check,
    mig,
    normalized_consistency,
    normalized_restrictiveness,
    random_world,
    raw_consistency,
    raw_restrictiveness,
    rotation_world,
    schematic_world,
    uniform_world,
)
from disentlab.errors import ArityMismatch, DegenerateDenominator, MetricError, ZeroEntropyFactor


def gen_target(model):
    return EvaluationTarget.generator_based(model)


def enc_target(model):
    return EvaluationTarget.encoder_based(model)


def random_pair(seed, n_max=3, card_max=3):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, n_max + 1))
    cards = [int(rng.integers(2, card_max + 1)) for _ in range(n)]
    corr = float(rng.choice([0.0, float(rng.uniform(0, 1)), 1.0]))
    world = random_world(int(rng.integers(2**31)), n, cards, corr)
    model = CandidateModel(world, rng.permutation(world.support_size))
    return world, model


# -- independent encoder-direction oracle (straight-line enumeration) ----------------


def brute_encoder_consistency(model, members):
    world = model.base
    cols = [i - 1 for i in sorted(members)]
    probs = {tuple(int(v) for v in t): float(p) for t, p in zip(world.support, world.support_probs)}
    measured = {s: model.phi_inverse(s) for s in probs}
    key_mass = {}
    for s, p in probs.items():
        k = tuple(s[c] for c in cols)
        key_mass[k] = key_mass.get(k, 0.0) + p
    total = 0.0
    for s, p in probs.items():
        for s2, p2 in probs.items():
            if tuple(s[c] for c in cols) != tuple(s2[c] for c in cols):
                continue
            w = p * p2 / key_mass[tuple(s[c] for c in cols)]
            total += w * sum(1 for c in cols if measured[s][c] != measured[s2][c])
    return total


# -- raw deviations ------------------------------------------------------------------


def test_identity_model_raw_zero(world22):
    target = gen_target(CandidateModel.identity(world22))
    for bits in range(4):
        I = IndexSet(2, bits)
        assert raw_consistency(target, I) == 0.0
        assert raw_restrictiveness(target, I) == 0.0


def test_consistent_not_restrictive_raw_values():
    _, model = schematic_world("consistent-not-restrictive")
    target = gen_target(model)
    I1 = IndexSet.of([1], 2)
    assert raw_consistency(target, I1) == 0.0
    assert raw_restrictiveness(target, I1) == 0.5


def test_restrictive_not_consistent_raw_values():
    _, model = schematic_world("restrictive-not-consistent")
    target = gen_target(model)
    I1 = IndexSet.of([1], 2)
    assert raw_consistency(target, I1) == 0.5
    assert raw_restrictiveness(target, I1) == 0.0


def test_complement_identity_exact():
    for seed in range(30):
        _, model = random_pair(seed)
        target = gen_target(model)
        n = model.n
        for bits in range(1 << n):
            I = IndexSet(n, bits)
            assert raw_restrictiveness(target, I) == raw_consistency(target, I.complement())


def test_arity_mismatch_rejected(world22, xor_model):
    with pytest.raises(ArityMismatch):
        raw_consistency(gen_target(xor_model), IndexSet.of([1], 3))


# -- normalized scores ------------------------------------------------------------------


def test_schematic_normalized_scores():
    _, model = schematic_world("consistent-not-restrictive")
    target = gen_target(model)
    I1 = IndexSet.of([1], 2)
    c, r = normalized_consistency(target, I1), normalized_restrictiveness(target, I1)
    assert c.score == 1.0 and r.score == 0.0
    assert r.numerator == 0.5 and r.denominator == 0.5

    _, model = schematic_world("restrictive-not-consistent")
    target = gen_target(model)
    c, r = normalized_consistency(target, I1), normalized_restrictiveness(target, I1)
    assert c.score == 0.0 and r.score == 1.0


def test_degenerate_denominator_on_empty_set(world22):
    target = gen_target(CandidateModel.identity(world22))
    with pytest.raises(DegenerateDenominator):
        normalized_consistency(target, IndexSet.empty(2))


def test_score_bound_holds_on_random_targets():
    for seed in range(100):
        _, model = random_pair(seed)
        n = model.n
        for direction in (gen_target(model), enc_target(model)):
            for bits in range(1 << n):
                I = IndexSet(n, bits)
                for fn in (normalized_consistency, normalized_restrictiveness):
                    try:
                        rep = fn(direction, I)
                    except DegenerateDenominator:
                        continue
                    assert 0.0 <= rep.score <= 1.0
                    assert rep.numerator <= rep.denominator
                    assert rep.std_error == 0.0 and rep.mode == "exact"


def test_encoder_direction_against_brute_oracle():
    for seed in range(20):
        _, model = random_pair(seed)
        target = enc_target(model)
        n = model.n
        for bits in range(1, 1 << n):
            I = IndexSet(n, bits)
            expected = brute_encoder_consistency(model, set(I.members()))
            assert abs(raw_consistency(target, I) - expected) <= 1e-12


def test_exact_and_mc_agree():
    mismatches = 0
    cases = 0
    for seed in range(25):
        _, model = random_pair(seed)
        target = gen_target(model)
        n = model.n
        rng = np.random.default_rng(1000 + seed)
        bits = int(rng.integers(1, 1 << n))
        I = IndexSet(n, bits)
        try:
            exact = normalized_consistency(target, I)
            est = normalized_consistency(target, I, mode="mc", samples=10000, seed=seed)
        except DegenerateDenominator:
            continue
        cases += 1
        margin = 3.0 * max(est.std_error, 1e-9)
        if abs(est.score - exact.score) > margin:
            mismatches += 1
    assert cases >= 15
    assert mismatches <= max(1, int(0.05 * cases))


def test_mc_deterministic_and_thread_invariant():
    _, cand = rotation_world()
    target = gen_target(cand)
    I = IndexSet.of([2], 3)
    a = normalized_consistency(target, I, mode="mc", samples=20000, seed=5, threads=1)
    b = normalized_consistency(target, I, mode="mc", samples=20000, seed=5, threads=4)
    assert a.score == b.score and a.std_error == b.std_error
    c = normalized_consistency(target, I, mode="mc", samples=20000, seed=6)
    assert c.score != a.score


def test_rotation_world_scores():
    _, cand = rotation_world()
    target = gen_target(cand)
    I1 = IndexSet.of([1], 3)
    c = normalized_consistency(target, I1, mode="mc", samples=50000, seed=0)
    r = normalized_restrictiveness(target, I1, mode="mc", samples=50000, seed=0)
    assert c.score >= 0.99
    assert r.score < 0.5  # closed-form value is exactly 0
    assert abs(r.numerator - 1.0) < 0.05 and abs(r.denominator - 1.0) < 0.05
    assert r.std_error > 0.0


def test_exact_mode_rejected_for_continuous():
    _, cand = rotation_world()
    with pytest.raises(MetricError):
        normalized_consistency(gen_target(cand), IndexSet.of([1], 3), mode="exact")


def test_rotation_encoder_direction_mirrors_generator():
    # the learned encoder is also consistent-but-unrestricted on the angle
    _, cand = rotation_world()
    target = enc_target(cand)
    I1 = IndexSet.of([1], 3)
    c = normalized_consistency(target, I1, mode="mc", samples=30000, seed=0)
    r = normalized_restrictiveness(target, I1, mode="mc", samples=30000, seed=0)
    assert c.score >= 0.99
    assert r.score < 0.5


# -- holds ------------------------------------------------------------------------------------


def test_holds_identity_model(world22):
    target = gen_target(CandidateModel.identity(world22))
    for i in (1, 2):
        assert holds(target, Fact("D", IndexSet.of([i], 2)))


def test_holds_empty_set_vacuous(world22, xor_model):
    assert holds(gen_target(xor_model), Fact("D", IndexSet.empty(2)))


def test_holds_schematic(world22):
    _, model = schematic_world("consistent-not-restrictive")
    target = gen_target(model)
    I1 = IndexSet.of([1], 2)
    assert holds(target, Fact("C", I1))
    assert not holds(target, Fact("R", I1))
    assert not holds(target, Fact("D", I1))


def test_holds_mc_mode_on_rotation():
    _, cand = rotation_world()
    target = gen_target(cand)
    I1 = IndexSet.of([1], 3)
    assert holds(target, Fact("C", I1), tol=1e-3, mode="mc", samples=20000, seed=0)
    assert not holds(target, Fact("R", I1), tol=1e-3, mode="mc", samples=20000, seed=0)


# -- mutual information gap ---------------------------------------------------------------------


def test_mig_identity_is_one(world22):
    report = mig(gen_target(CandidateModel.identity(world22)))
    assert report.per_factor == (1.0, 1.0) and report.mean == 1.0


def test_mig_xor_collapses_factor_two(world22):
    w3 = uniform_world((2, 2))
    model = CandidateModel.from_map(w3, lambda t: (t[0], t[0] ^ t[1]))
    report = mig(gen_target(model))
    assert report.per_factor[1] == 0.0


def test_mig_single_factor_convention():
    w = uniform_world((4,))
    report = mig(gen_target(CandidateModel.identity(w)))
    assert report.per_factor == (1.0,)


def test_mig_zero_entropy_factor():
    w = DiscreteWorld_card1()
    with pytest.raises(ZeroEntropyFactor):
        mig(gen_target(CandidateModel.identity(w)))


def DiscreteWorld_card1():
    from disentlab import DiscreteWorld

    return DiscreteWorld((2, 1), [0.5, 0.5], [[0], [1]])


def test_mig_mc_binned_on_rotation():
    _, cand = rotation_world()
    report = mig(gen_target(cand), bins=20, samples=20000, seed=0)
    assert report.mode == "mc"
    # the angle aligns with itself; the rotated disk coordinates do not
    assert report.per_factor[0] > 0.5
    assert report.per_factor[1] < 0.3 and report.per_factor[2] < 0.3


# -- distribution-match test ----------------------------------------------------------------------


def test_match_check_null_case():
    oracle, _ = rotation_world()
    res = mc_match_check(oracle, oracle, SupervisionSpec("share-pairing", (2,)), seed=1, samples=20000)
    assert res.passed


def test_match_check_rotation_labeling_passes():
    oracle, cand = rotation_world()
    res = mc_match_check(cand, oracle, SupervisionSpec("restricted-labeling", (1,)), seed=0, samples=50000)
    assert res.passed


def test_match_check_rotation_share2_fails():
    oracle, cand = rotation_world()
    res = mc_match_check(cand, oracle, SupervisionSpec("share-pairing", (2,)), seed=0, samples=50000)
    assert not res.passed
    assert res.statistic > res.threshold


def test_match_check_needs_continuous_world(world22):
    with pytest.raises(MetricError):
        mc_match_check(CandidateModel.identity(world22), world22, SupervisionSpec("share-pairing", (1,)))


# -- reports --------------------------------------------------------------------------------------


def test_score_report_serializes(world22, xor_model):
    rep = normalized_consistency(gen_target(xor_model), IndexSet.of([1], 2))
    doc = rep.to_dict()
    assert doc["score"] == 1.0 and doc["index_set"] == [1] and doc["mode"] == "exact"
