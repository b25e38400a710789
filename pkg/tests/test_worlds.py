import json

import numpy as np
import pytest

from disentlab import (
    CandidateModel,
    DiscreteWorld,
    IndexSet,
    random_world,
    schematic_world,
    uniform_world,
    world_from_doc,
    zigzag_connected,
    zigzag_connected_support,
)
from disentlab.errors import (
    ArityMismatch,
    NonInjectiveGenerator,
    NonNormalizedPrior,
    SupportTooLarge,
    WorldError,
    ZeroMassConditioning,
)
from disentlab.worlds import mutual_information, save_world, load_world


def test_uniform_world_is_valid(world22):
    assert world22.support_size == 4
    assert abs(float(world22.prior.sum()) - 1.0) <= 1e-12
    for t in world22.support:
        s = tuple(int(v) for v in t)
        assert world22.encode(world22.generate(s)) == s


def test_non_normalized_prior_rejected():
    with pytest.raises(NonNormalizedPrior):
        DiscreteWorld((2, 2), [0.25, 0.25, 0.25, 0.23], [0, 1, 2, 3])


def test_non_injective_generator_rejected():
    with pytest.raises(NonInjectiveGenerator):
        DiscreteWorld((2, 2), [0.25] * 4, [0, 1, 1, 3])


def test_gen_ignored_on_zero_mass_tuples():
    w = DiscreteWorld((2, 2), [0.5, 0.5, 0.0, 0.0], [0, 1, -1, -1])
    assert w.support_size == 2


def test_arity_mismatch():
    with pytest.raises(ArityMismatch):
        DiscreteWorld((2, 2), [0.25] * 4, [0, 1, 2, 3], ordered=[True])


# -- conditional --------------------------------------------------------------


def test_conditional_independent_uniform(world22):
    values, probs = world22.conditional(IndexSet.of([1], 2), (0,))
    assert values.tolist() == [[0], [1]]
    assert np.allclose(probs, [0.5, 0.5])


def test_conditional_degenerate_support():
    prior = np.zeros((2, 2))
    prior[0, 0] = prior[1, 1] = 0.5
    w = DiscreteWorld((2, 2), prior, [[0, -1], [-1, 1]])
    values, probs = w.conditional(IndexSet.of([2], 2), (1,))
    assert values.tolist() == [[1]] and probs.tolist() == [1.0]


def test_conditional_zero_mass_raises():
    prior = np.zeros((2, 2))
    prior[0, 0] = prior[1, 1] = 0.5
    w = DiscreteWorld((2, 2), prior, [[0, -1], [-1, 1]])
    with pytest.raises(ZeroMassConditioning):
        w.conditional(IndexSet.of([1, 2], 2), (0, 1))


# -- random worlds --------------------------------------------------------------


def test_random_world_corr_zero_is_uniform_product():
    w = random_world(1, 2, [2, 2], 0.0)
    assert np.allclose(w.prior, 0.25)
    for i in (1, 2):
        joint = np.zeros((w.cards[i - 1], w.support_size))
        # MI between factor i and the full remaining tuple
        rest = [j for j in range(w.n) if j != i - 1]
        keys = {tuple(t): r for r, t in enumerate(w.support[:, rest].tolist())}
        for t, p in zip(w.support, w.support_probs):
            joint[t[i - 1], keys[tuple(t[rest].tolist())]] += p
        assert mutual_information(joint) <= 1e-12


def test_random_world_corr_one_has_positive_mi():
    w = random_world(1, 2, [2, 2], 1.0)
    mi = w.pairwise_mi()
    assert mi[0, 1] > 0.01


def test_random_world_deterministic_in_seed():
    assert random_world(7, 2, [3, 2], 0.4) == random_world(7, 2, [3, 2], 0.4)
    assert random_world(7, 2, [3, 2], 0.4) != random_world(8, 2, [3, 2], 0.4)


def test_random_world_support_cap():
    with pytest.raises(SupportTooLarge):
        random_world(0, 4, [9, 9, 9, 9], 0.0)


# -- zig-zag connectivity -----------------------------------------------------------


def test_zigzag_full_grid_always_connected():
    w = uniform_world((2, 3, 2))
    for ib in range(1 << 3):
        for jb in range(1 << 3):
            assert zigzag_connected(w, IndexSet(3, ib), IndexSet(3, jb))


def test_zigzag_diagonal_support_disconnected():
    prior = np.zeros((2, 2))
    prior[0, 0] = prior[1, 1] = 0.5
    w = DiscreteWorld((2, 2), prior, [[0, -1], [-1, 1]])
    I, J = IndexSet.of([1], 2), IndexSet.of([2], 2)
    assert not zigzag_connected(w, I, J)
    # one step may change both coordinates when they all lie in I
    assert zigzag_connected(w, IndexSet.of([1, 2], 2), IndexSet.of([1, 2], 2))


def test_zigzag_empty_union_vacuously_true():
    prior = np.zeros((2, 2))
    prior[0, 0] = prior[1, 1] = 0.5
    w = DiscreteWorld((2, 2), prior, [[0, -1], [-1, 1]])
    E = IndexSet.empty(2)
    assert zigzag_connected(w, E, E)


def test_zigzag_symmetry_and_fixed_union_monotonicity():
    rng = np.random.default_rng(0)
    for trial in range(20):
        w = random_world(int(rng.integers(2**31)), 3, [2, 2, 2], float(rng.uniform(0, 1)))
        sets = [IndexSet(3, b) for b in range(8)]
        conn = {}
        for I in sets:
            for J in sets:
                conn[(I.bits, J.bits)] = zigzag_connected_support(w.support, I, J)
        for I in sets:
            for J in sets:
                assert conn[(I.bits, J.bits)] == conn[(J.bits, I.bits)]
        # growing I or J while keeping the union fixed only adds steps
        for I in sets:
            for J in sets:
                if not conn[(I.bits, J.bits)]:
                    continue
                for I2 in sets:
                    for J2 in sets:
                        if (
                            I.issubset(I2)
                            and J.issubset(J2)
                            and (I2 | J2) == (I | J)
                        ):
                            assert conn[(I2.bits, J2.bits)]


# -- candidate models -----------------------------------------------------------------


def test_candidate_requires_permutation(world22):
    with pytest.raises(WorldError):
        CandidateModel(world22, [0, 0, 1, 2])


def test_pushforward_observation_distribution_matches():
    rng = np.random.default_rng(3)
    for _ in range(10):
        w = random_world(int(rng.integers(2**31)), 2, [2, 3], float(rng.uniform(0, 1)))
        model = CandidateModel(w, rng.permutation(w.support_size))
        obs_world = {}
        for t, p in zip(w.support, w.support_probs):
            obs_world[w.generate(t)] = obs_world.get(w.generate(t), 0.0) + float(p)
        obs_model = {}
        for r in range(model.support_size):
            x = model.apply_gen(tuple(int(v) for v in model.support[r]))
            obs_model[x] = obs_model.get(x, 0.0) + float(model.probs[r])
        assert set(obs_world) == set(obs_model)
        assert all(abs(obs_world[k] - obs_model[k]) <= 1e-12 for k in obs_world)


def test_candidate_encoder_inverts_generator(world22, xor_model):
    for t in world22.support:
        z = tuple(int(v) for v in t)
        assert xor_model.apply_enc(xor_model.apply_gen(z)) == z


def test_identity_candidate(world22):
    model = CandidateModel.identity(world22)
    assert model.phi((1, 0)) == (1, 0)
    assert model.apply_gen((1, 0)) == world22.generate((1, 0))


# -- schematic worlds --------------------------------------------------------------------


def test_schematic_kinds_construct():
    for kind in ("consistent-not-restrictive", "restrictive-not-consistent", "zigzag-violation"):
        world, model = schematic_world(kind)
        assert model.base is world
    with pytest.raises(WorldError):
        schematic_world("nope")


def test_zigzag_violation_support_shape():
    world, model = schematic_world("zigzag-violation")
    assert world.n == 3
    pairs = {tuple(t[:2]) for t in world.support.tolist()}
    assert pairs == {(0, 0), (1, 1)}


# -- serialization ---------------------------------------------------------------------------


def test_world_doc_round_trip(tmp_path):
    w = random_world(11, 2, [3, 2], 0.37)
    path = tmp_path / "w.json"
    save_world(w, path)
    again = load_world(path)
    assert again == w
    # bit-exact prior round trip through the decimal representation
    assert json.loads(path.read_text())["prior"] == [float(v) for v in w.prior.reshape(-1)]


def test_world_doc_malformed():
    with pytest.raises(WorldError):
        world_from_doc({"version": 1, "n": 2})
    with pytest.raises(WorldError):
        world_from_doc({"version": 99, "n": 1, "cards": [2], "prior": [0.5, 0.5], "gen": [0, 1]})
    with pytest.raises(ArityMismatch):
        world_from_doc({"version": 1, "n": 2, "cards": [2], "prior": [0.5, 0.5], "gen": [0, 1]})
