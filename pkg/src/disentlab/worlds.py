"""Tabular oracle worlds and candidate latent models over finite factor spaces.

A world is a triple (prior over factor tuples, injective generator to
observation ids, inverse encoder).  A candidate model relabels the factor
space through a support bijection, which makes its observation distribution
match the oracle's by construction.
"""

from __future__ import annotations

import json
from math import prod
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    ArityMismatch,
    NonInjectiveGenerator,
    NonNormalizedPrior,
    SupportTooLarge,
    WorldError,
    ZeroMassConditioning,
)
from .indexset import IndexSet

PROB_TOL = 1e-12
DEFAULT_SUPPORT_CAP = 4096
WORLD_DOC_VERSION = 1

SCHEMATIC_KINDS = (
    "consistent-not-restrictive",
    "restrictive-not-consistent",
    "zigzag-violation",
)


class DiscreteWorld:
    """An exact oracle over a finite factor space.

    Immutable after construction; every invariant is checked eagerly:
    the prior normalizes to one, the generator is injective on the
    support, and the derived encoder inverts it exactly.
    """

    def __init__(self, cards: Sequence[int], prior, gen, ordered: Sequence[bool] | None = None):
        cards = tuple(int(k) for k in cards)
        if not cards or any(k < 1 for k in cards):
            raise ArityMismatch(f"factor cardinalities must be >= 1, got {cards}")
        self.n = len(cards)
        self.cards = cards

        prior = np.asarray(prior, dtype=float).reshape(cards)
        if np.any(prior < 0) or not np.all(np.isfinite(prior)):
            raise NonNormalizedPrior("prior entries must be finite and nonnegative")
        total = float(prior.sum())
        if abs(total - 1.0) > PROB_TOL:
            raise NonNormalizedPrior(f"prior sums to {total!r}, not 1 within {PROB_TOL}")

        gen = np.asarray(gen, dtype=np.int64).reshape(cards)
        if ordered is None:
            ordered = (True,) * self.n
        self.ordered = tuple(bool(b) for b in ordered)
        if len(self.ordered) != self.n:
            raise ArityMismatch("ordered flags must have one entry per factor")

        mask = prior > 0
        support = np.argwhere(mask).astype(np.int64)  # lexicographic row order
        if len(support) == 0:
            raise NonNormalizedPrior("prior has empty support")
        ids = gen[mask]
        if np.any(ids < 0):
            raise NonInjectiveGenerator("positive-mass tuple mapped to negative observation id")
        if len(np.unique(ids)) != len(ids):
            raise NonInjectiveGenerator("generator repeats an observation id on the support")

        self.prior = prior
        self.gen = gen
        self.support = support
        self.support_probs = prior[mask]
        self.obs_ids = ids
        self._row_of = {tuple(t): r for r, t in enumerate(support)}
        # derived encoder: observation id -> factor tuple (exact inverse)
        self._enc = {int(x): tuple(int(v) for v in t) for x, t in zip(ids, support)}
        for arr in (self.prior, self.gen, self.support, self.support_probs, self.obs_ids):
            arr.flags.writeable = False

    # -- basic queries -----------------------------------------------------

    @property
    def support_size(self) -> int:
        return len(self.support)

    def row_of(self, factors: Sequence[int]) -> int:
        try:
            return self._row_of[tuple(int(v) for v in factors)]
        except KeyError:
            raise ZeroMassConditioning(f"tuple {tuple(factors)} has zero mass") from None

    def prob(self, factors: Sequence[int]) -> float:
        return float(self.prior[tuple(int(v) for v in factors)])

    def generate(self, factors: Sequence[int]) -> int:
        """g*: factor tuple -> observation id."""
        return int(self.gen[tuple(int(v) for v in factors)])

    def encode(self, obs_id: int) -> tuple[int, ...]:
        """e* = g*^-1 on the support."""
        try:
            return self._enc[int(obs_id)]
        except KeyError:
            raise WorldError(f"observation id {obs_id} not produced by this world") from None

    def index_set(self, indices: Iterable[int]) -> IndexSet:
        return IndexSet.of(indices, self.n)

    def check_index_set(self, I: IndexSet):
        if I.n != self.n or I.nuisance:
            raise ArityMismatch(f"index set {I!r} does not match world arity {self.n}")

    # -- distributions -----------------------------------------------------

    def conditional(self, I: IndexSet, values: Sequence[int]):
        """Renormalized slice p(s_rest | s_I = values).

        Returns (tuples, probs): the complement-coordinate value tuples with
        positive conditional mass, in lexicographic support order.
        """
        self.check_index_set(I)
        cols = I.cols()
        if len(values) != len(cols):
            raise ArityMismatch(f"expected {len(cols)} fixed values, got {len(values)}")
        sel = np.all(self.support[:, cols] == np.asarray(values, dtype=np.int64), axis=1)
        mass = float(self.support_probs[sel].sum())
        if mass <= 0.0:
            raise ZeroMassConditioning(f"conditioning on s_{I} = {tuple(values)} has zero mass")
        rest = I.complement().cols()
        return self.support[sel][:, rest], self.support_probs[sel] / mass

    def factor_marginal(self, i: int) -> np.ndarray:
        """Marginal distribution of factor i (1-based)."""
        out = np.zeros(self.cards[i - 1])
        np.add.at(out, self.support[:, i - 1], self.support_probs)
        return out

    def pairwise_mi(self) -> np.ndarray:
        """Matrix of mutual informations (nats) between factor pairs."""
        out = np.zeros((self.n, self.n))
        for a in range(self.n):
            for b in range(self.n):
                if a == b:
                    continue
                joint = np.zeros((self.cards[a], self.cards[b]))
                np.add.at(joint, (self.support[:, a], self.support[:, b]), self.support_probs)
                out[a, b] = mutual_information(joint)
        return out

    # -- sampling protocol (shared with candidate models) --------------------

    def sample_latents(self, rng: np.random.Generator, m: int) -> np.ndarray:
        """m i.i.d. factor tuples from the prior, as an (m, n) int array."""
        rows = _draw_rows(rng, self.support_probs, m)
        return self.support[rows]

    def resample_latents(self, rng, latents: np.ndarray, resample_cols: Sequence[int]) -> np.ndarray:
        """Redraw the given 0-based coordinates from their exact conditional."""
        return _resample_table(rng, self.support, self.support_probs, latents, resample_cols)

    def observe(self, latents: np.ndarray) -> np.ndarray:
        """Vectorized g* over an (m, n) array of factor tuples."""
        return self.gen[tuple(latents[:, j] for j in range(self.n))]

    # -- serialization -------------------------------------------------------

    def to_doc(self) -> dict:
        return {
            "version": WORLD_DOC_VERSION,
            "n": self.n,
            "cards": list(self.cards),
            "ordered": list(self.ordered),
            "prior": [float(v) for v in self.prior.reshape(-1)],
            "gen": [int(v) for v in self.gen.reshape(-1)],
        }

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DiscreteWorld)
            and self.cards == other.cards
            and self.ordered == other.ordered
            and np.array_equal(self.prior, other.prior)
            and np.array_equal(self.gen, other.gen)
        )

    def __repr__(self) -> str:
        return f"DiscreteWorld(cards={self.cards}, support={self.support_size})"


def world_from_doc(doc: dict) -> DiscreteWorld:
    """Build and validate a world from its structured-text document."""
    try:
        version = doc["version"]
        n = int(doc["n"])
        cards = [int(k) for k in doc["cards"]]
        prior = doc["prior"]
        gen = doc["gen"]
        ordered = doc.get("ordered")
    except (KeyError, TypeError, ValueError) as exc:
        raise WorldError(f"malformed world document: {exc}") from exc
    if version != WORLD_DOC_VERSION:
        raise WorldError(f"unsupported world document version {version!r}")
    if len(cards) != n:
        raise ArityMismatch(f"n={n} but {len(cards)} cardinalities listed")
    size = prod(cards)
    if len(prior) != size or len(gen) != size:
        raise WorldError(f"prior/gen arrays must have {size} entries (row-major)")
    return DiscreteWorld(cards, prior, gen, ordered)


def load_world(path) -> DiscreteWorld:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise WorldError(f"world file is not valid JSON: {exc}") from exc
    return world_from_doc(doc)


def save_world(world: DiscreteWorld, path):
    Path(path).write_text(json.dumps(world.to_doc()) + "\n")


# -- constructors ------------------------------------------------------------


def random_world(
    seed: int,
    n: int,
    cards: Sequence[int],
    correlation: float = 0.0,
    max_support: int = DEFAULT_SUPPORT_CAP,
) -> DiscreteWorld:
    """Seed-deterministic world with a tunable factor correlation.

    correlation=0 gives the independent uniform product prior; larger
    values mix in mass concentrated on the diagonal tuples
    (v mod k_1, ..., v mod k_n), which couples the factors.  The
    generator is a random injection into 0..support_size-1.
    """
    cards = tuple(int(k) for k in cards)
    if len(cards) != n:
        raise ArityMismatch(f"n={n} but {len(cards)} cardinalities given")
    if any(k < 2 for k in cards):
        raise ArityMismatch(f"random worlds need cardinalities >= 2, got {cards}")
    if not 0.0 <= correlation <= 1.0:
        raise WorldError(f"correlation must lie in [0, 1], got {correlation}")
    size = prod(cards)
    if size > max_support:
        raise SupportTooLarge(f"support {size} exceeds cap {max_support}")

    rng = np.random.default_rng(seed)
    prior = np.full(cards, (1.0 - correlation) / size)
    if correlation > 0.0:
        diag = [tuple(v % k for k in cards) for v in range(max(cards))]
        weights = rng.uniform(0.2, 1.0, len(diag))
        weights /= weights.sum()
        for t, w in zip(diag, weights):
            prior[t] += correlation * w
    prior /= prior.sum()

    gen = np.full(cards, -1, dtype=np.int64)
    mask = prior > 0
    gen[mask] = rng.permutation(int(mask.sum()))
    return DiscreteWorld(cards, prior, gen)


def uniform_world(cards: Sequence[int]) -> DiscreteWorld:
    """Full-support uniform world with row-major observation ids."""
    cards = tuple(int(k) for k in cards)
    size = prod(cards)
    return DiscreteWorld(cards, np.full(cards, 1.0 / size), np.arange(size).reshape(cards))


# -- candidate models ---------------------------------------------------------


class CandidateModel:
    """A latent model derived from a world through a support bijection.

    ``perm[i] = j`` means the bijection sends support tuple i to support
    tuple j, i.e. a latent z equal to support row i is measured by the
    oracle as the factor tuple in support row j.  The induced prior is the
    pushforward q(z) = p*(phi(z)), so the model's observation distribution
    equals the oracle's exactly.
    """

    def __init__(self, world: DiscreteWorld, perm: Sequence[int]):
        perm = np.asarray(perm, dtype=np.int64)
        m = world.support_size
        if perm.shape != (m,) or not np.array_equal(np.sort(perm), np.arange(m)):
            raise WorldError(f"perm must be a permutation of range({m})")
        self.base = world
        self.n = world.n
        self.cards = world.cards
        self.ordered = world.ordered
        self.perm = perm
        self.inv_perm = np.argsort(perm)
        self.support = world.support  # latent tuples share the oracle's value space
        self.probs = world.support_probs[perm]
        self.mapped = world.support[perm]  # row i: e* . g of latent support[i]
        for arr in (self.perm, self.inv_perm, self.probs, self.mapped):
            arr.flags.writeable = False

    @classmethod
    def identity(cls, world: DiscreteWorld) -> "CandidateModel":
        return cls(world, np.arange(world.support_size))

    @classmethod
    def from_map(cls, world: DiscreteWorld, fn: Callable[[tuple[int, ...]], Sequence[int]]) -> "CandidateModel":
        """Build from an explicit tuple-to-tuple bijection on the support."""
        perm = [world.row_of(fn(tuple(int(v) for v in t))) for t in world.support]
        return cls(world, perm)

    @property
    def support_size(self) -> int:
        return self.base.support_size

    def phi(self, z: Sequence[int]) -> tuple[int, ...]:
        """The support bijection: latent tuple -> oracle factor tuple."""
        return tuple(int(v) for v in self.mapped[self.base.row_of(z)])

    def phi_inverse(self, s: Sequence[int]) -> tuple[int, ...]:
        return tuple(int(v) for v in self.support[self.inv_perm[self.base.row_of(s)]])

    def apply_gen(self, z: Sequence[int]) -> int:
        """g = g* . phi."""
        return self.base.generate(self.phi(z))

    def apply_enc(self, obs_id: int) -> tuple[int, ...]:
        """e = phi^-1 . e*."""
        return self.phi_inverse(self.base.encode(obs_id))

    def prob(self, z: Sequence[int]) -> float:
        return float(self.probs[self.base.row_of(z)])

    # -- sampling protocol ---------------------------------------------------

    def sample_latents(self, rng: np.random.Generator, m: int) -> np.ndarray:
        rows = _draw_rows(rng, self.probs, m)
        return self.support[rows]

    def resample_latents(self, rng, latents: np.ndarray, resample_cols: Sequence[int]) -> np.ndarray:
        return _resample_table(rng, self.support, self.probs, latents, resample_cols)

    def observe(self, latents: np.ndarray) -> np.ndarray:
        rows = np.fromiter(
            (self.base.row_of(t) for t in latents), dtype=np.int64, count=len(latents)
        )
        mapped = self.mapped[rows]
        return self.base.gen[tuple(mapped[:, j] for j in range(self.n))]

    def __repr__(self) -> str:
        return f"CandidateModel(cards={self.cards}, perm={self.perm.tolist()})"


# -- zig-zag connectedness -----------------------------------------------------


def zigzag_connected_support(support: np.ndarray, I: IndexSet, J: IndexSet) -> bool:
    """Whether every support pair differing only inside I u J is joined by a
    path whose steps each change only I-coordinates or only J-coordinates.

    Steps between support tuples sharing all coordinates outside I (or
    outside J) are single moves, so reachability is the transitive closure
    of "same projection onto the complement of I" and "same onto the
    complement of J".
    """
    support = np.asarray(support)
    m, n = support.shape
    union = I.union(J)
    parent = list(range(m))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def merge_by(cols):
        keep = [c for c in range(n) if c not in cols]
        groups: dict[tuple, int] = {}
        for r in range(m):
            key = tuple(support[r, keep])
            if key in groups:
                ra, rb = find(groups[key]), find(r)
                if ra != rb:
                    parent[rb] = ra
            else:
                groups[key] = r

    merge_by(set(I.cols()))
    merge_by(set(J.cols()))

    outside = [c for c in range(n) if c not in set(union.cols())]
    must: dict[tuple, int] = {}
    for r in range(m):
        key = tuple(support[r, outside])
        if key in must:
            if find(must[key]) != find(r):
                return False
        else:
            must[key] = r
    return True


def zigzag_connected(world_or_model, I: IndexSet, J: IndexSet) -> bool:
    """Zig-zag connectedness of a world's (or candidate's) latent support."""
    return zigzag_connected_support(world_or_model.support, I, J)


# -- schematic constructions ---------------------------------------------------


def schematic_world(kind: str) -> tuple[DiscreteWorld, CandidateModel]:
    """Named counterexample worlds with their entangled candidate models.

    consistent-not-restrictive: fixing z_1 fixes factor 1, but changing
    z_1 drags factor 2 along (phi = (z1, z1 xor z2)).
    restrictive-not-consistent: changing z_1 touches only factor 1, but
    fixing z_1 does not fix it (phi = (z1 xor z2, z2)).
    zigzag-violation: the first two factors live on a two-point diagonal
    support and a third factor absorbs the region label, so
    restrictiveness holds per-coordinate but fails on the pair.
    """
    if kind == "consistent-not-restrictive":
        world = uniform_world((2, 2))
        model = CandidateModel.from_map(world, lambda t: (t[0], t[0] ^ t[1]))
        return world, model
    if kind == "restrictive-not-consistent":
        world = uniform_world((2, 2))
        model = CandidateModel.from_map(world, lambda t: (t[0] ^ t[1], t[1]))
        return world, model
    if kind == "zigzag-violation":
        cards = (2, 2, 2)
        prior = np.zeros(cards)
        gen = np.full(cards, -1, dtype=np.int64)
        next_id = 0
        for a, b in ((0, 0), (1, 1)):
            for c in (0, 1):
                prior[a, b, c] = 0.25
                gen[a, b, c] = next_id
                next_id += 1
        world = DiscreteWorld(cards, prior, gen)
        model = CandidateModel.from_map(world, lambda t: (t[0], t[1], t[2] ^ t[0]))
        return world, model
    raise WorldError(f"unknown schematic kind {kind!r}; expected one of {SCHEMATIC_KINDS}")


# -- internal helpers -----------------------------------------------------------


def _draw_rows(rng: np.random.Generator, probs: np.ndarray, m: int) -> np.ndarray:
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    return np.searchsorted(cum, rng.random(m), side="right")


def _resample_table(rng, support, probs, latents, resample_cols) -> np.ndarray:
    """Redraw the given coordinates of each row from the table's exact
    conditional given the remaining coordinates."""
    resample_cols = sorted(set(resample_cols))
    if not resample_cols:
        return latents.copy()
    n = support.shape[1]
    fixed = [c for c in range(n) if c not in resample_cols]
    if not fixed:
        rows = _draw_rows(rng, probs, len(latents))
        return support[rows]

    groups: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}
    for key in {tuple(row) for row in np.asarray(latents)[:, fixed]}:
        sel = np.all(support[:, fixed] == np.asarray(key, dtype=np.int64), axis=1)
        idx = np.flatnonzero(sel)
        w = probs[idx]
        cum = np.cumsum(w / w.sum())
        cum[-1] = 1.0
        groups[key] = (idx, cum)

    out = np.asarray(latents).copy()
    keys = np.asarray(latents)[:, fixed]
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    for g, key in enumerate(map(tuple, uniq)):
        idx, cum = groups[key]
        members = np.flatnonzero(inverse == g)
        picks = idx[np.searchsorted(cum, rng.random(len(members)), side="right")]
        out[np.ix_(members, resample_cols)] = support[np.ix_(picks, resample_cols)]
    return out


def mutual_information(joint: np.ndarray) -> float:
    """MI in nats of a 2-D joint probability table."""
    joint = np.asarray(joint, dtype=float)
    pa = joint.sum(axis=1, keepdims=True)
    pb = joint.sum(axis=0, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = joint * np.log(joint / (pa * pb))
    return float(np.nansum(terms))
