"""Augmented data distributions for weak supervision.

Three supervision families, each a distribution over enriched records:
restricted labeling exposes (x, s_I); match pairing exposes ordered pairs
(x, x') drawn to share the factors in I; rank pairing exposes i.i.d. pairs
plus the order indicator of one scalar factor.  Share pairing and change
pairing are match-pairing specializations (share one factor / change one
set, i.e. share its complement) and canonicalize accordingly.

Tables are exact joint distributions computed by enumeration (discrete
worlds); samplers stream i.i.d. records from the same processes and also
cover the continuous family.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ArityMismatch,
    KindMismatch,
    SupervisionError,
    UnorderedFactorForRank,
)
from .indexset import IndexSet
from .worlds import CandidateModel, DiscreteWorld

RESTRICTED_LABELING = "restricted-labeling"
MATCH_PAIRING = "match-pairing"
SHARE_PAIRING = "share-pairing"
CHANGE_PAIRING = "change-pairing"
RANK_PAIRING = "rank-pairing"

KINDS = (RESTRICTED_LABELING, MATCH_PAIRING, SHARE_PAIRING, CHANGE_PAIRING, RANK_PAIRING)

_SHORT = {
    "label": RESTRICTED_LABELING,
    "match": MATCH_PAIRING,
    "share": SHARE_PAIRING,
    "change": CHANGE_PAIRING,
    "rank": RANK_PAIRING,
}
_TO_SHORT = {v: k for k, v in _SHORT.items()}

DATASET_FORMAT = "disentlab-dataset"
MASS_TOL = 1e-12


@dataclass(frozen=True)
class SupervisionSpec:
    """A supervision strategy: a kind plus the 1-based factor indices it touches."""

    kind: str
    indices: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SupervisionError(f"unknown supervision kind {self.kind!r}")
        object.__setattr__(self, "indices", tuple(sorted(set(int(i) for i in self.indices))))
        if self.kind == RANK_PAIRING and len(self.indices) != 1:
            raise SupervisionError("rank pairing targets exactly one factor")
        if self.kind in (SHARE_PAIRING, CHANGE_PAIRING) and not self.indices:
            raise SupervisionError(f"{self.kind} needs at least one factor index")

    def canonical(self, n: int) -> tuple[str, IndexSet]:
        """Reduce to (base kind, index set): share(I) -> match(I), change(I) -> match(~I)."""
        for i in self.indices:
            if not 1 <= i <= n:
                raise ArityMismatch(f"factor index {i} outside 1..{n}")
        I = IndexSet.of(self.indices, n)
        if self.kind == SHARE_PAIRING:
            return MATCH_PAIRING, I
        if self.kind == CHANGE_PAIRING:
            return MATCH_PAIRING, I.complement()
        return self.kind, I

    def guaranteed_index_set(self, n: int) -> IndexSet:
        """The index set whose consistency is guaranteed to a distribution matcher."""
        return self.canonical(n)[1]

    def validate_for(self, world):
        n = world.n
        kind, I = self.canonical(n)
        if kind == RANK_PAIRING:
            i = self.indices[0]
            if not world.ordered[i - 1]:
                raise UnorderedFactorForRank(f"factor {i} has no ordering; rank pairing invalid")
        return kind, I

    def to_string(self) -> str:
        return f"{_TO_SHORT[self.kind]}:{','.join(str(i) for i in self.indices)}"

    @classmethod
    def parse(cls, text: str) -> "SupervisionSpec":
        head, sep, rest = text.strip().partition(":")
        if not sep or head not in _SHORT:
            raise SupervisionError(
                f"cannot parse supervision spec {text!r}; expected e.g. 'share:1' or 'label:1,2'"
            )
        indices = tuple(int(tok) for tok in rest.split(",") if tok.strip() != "")
        return cls(_SHORT[head], indices)


@dataclass(frozen=True)
class AugmentedTable:
    """Exact joint distribution of one supervision family's records.

    Outcomes are (x, s_I) for restricted labeling, ordered pairs (x, x')
    for match pairing, and (x, x', y) for rank pairing, with x observation
    ids.  Total mass is one within MASS_TOL.
    """

    kind: str
    index_set: IndexSet
    mass: dict

    def __post_init__(self):
        total = sum(self.mass.values())
        if abs(total - 1.0) > 1e-9:
            raise SupervisionError(f"augmented table mass {total!r} is not 1")

    def marginal_x(self) -> dict:
        out: dict = {}
        for outcome, p in self.mass.items():
            x = outcome[0]
            out[x] = out.get(x, 0.0) + p
        return out

    def max_diff(self, other: "AugmentedTable") -> float:
        keys = set(self.mass) | set(other.mass)
        return max(abs(self.mass.get(k, 0.0) - other.mass.get(k, 0.0)) for k in keys)


def tables_match(a: AugmentedTable, b: AugmentedTable, tol: float = MASS_TOL) -> bool:
    """Whether two augmented tables agree within a sup-norm mass tolerance."""
    if a.kind != b.kind or a.index_set != b.index_set:
        raise KindMismatch(
            f"cannot compare {a.kind}{a.index_set} against {b.kind}{b.index_set}"
        )
    return a.max_diff(b) <= tol


def _latent_table(obj):
    """(latent rows, probabilities, observation ids) for a world or model."""
    if isinstance(obj, CandidateModel):
        return obj.support, obj.probs, obj.base.obs_ids[obj.perm]
    if isinstance(obj, DiscreteWorld):
        return obj.support, obj.support_probs, obj.obs_ids
    raise SupervisionError(f"exact tables need a discrete world or model, got {type(obj).__name__}")


def augmented_table(obj, spec: SupervisionSpec) -> AugmentedTable:
    """Enumerate the exact augmented distribution of a world or candidate model."""
    kind, I = spec.validate_for(obj)
    latents, probs, obs = _latent_table(obj)
    cols = I.cols()
    mass: dict = {}

    if kind == RESTRICTED_LABELING:
        for r in range(len(latents)):
            key = (int(obs[r]), tuple(int(v) for v in latents[r, cols]))
            mass[key] = mass.get(key, 0.0) + float(probs[r])
    elif kind == MATCH_PAIRING:
        keys = [tuple(int(v) for v in latents[r, cols]) for r in range(len(latents))]
        group_mass: dict = {}
        for r, key in enumerate(keys):
            group_mass[key] = group_mass.get(key, 0.0) + float(probs[r])
        rows_by_key: dict = {}
        for r, key in enumerate(keys):
            rows_by_key.setdefault(key, []).append(r)
        for key, rows in rows_by_key.items():
            w = group_mass[key]
            for r in rows:
                for r2 in rows:
                    outcome = (int(obs[r]), int(obs[r2]))
                    mass[outcome] = mass.get(outcome, 0.0) + float(probs[r]) * float(probs[r2]) / w
    elif kind == RANK_PAIRING:
        c = cols[0]
        for r in range(len(latents)):
            for r2 in range(len(latents)):
                y = 1 if latents[r, c] >= latents[r2, c] else 0
                outcome = (int(obs[r]), int(obs[r2]), y)
                mass[outcome] = mass.get(outcome, 0.0) + float(probs[r]) * float(probs[r2])
    else:  # pragma: no cover - canonical() restricts the kinds
        raise SupervisionError(f"unsupported canonical kind {kind!r}")
    return AugmentedTable(kind, I, mass)


# -- sampling -------------------------------------------------------------------


def sample_records(obj, spec: SupervisionSpec, seed: int, count: int) -> list[tuple]:
    """Stream `count` i.i.d. records of the augmented distribution.

    Records mirror the table outcomes: (x, s_I), (x, x'), or (x, x', y).
    Observations are ids for discrete worlds and float tuples for
    continuous ones.  Deterministic in (seed, count).
    """
    rng = np.random.default_rng(seed)
    kind, I = spec.validate_for(obj)
    if count == 0:
        return []
    cols = I.cols()
    discrete = isinstance(obj, (DiscreteWorld, CandidateModel))

    def obs_out(x_arr):
        if discrete:
            return [int(v) for v in x_arr]
        return [tuple(float(f) for f in row) for row in x_arr]

    if kind == RESTRICTED_LABELING:
        z = obj.sample_latents(rng, count)
        xs = obs_out(obj.observe(z))
        if discrete:
            labels = [tuple(int(v) for v in row) for row in z[:, cols]]
        else:
            labels = [tuple(float(v) for v in row) for row in z[:, cols]]
        return list(zip(xs, labels))
    if kind == MATCH_PAIRING:
        z = obj.sample_latents(rng, count)
        rest = I.complement().cols()
        z2 = obj.resample_latents(rng, z, rest)
        return list(zip(obs_out(obj.observe(z)), obs_out(obj.observe(z2))))
    # rank pairing
    c = cols[0]
    z = obj.sample_latents(rng, count)
    z2 = obj.sample_latents(rng, count)
    ys = (z[:, c] >= z2[:, c]).astype(int)
    return list(zip(obs_out(obj.observe(z)), obs_out(obj.observe(z2)), (int(y) for y in ys)))


def sample_features(obj, spec: SupervisionSpec, rng: np.random.Generator, count: int) -> np.ndarray:
    """Augmented records as a flat (count, d) float matrix, for two-sample tests.

    Continuous observations contribute their coordinates; labels, partner
    observations, and rank indicators are appended as extra columns.
    """
    kind, I = spec.validate_for(obj)
    cols = I.cols()
    if kind == RESTRICTED_LABELING:
        z = obj.sample_latents(rng, count)
        x = np.atleast_2d(obj.observe(z))
        return np.column_stack([x, z[:, cols]])
    if kind == MATCH_PAIRING:
        z = obj.sample_latents(rng, count)
        z2 = obj.resample_latents(rng, z, I.complement().cols())
        return np.column_stack([obj.observe(z), obj.observe(z2)])
    c = cols[0]
    z = obj.sample_latents(rng, count)
    z2 = obj.sample_latents(rng, count)
    y = (z[:, c] >= z2[:, c]).astype(float)
    return np.column_stack([obj.observe(z), obj.observe(z2), y])


# -- dataset files ----------------------------------------------------------------


def write_dataset(path, obj, spec: SupervisionSpec, seed: int, count: int):
    """Write a header line plus one JSON record per line."""
    kind, I = spec.validate_for(obj)
    records = sample_records(obj, spec, seed, count)
    header = {
        "format": DATASET_FORMAT,
        "version": 1,
        "spec": spec.to_string(),
        "kind": kind,
        "index_set": list(I.members()),
        "seed": seed,
        "count": count,
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for rec in records:
            fh.write(json.dumps(_record_doc(kind, I, rec)) + "\n")


def _record_doc(kind: str, I: IndexSet, rec: tuple) -> dict:
    def enc(x):
        return list(x) if isinstance(x, tuple) else x

    if kind == RESTRICTED_LABELING:
        return {"x": enc(rec[0]), "s_I": list(rec[1])}
    if kind == MATCH_PAIRING:
        return {"x": enc(rec[0]), "x2": enc(rec[1]), "shared": list(I.members())}
    return {"x": enc(rec[0]), "x2": enc(rec[1]), "y": rec[2]}


def read_dataset(path) -> tuple[dict, list[dict]]:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise SupervisionError(f"dataset file {path} is empty")
    header = json.loads(lines[0])
    if header.get("format") != DATASET_FORMAT:
        raise SupervisionError(f"{path} is not a dataset file")
    return header, [json.loads(line) for line in lines[1:]]
