"""Consistency and restrictiveness metrics, raw and normalized, plus the
discretized mutual information gap and a Monte-Carlo distribution-match test.

Raw consistency of an index set I measures the expected squared deviation
of the oracle-measured factors s_I when the latent coordinates outside I
are conditionally resampled; restrictiveness is its complement-set dual.
Normalized scores divide by the deviation of unconditioned i.i.d. pairs,
giving a dimensionless value in [0, 1].

Discrete factor values are compared by squared indicator distance (one per
differing coordinate); continuous factors by squared Euclidean distance.
Exact mode enumerates conditional value distributions per group, writing
the numerator and the numerator-to-denominator gap as sums of products of
nonnegative terms, so the [0, 1] score bound survives floating point
verbatim rather than through clamping.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .calculus import Fact
from .continuous import DiskRotationWorld, RotationCandidate
from .errors import ArityMismatch, DegenerateDenominator, MetricError, ZeroEntropyFactor
from .indexset import IndexSet
from .supervision import SupervisionSpec, sample_features
from .worlds import CandidateModel, mutual_information

GENERATOR_BASED = "generator"
ENCODER_BASED = "encoder"

DEGENERACY_THRESHOLD = 1e-9
EXACT_TOL = 1e-12
MC_CHUNK = 8192


@dataclass(frozen=True)
class ScoreReport:
    """One normalized score with its ingredients and uncertainty."""

    direction: str
    kind: str  # "consistency" | "restrictiveness"
    index_set: IndexSet
    numerator: float
    denominator: float
    score: float
    mode: str  # "exact" | "mc"
    samples: int = 0
    std_error: float = 0.0
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "kind": self.kind,
            "index_set": list(self.index_set.members()),
            "score": self.score,
            "numerator": self.numerator,
            "denominator": self.denominator,
            "mode": self.mode,
            "samples": self.samples,
            "std_error": self.std_error,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class EvaluationTarget:
    """A candidate model evaluated in one direction against its oracle.

    generator-based: the model's (prior, generator) is probed through the
    oracle encoder; encoder-based: the model's encoder is probed on
    observations from the oracle (prior, generator).
    """

    direction: str
    model: object

    def __post_init__(self):
        if self.direction not in (GENERATOR_BASED, ENCODER_BASED):
            raise MetricError(f"unknown direction {self.direction!r}")
        if not isinstance(self.model, (CandidateModel, RotationCandidate)):
            raise MetricError(f"cannot evaluate a {type(self.model).__name__}")

    @classmethod
    def generator_based(cls, model) -> "EvaluationTarget":
        return cls(GENERATOR_BASED, model)

    @classmethod
    def encoder_based(cls, model) -> "EvaluationTarget":
        return cls(ENCODER_BASED, model)

    @property
    def is_discrete(self) -> bool:
        return isinstance(self.model, CandidateModel)

    @property
    def n(self) -> int:
        return self.model.n

    def check_index_set(self, I: IndexSet):
        if I.n != self.n or I.nuisance:
            raise ArityMismatch(f"index set {I!r} does not match target arity {self.n}")

    def exact_view(self):
        """(latent support rows, probabilities, measured rows, cards)."""
        if not self.is_discrete:
            raise MetricError("exact enumeration needs a discrete model; use mode='mc'")
        m = self.model
        if self.direction == GENERATOR_BASED:
            return m.support, m.probs, m.mapped, m.cards
        return m.support, m.base.support_probs, m.support[m.inv_perm], m.cards

    def mc_parts(self):
        """(latent sampler, measured-batch function) for Monte-Carlo mode."""
        m = self.model
        if self.is_discrete:
            raise MetricError("discrete targets use the row-based Monte-Carlo path")
        if self.direction == GENERATOR_BASED:
            return m, m.phi
        return m.base, m.phi_inverse


# -- exact engine ----------------------------------------------------------------


def _exact_stats(support, probs, mapped, cond_cols, measure_cols, cards):
    """(numerator, gap) of the conditional-resampling deviation.

    numerator = sum over conditioning groups of the within-group
    probability that an i.i.d. pair of measured values differs, per
    measured coordinate; gap = denominator - numerator, expanded as the
    group-weighted squared distance between conditional and marginal value
    distributions.  Both are accumulated purely from products and squares
    of nonnegative floats.
    """
    m = len(support)
    if cond_cols:
        _, inverse = np.unique(support[:, cond_cols], axis=0, return_inverse=True)
        groups = int(inverse.max()) + 1
    else:
        inverse = np.zeros(m, dtype=np.int64)
        groups = 1
    num = 0.0
    gap = 0.0
    for c in measure_cols:
        table = np.zeros((groups, cards[c]))
        np.add.at(table, (inverse, mapped[:, c]), probs)
        w = table.sum(axis=1)
        cond = table / w[:, None]
        row_sum = cond.sum(axis=1)
        num += float((w * (cond * (row_sum[:, None] - cond)).sum(axis=1)).sum())
        marginal = (w[:, None] * cond).sum(axis=0)
        gap += float((w[:, None] * (cond - marginal[None, :]) ** 2).sum())
    return num, gap


def raw_consistency(target: EvaluationTarget, I: IndexSet) -> float:
    """Exact expected squared deviation of the measured s_I under the
    fix-I / resample-rest process (zero iff C(I) holds)."""
    target.check_index_set(I)
    support, probs, mapped, cards = target.exact_view()
    num, _ = _exact_stats(support, probs, mapped, I.cols(), I.cols(), cards)
    return num


def raw_restrictiveness(target: EvaluationTarget, I: IndexSet) -> float:
    """Dual deviation: resample I, measure the complement.  Definitionally
    equal to the raw consistency of the complement set."""
    target.check_index_set(I)
    return raw_consistency(target, I.complement())


# -- Monte-Carlo engine ------------------------------------------------------------


def _chunk_sizes(total: int) -> list[int]:
    sizes = [MC_CHUNK] * (total // MC_CHUNK)
    if total % MC_CHUNK:
        sizes.append(total % MC_CHUNK)
    return sizes


def _as_seedseq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _run_chunks(fn, total: int, seed, threads: int) -> np.ndarray:
    """Evaluate fn(rng, size) over fixed-size chunks with per-chunk derived
    seeds; results are independent of the worker count."""
    sizes = _chunk_sizes(total)
    seeds = _as_seedseq(seed).spawn(len(sizes))
    jobs = [(np.random.default_rng(s), size) for s, size in zip(seeds, sizes)]
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda j: fn(*j), jobs))
    else:
        parts = [fn(*j) for j in jobs]
    return np.concatenate(parts) if parts else np.empty(0)


def _resample_rows(rng, support, probs, rows, fixed_cols) -> np.ndarray:
    """Redraw support-row indices conditionally on the fixed coordinates."""
    if not fixed_cols:
        cum = np.cumsum(probs)
        cum[-1] = 1.0
        return np.searchsorted(cum, rng.random(len(rows)), side="right")
    keys = support[np.ix_(rows, fixed_cols)]
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    out = np.empty(len(rows), dtype=np.int64)
    for g in range(len(uniq)):
        sel = np.all(support[:, fixed_cols] == uniq[g], axis=1)
        idx = np.flatnonzero(sel)
        w = probs[idx]
        cum = np.cumsum(w / w.sum())
        cum[-1] = 1.0
        members = np.flatnonzero(inverse == g)
        out[members] = idx[np.searchsorted(cum, rng.random(len(members)), side="right")]
    return out


def _mc_deviations(target, I: IndexSet, samples: int, seed, threads: int):
    """(conditional-pair deviations, i.i.d.-pair deviations), one per sample."""
    cond_cols, measure_cols = I.cols(), I.cols()
    seq_num, seq_den = np.random.SeedSequence(seed).spawn(2)

    if target.is_discrete:
        support, probs, mapped, _ = target.exact_view()
        cum = np.cumsum(probs)
        cum[-1] = 1.0

        def draw(rng, m):
            return np.searchsorted(cum, rng.random(m), side="right")

        def num_chunk(rng, m):
            rows = draw(rng, m)
            rows2 = _resample_rows(rng, support, probs, rows, cond_cols)
            return (mapped[np.ix_(rows, measure_cols)] != mapped[np.ix_(rows2, measure_cols)]).sum(axis=1).astype(float)

        def den_chunk(rng, m):
            rows, rows2 = draw(rng, m), draw(rng, m)
            return (mapped[np.ix_(rows, measure_cols)] != mapped[np.ix_(rows2, measure_cols)]).sum(axis=1).astype(float)

    else:
        sampler, measure = target.mc_parts()
        resample_cols = I.complement().cols()

        def num_chunk(rng, m):
            z = sampler.sample_latents(rng, m)
            z2 = sampler.resample_latents(rng, z, resample_cols)
            diff = measure(z)[:, measure_cols] - measure(z2)[:, measure_cols]
            return (diff**2).sum(axis=1)

        def den_chunk(rng, m):
            z, z2 = sampler.sample_latents(rng, m), sampler.sample_latents(rng, m)
            diff = measure(z)[:, measure_cols] - measure(z2)[:, measure_cols]
            return (diff**2).sum(axis=1)

    num_devs = _run_chunks(num_chunk, samples, seq_num, threads)
    den_devs = _run_chunks(den_chunk, samples, seq_den, threads)
    return num_devs, den_devs


def _bootstrap_std_error(num_devs, den_devs, seed, resamples: int = 200) -> float:
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(3)[2])
    scores = []
    m, k = len(num_devs), len(den_devs)
    for _ in range(resamples):
        num = num_devs[rng.integers(0, m, m)].mean()
        den = den_devs[rng.integers(0, k, k)].mean()
        if den > DEGENERACY_THRESHOLD:
            scores.append(1.0 - num / den)
    if len(scores) < 2:
        return float("nan")
    return float(np.std(scores, ddof=1))


# -- normalized scores ---------------------------------------------------------------


def _normalized(target, I, kind, report_set, mode, samples, seed, threads, bootstrap):
    if mode == "exact":
        support, probs, mapped, cards = target.exact_view()
        num, gap = _exact_stats(support, probs, mapped, I.cols(), I.cols(), cards)
        den = num + gap
        if den <= DEGENERACY_THRESHOLD:
            raise DegenerateDenominator(
                f"{kind} denominator {den!r} for I={report_set} is uninformative"
            )
        return ScoreReport(target.direction, kind, report_set, num, den, gap / den, "exact")
    if mode != "mc":
        raise MetricError(f"unknown mode {mode!r}; expected 'exact' or 'mc'")
    num_devs, den_devs = _mc_deviations(target, I, samples, seed, threads)
    num, den = float(num_devs.mean()), float(den_devs.mean())
    if den <= DEGENERACY_THRESHOLD:
        raise DegenerateDenominator(
            f"{kind} denominator {den!r} for I={report_set} is uninformative"
        )
    std_error = _bootstrap_std_error(num_devs, den_devs, seed, bootstrap)
    return ScoreReport(
        target.direction, kind, report_set, num, den, 1.0 - num / den, "mc", samples, std_error, seed
    )


def normalized_consistency(
    target: EvaluationTarget,
    I: IndexSet,
    mode: str = "exact",
    samples: int = 10000,
    seed: int = 0,
    threads: int = 1,
    bootstrap: int = 200,
) -> ScoreReport:
    """Score 1 - num/den: one minus the conditional-resampling deviation over
    the i.i.d.-pair deviation.  Equals 1 iff C(I) holds; raises
    DegenerateDenominator on uninformative codes."""
    target.check_index_set(I)
    return _normalized(target, I, "consistency", I, mode, samples, seed, threads, bootstrap)


def normalized_restrictiveness(
    target: EvaluationTarget,
    I: IndexSet,
    mode: str = "exact",
    samples: int = 10000,
    seed: int = 0,
    threads: int = 1,
    bootstrap: int = 200,
) -> ScoreReport:
    """Dual score over the complement set, reported against I itself."""
    target.check_index_set(I)
    return _normalized(
        target, I.complement(), "restrictiveness", I, mode, samples, seed, threads, bootstrap
    )


def holds(
    target: EvaluationTarget,
    fact: Fact,
    tol: float = EXACT_TOL,
    mode: str = "exact",
    samples: int = 10000,
    seed: int = 0,
) -> bool:
    """Whether a C/R/D fact holds: the defining raw deviation(s) are zero
    within tol.  D(I) requires both; the empty set holds vacuously."""
    I = fact.index_set
    target.check_index_set(I)

    def raw(J: IndexSet) -> float:
        if mode == "exact":
            return raw_consistency(target, J)
        devs, _ = _mc_deviations(target, J, samples, seed, 1)
        return float(devs.mean())

    if fact.kind == "C":
        return raw(I) <= tol
    if fact.kind == "R":
        return raw(I.complement()) <= tol
    if fact.kind == "D":
        return raw(I) <= tol and raw(I.complement()) <= tol
    raise MetricError(f"unknown fact kind {fact.kind!r}")


# -- mutual information gap ------------------------------------------------------------


@dataclass(frozen=True)
class MigReport:
    """Per-factor normalized gaps between the top two latent informations."""

    per_factor: tuple[float, ...]
    mean: float
    mode: str
    samples: int = 0

    def to_dict(self) -> dict:
        return {
            "per_factor": list(self.per_factor),
            "mean": self.mean,
            "mode": self.mode,
            "samples": self.samples,
        }


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def _gap_scores(joint_fn, n: int, factor_marginals) -> tuple[float, ...]:
    gaps = []
    for k in range(n):
        h = _entropy(factor_marginals(k))
        if h <= 0.0:
            raise ZeroEntropyFactor(f"factor {k + 1} has zero entropy")
        mis = sorted((joint_fn(j, k) for j in range(n)), reverse=True)
        second = mis[1] if n > 1 else 0.0  # single-latent convention: no runner-up
        gaps.append((mis[0] - second) / h)
    return tuple(gaps)


def mig(
    target: EvaluationTarget,
    bins: int = 20,
    samples: int = 10000,
    seed: int = 0,
) -> MigReport:
    """Discretized mutual information gap of the latent-to-factor alignment.

    Discrete targets use the exact joint of (latent j, measured factor k);
    continuous targets discretize samples into equal-mass bins first.
    """
    if target.is_discrete:
        support, probs, mapped, cards = target.exact_view()

        def factor_marginals(k):
            out = np.zeros(cards[k])
            np.add.at(out, mapped[:, k], probs)
            return out

        def joint_fn(j, k):
            table = np.zeros((cards[j], cards[k]))
            np.add.at(table, (support[:, j], mapped[:, k]), probs)
            return _structured_mi(table, _entropy(factor_marginals(k)))

        gaps = _gap_scores(joint_fn, target.n, factor_marginals)
        return MigReport(gaps, float(np.mean(gaps)), "exact")

    sampler, measure = target.mc_parts()
    rng = np.random.default_rng(seed)
    z = sampler.sample_latents(rng, samples)
    s = measure(z)
    zb = np.column_stack([_equal_mass_bins(z[:, j], bins) for j in range(target.n)])
    sb = np.column_stack([_equal_mass_bins(s[:, k], bins) for k in range(target.n)])

    def joint_fn(j, k):
        table = np.zeros((bins, bins))
        np.add.at(table, (zb[:, j], sb[:, k]), 1.0 / samples)
        return mutual_information(table)

    def factor_marginals(k):
        return np.bincount(sb[:, k], minlength=bins) / samples

    gaps = _gap_scores(joint_fn, target.n, factor_marginals)
    return MigReport(gaps, float(np.mean(gaps)), "mc", samples)


def _structured_mi(joint: np.ndarray, h_col: float) -> float:
    """Mutual information of an exact joint, with two structurally exact
    short-circuits: deterministic rows give exactly the column entropy, and
    identical conditional rows give exactly zero.  Avoids log-rounding
    noise where the answer is pinned by the table's shape."""
    rows = joint[joint.sum(axis=1) > 0]
    if np.all((rows > 0).sum(axis=1) <= 1):
        return h_col
    cond = rows / rows.sum(axis=1, keepdims=True)
    if np.all(cond == cond[0]):
        return 0.0
    return mutual_information(joint)


def _equal_mass_bins(values: np.ndarray, bins: int) -> np.ndarray:
    edges = np.quantile(values, np.arange(1, bins) / bins)
    return np.searchsorted(edges, values, side="right")


# -- Monte-Carlo distribution matching ----------------------------------------------------


@dataclass(frozen=True)
class MatchCheckResult:
    passed: bool
    statistic: float
    threshold: float
    p_value: float
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "p_value": self.p_value,
            "samples": self.samples,
            "seed": self.seed,
        }


def mc_match_check(
    model,
    oracle,
    spec: SupervisionSpec,
    seed: int = 0,
    samples: int = 50000,
    bins_per_dim: int = 4,
    permutations: int = 200,
    alpha: float = 0.01,
) -> MatchCheckResult:
    """Two-sample test between oracle and model augmented records.

    Records are binned on a pooled equal-mass grid and compared by the
    squared difference of cell frequencies; the pass threshold is
    calibrated by a permutation test at the given significance level.
    """
    if not isinstance(oracle, DiskRotationWorld):
        raise MetricError("mc_match_check compares samplers of a continuous world")
    seq = np.random.SeedSequence(seed).spawn(3)
    a = sample_features(oracle, spec, np.random.default_rng(seq[0]), samples)
    b = sample_features(model, spec, np.random.default_rng(seq[1]), samples)
    cells_a, cells_b, n_cells = _grid_cells(a, b, bins_per_dim)

    stat = _freq_stat(cells_a, cells_b, n_cells)
    pooled = np.concatenate([cells_a, cells_b])
    rng = np.random.default_rng(seq[2])
    perm_stats = np.empty(permutations)
    for t in range(permutations):
        shuffled = rng.permutation(pooled)
        perm_stats[t] = _freq_stat(shuffled[:samples], shuffled[samples:], n_cells)
    threshold = float(np.quantile(perm_stats, 1.0 - alpha))
    p_value = float((1 + (perm_stats >= stat).sum()) / (permutations + 1))
    return MatchCheckResult(bool(stat <= threshold), float(stat), threshold, p_value, samples, seed)


def _grid_cells(a: np.ndarray, b: np.ndarray, bins_per_dim: int):
    pooled = np.vstack([a, b])
    d = pooled.shape[1]
    ids_a = np.zeros(len(a), dtype=np.int64)
    ids_b = np.zeros(len(b), dtype=np.int64)
    for c in range(d):
        edges = np.quantile(pooled[:, c], np.arange(1, bins_per_dim) / bins_per_dim)
        ids_a = ids_a * bins_per_dim + np.searchsorted(edges, a[:, c], side="right")
        ids_b = ids_b * bins_per_dim + np.searchsorted(edges, b[:, c], side="right")
    return ids_a, ids_b, bins_per_dim**d


def _freq_stat(cells_a, cells_b, n_cells: int) -> float:
    fa = np.bincount(cells_a, minlength=n_cells) / len(cells_a)
    fb = np.bincount(cells_b, minlength=n_cells) / len(cells_b)
    return float(((fa - fb) ** 2).sum())
