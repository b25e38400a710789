"""Semantic exception hierarchy shared by all disentlab modules."""


class DisentlabError(Exception):
    """Base class for every error raised by this package."""


class WorldError(DisentlabError):
    """Invalid world construction or world-spec document."""


class NonNormalizedPrior(WorldError):
    """Prior table does not sum to one within tolerance."""


class NonInjectiveGenerator(WorldError):
    """Two positive-mass factor tuples map to the same observation id."""


class ArityMismatch(DisentlabError):
    """Index set, factor tuple, or model does not match the world's arity."""


class SupportTooLarge(DisentlabError):
    """Requested construction exceeds the exact-enumeration support cap."""


class ZeroMassConditioning(WorldError):
    """Conditioning event has zero probability mass."""


class SupervisionError(DisentlabError):
    """Invalid supervision specification for the given world."""


class UnorderedFactorForRank(SupervisionError):
    """Rank pairing requested on a factor without an ordering."""


class KindMismatch(SupervisionError):
    """Augmented tables of different kinds or index sets were compared."""


class MetricError(DisentlabError):
    """Metric evaluation failed."""


class DegenerateDenominator(MetricError):
    """Normalization denominator below the degeneracy threshold.

    Signals an uninformative code: both the conditional and the
    unconditional deviation vanish, so no score is defined.
    """


class ZeroEntropyFactor(MetricError):
    """A factor with zero entropy cannot be scored by the information gap."""


class CalculusError(DisentlabError):
    """Invalid fact, axiom set, or closure request."""


class ArityTooLarge(CalculusError):
    """Closure arity exceeds the dense-bitmask limit."""


class NuisanceInAxiomIndexSet(CalculusError):
    """Supervision axioms may not reference the nuisance index."""


class FactParseError(CalculusError):
    """Textual fact expression could not be parsed."""
