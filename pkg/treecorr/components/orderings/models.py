import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from treecorr.components.main.utils import StreamSeeds

logger = logging.getLogger(__name__)


class Relation(str, Enum):
    SUPERMODULAR = "supermodular"
    INCREASING_SUPERMODULAR = "increasing_supermodular"
    CONVEX = "convex"

    @classmethod
    def from_alias(cls, alias):
        aliases = {"sm": cls.SUPERMODULAR, "ism": cls.INCREASING_SUPERMODULAR, "cx": cls.CONVEX}
        return aliases.get(alias) or cls(alias)


class Holds(str, Enum):
    YES = "yes"
    NO = "no"
    NOT_DECIDED = "not_decided_by_criterion"


@dataclass(frozen=True)
class Comparison:
    """One entry of the criterion: ``key`` is a coordinate index or a pair."""

    key: object
    x: Fraction
    y: Fraction
    ok: bool


@dataclass
class OrderingVerdict:
    relation: Relation
    holds: Holds
    means: list = field(default_factory=list)
    covariances: list = field(default_factory=list)
    witness: Optional[dict] = None
    notes: list = field(default_factory=list)


@dataclass(frozen=True)
class LatticeFunction:
    """A function of d-vectors evaluated row-wise on an (n, d) array.

    ``exact`` marks functions that are integer valued on integer points, so their values
    on hypercube vertices convert to rationals without loss.
    """

    name: str
    function: Callable = field(compare=False)
    exact: bool = True
    nondecreasing: bool = False

    def __call__(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.asarray(self.function(points), dtype=float).reshape(points.shape[0])

    def value(self, point):
        value = float(self(np.asarray([point], dtype=float))[0])
        return Fraction(value) if self.exact else value

    def at(self, vertex):
        return self.value(vertex.to_vector())

    def normalised(self):
        """The same function shifted to vanish at the origin."""

        def function(points):
            return self(points) - self(np.zeros((1, points.shape[1])))[0]

        return LatticeFunction(self.name, function, self.exact, self.nondecreasing)


@dataclass(frozen=True)
class CouplingStep:
    """One increment of the binomial coupling at ``pair``.

    A's counts differ from B's by ``deltas`` (-1 at the pair, +1 at both children, -1 at
    the grandchild). In the joint draw U sits on node(pair) for B and on its child
    without k for A, V sits on the grandchild for B (nowhere when it is empty) and on the
    child without l for A.
    """

    pair: tuple
    children: tuple
    grandchild: object
    grandchild_pair: Optional[tuple]
    deltas: dict
    p: Fraction


@dataclass(frozen=True)
class CoupledSampler:
    b_model: object
    a_model: object
    step: CouplingStep

    def sample(self, n_samples, seed, stream="couple"):
        """(X_A, X_B) as two (n_samples, d) arrays drawn on one probability space."""
        generator = StreamSeeds(seed).generator(stream)
        tree = self.b_model.tree
        p = float(self.step.p)
        pairs = tree.pairs()
        shared_counts = dict(self.b_model.counts)
        shared_counts[self.step.pair] -= 1
        if self.step.grandchild_pair is not None:
            shared_counts[self.step.grandchild_pair] -= 1
        counts = np.array([shared_counts[pair] for pair in pairs], dtype=np.int64)

        shared = generator.binomial(counts, p, size=(n_samples, len(pairs)))
        u = generator.binomial(1, p, size=n_samples)
        v = generator.binomial(1, p, size=n_samples)

        index = {pair: position for position, pair in enumerate(pairs)}
        b_components = shared.copy()
        b_components[:, index[self.step.pair]] += u
        if self.step.grandchild_pair is not None:
            b_components[:, index[self.step.grandchild_pair]] += v
        a_components = shared
        a_components[:, index[self.step.children[0]]] += u
        a_components[:, index[self.step.children[1]]] += v
        return a_components @ tree.incidence, b_components @ tree.incidence


@dataclass(frozen=True)
class ExpansionRow:
    pair: tuple
    covariance: Fraction
    expansion: dict


@dataclass(frozen=True)
class LevyDecomposition:
    """Lévy weights of a Poisson model next to its covariances and their signed vertex
    expansions; Σ Cov(X_i, X_j)·expansion(i, j) collapses to the weights."""

    dim: int
    weights: dict
    rows: tuple

    def collapse(self):
        total = {}
        for row in self.rows:
            for vertex, weight in row.expansion.items():
                total[vertex] = total.get(vertex, Fraction(0)) + weight * row.covariance
        return {vertex: value for vertex, value in total.items() if value}
