"""
Covariance matrices, tree variance decompositions and the per family feasibility report.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from types import MappingProxyType
from typing import Optional

from treecorr.components.covariances.exceptions import (
    AsymmetricCovariance,
    NegativeVariance,
)
from treecorr.components.hypercube.exceptions import DimensionError

logger = logging.getLogger(__name__)


class DistributionFamily(str, Enum):
    BINOMIAL = "binomial"
    POISSON = "poisson"
    GAUSSIAN = "gaussian"
    GAMMA = "gamma"
    SUM = "sum"


@dataclass(frozen=True)
class CovarianceSpec:
    dim: int
    entries: tuple
    means: Optional[tuple] = None

    def __post_init__(self):
        entries = tuple(tuple(Fraction(value) for value in row) for row in self.entries)
        if len(entries) != self.dim or any(len(row) != self.dim for row in entries):
            error_message = f"A covariance of dimension {self.dim} must be {self.dim}x{self.dim}."
            logger.error(error_message)
            raise DimensionError(error_message)
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                if entries[i][j] != entries[j][i]:
                    error_message = (
                        f"Covariance is not symmetric at ({i + 1},{j + 1}): "
                        f"{entries[i][j]} != {entries[j][i]}."
                    )
                    logger.error(error_message)
                    raise AsymmetricCovariance(error_message)
        object.__setattr__(self, "entries", entries)
        if self.means is not None:
            means = tuple(Fraction(value) for value in self.means)
            if len(means) != self.dim:
                error_message = f"Expected {self.dim} means, got {len(means)}."
                logger.error(error_message)
                raise DimensionError(error_message)
            object.__setattr__(self, "means", means)

    def negative_variances(self):
        """1-based coordinates whose variance is below zero. The forward map of an infeasible
        decomposition may have some."""
        return [i for i in range(1, self.dim + 1) if self.entries[i - 1][i - 1] < 0]

    def check_variances(self):
        negative = self.negative_variances()
        if negative:
            error_message = f"Negative variance at coordinates {negative}."
            logger.error(error_message)
            raise NegativeVariance(error_message, detail={"coordinates": negative})

    def cov(self, i, j):
        """Entry (i, j) with 1-based indices."""
        return self.entries[i - 1][j - 1]

    def __add__(self, other):
        if self.dim != other.dim:
            raise DimensionError(f"Can not add dimensions {self.dim} and {other.dim}.")
        return CovarianceSpec(
            self.dim,
            tuple(
                tuple(a + b for a, b in zip(row, other_row))
                for row, other_row in zip(self.entries, other.entries)
            ),
        )

    def scaled(self, factor):
        factor = Fraction(factor)
        return CovarianceSpec(
            self.dim,
            tuple(tuple(factor * value for value in row) for row in self.entries),
            None if self.means is None else tuple(factor * m for m in self.means),
        )

    def with_increment(self, i, j, delta):
        """Add ``delta`` to Cov(X_i, X_j) (and its mirror entry)."""
        entries = [list(row) for row in self.entries]
        entries[i - 1][j - 1] += Fraction(delta)
        if i != j:
            entries[j - 1][i - 1] += Fraction(delta)
        return CovarianceSpec(self.dim, tuple(map(tuple, entries)), self.means)


@dataclass(frozen=True)
class VarianceDecomposition:
    """σ²_{k,l} per tree pair. Infeasible (negative) entries are representable."""

    dim: int
    sigma2: MappingProxyType = field(compare=False)

    def __post_init__(self):
        object.__setattr__(
            self,
            "sigma2",
            MappingProxyType(
                {pair: Fraction(value) for pair, value in sorted(self.sigma2.items())}
            ),
        )

    def __eq__(self, other):
        if not isinstance(other, VarianceDecomposition):
            return NotImplemented
        return self.dim == other.dim and dict(self.sigma2) == dict(other.sigma2)

    def __hash__(self):
        return hash((self.dim, tuple(self.sigma2.items())))

    def __getitem__(self, pair):
        return self.sigma2[pair]

    @property
    def feasible(self):
        return all(value >= 0 for value in self.sigma2.values())

    def negative_pairs(self):
        return [pair for pair, value in self.sigma2.items() if value < 0]

    def scaled(self, factor):
        factor = Fraction(factor)
        return VarianceDecomposition(
            self.dim, {pair: factor * value for pair, value in self.sigma2.items()}
        )


@dataclass
class FeasibilityReport:
    family: DistributionFamily
    feasible: bool
    negative_pairs: list = field(default_factory=list)
    p: Optional[Fraction] = None
    scale: Optional[Fraction] = None
    counts: dict = field(default_factory=dict)
    integrality_defects: dict = field(default_factory=dict)
    shapes: dict = field(default_factory=dict)
    intensities: dict = field(default_factory=dict)
    mean_defects: dict = field(default_factory=dict)
