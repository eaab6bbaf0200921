"""
Random vectors built on a dependency tree.

Every model attaches one independent component X_{k,l} to each tree pair and sets
X_i = Σ_{i ∈ node(k,l)} X_{k,l}. The families differ only in the law of the components:

    binomial   X_{k,l} ~ Bin(counts[k,l], p)       mean p·n,     variance pq·n
    poisson    X_{k,l} ~ Poisson(a_{k,l})           mean a,       variance a
    gaussian   X_{k,l} ~ N(m_{k,l}, σ²_{k,l})       mean m,       variance σ²
    gamma      X_{k,l} ~ Gamma(shape, scale θ)      mean shape·θ, variance shape·θ²

The gamma family uses the shape-scale convention with one scale θ shared by all
components, so coordinate sums stay gamma with scale θ.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Optional

import numpy as np

from treecorr.components.covariances.models import (
    CovarianceSpec,
    DistributionFamily,
    VarianceDecomposition,
)
from treecorr.components.covariances.utils import forward_covariance
from treecorr.components.hypercube.exceptions import DimensionError
from treecorr.components.trees.models import DependencyTree
from treecorr.components.vectors.exceptions import InfeasibleDecomposition

logger = logging.getLogger(__name__)


def _frozen_components(tree, values, convert, what):
    """Check ``values`` covers the tree pairs with nonnegative entries and freeze it."""
    values = {tuple(sorted(pair)): convert(value) for pair, value in values.items()}
    if set(values) != set(tree.pairs()):
        missing = sorted(set(tree.pairs()) ^ set(values))
        error_message = f"The {what} do not match the tree pairs, offending: {missing}."
        logger.error(error_message)
        raise DimensionError(error_message)
    negative = sorted(pair for pair, value in values.items() if value < 0)
    if negative:
        error_message = f"Negative {what} at {negative}."
        logger.error(error_message)
        raise InfeasibleDecomposition(
            error_message, detail={"negative_pairs": [list(pair) for pair in negative]}
        )
    return MappingProxyType({pair: values[pair] for pair in tree.pairs()})


def _count(value):
    if isinstance(value, bool):
        raise TypeError(f"A boolean is not a count: {value!r}")
    value = Fraction(value)
    if value.denominator != 1:
        raise InfeasibleDecomposition(f"Binomial counts must be integers, got {value}.")
    return int(value)


class TreeVectorModel:
    """Shared behaviour of the single family models; subclasses provide the component
    laws through ``component_means``, ``component_variances`` and ``draw_components``."""

    family = None
    exact = True

    @property
    def dim(self):
        return self.tree.dim

    def component_means(self):
        raise NotImplementedError

    def component_variances(self):
        raise NotImplementedError

    def draw_components(self, generator, n_samples):
        """An (n_samples, n_pairs) array of independent component draws."""
        raise NotImplementedError

    def decomposition(self):
        return VarianceDecomposition(self.dim, self.component_variances())

    def coordinate_means(self):
        means = self.component_means()
        return tuple(
            sum((means[pair] for pair in self.tree.membership.row(i)), Fraction(0))
            for i in range(1, self.dim + 1)
        )

    def covariance(self):
        return CovarianceSpec(
            self.dim,
            forward_covariance(self.tree, self.decomposition()).entries,
            self.coordinate_means(),
        )

    def _as_array(self, values):
        return np.array([float(values[pair]) for pair in self.tree.pairs()])


@dataclass(frozen=True)
class BinomialModel(TreeVectorModel):
    """X_{k,l} counts the successes among the |A(e_{k,l})| = counts[k,l] Bernoulli(p)
    variables of its block; the partition of {1..n} stays virtual."""

    tree: DependencyTree
    p: Fraction
    counts: MappingProxyType = field(compare=False)

    family = DistributionFamily.BINOMIAL

    def __post_init__(self):
        p = Fraction(self.p)
        if not 0 <= p <= 1:
            error_message = f"The success probability {p} is outside [0, 1]."
            logger.error(error_message)
            raise ValueError(error_message)
        object.__setattr__(self, "p", p)
        object.__setattr__(
            self, "counts", _frozen_components(self.tree, self.counts, _count, "counts")
        )

    def __eq__(self, other):
        if not isinstance(other, BinomialModel):
            return NotImplemented
        return (self.tree, self.p, dict(self.counts)) == (
            other.tree,
            other.p,
            dict(other.counts),
        )

    def __hash__(self):
        return hash((self.tree, self.p, tuple(self.counts.items())))

    @property
    def q(self):
        return 1 - self.p

    @property
    def n(self):
        return sum(self.counts.values())

    def coordinate_sizes(self):
        """|A_i| = Σ_{i ∈ node(k,l)} counts[k,l]."""
        return tuple(
            sum(self.counts[pair] for pair in self.tree.membership.row(i))
            for i in range(1, self.dim + 1)
        )

    def component_means(self):
        return {pair: self.p * count for pair, count in self.counts.items()}

    def component_variances(self):
        return {pair: self.p * self.q * count for pair, count in self.counts.items()}

    def draw_components(self, generator, n_samples):
        counts = np.array([self.counts[pair] for pair in self.tree.pairs()], dtype=np.int64)
        return generator.binomial(counts, float(self.p), size=(n_samples, len(counts)))

    def with_counts(self, counts):
        return BinomialModel(self.tree, self.p, counts)


@dataclass(frozen=True)
class PoissonModel(TreeVectorModel):
    """Common shock Poisson vector; the intensities are at once the component means, the
    component variances and the Lévy weights of the nodes."""

    tree: DependencyTree
    intensities: MappingProxyType = field(compare=False)

    family = DistributionFamily.POISSON

    def __post_init__(self):
        object.__setattr__(
            self,
            "intensities",
            _frozen_components(self.tree, self.intensities, Fraction, "intensities"),
        )

    def __eq__(self, other):
        if not isinstance(other, PoissonModel):
            return NotImplemented
        return (self.tree, dict(self.intensities)) == (other.tree, dict(other.intensities))

    def __hash__(self):
        return hash((self.tree, tuple(self.intensities.items())))

    def component_means(self):
        return dict(self.intensities)

    def component_variances(self):
        return dict(self.intensities)

    def draw_components(self, generator, n_samples):
        lam = self._as_array(self.intensities)
        return generator.poisson(lam, size=(n_samples, len(lam)))

    def levy_measure(self):
        return LevyMeasure(
            self.dim,
            {self.tree.node(*pair): a for pair, a in self.intensities.items() if a},
        )


@dataclass(frozen=True)
class GaussianModel(TreeVectorModel):
    tree: DependencyTree
    variances: MappingProxyType = field(compare=False)
    means: Optional[MappingProxyType] = field(default=None, compare=False)

    family = DistributionFamily.GAUSSIAN
    exact = False

    def __post_init__(self):
        object.__setattr__(
            self,
            "variances",
            _frozen_components(self.tree, self.variances, Fraction, "variances"),
        )
        means = self.means or {pair: 0 for pair in self.tree.pairs()}
        means = {tuple(sorted(pair)): Fraction(value) for pair, value in means.items()}
        if set(means) != set(self.tree.pairs()):
            error_message = "The component means do not match the tree pairs."
            logger.error(error_message)
            raise DimensionError(error_message)
        object.__setattr__(
            self, "means", MappingProxyType({pair: means[pair] for pair in self.tree.pairs()})
        )

    def __eq__(self, other):
        if not isinstance(other, GaussianModel):
            return NotImplemented
        return (self.tree, dict(self.variances), dict(self.means)) == (
            other.tree,
            dict(other.variances),
            dict(other.means),
        )

    def __hash__(self):
        return hash((self.tree, tuple(self.variances.items()), tuple(self.means.items())))

    def component_means(self):
        return dict(self.means)

    def component_variances(self):
        return dict(self.variances)

    def draw_components(self, generator, n_samples):
        scale = np.sqrt(self._as_array(self.variances))
        loc = self._as_array(self.means)
        return generator.normal(size=(n_samples, len(scale))) * scale + loc


@dataclass(frozen=True)
class GammaModel(TreeVectorModel):
    tree: DependencyTree
    scale: Fraction
    shapes: MappingProxyType = field(compare=False)

    family = DistributionFamily.GAMMA
    exact = False

    def __post_init__(self):
        scale = Fraction(self.scale)
        if scale <= 0:
            error_message = f"The gamma scale must be positive, got {scale}."
            logger.error(error_message)
            raise ValueError(error_message)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(
            self, "shapes", _frozen_components(self.tree, self.shapes, Fraction, "shapes")
        )

    def __eq__(self, other):
        if not isinstance(other, GammaModel):
            return NotImplemented
        return (self.tree, self.scale, dict(self.shapes)) == (
            other.tree,
            other.scale,
            dict(other.shapes),
        )

    def __hash__(self):
        return hash((self.tree, self.scale, tuple(self.shapes.items())))

    def component_means(self):
        return {pair: shape * self.scale for pair, shape in self.shapes.items()}

    def component_variances(self):
        return {pair: shape * self.scale**2 for pair, shape in self.shapes.items()}

    def draw_components(self, generator, n_samples):
        shapes = self._as_array(self.shapes)
        positive = shapes > 0
        draws = generator.gamma(
            np.where(positive, shapes, 1.0), float(self.scale), size=(n_samples, len(shapes))
        )
        return draws * positive


@dataclass(frozen=True)
class IndependentSum:
    """Sum of independent tree models of distinct families over the same dimension."""

    summands: tuple

    family = DistributionFamily.SUM

    def __post_init__(self):
        summands = tuple(self.summands)
        if not summands:
            raise ValueError("An independent sum needs at least one summand.")
        dims = {summand.dim for summand in summands}
        if len(dims) != 1:
            error_message = f"Summands have mixed dimensions {sorted(dims)}."
            logger.error(error_message)
            raise DimensionError(error_message)
        families = [summand.family for summand in summands]
        if DistributionFamily.SUM in families or len(set(families)) != len(families):
            error_message = f"Summands must be single models of distinct families, got {families}."
            logger.error(error_message)
            raise ValueError(error_message)
        object.__setattr__(
            self, "summands", tuple(sorted(summands, key=lambda model: model.family.value))
        )

    @property
    def dim(self):
        return self.summands[0].dim

    @property
    def exact(self):
        return all(summand.exact for summand in self.summands)

    def summand(self, family):
        for model in self.summands:
            if model.family == family:
                return model
        return None

    def coordinate_means(self):
        return tuple(
            sum(values, Fraction(0))
            for values in zip(*(model.coordinate_means() for model in self.summands))
        )

    def covariance(self):
        total = self.summands[0].covariance()
        for model in self.summands[1:]:
            total = total + model.covariance()
        return CovarianceSpec(self.dim, total.entries, self.coordinate_means())


@dataclass(frozen=True)
class LevyMeasure:
    """Nonnegative weights on the nonzero vertices of C_d."""

    dim: int
    weights: MappingProxyType = field(compare=False)

    def __post_init__(self):
        weights = {}
        for vertex, weight in self.weights.items():
            if vertex.dim != self.dim:
                raise DimensionError(f"Vertex {vertex} is not in C_{self.dim}.")
            if vertex.is_origin():
                raise ValueError("A Lévy measure puts no weight on the origin.")
            weight = Fraction(weight)
            if weight < 0:
                raise ValueError(f"Negative Lévy weight {weight} at {vertex}.")
            if weight:
                weights[vertex] = weight
        object.__setattr__(
            self,
            "weights",
            MappingProxyType(dict(sorted(weights.items(), key=lambda item: item[0].sort_key()))),
        )

    def __eq__(self, other):
        if not isinstance(other, LevyMeasure):
            return NotImplemented
        return self.dim == other.dim and dict(self.weights) == dict(other.weights)

    def __hash__(self):
        return hash((self.dim, tuple(self.weights.items())))

    @property
    def total_mass(self):
        return sum(self.weights.values(), Fraction(0))

    def support(self):
        return list(self.weights)


@dataclass(frozen=True)
class ExactMoments:
    means: tuple
    covariance: CovarianceSpec


@dataclass
class TruncatedPmf:
    """Joint probabilities of the points kept by the truncation and the mass they carry."""

    dim: int
    cap: int
    probabilities: dict
    captured_mass: object
    exact: bool = True

    @property
    def mass_defect(self):
        return 1 - self.captured_mass

    def marginal(self, index):
        marginal = {}
        for point, probability in self.probabilities.items():
            value = point[index - 1]
            marginal[value] = marginal.get(value, 0) + probability
        return dict(sorted(marginal.items()))


@dataclass(frozen=True)
class CltBridge:
    """A binomial model whose standardized vector (X − E[X]) / √n approximates a Gaussian
    target with covariance error at most n_pairs·pq/(2n) per entry."""

    target: GaussianModel
    binomial: BinomialModel
    n: int

    def standardize(self, samples):
        means = np.array([float(mean) for mean in self.binomial.coordinate_means()])
        return (np.asarray(samples, dtype=float) - means) / np.sqrt(self.n)

    def standardized_means(self):
        return tuple(Fraction(0) for _ in range(self.binomial.dim))

    def standardized_covariance(self):
        scaled = self.binomial.covariance().scaled(Fraction(1, self.n))
        return CovarianceSpec(scaled.dim, scaled.entries, self.standardized_means())

    def covariance_error_bound(self):
        pq = self.binomial.p * self.binomial.q
        return len(self.binomial.tree.pairs()) * pq / (2 * self.n)
