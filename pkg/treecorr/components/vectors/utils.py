"""
    This module provides the operations of the vectors component: construction from a
    covariance, exact moments, seeded sampling, exact truncated joint pmfs and the
    binomial to Gaussian bridge.
"""
import logging
import math
from collections import defaultdict
from fractions import Fraction

import numpy as np
from django.conf import settings
from scipy.stats import poisson

from treecorr.components.covariances.models import DistributionFamily
from treecorr.components.covariances.serializers import FeasibilityReportSerializer
from treecorr.components.covariances.utils import feasibility, invert_covariance
from treecorr.components.main.decorators import timeit
from treecorr.components.main.utils import StreamSeeds
from treecorr.components.vectors.exceptions import (
    BudgetExceeded,
    InfeasibleDecomposition,
    UnsupportedFamily,
)
from treecorr.components.vectors.models import (
    BinomialModel,
    CltBridge,
    ExactMoments,
    GammaModel,
    GaussianModel,
    IndependentSum,
    PoissonModel,
    TruncatedPmf,
)

logger = logging.getLogger(__name__)

LATTICE_FAMILIES = (DistributionFamily.BINOMIAL, DistributionFamily.POISSON)


def _infeasible(report, message):
    logger.error(message)
    raise InfeasibleDecomposition(
        message, detail=FeasibilityReportSerializer(report).data, report=report
    )


def construct(tree, cov, family, params=None):
    """The model of ``family`` on ``tree`` whose exact covariance is ``cov``.

    ``params`` holds ``p`` for binomial (defaults to TREECORR_DEFAULT_P) and ``scale``
    for gamma (defaults to 1). Coordinate means supplied with ``cov`` are placed on the
    leaves of a Gaussian model and must match the implied means of the other families.
    """
    family = DistributionFamily(family)
    params = params or {}
    if family == DistributionFamily.SUM:
        error_message = "Independent sums are assembled from constructed summands."
        logger.error(error_message)
        raise UnsupportedFamily(error_message)

    cov.check_variances()
    dec = invert_covariance(tree, cov)
    report = feasibility(
        dec,
        family,
        p=params.get("p", settings.TREECORR_DEFAULT_P),
        scale=params.get("scale", 1),
    )
    if not report.feasible:
        _infeasible(report, f"The covariance is not {family.value} feasible on this tree.")

    if family == DistributionFamily.BINOMIAL:
        model = BinomialModel(tree, report.p, report.counts)
    elif family == DistributionFamily.POISSON:
        model = PoissonModel(tree, report.intensities)
    elif family == DistributionFamily.GAMMA:
        model = GammaModel(tree, report.scale, report.shapes)
    else:
        means = {pair: 0 for pair in tree.pairs()}
        if cov.means is not None:
            for i, mean in enumerate(cov.means, start=1):
                means[(i, i)] = mean
        model = GaussianModel(tree, dict(dec.sigma2), means)

    if cov.means is not None and family != DistributionFamily.GAUSSIAN:
        implied = model.coordinate_means()
        for i, (expected, mean) in enumerate(zip(cov.means, implied), start=1):
            if expected != mean:
                report.mean_defects[i] = (expected, mean)
        if report.mean_defects:
            report.feasible = False
            _infeasible(
                report,
                f"The {family.value} model implies means {implied}, not {cov.means}.",
            )

    logger.info(f"Constructed a {family.value} model on a tree of dimension {tree.dim}.")
    return model


def exact_moments(model):
    covariance = model.covariance()
    return ExactMoments(covariance.means, covariance)


def _draw(model, generator, n_samples):
    """Component draws summed along the incidence rows, in blocks of TREECORR_SAMPLE_CHUNK."""
    incidence = model.tree.incidence
    blocks = []
    for start in range(0, n_samples, settings.TREECORR_SAMPLE_CHUNK):
        size = min(settings.TREECORR_SAMPLE_CHUNK, n_samples - start)
        blocks.append(model.draw_components(generator, size) @ incidence)
    return np.concatenate(blocks, axis=0)


@timeit
def sample(model, n_samples, seed, stream="sample"):
    """``n_samples`` i.i.d. draws as an (n_samples, d) array, identical for a given seed.

    The summands of an IndependentSum draw on their own child streams.
    """
    if n_samples < 1:
        error_message = f"At least one sample is needed, got {n_samples}."
        logger.error(error_message)
        raise ValueError(error_message)
    seeds = StreamSeeds(seed)
    if isinstance(model, IndependentSum):
        return sum(
            _draw(summand, seeds.generator(f"{stream}/{summand.family.value}"), n_samples)
            for summand in model.summands
        )
    return _draw(model, seeds.generator(stream), n_samples)


def empirical_covariance(samples):
    samples = np.asarray(samples, dtype=float)
    dim = samples.shape[1]
    return np.cov(samples, rowvar=False, bias=True).reshape(dim, dim)


def covariance_standard_errors(samples):
    """Per-entry standard error of the empirical covariance, from the sample variance of
    the centred products (X_i − X̄_i)(X_j − X̄_j)."""
    samples = np.asarray(samples, dtype=float)
    n_samples, dim = samples.shape
    centred = samples - samples.mean(axis=0)
    errors = np.empty((dim, dim))
    for i in range(dim):
        for j in range(i, dim):
            products = centred[:, i] * centred[:, j]
            errors[i, j] = errors[j, i] = products.std(ddof=1) / math.sqrt(n_samples)
    return errors


def _require_lattice(model):
    if getattr(model, "family", None) not in LATTICE_FAMILIES:
        family = getattr(getattr(model, "family", None), "value", type(model).__name__)
        error_message = f"Exact lattice pmfs exist for binomial and poisson models, not {family}."
        logger.error(error_message)
        raise UnsupportedFamily(error_message)


def _component_pmfs(model, cap):
    """Per pair: its incidence row and {value: probability} on 0..cap."""
    rows = []
    for pair, vector in zip(model.tree.pairs(), model.tree.incidence.tolist()):
        if model.family == DistributionFamily.BINOMIAL:
            count, p = model.counts[pair], model.p
            pmf = {
                t: math.comb(count, t) * p**t * (1 - p) ** (count - t)
                for t in range(min(count, cap) + 1)
            }
        else:
            a = model.intensities[pair]
            if a == 0:
                pmf = {0: 1.0}
            else:
                values = np.arange(cap + 1)
                pmf = dict(zip(values.tolist(), poisson.pmf(values, float(a)).tolist()))
        rows.append((tuple(vector), pmf))
    return rows


@timeit
def exact_truncated_pmf(model, cap, prune_above=None):
    """Joint pmf of X from the component values 0..cap, accumulated on the summed vector.

    Binomial probabilities are exact rationals, Poisson probabilities are floats. With
    ``prune_above`` points having a coordinate above it are dropped as they appear, and
    the captured mass is the mass left on {0..prune_above}^d.
    """
    _require_lattice(model)
    if cap < 0:
        raise ValueError(f"The component cap must be nonnegative, got {cap}.")
    components = _component_pmfs(model, cap)
    states = math.prod(len(pmf) for _, pmf in components)
    if states > settings.TREECORR_ENUMERATION_BUDGET:
        error_message = (
            f"Enumerating {states} component states exceeds the budget of "
            f"{settings.TREECORR_ENUMERATION_BUDGET}."
        )
        logger.error(error_message)
        raise BudgetExceeded(error_message)

    exact = model.family == DistributionFamily.BINOMIAL
    one = Fraction(1) if exact else 1.0
    distribution = {(0,) * model.dim: one}
    for vector, pmf in components:
        step = defaultdict(lambda: 0 * one)
        for point, probability in distribution.items():
            for value, weight in pmf.items():
                image = tuple(x + value * v for x, v in zip(point, vector))
                if prune_above is not None and max(image) > prune_above:
                    break
                step[image] += probability * weight
        distribution = dict(step)

    captured = sum(distribution.values(), 0 * one)
    logger.debug(
        f"Truncated pmf over {len(distribution)} points captures {float(captured)!r}."
    )
    return TruncatedPmf(
        model.dim,
        cap if prune_above is None else prune_above,
        dict(sorted(distribution.items())),
        captured,
        exact,
    )


class TruncationUtils:
    """Tail quantile policy for the lattice caps."""

    @classmethod
    def _tail(cls, tail):
        return settings.TREECORR_TAIL_MASS if tail is None else tail

    @classmethod
    def default_component_cap(cls, model, tail=None):
        """Smallest m with P(X_{k,l} > m) < tail / n_pairs for every component."""
        _require_lattice(model)
        share = cls._tail(tail) / len(model.tree.pairs())
        if model.family == DistributionFamily.BINOMIAL:
            return max(1, max(model.counts.values()))
        return max(
            1,
            max(
                int(poisson.isf(share, float(a))) if a else 0
                for a in model.intensities.values()
            ),
        )

    @classmethod
    def coordinate_cap(cls, model, tail=None):
        """Smallest m with P(X_i > m) < tail / d for every coordinate."""
        _require_lattice(model)
        if model.family == DistributionFamily.BINOMIAL:
            return max(1, max(model.coordinate_sizes()))
        share = cls._tail(tail) / model.dim
        return max(
            1,
            max(
                int(poisson.isf(share, float(mean))) if mean else 0
                for mean in model.coordinate_means()
            ),
        )

    @classmethod
    def default_grid_cap(cls, models, tail=None):
        return max(cls.coordinate_cap(model, tail) for model in models)


def default_component_cap(model, tail=None):
    return TruncationUtils.default_component_cap(model, tail)


def default_grid_cap(models, tail=None):
    return TruncationUtils.default_grid_cap(models, tail)


def clt_bridge(target, n, p=None):
    """Binomial model with counts round(n·σ²_{k,l}/(pq)); (X − E[X])/√n has covariance
    within n_pairs·pq/(2n) of the target entrywise."""
    if n < 1:
        error_message = f"The bridge needs n ≥ 1, got {n}."
        logger.error(error_message)
        raise ValueError(error_message)
    p = Fraction(settings.TREECORR_DEFAULT_P if p is None else p)
    pq = p * (1 - p)
    if pq == 0:
        error_message = f"The bridge needs 0 < p < 1, got {p}."
        logger.error(error_message)
        raise InfeasibleDecomposition(error_message)
    counts = {
        pair: math.floor(n * variance / pq + Fraction(1, 2))
        for pair, variance in target.variances.items()
    }
    return CltBridge(target, BinomialModel(target.tree, p, counts), n)
