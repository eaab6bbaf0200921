import logging
from fractions import Fraction

from treecorr.components.covariances.exceptions import (
    InversionPathsDisagree,
    NotRepresentable,
)
from treecorr.components.covariances.models import (
    CovarianceSpec,
    DistributionFamily,
    FeasibilityReport,
    VarianceDecomposition,
)
from treecorr.components.hypercube.exceptions import DimensionError
from treecorr.components.hypercube.models import HypercubeVertex
from treecorr.components.hypercube.utils import moebius_column
from treecorr.components.trees.exceptions import HViolation

logger = logging.getLogger(__name__)


def _check_dims(tree, other, what):
    if tree.dim != other.dim:
        error_message = f"Tree of dimension {tree.dim} used with a {what} of dimension {other.dim}."
        logger.error(error_message)
        raise DimensionError(error_message)


def forward_covariance(tree, dec):
    """Cov(X_i, X_j) = Σ σ²_{k,l} over the pairs whose node lies above node(i,j)."""
    _check_dims(tree, dec, "decomposition")
    missing = set(tree.pairs()) ^ set(dec.sigma2)
    if missing:
        error_message = f"The decomposition does not match the tree pairs, offending: {sorted(missing)}."
        logger.error(error_message)
        raise DimensionError(error_message)

    entries = [[Fraction(0)] * tree.dim for _ in range(tree.dim)]
    for i in range(1, tree.dim + 1):
        for j in range(i, tree.dim + 1):
            total = sum(
                (dec[pair] for pair in tree.nodes_above(tree.node(i, j))), Fraction(0)
            )
            entries[i - 1][j - 1] = entries[j - 1][i - 1] = total
    return CovarianceSpec(tree.dim, tuple(map(tuple, entries)))


def _invert_by_moebius(tree, cov):
    family = tree.vertices()
    sigma2 = {pair: Fraction(0) for pair in tree.pairs()}
    for above in tree.pairs():
        covariance = cov.cov(*above)
        if not covariance:
            continue
        for vertex, weight in moebius_column(tree.node(*above), family).items():
            if weight:
                sigma2[tree.pair_of(vertex)] += weight * covariance
    return VarianceDecomposition(tree.dim, sigma2)


def invert_covariance_recursive(tree, cov):
    """Peel the covariances from the roots downwards: a node's component variance is its
    covariance minus the component variances of every node strictly above it."""
    _check_dims(tree, cov, "covariance")
    order = sorted(tree.pairs(), key=lambda pair: -tree.node(*pair).size)
    sigma2 = {}
    for pair in order:
        node = tree.node(*pair)
        sigma2[pair] = cov.cov(*pair) - sum(
            (
                sigma2[above]
                for above in tree.nodes_above(node)
                if above != pair
            ),
            Fraction(0),
        )
    return VarianceDecomposition(tree.dim, sigma2)


def invert_covariance(tree, cov):
    """σ²_{k,l} = Σ_{node(k,l) ⪯ node(i,j)} μ(node(i,j), node(k,l)) Cov(X_i, X_j).

    The recursive root to leaves path is run as a cross-check and the forward map is
    re-applied to confirm the covariance is represented exactly.
    """
    _check_dims(tree, cov, "covariance")
    dec = _invert_by_moebius(tree, cov)

    recursive = invert_covariance_recursive(tree, cov)
    if recursive != dec:
        error_message = "Möbius inversion and the recursive inversion disagree."
        logger.error(error_message)
        raise InversionPathsDisagree(
            error_message,
            detail={
                "moebius": dict(dec.sigma2),
                "recursive": dict(recursive.sigma2),
            },
        )

    image = forward_covariance(tree, dec)
    if image.entries != cov.entries:
        residual = [
            [a - b for a, b in zip(row, image_row)]
            for row, image_row in zip(cov.entries, image.entries)
        ]
        error_message = "The covariance is not representable on this tree."
        logger.error(error_message)
        raise NotRepresentable(error_message, detail=residual)

    if not dec.feasible:
        logger.info(
            f"Inverted decomposition has negative components at {dec.negative_pairs()}."
        )
    return dec


def feasibility(dec, family, p=None, scale=None):
    """Which families can realise ``dec``; the report carries every defect."""
    family = DistributionFamily(family)
    negative = dec.negative_pairs()
    report = FeasibilityReport(
        family=family, feasible=not negative, negative_pairs=negative
    )

    if family == DistributionFamily.BINOMIAL:
        p = Fraction(p)
        report.p = p
        if not 0 <= p <= 1:
            report.feasible = False
            return report
        pq = p * (1 - p)
        for pair, value in dec.sigma2.items():
            if pq == 0:
                if value == 0:
                    report.counts[pair] = 0
                else:
                    report.integrality_defects[pair] = None
                continue
            quotient = value / pq
            if quotient >= 0 and quotient.denominator == 1:
                report.counts[pair] = int(quotient)
            elif quotient >= 0:
                report.integrality_defects[pair] = quotient
        if report.integrality_defects:
            report.feasible = False
    elif family == DistributionFamily.POISSON:
        report.intensities = dict(dec.sigma2)
    elif family == DistributionFamily.GAMMA:
        scale = Fraction(scale)
        report.scale = scale
        if scale <= 0:
            report.feasible = False
            return report
        report.shapes = {pair: value / scale**2 for pair, value in dec.sigma2.items()}
    elif family == DistributionFamily.SUM:
        error_message = "Feasibility is decided per summand family, not for sums."
        logger.error(error_message)
        raise ValueError(error_message)
    return report


def comonotonic_decomposition(tree, variance):
    """σ² concentrated on the root node {1..d}: every coordinate is the same variable."""
    roots = tree.root_pairs()
    if not roots:
        error_message = "The tree has no node covering every coordinate."
        logger.error(error_message)
        raise HViolation(
            error_message, detail=[{"clause": "no_root", "pair": [], "dim": tree.dim}]
        )
    root = roots[0]
    return VarianceDecomposition(
        tree.dim,
        {
            pair: Fraction(variance) if pair == root else Fraction(0)
            for pair in tree.pairs()
        },
    )


def signed_expansion(tree, pair):
    """{vertex: μ(node(pair), vertex)} over the node family, zero weights and the origin
    dropped. For a node whose grandchild is a node or empty this is the four term
    pattern +node, -node∖{k}, -node∖{l}, +node∖{k,l}."""
    node = tree.node(*pair)
    column = moebius_column(node, tree.vertices() + [HypercubeVertex.origin(tree.dim)])
    return {
        vertex: weight
        for vertex, weight in column.items()
        if weight and not vertex.is_origin()
    }
