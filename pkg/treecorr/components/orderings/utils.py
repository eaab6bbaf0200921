"""
    This module provides the ordering criteria, the Lévy functionals of Poisson vectors
    and the binomial coupling of the orderings component
"""
import logging
import math
from collections.abc import Mapping
from fractions import Fraction

import numpy as np

from treecorr.components.covariances.models import DistributionFamily
from treecorr.components.covariances.utils import signed_expansion
from treecorr.components.hypercube.exceptions import DimensionError
from treecorr.components.hypercube.models import HypercubeVertex
from treecorr.components.orderings.exceptions import (
    CouplingUnavailable,
    FamilyMismatch,
    Inconsistency,
    MeanMismatch,
    MissingVertex,
    UnnormalisedTestFunction,
)
from treecorr.components.orderings.models import (
    Comparison,
    CoupledSampler,
    CouplingStep,
    ExpansionRow,
    Holds,
    LatticeFunction,
    LevyDecomposition,
    OrderingVerdict,
    Relation,
)
from treecorr.components.vectors.models import IndependentSum

logger = logging.getLogger(__name__)

CRITERION_FAMILIES = (
    DistributionFamily.BINOMIAL,
    DistributionFamily.POISSON,
    DistributionFamily.GAUSSIAN,
)


def _mismatch(message):
    logger.error(message)
    raise FamilyMismatch(message)


def _check_pair(X, Y):
    if X.dim != Y.dim:
        error_message = f"Can not compare vectors of dimensions {X.dim} and {Y.dim}."
        logger.error(error_message)
        raise DimensionError(error_message)
    if X.family != Y.family:
        _mismatch(f"Can not compare a {X.family.value} vector with a {Y.family.value} vector.")
    if X.family == DistributionFamily.SUM:
        families = [summand.family for summand in X.summands]
        if families != [summand.family for summand in Y.summands]:
            _mismatch("Independent sums must have summands of the same families.")
        for x_part, y_part in zip(X.summands, Y.summands):
            _check_pair(x_part, y_part)
        return
    if X.family not in CRITERION_FAMILIES:
        _mismatch(f"No covariance criterion is known for {X.family.value} vectors.")
    if X.family == DistributionFamily.BINOMIAL and X.p != Y.p:
        _mismatch(f"Binomial vectors with p={X.p} and p={Y.p} are not comparable.")


def _compare(X, Y, relation, increasing):
    x_cov, y_cov = X.covariance(), Y.covariance()
    dim = X.dim
    means = []
    for i, (x, y) in enumerate(zip(x_cov.means, y_cov.means), start=1):
        means.append(Comparison(i, x, y, x <= y if increasing else x == y))

    covariances = []
    for i in range(1, dim + 1):
        for j in range(i, dim + 1):
            x, y = x_cov.cov(i, j), y_cov.cov(i, j)
            if i < j:
                covariances.append(Comparison((i, j), x, y, x <= y))
            elif not increasing and X.family != DistributionFamily.POISSON:
                # equal Poisson means already force equal variances
                covariances.append(Comparison((i, i), x, y, x == y))

    verdict = OrderingVerdict(relation, Holds.YES, means, covariances)
    failed_mean = next((c for c in means if not c.ok), None)
    failed_cov = next((c for c in covariances if not c.ok), None)
    if failed_mean is not None:
        verdict.holds = Holds.NO
        verdict.witness = {"kind": "mean", "index": failed_mean.key}
    elif failed_cov is not None:
        verdict.holds = Holds.NO
        kind = "variance" if failed_cov.key[0] == failed_cov.key[1] else "covariance"
        verdict.witness = {"kind": kind, "pair": failed_cov.key}
    return verdict


def _check_sum(X, Y, relation, increasing):
    """Summand-wise criterion: sufficient by convolution, necessity is not claimed."""
    parts = [_compare(x, y, relation, increasing) for x, y in zip(X.summands, Y.summands)]
    whole = _compare(X, Y, relation, increasing)
    if all(part.holds == Holds.YES for part in parts):
        whole.holds = Holds.YES
        whole.witness = None
    else:
        whole.holds = Holds.NOT_DECIDED
        whole.notes.append(
            "summand-wise criterion fails at "
            + ", ".join(
                summand.family.value
                for summand, part in zip(X.summands, parts)
                if part.holds != Holds.YES
            )
        )
    return whole


def check_supermodular(X, Y):
    """X ≤sm Y iff the means agree and Cov(X_i, X_j) ≤ Cov(Y_i, Y_j) for every i < j."""
    _check_pair(X, Y)
    if isinstance(X, IndependentSum):
        return _check_sum(X, Y, Relation.SUPERMODULAR, increasing=False)
    verdict = _compare(X, Y, Relation.SUPERMODULAR, increasing=False)
    logger.info(f"Supermodular check between {X.family.value} vectors: {verdict.holds.value}.")
    return verdict


def check_increasing_supermodular(X, Y):
    """Sufficient criterion: E[X_i] ≤ E[Y_i] for every i and covariance dominance."""
    _check_pair(X, Y)
    if isinstance(X, IndependentSum):
        verdict = _check_sum(X, Y, Relation.INCREASING_SUPERMODULAR, increasing=True)
    else:
        verdict = _compare(X, Y, Relation.INCREASING_SUPERMODULAR, increasing=True)
    if X.family != DistributionFamily.POISSON:
        verdict.notes.append(
            "the increasing supermodular criterion is established for poisson vectors"
        )
    return verdict


def _vertex_function(phi):
    """Normalise φ (a LatticeFunction, a mapping on vertices or bitstrings, or a callable on
    vertices) to a callable on vertices that raises MissingVertex where φ is undefined."""
    if isinstance(phi, LatticeFunction):
        return phi.at
    if isinstance(phi, Mapping):
        table = {}
        for key, value in phi.items():
            vertex = HypercubeVertex.from_bitstring(key) if isinstance(key, str) else key
            table[vertex] = value

        def lookup(vertex):
            if vertex in table:
                return table[vertex]
            if vertex.is_origin():
                return 0
            error_message = f"The test function is undefined at {vertex}."
            logger.error(error_message)
            raise MissingVertex(error_message, detail=vertex.to_bitstring())

        return lookup

    def call(vertex):
        value = phi(vertex)
        if value is None:
            error_message = f"The test function is undefined at {vertex}."
            logger.error(error_message)
            raise MissingVertex(error_message, detail=vertex.to_bitstring())
        return value

    return call


def _normalised(phi, dim):
    evaluate = _vertex_function(phi)
    at_origin = evaluate(HypercubeVertex.origin(dim))
    if at_origin != 0:
        error_message = f"The test function takes the value {at_origin} at the origin."
        logger.error(error_message)
        raise UnnormalisedTestFunction(error_message)
    return evaluate


def _is_exact(value):
    return isinstance(value, (int, Fraction)) and not isinstance(value, bool)


def _agree(first, second):
    if _is_exact(first) and _is_exact(second):
        return first == second
    return math.isclose(float(first), float(second), rel_tol=1e-9, abs_tol=1e-9)


def _require_poisson(*models):
    for model in models:
        if model.family != DistributionFamily.POISSON:
            _mismatch(f"Lévy functionals need poisson vectors, got {model.family.value}.")


def _expansion_value(tree, pair, evaluate):
    return sum(
        weight * evaluate(vertex) for vertex, weight in signed_expansion(tree, pair).items()
    )


def _covariance_form(model, evaluate):
    """Σ_i E[X_i] φ(e_i) + Σ_{i<j} Cov(X_i, X_j) · expansion_{i,j}(φ)."""
    cov = model.covariance()
    total = sum(cov.means[i - 1] * evaluate(model.tree.node(i, i)) for i in range(1, model.dim + 1))
    for i, j in model.tree.off_diagonal_pairs():
        covariance = cov.cov(i, j)
        if covariance:
            total += covariance * _expansion_value(model.tree, (i, j), evaluate)
    return total


def _direct(model, evaluate):
    return sum(
        weight * evaluate(vertex) for vertex, weight in model.levy_measure().weights.items()
    )


def levy_functional(phi, model):
    """∫φ dμ = Σ a_{k,l} φ(node(k,l)) for the Lévy measure μ of a Poisson model.

    The value is also computed from the means and covariances of the model through the
    signed vertex expansions; the two must agree.
    """
    _require_poisson(model)
    evaluate = _normalised(phi, model.dim)
    direct = _direct(model, evaluate)
    covariance_form = _covariance_form(model, evaluate)
    if not _agree(direct, covariance_form):
        error_message = (
            f"The Lévy integral {direct} and its covariance form {covariance_form} disagree."
        )
        logger.error(error_message)
        raise Inconsistency(error_message)
    return direct


def levy_difference(X, Y, phi, covariance_form=True):
    """∫φ dν − ∫φ dμ for the Lévy measures μ of X and ν of Y.

    With ``covariance_form`` the difference is recomputed from Cov(Y) − Cov(X), which needs
    equal means, and checked against the direct value.
    """
    _require_poisson(X, Y)
    if X.dim != Y.dim:
        raise DimensionError(f"Can not compare dimensions {X.dim} and {Y.dim}.")
    evaluate = _normalised(phi, X.dim)
    direct = _direct(Y, evaluate) - _direct(X, evaluate)
    if not covariance_form:
        return direct

    if X.coordinate_means() != Y.coordinate_means():
        error_message = "The covariance form of a Lévy difference needs equal means."
        logger.error(error_message)
        raise MeanMismatch(error_message)

    if X.tree == Y.tree:
        x_cov, y_cov = X.covariance(), Y.covariance()
        via_covariances = sum(
            (y_cov.cov(i, j) - x_cov.cov(i, j)) * _expansion_value(X.tree, (i, j), evaluate)
            for i, j in X.tree.off_diagonal_pairs()
        )
    else:
        via_covariances = _covariance_form(Y, evaluate) - _covariance_form(X, evaluate)
    if not _agree(direct, via_covariances):
        error_message = (
            f"The Lévy difference {direct} and its covariance form {via_covariances} disagree."
        )
        logger.error(error_message)
        raise Inconsistency(error_message)
    return direct


def levy_decomposition(model):
    """The means, covariances and signed vertex expansions whose combination is the Lévy
    measure of ``model``."""
    _require_poisson(model)
    cov = model.covariance()
    rows = tuple(
        ExpansionRow(pair, cov.cov(*pair), signed_expansion(model.tree, pair))
        for pair in model.tree.pairs()
    )
    decomposition = LevyDecomposition(model.dim, dict(model.levy_measure().weights), rows)
    if decomposition.collapse() != decomposition.weights:
        error_message = "The covariance expansion does not collapse to the Lévy measure."
        logger.error(error_message)
        raise Inconsistency(error_message)
    return decomposition


def convex_pair_function(tree, k, l):
    """φ_{k,l}(x) = max(0, x_l − x_k − Σ_{a ∉ node(k,l)} x_a)."""
    outside = [a - 1 for a in range(1, tree.dim + 1) if a not in tree.node(k, l)]

    def function(points):
        return np.maximum(0.0, points[:, l - 1] - points[:, k - 1] - points[:, outside].sum(axis=1))

    return LatticeFunction(f"phi_{k},{l}", function)


def convex_mirror_function(tree, k, l):
    """max(0, x_k − x_l + Σ_{a ∉ node(k,l)} x_a), the φ_{k,l} of the reflected vector."""
    outside = [a - 1 for a in range(1, tree.dim + 1) if a not in tree.node(k, l)]

    def function(points):
        return np.maximum(0.0, points[:, k - 1] - points[:, l - 1] + points[:, outside].sum(axis=1))

    return LatticeFunction(f"mirror_{k},{l}", function)


def quadratic_pair_function(k, l):
    def function(points):
        return (points[:, k - 1] + points[:, l - 1]) ** 2

    return LatticeFunction(f"square_{k},{l}", function)


def linear_function(i, sign):
    def function(points):
        return sign * points[:, i - 1]

    name = f"x_{i}" if sign > 0 else f"-x_{i}"
    return LatticeFunction(name, function)


def vertex_sign_function(dim, signs):
    """Takes -sign(Δ(v)) on the vertices listed in ``signs`` and 0 elsewhere on C_d.

    Hypercube vertices are extreme points of the cube, so any values on them extend to a
    convex function on R^d (the largest convex minorant).
    """
    masks = {vertex.mask: -1 if delta > 0 else 1 for vertex, delta in signs.items() if delta}

    def function(points):
        values = np.zeros(points.shape[0])
        weights = 1 << np.arange(dim)
        binary = np.all((points == 0) | (points == 1), axis=1)
        keys = (points.astype(np.int64) * weights).sum(axis=1)
        for row in np.nonzero(binary)[0]:
            values[row] = masks.get(int(keys[row]), 0)
        return values

    return LatticeFunction("vertex_sign", function)


def _convex_candidates(X, Y, delta):
    """Convex test functions in order of preference: the pair functions φ_{k,l} and their
    mirrors, then squares of pair sums and signed coordinates, then the vertex sign
    function, which is negative whenever the Lévy measures differ."""
    pair_functions = []
    for tree in {X.tree: None, Y.tree: None}:
        for k, l in tree.off_diagonal_pairs():
            pair_functions.append(convex_pair_function(tree, k, l))
            pair_functions.append(convex_mirror_function(tree, k, l))
    moments = [
        quadratic_pair_function(k, l)
        for k in range(1, X.dim + 1)
        for l in range(k + 1, X.dim + 1)
    ]
    for i in range(1, X.dim + 1):
        moments.extend((linear_function(i, 1), linear_function(i, -1)))
    return [pair_functions, moments, [vertex_sign_function(X.dim, delta)]]


def check_convex(X, Y):
    """For tree Poisson vectors X ≤cx Y iff they have the same law, i.e. the same Lévy
    measure. A failure is witnessed by the most negative convex test function of the first
    candidate tier that has a negative Lévy difference."""
    _check_pair(X, Y)
    _require_poisson(X, Y)
    mu, nu = X.levy_measure(), Y.levy_measure()
    verdict = OrderingVerdict(Relation.CONVEX, Holds.YES)
    verdict.covariances = [
        Comparison(pair, X.covariance().cov(*pair), Y.covariance().cov(*pair), True)
        for pair in X.tree.pairs()
    ]
    verdict.means = [
        Comparison(i, x, y, x == y)
        for i, (x, y) in enumerate(zip(X.coordinate_means(), Y.coordinate_means()), start=1)
    ]
    if mu == nu:
        return verdict

    vertices = set(mu.weights) | set(nu.weights)
    delta = {
        vertex: nu.weights.get(vertex, Fraction(0)) - mu.weights.get(vertex, Fraction(0))
        for vertex in vertices
    }
    largest = max(
        sorted(delta, key=lambda vertex: vertex.sort_key()), key=lambda vertex: abs(delta[vertex])
    )
    for tier in _convex_candidates(X, Y, delta):
        values = [
            (levy_difference(X, Y, candidate, covariance_form=False), candidate)
            for candidate in tier
        ]
        if not values:
            continue
        value, witness = min(values, key=lambda item: item[0])
        if value < 0:
            break
    verdict.holds = Holds.NO
    verdict.witness = {
        "kind": "convex_test_function",
        "function": witness.name,
        "levy_difference": value,
        "largest_discrepancy": {
            "vertex": largest.to_bitstring(),
            "pair": X.tree.pair_of(largest) or Y.tree.pair_of(largest),
            "delta": delta[largest],
        },
    }
    logger.info(f"Convex order fails, witness {witness.name} with Lévy difference {value}.")
    return verdict


def _coupling_step(B, pair):
    k, l = sorted(pair)
    if B.family != DistributionFamily.BINOMIAL:
        _mismatch(f"The coupling needs a binomial vector, got {B.family.value}.")
    tree = B.tree
    if k == l or (k, l) not in tree.nodes:
        error_message = f"The coupling runs on an off-diagonal pair of the tree, got {(k, l)}."
        logger.error(error_message)
        raise CouplingUnavailable(error_message)

    children = tree.children((k, l))
    grandchild, grandchild_pair = tree.grandchild((k, l))
    if not grandchild.is_origin() and grandchild_pair is None:
        error_message = f"The grandchild {grandchild} of {(k, l)} is not a node of the tree."
        logger.error(error_message)
        raise CouplingUnavailable(error_message, detail={"grandchild": grandchild.to_bitstring()})

    short = [p for p in ((k, l), grandchild_pair) if p is not None and B.counts[p] < 1]
    if short:
        error_message = f"The coupling at {(k, l)} needs a positive count at {short}."
        logger.error(error_message)
        raise CouplingUnavailable(error_message, detail={"pairs": [list(p) for p in short]})

    deltas = {(k, l): -1, children[0]: 1, children[1]: 1}
    if grandchild_pair is not None:
        deltas[grandchild_pair] = -1
    return CouplingStep((k, l), children, grandchild, grandchild_pair, deltas, B.p)


def couple_binomial_increment(B, pair):
    """The model A with Cov_A(k,l) = Cov_B(k,l) − pq and every other moment equal to B's,
    and a sampler drawing (X_A, X_B) on one probability space."""
    step = _coupling_step(B, pair)
    counts = dict(B.counts)
    for target, change in step.deltas.items():
        counts[target] += change
    A = B.with_counts(counts)
    return CoupledSampler(B, A, step), A


def four_atom_gap(phi, p, tree, pair, base=None):
    """E[φ(w + X_B part)] − E[φ(w + X_A part)] over the law of (U, V).

    The atoms (1,1) and (0,0) cancel, which leaves
    pq·[φ(w + 1_N) + φ(w + 1_{N∖{k,l}}) − φ(w + 1_{N∖{k}}) − φ(w + 1_{N∖{l}})], nonnegative
    for supermodular φ.
    """
    k, l = sorted(pair)
    p = Fraction(p)
    node = tree.node(k, l)
    base = np.zeros(tree.dim) if base is None else np.asarray(base, dtype=float)
    atoms = {
        (1, 1): p * p,
        (0, 0): (1 - p) * (1 - p),
        (1, 0): p * (1 - p),
        (0, 1): (1 - p) * p,
    }
    n_vec = np.array(node.to_vector())
    g_vec = np.array(node.remove(k).remove(l).to_vector())
    ck_vec = np.array(node.remove(k).to_vector())
    cl_vec = np.array(node.remove(l).to_vector())
    exact = getattr(phi, "exact", False)
    total = Fraction(0) if exact else 0.0
    for (u, v), probability in atoms.items():
        upper = float(phi(np.atleast_2d(base + u * n_vec + v * g_vec))[0])
        lower = float(phi(np.atleast_2d(base + u * ck_vec + v * cl_vec))[0])
        if exact:
            total += probability * (Fraction(upper) - Fraction(lower))
        else:
            total += float(probability) * (upper - lower)
    return total


def coupling_chain(B, pairs):
    """Couple along ``pairs`` in order; returns the successive A models."""
    models = []
    current = B
    for pair in pairs:
        _, current = couple_binomial_increment(current, pair)
        models.append(current)
    return models
