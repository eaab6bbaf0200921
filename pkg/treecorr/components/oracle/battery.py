"""Seeded families of supermodular test functions.

Every member is supermodular on R^d: products and minima of two coordinates, orthant
indicators, nondecreasing convex functions of a nonnegative combination c·x, and
nonnegative mixtures of these. All of them are nondecreasing on the nonnegative orthant.
"""
import logging

import numpy as np

from treecorr.components.main.utils import StreamSeeds
from treecorr.components.oracle.models import SupermodularBattery
from treecorr.components.orderings.models import LatticeFunction

logger = logging.getLogger(__name__)


def product_function(i, j):
    def function(points):
        return points[:, i - 1] * points[:, j - 1]

    return LatticeFunction(f"x{i}*x{j}", function, exact=True, nondecreasing=True)


def minimum_function(i, j):
    def function(points):
        return np.minimum(points[:, i - 1], points[:, j - 1])

    return LatticeFunction(f"min(x{i},x{j})", function, exact=True, nondecreasing=True)


def orthant_function(thresholds):
    """1{x_i >= t_i for every i in thresholds}."""
    items = sorted(thresholds.items())

    def function(points):
        inside = np.ones(points.shape[0], dtype=bool)
        for index, threshold in items:
            inside &= points[:, index - 1] >= threshold
        return inside.astype(float)

    name = "1{" + ",".join(f"x{index}>={threshold}" for index, threshold in items) + "}"
    return LatticeFunction(name, function, exact=True, nondecreasing=True)


def _combination_name(weights):
    return "+".join(f"{w}*x{i + 1}" for i, w in enumerate(weights) if w)


def squared_sum_function(weights):
    weights = np.asarray(weights, dtype=float)

    def function(points):
        return (points @ weights) ** 2

    return LatticeFunction(
        f"({_combination_name(weights.astype(int))})^2", function, exact=True, nondecreasing=True
    )


def exp_scaled_function(weights, scale):
    """exp((c·x) / scale) - 1."""
    weights = np.asarray(weights, dtype=float)

    def function(points):
        return np.expm1((points @ weights) / scale)

    return LatticeFunction(
        f"exp(({_combination_name(weights.astype(int))})/{scale})-1",
        function,
        exact=False,
        nondecreasing=True,
    )


def positive_power_function(weights, threshold, power):
    """max(c·x - t, 0)^power."""
    weights = np.asarray(weights, dtype=float)

    def function(points):
        return np.maximum(points @ weights - threshold, 0.0) ** power

    return LatticeFunction(
        f"max({_combination_name(weights.astype(int))}-{threshold},0)^{power}",
        function,
        exact=True,
        nondecreasing=True,
    )


def mixture_function(parts):
    """Nonnegative integer mixture of (weight, member) parts."""

    def function(points):
        return sum(weight * member(points) for weight, member in parts)

    return LatticeFunction(
        "+".join(f"{weight}*[{member.name}]" for weight, member in parts),
        function,
        exact=all(member.exact for _, member in parts),
        nondecreasing=all(member.nondecreasing for _, member in parts),
    )


def _random_weights(generator, dim):
    while True:
        weights = generator.integers(0, 3, size=dim)
        if np.count_nonzero(weights) >= min(2, dim):
            return weights.tolist()


def build_battery(dim, seed=0, n_random=6):
    """All pairwise products and minima plus `n_random` members of each randomised kind."""
    if dim < 1:
        raise ValueError(f"The battery needs dim >= 1, got {dim}.")
    generator = StreamSeeds(seed).generator("battery")
    members = []
    for i in range(1, dim + 1):
        for j in range(i + 1, dim + 1):
            members.append(product_function(i, j))
            members.append(minimum_function(i, j))
    for _ in range(n_random):
        size = int(generator.integers(min(2, dim), dim + 1))
        indices = sorted(generator.choice(dim, size=size, replace=False).tolist())
        members.append(
            orthant_function({i + 1: int(generator.integers(1, 3)) for i in indices})
        )
        weights = _random_weights(generator, dim)
        members.append(squared_sum_function(weights))
        members.append(exp_scaled_function(weights, int(generator.integers(2, 9))))
        members.append(
            positive_power_function(
                _random_weights(generator, dim),
                int(generator.integers(0, 4)),
                int(generator.integers(2, 4)),
            )
        )
    for _ in range(n_random):
        chosen = generator.choice(len(members), size=min(3, len(members)), replace=False)
        members.append(
            mixture_function(
                [(int(generator.integers(1, 4)), members[index]) for index in sorted(chosen)]
            )
        )
    unique = {member.name: member for member in members}
    logger.debug(f"Built a battery of {len(unique)} functions on dimension {dim}.")
    return SupermodularBattery(dim, tuple(unique.values()), seed)


def self_test(battery, seed=0, n_pairs=500, high=6):
    """Names of members that fail supermodularity, or monotonicity when flagged
    nondecreasing, on random pairs of lattice points in {0..high}^d."""
    generator = StreamSeeds(seed).generator("battery/self-test")
    x = generator.integers(0, high + 1, size=(n_pairs, battery.dim)).astype(float)
    y = generator.integers(0, high + 1, size=(n_pairs, battery.dim)).astype(float)
    join, meet = np.maximum(x, y), np.minimum(x, y)
    failing = []
    for member in battery:
        fx, fy = member(x), member(y)
        scale = 1e-9 * (1 + np.abs(fx) + np.abs(fy))
        if np.any(member(join) + member(meet) < fx + fy - scale):
            failing.append(member.name)
            continue
        if member.nondecreasing and np.any(member(join) < fx - scale):
            failing.append(member.name)
    if failing:
        logger.warning(f"Battery members failing the self test: {failing}")
    return failing
