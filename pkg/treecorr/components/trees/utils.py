import logging
from collections import defaultdict

from treecorr.components.hypercube.exceptions import DimensionError
from treecorr.components.hypercube.models import HypercubeVertex
from treecorr.components.main.utils import read_fixture
from treecorr.components.trees.exceptions import HViolation
from treecorr.components.trees.models import DependencyTree, normalise_pair

logger = logging.getLogger(__name__)


def _violation(clause, pair, **detail):
    return {"clause": clause, "pair": list(pair), **detail}


def validate_tree(candidate, dim=None):
    """Check every clause of the tree hypothesis on ``candidate`` ({(k,l): vertex}).

    Returns the validated DependencyTree, or raises HViolation whose ``detail`` lists each
    violated clause: missing_pair, pair_out_of_range, wrong_leaf, label_not_member,
    duplicate_vertex and missing_child.
    """
    if not candidate:
        error_message = "An empty family is not a dependency tree."
        logger.error(error_message)
        raise DimensionError(error_message)

    dims = {vertex.dim for vertex in candidate.values()}
    if dim is None and len(dims) == 1:
        dim = next(iter(dims))
    if dim is None or dims - {dim}:
        error_message = f"Node vertices have mixed dimensions {sorted(dims)}."
        logger.error(error_message)
        raise DimensionError(error_message)

    violations = []
    nodes = {}
    for (k, l), vertex in candidate.items():
        pair = normalise_pair(k, l)
        if not (1 <= pair[0] and pair[1] <= dim):
            violations.append(_violation("pair_out_of_range", pair))
            continue
        nodes[pair] = vertex

    expected = [(k, l) for k in range(1, dim + 1) for l in range(k, dim + 1)]
    for pair in expected:
        if pair not in nodes:
            violations.append(_violation("missing_pair", pair))

    for i in range(1, dim + 1):
        leaf = nodes.get((i, i))
        if leaf is not None and leaf != HypercubeVertex.basis(dim, i):
            violations.append(
                _violation("wrong_leaf", (i, i), vertex=leaf.to_bitstring())
            )

    for (k, l), vertex in nodes.items():
        if k < l and (k not in vertex or l not in vertex):
            violations.append(
                _violation("label_not_member", (k, l), vertex=vertex.to_bitstring())
            )

    pairs_by_mask = defaultdict(list)
    for pair, vertex in nodes.items():
        pairs_by_mask[vertex.mask].append(pair)
    for mask, pairs in pairs_by_mask.items():
        if len(pairs) > 1:
            for pair in pairs:
                violations.append(
                    _violation(
                        "duplicate_vertex",
                        pair,
                        vertex=HypercubeVertex(dim, mask).to_bitstring(),
                        shared_with=[list(other) for other in pairs if other != pair],
                    )
                )

    for (k, l), vertex in sorted(nodes.items()):
        if k == l:
            continue
        for removed in (k, l):
            child = vertex.remove(removed)
            if child.mask not in pairs_by_mask:
                violations.append(
                    _violation(
                        "missing_child",
                        (k, l),
                        removed=removed,
                        child=child.to_bitstring(),
                    )
                )

    if violations:
        offending = sorted({tuple(violation["pair"]) for violation in violations})
        error_message = (
            f"The family violates the tree hypothesis at {len(offending)} pair(s): {offending}."
        )
        logger.error(error_message)
        raise HViolation(error_message, detail=violations)

    logger.debug(f"Validated a dependency tree of dimension {dim}.")
    return DependencyTree(dim, nodes)


def build_pairwise(dim):
    return validate_tree(
        {
            (k, l): HypercubeVertex.from_members(dim, {k, l})
            for k in range(1, dim + 1)
            for l in range(k, dim + 1)
        },
        dim,
    )


def build_prior_structure(dim):
    """node(i,j) = {1..i} ∪ {j} for i < j."""
    candidate = {(i, i): HypercubeVertex.basis(dim, i) for i in range(1, dim + 1)}
    for i in range(1, dim + 1):
        for j in range(i + 1, dim + 1):
            candidate[(i, j)] = HypercubeVertex.from_members(
                dim, set(range(1, i + 1)) | {j}
            )
    return validate_tree(candidate, dim)


def relabel(tree, permutation):
    """The tree with node(π k, π l) = π(node(k,l)); ``permutation`` maps i to π(i) and is
    either a dict on 1..dim or a sequence whose entry i - 1 is π(i)."""
    if not isinstance(permutation, dict):
        permutation = {index + 1: image for index, image in enumerate(permutation)}
    if sorted(permutation) != list(range(1, tree.dim + 1)) or sorted(
        permutation.values()
    ) != list(range(1, tree.dim + 1)):
        error_message = f"{permutation} is not a permutation of 1..{tree.dim}."
        logger.error(error_message)
        raise ValueError(error_message)
    return validate_tree(
        {
            normalise_pair(permutation[k], permutation[l]): node.permute(permutation)
            for (k, l), node in tree.nodes.items()
        },
        tree.dim,
    )


def load_fixture_tree(name):
    from treecorr.components.trees.serializers import tree_from_document

    return tree_from_document(read_fixture(name))


def random_named_tree(dim, rng):
    """A randomly relabelled copy of one of the named structures of dimension ``dim``.

    Draws from the pairwise and prior structures, and from the d=5 golden table when
    dim is 5. ``rng`` is a ``random.Random``.
    """
    builders = [build_pairwise, build_prior_structure]
    if dim == 5:
        builders.append(lambda _: load_fixture_tree("golden_d5"))
    tree = rng.choice(builders)(dim)
    permutation = list(range(1, dim + 1))
    rng.shuffle(permutation)
    return relabel(tree, permutation)


def grow_random_tree(dim, rng):
    """A random tree built bottom up from the leaves.

    Each step places an unplaced pair (k, l) on a vertex S containing k and l whose children
    S∖{k} and S∖{l} are already placed, so the family satisfies the tree hypothesis after
    every step. S = {k, l} is always a candidate, hence the growth never gets stuck.
    """
    placed = {HypercubeVertex.basis(dim, i).mask: (i, i) for i in range(1, dim + 1)}
    remaining = [(k, l) for k in range(1, dim + 1) for l in range(k + 1, dim + 1)]
    while remaining:
        options = []
        for k, l in remaining:
            for mask in sorted(placed):
                child = HypercubeVertex(dim, mask)
                if l not in child or k in child:
                    continue
                node = child.add(k)
                if node.mask not in placed and node.remove(l).mask in placed:
                    options.append(((k, l), node))
        pair, node = rng.choice(options)
        placed[node.mask] = pair
        remaining.remove(pair)
    return validate_tree(
        {pair: HypercubeVertex(dim, mask) for mask, pair in placed.items()}, dim
    )
