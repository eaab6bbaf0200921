"""
The dependency trees: families (e_{k,l})_{1≤k≤l≤d} of hypercube vertices in which every
node e_{k,l}, k < l, has its two children e_{k,l}∖{k} and e_{k,l}∖{l} in the family and
the leaves are the basis vertices e_i.

A DependencyTree is only ever built by ``treecorr.components.trees.utils.validate_tree``
(or a builder that goes through it), so every instance satisfies the hypothesis.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from types import MappingProxyType

import numpy as np

from treecorr.components.hypercube.exceptions import VertexIndexError
from treecorr.components.hypercube.models import HypercubeVertex
from treecorr.components.main.utils import format_pair

logger = logging.getLogger(__name__)


def normalise_pair(k, l):
    return (k, l) if k <= l else (l, k)


@dataclass(frozen=True)
class MembershipTable:
    """Row i lists the pairs (k,l) with i ∈ node(k,l), so X_i = Σ_{row i} X_{k,l}."""

    dim: int
    rows: tuple

    def row(self, index):
        if not 1 <= index <= self.dim:
            raise VertexIndexError(f"Index {index} is outside 1..{self.dim}.")
        return self.rows[index - 1]


class DependencyTree:
    def __init__(self, dim, nodes):
        self.dim = dim
        self._nodes = MappingProxyType(dict(sorted(nodes.items())))
        self._pairs_by_mask = {vertex.mask: pair for pair, vertex in self._nodes.items()}

    def __eq__(self, other):
        if not isinstance(other, DependencyTree):
            return NotImplemented
        return self.dim == other.dim and dict(self._nodes) == dict(other._nodes)

    def __hash__(self):
        return hash((self.dim, tuple((pair, v.mask) for pair, v in self._nodes.items())))

    def __repr__(self):
        return f"DependencyTree(dim={self.dim}, nodes={len(self._nodes)})"

    @property
    def nodes(self):
        return self._nodes

    def pairs(self):
        return list(self._nodes.keys())

    def off_diagonal_pairs(self):
        return [pair for pair in self._nodes if pair[0] < pair[1]]

    def node(self, k, l):
        return self._nodes[normalise_pair(k, l)]

    def vertices(self):
        return list(self._nodes.values())

    def pair_of(self, vertex):
        """The pair whose node is ``vertex``, None if the vertex is not a node."""
        if vertex.dim != self.dim:
            return None
        return self._pairs_by_mask.get(vertex.mask)

    def children(self, pair):
        """The pairs of node(k,l)∖{k} and node(k,l)∖{l}, in that order."""
        k, l = pair
        node = self.node(k, l)
        return self.pair_of(node.remove(k)), self.pair_of(node.remove(l))

    def grandchild(self, pair):
        """The vertex node(k,l)∖{k,l} and its pair (None if empty or not a node)."""
        k, l = pair
        vertex = self.node(k, l).remove(k).remove(l)
        if vertex.is_origin():
            return vertex, None
        return vertex, self.pair_of(vertex)

    def nodes_above(self, vertex):
        return [pair for pair, node in self._nodes.items() if vertex.precedes(node)]

    def root_pairs(self):
        full = HypercubeVertex.full(self.dim)
        return [pair for pair, node in self._nodes.items() if node == full]

    def height(self):
        """Longest chain of strict inclusions among the nodes, counted in nodes."""
        ordered = sorted(self._nodes.values(), key=lambda vertex: vertex.size)
        depth = {}
        for vertex in ordered:
            depth[vertex.mask] = 1 + max(
                (
                    depth[other.mask]
                    for other in ordered
                    if other.mask in depth and other.strictly_precedes(vertex)
                ),
                default=0,
            )
        return max(depth.values())

    @cached_property
    def membership(self):
        rows = tuple(
            frozenset(pair for pair, node in self._nodes.items() if index in node)
            for index in range(1, self.dim + 1)
        )
        return MembershipTable(self.dim, rows)

    @cached_property
    def incidence(self):
        """0/1 matrix with one row per pair (in ``pairs()`` order) and one column per
        coordinate; a row of component draws times this matrix is the summed vector."""
        return np.array(
            [node.to_vector() for node in self._nodes.values()], dtype=np.int64
        ).reshape(len(self._nodes), self.dim)

    def to_document(self):
        return {
            "dim": self.dim,
            "nodes": {
                format_pair(pair): node.to_bitstring()
                for pair, node in self._nodes.items()
            },
        }
