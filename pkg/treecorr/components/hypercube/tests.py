import random

from django.core.cache import cache
from django.test import SimpleTestCase

from treecorr.components.hypercube.exceptions import (
    DimensionError,
    OrderError,
    VertexIndexError,
)
from treecorr.components.hypercube.models import HypercubeVertex
from treecorr.components.hypercube.utils import (
    all_vertices,
    moebius,
    moebius_column,
    precedes,
    remove,
)
from treecorr.components.trees.utils import (
    build_pairwise,
    build_prior_structure,
    grow_random_tree,
    load_fixture_tree,
    random_named_tree,
)


def vertex(dim, *members):
    return HypercubeVertex.from_members(dim, members)


class HypercubeVertexTestCase(SimpleTestCase):
    def test_bitstring_puts_coordinate_one_first(self):
        e = HypercubeVertex.from_bitstring("11001")
        self.assertEqual(e.dim, 5)
        self.assertEqual(e.members, frozenset({1, 2, 5}))
        self.assertEqual(e.to_bitstring(), "11001")
        self.assertEqual(str(e), "11001")
        self.assertEqual(e.to_vector(), (1, 1, 0, 0, 1))

    def test_equality_is_set_equality(self):
        self.assertEqual(vertex(4, 1, 3), vertex(4, 3, 1))
        self.assertNotEqual(vertex(4, 1, 3), vertex(5, 1, 3))
        self.assertTrue(HypercubeVertex.origin(3).is_origin())
        self.assertEqual(HypercubeVertex.full(3).size, 3)

    def test_rejects_out_of_range(self):
        with self.assertRaises(VertexIndexError):
            vertex(3, 4)
        with self.assertRaises(IndexError):
            vertex(3, 0)
        with self.assertRaises(DimensionError):
            HypercubeVertex(0, 0)
        with self.assertRaises(DimensionError):
            HypercubeVertex(65, 0)
        with self.assertRaises(ValueError):
            HypercubeVertex.from_bitstring("10a1")

    def test_join_and_meet(self):
        x, y = vertex(5, 1, 2), vertex(5, 2, 5)
        self.assertEqual(x.join(y), vertex(5, 1, 2, 5))
        self.assertEqual(x.meet(y), vertex(5, 2))


class PrecedesTestCase(SimpleTestCase):
    def test_examples(self):
        self.assertTrue(precedes(vertex(5, 2, 3), vertex(5, 1, 2, 3, 5)))
        self.assertTrue(precedes(vertex(5, 1), vertex(5, 1)))
        self.assertFalse(precedes(vertex(5, 1, 4), vertex(5, 1, 2, 3, 5)))

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            precedes(vertex(4, 1), vertex(5, 1))

    def test_partial_order_axioms(self):
        rng = random.Random(20)
        for _ in range(300):
            dim = rng.randint(1, 10)
            x, y, z = (HypercubeVertex(dim, rng.randrange(1 << dim)) for _ in range(3))
            self.assertTrue(precedes(x, x))
            if precedes(x, y) and precedes(y, x):
                self.assertEqual(x, y)
            if precedes(x, y) and precedes(y, z):
                self.assertTrue(precedes(x, z))
            self.assertTrue(precedes(x.meet(y), x))
            self.assertTrue(precedes(x, x.join(y)))

    def test_strictly_precedes(self):
        self.assertFalse(vertex(3, 1).strictly_precedes(vertex(3, 1)))
        self.assertTrue(vertex(3, 1).strictly_precedes(vertex(3, 1, 2)))


class RemoveTestCase(SimpleTestCase):
    def test_examples(self):
        self.assertEqual(remove(vertex(5, 1, 2, 5), 1), vertex(5, 2, 5))
        self.assertEqual(remove(vertex(5, 2), 1), vertex(5, 2))
        self.assertEqual(
            remove(HypercubeVertex.from_bitstring("11001"), 1).to_bitstring(), "01001"
        )

    def test_index_out_of_range(self):
        with self.assertRaises(IndexError):
            remove(vertex(5, 2), 6)
        with self.assertRaises(IndexError):
            remove(vertex(5, 2), 0)

    def test_all_vertices(self):
        vertices = all_vertices(3)
        self.assertEqual(len(vertices), 8)
        self.assertEqual(len(set(vertices)), 8)
        with self.assertRaises(DimensionError):
            all_vertices(21)


class MoebiusTestCase(SimpleTestCase):
    def setUp(self):
        cache.clear()
        self.tree = load_fixture_tree("golden_d5")

    def test_diagonal_is_one(self):
        family = self.tree.vertices()
        for node in family:
            self.assertEqual(moebius(node, node, family), 1)
        x = vertex(4, 1, 3)
        self.assertEqual(moebius(x, x, []), 1)

    def test_children_and_grandchild(self):
        family = self.tree.vertices()
        e = self.tree.node(1, 4)
        self.assertEqual(moebius(e, e.remove(1), family), -1)
        self.assertEqual(moebius(e, e.remove(4), family), -1)
        self.assertEqual(moebius(e, e.remove(1).remove(4), family), 1)
        self.assertEqual(moebius(e, self.tree.node(2, 3), family), 0)
        self.assertEqual(moebius(e, self.tree.node(3, 4), family), 0)
        self.assertEqual(moebius(e, self.tree.node(1, 1), family), 0)

    def test_order_error(self):
        with self.assertRaises(OrderError):
            moebius(vertex(3, 1), vertex(3, 1, 2), [])

    def test_full_boolean_lattice(self):
        # On the whole cube μ(x, y) = (-1)^{|x| - |y|}.
        vertices = all_vertices(4)
        x = HypercubeVertex.full(4)
        for y in vertices:
            self.assertEqual(moebius(x, y, vertices), (-1) ** (x.size - y.size))

    def test_defining_identity_on_trees(self):
        rng = random.Random(4)
        for _ in range(40):
            tree = rng.choice((random_named_tree, grow_random_tree))(rng.randint(1, 6), rng)
            family = tree.vertices()
            for x in family:
                column = moebius_column(x, family)
                for y in family:
                    if not precedes(y, x):
                        continue
                    total = sum(
                        value for z, value in column.items() if precedes(y, z)
                    )
                    self.assertEqual(total, 1 if x == y else 0)

    def test_values_follow_the_four_term_pattern(self):
        rng = random.Random(5)
        for _ in range(40):
            tree = random_named_tree(rng.randint(2, 7), rng)
            family = tree.vertices()
            for k, l in tree.off_diagonal_pairs():
                x = tree.node(k, l)
                expected = {x: 1, x.remove(k): -1, x.remove(l): -1}
                grandchild = x.remove(k).remove(l)
                if not grandchild.is_origin():
                    expected[grandchild] = 1
                column = moebius_column(x, family)
                for y, value in column.items():
                    self.assertIn(value, (-1, 0, 1))
                    self.assertEqual(value, expected.get(y, 0))

    def test_column_is_cached(self):
        tree = build_prior_structure(5)
        x = tree.node(4, 5)
        first = moebius_column(x, tree.vertices())
        second = moebius_column(x, reversed(tree.vertices()))
        self.assertEqual(first, second)
        pairwise = build_pairwise(3)
        self.assertEqual(
            moebius_column(pairwise.node(1, 2), pairwise.vertices()),
            {vertex(3, 1, 2): 1, vertex(3, 1): -1, vertex(3, 2): -1},
        )
