import random

from django.test import SimpleTestCase
from rest_framework.exceptions import ValidationError

from treecorr.components.hypercube.exceptions import DimensionError
from treecorr.components.hypercube.models import HypercubeVertex
from treecorr.components.trees.exceptions import HViolation
from treecorr.components.trees.serializers import tree_from_document
from treecorr.components.trees.utils import (
    build_pairwise,
    build_prior_structure,
    grow_random_tree,
    load_fixture_tree,
    random_named_tree,
    relabel,
    validate_tree,
)

GOLDEN_D5_TABLE = {
    (1, 2): "11001",
    (1, 3): "11101",
    (1, 4): "11111",
    (1, 5): "10001",
    (2, 3): "01100",
    (2, 4): "01010",
    (2, 5): "01001",
    (3, 4): "01110",
    (3, 5): "01101",
    (4, 5): "01111",
}


def golden_candidate(**overrides):
    candidate = {
        pair: HypercubeVertex.from_bitstring(bits) for pair, bits in GOLDEN_D5_TABLE.items()
    }
    for i in range(1, 6):
        candidate[(i, i)] = HypercubeVertex.basis(5, i)
    for key, bits in overrides.items():
        k, l = int(key[1]), int(key[2])
        candidate[(k, l)] = HypercubeVertex.from_bitstring(bits)
    return candidate


class ValidateTreeTestCase(SimpleTestCase):
    def test_golden_d5_table_is_valid(self):
        tree = validate_tree(golden_candidate())
        self.assertEqual(tree.dim, 5)
        self.assertEqual(len(tree.pairs()), 15)
        self.assertEqual(tree, load_fixture_tree("golden_d5"))
        self.assertEqual(tree.root_pairs(), [(1, 4)])

    def test_mutated_table_is_rejected(self):
        with self.assertRaises(HViolation) as raised:
            validate_tree(golden_candidate(e23="11100"))
        offending = raised.exception.offending_pairs
        self.assertIn((3, 4), offending)
        self.assertIn((3, 5), offending)
        self.assertEqual(raised.exception.code, "h_violation")
        self.assertEqual(raised.exception.exit_code, 1)
        clauses = {violation["clause"] for violation in raised.exception.detail}
        self.assertEqual(clauses, {"missing_child"})

    def test_reports_every_clause(self):
        candidate = golden_candidate()
        del candidate[(2, 4)]
        candidate[(1, 1)] = HypercubeVertex.from_bitstring("11000")
        candidate[(3, 5)] = HypercubeVertex.from_bitstring("01110")
        with self.assertRaises(HViolation) as raised:
            validate_tree(candidate)
        clauses = {
            (violation["clause"], tuple(violation["pair"]))
            for violation in raised.exception.detail
        }
        self.assertIn(("missing_pair", (2, 4)), clauses)
        self.assertIn(("wrong_leaf", (1, 1)), clauses)
        self.assertIn(("duplicate_vertex", (3, 5)), clauses)
        self.assertIn(("duplicate_vertex", (3, 4)), clauses)

    def test_pair_out_of_range(self):
        candidate = {pair: node for pair, node in build_pairwise(2).nodes.items()}
        candidate[(2, 3)] = HypercubeVertex.from_bitstring("11")
        with self.assertRaises(HViolation) as raised:
            validate_tree(candidate)
        self.assertEqual(raised.exception.offending_pairs, [(2, 3)])

    def test_mixed_dimensions(self):
        candidate = dict(build_pairwise(2).nodes)
        candidate[(1, 2)] = HypercubeVertex.from_bitstring("110")
        with self.assertRaises(DimensionError):
            validate_tree(candidate)
        with self.assertRaises(DimensionError):
            validate_tree({})


class BuildersTestCase(SimpleTestCase):
    def test_pairwise(self):
        tree = build_pairwise(4)
        self.assertEqual(len(tree.pairs()), 10)
        for k, l in tree.pairs():
            self.assertEqual(tree.node(k, l).members, frozenset({k, l}))
        self.assertEqual(build_pairwise(1).pairs(), [(1, 1)])
        self.assertEqual(
            {node.to_bitstring() for node in build_pairwise(2).vertices()},
            {"10", "01", "11"},
        )

    def test_prior_structure(self):
        tree = build_prior_structure(3)
        self.assertEqual(tree.node(1, 2).members, frozenset({1, 2}))
        self.assertEqual(tree.node(1, 3).members, frozenset({1, 3}))
        self.assertEqual(tree.node(2, 3).members, frozenset({1, 2, 3}))
        self.assertEqual(build_prior_structure(1).pairs(), [(1, 1)])
        self.assertEqual(build_prior_structure(2), build_pairwise(2))

    def test_builders_pass_validation(self):
        for dim in range(1, 13):
            for tree in (build_pairwise(dim), build_prior_structure(dim)):
                self.assertEqual(validate_tree(dict(tree.nodes), dim), tree)
                self.assertLessEqual(tree.height(), dim)

    def test_grown_trees_pass_validation(self):
        rng = random.Random(14)
        for _ in range(40):
            dim = rng.randint(1, 7)
            tree = grow_random_tree(dim, rng)
            self.assertEqual(validate_tree(dict(tree.nodes), dim), tree)
            self.assertEqual(len(tree.pairs()), dim * (dim + 1) // 2)
            self.assertLessEqual(tree.height(), dim)

    def test_grown_trees_leave_the_named_shapes(self):
        def sizes(tree):
            return sorted(node.size for node in tree.nodes.values())

        named = {tuple(sizes(build_pairwise(5))), tuple(sizes(build_prior_structure(5)))}
        rng = random.Random(15)
        grown = {tuple(sizes(grow_random_tree(5, rng))) for _ in range(40)}
        self.assertTrue(grown - named)

    def test_relabel(self):
        tree = load_fixture_tree("golden_d5")
        image = relabel(tree, [2, 3, 4, 5, 1])
        self.assertEqual(image.node(2, 5), tree.node(1, 4).permute({1: 2, 2: 3, 3: 4, 4: 5, 5: 1}))
        self.assertEqual(relabel(tree, range(1, 6)), tree)
        with self.assertRaises(ValueError):
            relabel(tree, [1, 1, 2, 3, 4])


class MembershipTestCase(SimpleTestCase):
    def test_golden_d5_rows(self):
        tree = load_fixture_tree("golden_d5")
        rows = {
            1: {(1, 1), (1, 2), (1, 3), (1, 4), (1, 5)},
            2: {
                (2, 2), (1, 2), (1, 3), (1, 4), (2, 3),
                (2, 4), (2, 5), (3, 4), (3, 5), (4, 5),
            },
            3: {(3, 3), (1, 3), (1, 4), (2, 3), (3, 4), (3, 5), (4, 5)},
            4: {(4, 4), (1, 4), (2, 4), (3, 4), (4, 5)},
            5: {(5, 5), (1, 2), (1, 3), (1, 4), (1, 5), (2, 5), (3, 5), (4, 5)},
        }
        for i, row in rows.items():
            self.assertEqual(tree.membership.row(i), row, f"X_{i}")

    def test_pairwise_row_two(self):
        self.assertEqual(
            build_pairwise(4).membership.row(2), {(1, 2), (2, 2), (2, 3), (2, 4)}
        )

    def test_rows_match_vertices(self):
        rng = random.Random(11)
        for _ in range(30):
            tree = rng.choice((random_named_tree, grow_random_tree))(rng.randint(1, 7), rng)
            for i in range(1, tree.dim + 1):
                row = tree.membership.row(i)
                self.assertIn((i, i), row)
                for pair, node in tree.nodes.items():
                    self.assertEqual(pair in row, i in node)

    def test_incidence_matrix(self):
        tree = build_pairwise(3)
        incidence = tree.incidence
        self.assertEqual(incidence.shape, (6, 3))
        self.assertEqual(incidence[tree.pairs().index((1, 3))].tolist(), [1, 0, 1])


class TreeStructureTestCase(SimpleTestCase):
    def test_children_and_grandchildren(self):
        tree = load_fixture_tree("golden_d5")
        self.assertEqual(tree.children((1, 4)), ((4, 5), (1, 3)))
        self.assertEqual(tree.grandchild((1, 4))[1], (3, 5))
        self.assertEqual(tree.grandchild((1, 5)), (HypercubeVertex.origin(5), None))

    def test_grandchildren_of_named_families_are_nodes_or_empty(self):
        rng = random.Random(12)
        for _ in range(30):
            tree = random_named_tree(rng.randint(2, 8), rng)
            for pair in tree.off_diagonal_pairs():
                self.assertNotIn(None, tree.children(pair))
                vertex, grandchild = tree.grandchild(pair)
                self.assertTrue(vertex.is_origin() or grandchild is not None)

    def test_nodes_containing_a_pair_lie_above_its_node(self):
        rng = random.Random(13)
        for _ in range(30):
            tree = random_named_tree(rng.randint(2, 7), rng)
            for i, j in tree.pairs():
                containing = {
                    pair for pair, node in tree.nodes.items() if i in node and j in node
                }
                self.assertEqual(containing, set(tree.nodes_above(tree.node(i, j))))


class TreeDocumentTestCase(SimpleTestCase):
    def test_round_trip(self):
        tree = build_prior_structure(4)
        self.assertEqual(tree_from_document(tree.to_document()), tree)

    def test_leaves_may_be_omitted(self):
        tree = tree_from_document({"dim": 2, "nodes": {"1,2": "11"}})
        self.assertEqual(tree, build_pairwise(2))

    def test_bad_bitstring(self):
        with self.assertRaises(ValidationError):
            tree_from_document({"dim": 2, "nodes": {"1,2": "1x"}})
        with self.assertRaises(ValidationError):
            tree_from_document({"dim": 2, "nodes": {"1,2": "111"}})
        with self.assertRaises(ValidationError):
            tree_from_document({"dim": 2, "nodes": {"1;2": "11"}})
