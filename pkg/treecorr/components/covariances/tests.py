import random
from fractions import Fraction
from unittest import mock

from django.test import SimpleTestCase

from treecorr.components.covariances.exceptions import (
    AsymmetricCovariance,
    InversionPathsDisagree,
    NegativeVariance,
)
from treecorr.components.covariances.models import (
    CovarianceSpec,
    DistributionFamily,
    VarianceDecomposition,
)
from treecorr.components.covariances.serializers import (
    FeasibilityReportSerializer,
    covariance_from_document,
    covariance_to_document,
    decomposition_from_document,
    decomposition_to_document,
)
from treecorr.components.covariances.utils import (
    comonotonic_decomposition,
    feasibility,
    forward_covariance,
    invert_covariance,
    invert_covariance_recursive,
    signed_expansion,
)
from treecorr.components.hypercube.exceptions import DimensionError
from treecorr.components.main.utils import read_fixture
from treecorr.components.trees.exceptions import HViolation
from treecorr.components.trees.utils import (
    build_pairwise,
    build_prior_structure,
    grow_random_tree,
    load_fixture_tree,
    random_named_tree,
)


def random_decomposition(tree, rng, allow_negative=False):
    low = -5 if allow_negative else 0
    return VarianceDecomposition(
        tree.dim,
        {
            pair: Fraction(rng.randint(low, 12), rng.randint(1, 6))
            for pair in tree.pairs()
        },
    )


def constant_decomposition(tree, value):
    return VarianceDecomposition(tree.dim, {pair: value for pair in tree.pairs()})


class CovarianceSpecTestCase(SimpleTestCase):
    def test_rejects_asymmetric_matrices(self):
        with self.assertRaises(AsymmetricCovariance):
            CovarianceSpec(2, ((1, 2), (3, 1)))
        with self.assertRaises(DimensionError):
            CovarianceSpec(2, ((1, 0),))

    def test_negative_variances_are_held(self):
        cov = CovarianceSpec(2, ((-1, 0), (0, 1)))
        self.assertEqual(cov.negative_variances(), [1])
        with self.assertRaises(NegativeVariance):
            cov.check_variances()
        CovarianceSpec(2, ((1, 0), (0, 1))).check_variances()

    def test_increment_touches_both_mirror_entries(self):
        cov = CovarianceSpec(2, ((1, 0), (0, 1))).with_increment(1, 2, "1/3")
        self.assertEqual(cov.cov(1, 2), Fraction(1, 3))
        self.assertEqual(cov.cov(2, 1), Fraction(1, 3))


class ForwardCovarianceTestCase(SimpleTestCase):
    def test_pairwise_formulas(self):
        tree = build_pairwise(4)
        rng = random.Random(1)
        dec = random_decomposition(tree, rng)
        cov = forward_covariance(tree, dec)
        for i in range(1, 5):
            for j in range(i + 1, 5):
                self.assertEqual(cov.cov(i, j), dec[(i, j)])
            expected = sum(
                (dec[pair] for pair in tree.pairs() if i in pair), Fraction(0)
            )
            self.assertEqual(cov.cov(i, i), expected)

    def test_golden_d5_all_ones(self):
        tree = load_fixture_tree("golden_d5")
        cov = forward_covariance(tree, constant_decomposition(tree, 1))
        self.assertEqual(cov.cov(2, 3), 6)
        self.assertEqual(cov.cov(3, 3), 7)

    def test_zero_decomposition(self):
        tree = build_prior_structure(4)
        cov = forward_covariance(tree, constant_decomposition(tree, 0))
        self.assertTrue(all(value == 0 for row in cov.entries for value in row))

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            forward_covariance(build_pairwise(3), constant_decomposition(build_pairwise(2), 1))
        with self.assertRaises(DimensionError):
            forward_covariance(
                build_pairwise(2), VarianceDecomposition(2, {(1, 1): 1, (2, 2): 1})
            )


class InvertCovarianceTestCase(SimpleTestCase):
    def test_roundtrip_on_random_trees(self):
        rng = random.Random(200)
        for _ in range(200):
            tree = random_named_tree(rng.randint(1, 8), rng)
            dec = random_decomposition(tree, rng)
            self.assertEqual(invert_covariance(tree, forward_covariance(tree, dec)), dec)

    def test_roundtrip_keeps_infeasible_decompositions(self):
        rng = random.Random(201)
        for _ in range(30):
            dim = rng.randint(2, 6)
            for tree in (random_named_tree(dim, rng), grow_random_tree(dim, rng)):
                dec = random_decomposition(tree, rng, allow_negative=True)
                self.assertEqual(invert_covariance(tree, forward_covariance(tree, dec)), dec)

    def test_negative_variance_roundtrip(self):
        tree = build_pairwise(2)
        dec = VarianceDecomposition(2, {(1, 1): -2, (2, 2): 1, (1, 2): 1})
        cov = forward_covariance(tree, dec)
        self.assertEqual(cov.cov(1, 1), -1)
        self.assertEqual(invert_covariance(tree, cov), dec)

    def test_any_symmetric_matrix_is_represented_exactly(self):
        rng = random.Random(202)
        for _ in range(30):
            tree = grow_random_tree(rng.randint(2, 6), rng)
            entries = [[Fraction(0)] * tree.dim for _ in range(tree.dim)]
            for i in range(tree.dim):
                for j in range(i, tree.dim):
                    value = Fraction(rng.randint(0, 20), rng.randint(1, 4))
                    entries[i][j] = entries[j][i] = value
            cov = CovarianceSpec(tree.dim, entries)
            self.assertEqual(
                forward_covariance(tree, invert_covariance(tree, cov)).entries, cov.entries
            )

    def test_single_coordinate(self):
        tree = build_pairwise(1)
        dec = invert_covariance(tree, CovarianceSpec(1, (("5/2",),)))
        self.assertEqual(dec[(1, 1)], Fraction(5, 2))

    def test_pairwise_inverse_formulas(self):
        tree = load_fixture_tree("pairwise4")
        cov = covariance_from_document(read_fixture("cov_pairwise4"))
        dec = invert_covariance(tree, cov)
        for i in range(1, 5):
            for j in range(i + 1, 5):
                self.assertEqual(dec[(i, j)], cov.cov(i, j))
        self.assertEqual(
            [dec[(i, i)] for i in range(1, 5)],
            [Fraction(3), Fraction(7, 2), Fraction(3, 2), Fraction(1, 2)],
        )
        self.assertTrue(dec.feasible)

    def test_moebius_and_recursive_paths_agree(self):
        rng = random.Random(203)
        for _ in range(50):
            dim = rng.randint(1, 7)
            for tree in (random_named_tree(dim, rng), grow_random_tree(dim, rng)):
                cov = forward_covariance(tree, random_decomposition(tree, rng, True))
                self.assertEqual(
                    invert_covariance(tree, cov), invert_covariance_recursive(tree, cov)
                )

    def test_disagreeing_paths_are_reported(self):
        tree = build_pairwise(2)
        cov = CovarianceSpec(2, ((2, 1), (1, 2)))
        with mock.patch(
            "treecorr.components.covariances.utils.invert_covariance_recursive",
            return_value=constant_decomposition(tree, 0),
        ):
            with self.assertRaises(InversionPathsDisagree):
                invert_covariance(tree, cov)

    def test_linearity(self):
        rng = random.Random(204)
        for _ in range(30):
            tree = random_named_tree(rng.randint(2, 6), rng)
            a = forward_covariance(tree, random_decomposition(tree, rng))
            b = forward_covariance(tree, random_decomposition(tree, rng))
            alpha = Fraction(rng.randint(0, 5), rng.randint(1, 3))
            beta = Fraction(rng.randint(0, 5), rng.randint(1, 3))
            combined = invert_covariance(tree, a.scaled(alpha) + b.scaled(beta))
            for pair in tree.pairs():
                self.assertEqual(
                    combined[pair],
                    alpha * invert_covariance(tree, a)[pair]
                    + beta * invert_covariance(tree, b)[pair],
                )

    def test_localized_increment(self):
        rng = random.Random(205)
        for _ in range(40):
            tree = random_named_tree(rng.randint(2, 7), rng)
            cov = forward_covariance(tree, random_decomposition(tree, rng))
            k, l = rng.choice(tree.off_diagonal_pairs())
            delta = Fraction(rng.randint(1, 9), rng.randint(1, 4))
            before = invert_covariance(tree, cov)
            after = invert_covariance(tree, cov.with_increment(k, l, delta))
            expected = {(k, l): delta}
            for child in tree.children((k, l)):
                expected[child] = -delta
            _, grandchild = tree.grandchild((k, l))
            if grandchild is not None:
                expected[grandchild] = delta
            for pair in tree.pairs():
                self.assertEqual(after[pair] - before[pair], expected.get(pair, 0))


class FeasibilityTestCase(SimpleTestCase):
    def setUp(self):
        self.tree = build_pairwise(3)

    def test_binomial_counts(self):
        dec = constant_decomposition(self.tree, Fraction(1, 4))
        report = feasibility(dec, DistributionFamily.BINOMIAL, p="1/2")
        self.assertTrue(report.feasible)
        self.assertEqual(set(report.counts.values()), {1})

    def test_negative_component_is_infeasible_everywhere(self):
        sigma2 = {pair: Fraction(1) for pair in self.tree.pairs()}
        sigma2[(1, 2)] = Fraction(-1, 4)
        dec = VarianceDecomposition(3, sigma2)
        for family, params in (
            ("binomial", {"p": "1/2"}),
            ("poisson", {}),
            ("gaussian", {}),
            ("gamma", {"scale": 2}),
        ):
            report = feasibility(dec, family, **params)
            self.assertFalse(report.feasible)
            self.assertEqual(report.negative_pairs, [(1, 2)])

    def test_integrality_defect(self):
        sigma2 = {pair: Fraction(1, 4) for pair in self.tree.pairs()}
        sigma2[(1, 2)] = Fraction(3, 10)
        dec = VarianceDecomposition(3, sigma2)
        self.assertTrue(feasibility(dec, "poisson").feasible)
        self.assertTrue(feasibility(dec, "gaussian").feasible)
        report = feasibility(dec, "binomial", p=Fraction(1, 2))
        self.assertFalse(report.feasible)
        self.assertEqual(report.integrality_defects, {(1, 2): Fraction(6, 5)})
        self.assertEqual(report.negative_pairs, [])

    def test_gamma_shapes_and_poisson_intensities(self):
        dec = constant_decomposition(self.tree, 8)
        self.assertEqual(set(feasibility(dec, "gamma", scale=2).shapes.values()), {2})
        self.assertEqual(set(feasibility(dec, "poisson").intensities.values()), {8})
        self.assertFalse(feasibility(dec, "gamma", scale=0).feasible)

    def test_degenerate_p(self):
        self.assertTrue(
            feasibility(constant_decomposition(self.tree, 0), "binomial", p=1).feasible
        )
        self.assertFalse(
            feasibility(constant_decomposition(self.tree, 1), "binomial", p=0).feasible
        )

    def test_report_serializer(self):
        sigma2 = {pair: Fraction(1, 4) for pair in self.tree.pairs()}
        sigma2[(1, 2)] = Fraction(3, 10)
        data = FeasibilityReportSerializer(
            feasibility(VarianceDecomposition(3, sigma2), "binomial", p="1/2")
        ).data
        self.assertEqual(data["family"], "binomial")
        self.assertEqual(data["p"], "1/2")
        self.assertIsNone(data["scale"])
        self.assertEqual(data["integrality_defects"], {"1,2": "6/5"})
        self.assertEqual(data["counts"]["1,3"], 1)


class ComonotonicAndExpansionTestCase(SimpleTestCase):
    def test_comonotonic_decomposition(self):
        tree = build_prior_structure(4)
        dec = comonotonic_decomposition(tree, 3)
        cov = forward_covariance(tree, dec)
        self.assertTrue(all(value == 3 for row in cov.entries for value in row))
        with self.assertRaises(HViolation):
            comonotonic_decomposition(build_pairwise(3), 1)

    def test_signed_expansion_pattern(self):
        tree = load_fixture_tree("golden_d5")
        expansion = signed_expansion(tree, (1, 4))
        self.assertEqual(
            {vertex.to_bitstring(): weight for vertex, weight in expansion.items()},
            {"11111": 1, "01111": -1, "11101": -1, "01101": 1},
        )
        pairwise = signed_expansion(build_pairwise(3), (1, 3))
        self.assertEqual(
            {vertex.to_bitstring(): weight for vertex, weight in pairwise.items()},
            {"101": 1, "100": -1, "001": -1},
        )
        leaf = signed_expansion(tree, (2, 2))
        self.assertEqual({v.to_bitstring(): w for v, w in leaf.items()}, {"01000": 1})


class DocumentTestCase(SimpleTestCase):
    def test_covariance_document(self):
        cov = covariance_from_document(read_fixture("cov_pairwise4"))
        self.assertEqual(cov.means[3], Fraction(7, 2))
        self.assertEqual(covariance_from_document(covariance_to_document(cov)), cov)

    def test_decomposition_document(self):
        tree = build_prior_structure(3)
        dec = random_decomposition(tree, random.Random(7), allow_negative=True)
        document = decomposition_to_document(dec)
        self.assertEqual(document["feasible"], dec.feasible)
        self.assertEqual(decomposition_from_document(document), dec)

    def test_decimal_and_float_input(self):
        cov = covariance_from_document(
            {"dim": 2, "matrix": [["0.5", 0.25], [0.25, 1]]}
        )
        self.assertEqual(cov.cov(1, 1), Fraction(1, 2))
        self.assertEqual(cov.cov(1, 2), Fraction(1, 4))
