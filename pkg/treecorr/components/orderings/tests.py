import random
from fractions import Fraction
from unittest import mock

import numpy as np
from django.test import SimpleTestCase

from treecorr.components.hypercube.exceptions import DimensionError
from treecorr.components.hypercube.models import HypercubeVertex
from treecorr.components.hypercube.utils import all_vertices
from treecorr.components.oracle.battery import build_battery, product_function
from treecorr.components.oracle.utils import coupled_battery_estimate
from treecorr.components.orderings.exceptions import (
    CouplingUnavailable,
    FamilyMismatch,
    Inconsistency,
    MeanMismatch,
    MissingVertex,
    UnnormalisedTestFunction,
)
from treecorr.components.orderings.models import Holds, LatticeFunction, Relation
from treecorr.components.orderings.serializers import (
    CouplingStepSerializer,
    LevyDecompositionSerializer,
    OrderingVerdictSerializer,
)
from treecorr.components.orderings.utils import (
    check_convex,
    check_increasing_supermodular,
    check_supermodular,
    convex_pair_function,
    couple_binomial_increment,
    coupling_chain,
    four_atom_gap,
    levy_decomposition,
    levy_difference,
    levy_functional,
)
from treecorr.components.trees.utils import (
    build_pairwise,
    build_prior_structure,
    load_fixture_tree,
    random_named_tree,
)
from treecorr.components.vectors.models import (
    BinomialModel,
    GammaModel,
    GaussianModel,
    IndependentSum,
    PoissonModel,
)
from treecorr.components.vectors.utils import (
    covariance_standard_errors,
    empirical_covariance,
)


def pairwise_poisson(a11, a22, a12):
    return PoissonModel(build_pairwise(2), {(1, 1): a11, (2, 2): a22, (1, 2): a12})


def increment(tree, intensities, pair, delta):
    """+δ at node(pair) and at its grandchild, −δ at both children."""
    moved = dict(intensities)
    moved[pair] += delta
    for child in tree.children(pair):
        moved[child] -= delta
    _, grandchild_pair = tree.grandchild(pair)
    if grandchild_pair is not None:
        moved[grandchild_pair] += delta
    return moved


def random_ordered_poisson_pair(rng, dim, steps=3):
    """(X, Y) on one tree with equal means and Cov_X ≤ Cov_Y entrywise."""
    tree = random_named_tree(dim, rng)
    intensities = {pair: Fraction(rng.randint(2, 8), 4) for pair in tree.pairs()}
    moved = dict(intensities)
    for _ in range(steps):
        pair = rng.choice(tree.off_diagonal_pairs())
        room = min(moved[child] for child in tree.children(pair))
        if room > 0:
            moved = increment(tree, moved, pair, room * Fraction(rng.randint(1, 4), 4))
    return PoissonModel(tree, intensities), PoissonModel(tree, moved)


def random_binomial_with_room(rng, dim, p):
    tree = random_named_tree(dim, rng)
    pair = rng.choice(tree.off_diagonal_pairs())
    counts = {q: rng.randint(0, 3) for q in tree.pairs()}
    counts[pair] = max(counts[pair], 1)
    _, grandchild_pair = tree.grandchild(pair)
    if grandchild_pair is not None:
        counts[grandchild_pair] = max(counts[grandchild_pair], 1)
    return BinomialModel(tree, p, counts), pair


class CheckSupermodularTestCase(SimpleTestCase):
    def setUp(self):
        self.independent = pairwise_poisson(1, 1, 0)
        self.common = pairwise_poisson(0, 0, 1)

    def test_reflexive(self):
        verdict = check_supermodular(self.independent, self.independent)
        self.assertEqual(verdict.holds, Holds.YES)
        self.assertIsNone(verdict.witness)

    def test_common_shock_dominates(self):
        verdict = check_supermodular(self.independent, self.common)
        self.assertEqual(verdict.relation, Relation.SUPERMODULAR)
        self.assertEqual(verdict.holds, Holds.YES)
        self.assertEqual([c.key for c in verdict.means], [1, 2])
        self.assertEqual([(c.key, c.x, c.y) for c in verdict.covariances], [((1, 2), 0, 1)])

    def test_mean_witness(self):
        verdict = check_supermodular(self.independent, pairwise_poisson(2, 1, 0))
        self.assertEqual(verdict.holds, Holds.NO)
        self.assertEqual(verdict.witness, {"kind": "mean", "index": 1})
        data = OrderingVerdictSerializer(verdict).data
        self.assertEqual(data["holds"], "no")
        self.assertEqual(data["witness"], {"kind": "mean", "index": 1})

    def test_covariance_witness(self):
        verdict = check_supermodular(self.common, self.independent)
        self.assertEqual(verdict.holds, Holds.NO)
        self.assertEqual(verdict.witness, {"kind": "covariance", "pair": (1, 2)})
        data = OrderingVerdictSerializer(verdict).data
        self.assertEqual(data["witness"]["pair"], "1,2")
        self.assertEqual(data["covariances"][0], {"key": "1,2", "x": "1", "y": "0", "ok": False})

    def test_gaussian_variance_witness(self):
        tree = build_pairwise(2)
        x_model = GaussianModel(tree, {(1, 1): 1, (2, 2): 1, (1, 2): 0})
        y_model = GaussianModel(tree, {(1, 1): 2, (2, 2): 1, (1, 2): 0})
        verdict = check_supermodular(x_model, y_model)
        self.assertEqual(verdict.witness, {"kind": "variance", "pair": (1, 1)})

    def test_transitive(self):
        chain = [pairwise_poisson(2, 2, 0), pairwise_poisson(1, 1, 1), pairwise_poisson(0, 0, 2)]
        self.assertEqual(check_supermodular(chain[0], chain[1]).holds, Holds.YES)
        self.assertEqual(check_supermodular(chain[1], chain[2]).holds, Holds.YES)
        self.assertEqual(check_supermodular(chain[0], chain[2]).holds, Holds.YES)

    def test_random_ordered_pairs(self):
        rng = random.Random(3)
        for _ in range(30):
            x_model, y_model = random_ordered_poisson_pair(rng, rng.randint(2, 5))
            self.assertEqual(check_supermodular(x_model, y_model).holds, Holds.YES)
            if x_model != y_model:
                self.assertEqual(check_supermodular(y_model, x_model).holds, Holds.NO)

    def test_binomial(self):
        tree = build_pairwise(3)
        b_model = BinomialModel(tree, Fraction(1, 3), {pair: 2 for pair in tree.pairs()})
        _, a_model = couple_binomial_increment(b_model, (1, 2))
        self.assertEqual(check_supermodular(a_model, b_model).holds, Holds.YES)
        self.assertEqual(check_supermodular(b_model, a_model).holds, Holds.NO)

    def test_family_errors(self):
        tree = build_pairwise(2)
        binomial = BinomialModel(tree, Fraction(1, 2), {(1, 1): 1, (2, 2): 1, (1, 2): 1})
        with self.assertRaises(FamilyMismatch):
            check_supermodular(self.independent, binomial)
        with self.assertRaises(FamilyMismatch):
            check_supermodular(binomial, binomial.__class__(tree, Fraction(1, 3), binomial.counts))
        gamma = GammaModel(tree, 1, {(1, 1): 1, (2, 2): 1, (1, 2): 1})
        tree3 = build_pairwise(3)
        with self.assertRaises(FamilyMismatch):
            check_supermodular(gamma, gamma)
        with self.assertRaises(DimensionError):
            check_supermodular(self.independent, PoissonModel(tree3, {pair: 1 for pair in tree3.pairs()}))

    def test_independent_sums(self):
        tree = build_pairwise(2)
        gaussian = GaussianModel(tree, {(1, 1): 1, (2, 2): 1, (1, 2): 1})
        flatter = GaussianModel(tree, {(1, 1): 2, (2, 2): 2, (1, 2): 0})
        x_sum = IndependentSum((self.independent, gaussian))
        self.assertEqual(
            check_supermodular(x_sum, IndependentSum((self.common, gaussian))).holds, Holds.YES
        )
        verdict = check_supermodular(x_sum, IndependentSum((self.common, flatter)))
        self.assertEqual(verdict.holds, Holds.NOT_DECIDED)
        self.assertIn("gaussian", verdict.notes[0])
        with self.assertRaises(FamilyMismatch):
            check_supermodular(x_sum, IndependentSum((self.common,)))


class CheckIncreasingSupermodularTestCase(SimpleTestCase):
    def test_larger_means(self):
        verdict = check_increasing_supermodular(pairwise_poisson(1, 1, 0), pairwise_poisson(1, 1, 1))
        self.assertEqual(verdict.relation, Relation.INCREASING_SUPERMODULAR)
        self.assertEqual(verdict.holds, Holds.YES)
        self.assertEqual(verdict.notes, [])

    def test_smaller_means(self):
        verdict = check_increasing_supermodular(pairwise_poisson(3, 1, 0), pairwise_poisson(1, 1, 1))
        self.assertEqual(verdict.holds, Holds.NO)
        self.assertEqual(verdict.witness, {"kind": "mean", "index": 1})

    def test_equal_means_match_supermodular(self):
        rng = random.Random(8)
        for _ in range(20):
            x_model, y_model = random_ordered_poisson_pair(rng, rng.randint(2, 4))
            for first, second in ((x_model, y_model), (y_model, x_model)):
                self.assertEqual(
                    check_increasing_supermodular(first, second).holds,
                    check_supermodular(first, second).holds,
                )

    def test_caveat_outside_poisson(self):
        tree = build_pairwise(2)
        x_model = BinomialModel(tree, Fraction(1, 2), {(1, 1): 1, (2, 2): 1, (1, 2): 0})
        y_model = BinomialModel(tree, Fraction(1, 2), {(1, 1): 1, (2, 2): 1, (1, 2): 1})
        verdict = check_increasing_supermodular(x_model, y_model)
        self.assertEqual(verdict.holds, Holds.YES)
        self.assertEqual(len(verdict.notes), 1)


class CheckConvexTestCase(SimpleTestCase):
    def test_identical(self):
        verdict = check_convex(pairwise_poisson(1, 2, 3), pairwise_poisson(1, 2, 3))
        self.assertEqual(verdict.relation, Relation.CONVEX)
        self.assertEqual(verdict.holds, Holds.YES)

    def test_covariance_increase(self):
        verdict = check_convex(pairwise_poisson(1, 1, 0), pairwise_poisson(0, 0, 1))
        self.assertEqual(verdict.holds, Holds.NO)
        self.assertEqual(verdict.witness["function"], "phi_1,2")
        self.assertEqual(verdict.witness["levy_difference"], -1)
        self.assertEqual(verdict.witness["largest_discrepancy"]["delta"] ** 2, 1)

    def test_covariance_decrease(self):
        verdict = check_convex(pairwise_poisson(0, 0, 1), pairwise_poisson(1, 1, 0))
        self.assertEqual(verdict.holds, Holds.NO)
        self.assertEqual(verdict.witness["function"], "square_1,2")
        self.assertEqual(verdict.witness["levy_difference"], -2)

    def test_always_witnessed(self):
        rng = random.Random(4)
        for _ in range(30):
            dim = rng.randint(2, 5)
            tree = random_named_tree(dim, rng)
            x_model = PoissonModel(tree, {pair: rng.randint(0, 2) for pair in tree.pairs()})
            y_model = PoissonModel(tree, {pair: rng.randint(0, 2) for pair in tree.pairs()})
            verdict = check_convex(x_model, y_model)
            if x_model.levy_measure() == y_model.levy_measure():
                self.assertEqual(verdict.holds, Holds.YES)
            else:
                self.assertEqual(verdict.holds, Holds.NO)
                self.assertLess(verdict.witness["levy_difference"], 0)

    def test_single_covariance_increase_is_detected(self):
        rng = random.Random(5)
        for _ in range(50):
            dim = rng.randint(2, 5)
            tree = random_named_tree(dim, rng)
            pair = rng.choice(tree.off_diagonal_pairs())
            intensities = {q: Fraction(rng.randint(0, 6), rng.randint(1, 3)) for q in tree.pairs()}
            gap = Fraction(rng.randint(1, 5), rng.randint(1, 4))
            for child in tree.children(pair):
                intensities[child] += gap
            x_model = PoissonModel(tree, intensities)
            y_model = PoissonModel(tree, increment(tree, intensities, pair, gap))
            phi = convex_pair_function(tree, *pair)
            self.assertEqual(levy_difference(x_model, y_model, phi), -gap)
            self.assertEqual(check_convex(x_model, y_model).holds, Holds.NO)
            self.assertEqual(check_convex(x_model, x_model).holds, Holds.YES)

    def test_needs_poisson(self):
        tree = build_pairwise(2)
        binomial = BinomialModel(tree, Fraction(1, 2), {(1, 1): 1, (2, 2): 1, (1, 2): 1})
        with self.assertRaises(FamilyMismatch):
            check_convex(binomial, binomial)


class LevyFunctionalTestCase(SimpleTestCase):
    def setUp(self):
        self.tree = load_fixture_tree("golden_d5")
        rng = random.Random(6)
        self.model = PoissonModel(
            self.tree, {pair: Fraction(rng.randint(0, 9), 3) for pair in self.tree.pairs()}
        )

    def test_constant_function_gives_total_mass(self):
        def phi(vertex):
            return 0 if vertex.is_origin() else 1

        self.assertEqual(levy_functional(phi, self.model), self.model.levy_measure().total_mass)

    def test_coordinate_sum_gives_means(self):
        phi = LatticeFunction("sum", lambda points: points.sum(axis=1))
        self.assertEqual(levy_functional(phi, self.model), sum(self.model.coordinate_means()))

    def test_pair_function(self):
        phi = convex_pair_function(self.tree, 1, 4)
        expected = sum(
            weight * phi.at(vertex) for vertex, weight in self.model.levy_measure().weights.items()
        )
        self.assertEqual(levy_functional(phi, self.model), expected)

    def test_two_paths_agree_on_random_instances(self):
        rng = random.Random(7)
        for _ in range(1000):
            dim = rng.randint(1, 6)
            tree = random_named_tree(dim, rng)
            model = PoissonModel(
                tree, {pair: Fraction(rng.randint(0, 5), rng.randint(1, 4)) for pair in tree.pairs()}
            )
            table = {vertex.to_bitstring(): rng.randint(-9, 9) for vertex in all_vertices(dim)}
            table["0" * dim] = 0
            expected = sum(
                weight * table[vertex.to_bitstring()]
                for vertex, weight in model.levy_measure().weights.items()
            )
            self.assertEqual(levy_functional(table, model), expected)

    def test_missing_vertex(self):
        with self.assertRaises(MissingVertex):
            levy_functional({"10000": 1}, self.model)

    def test_unnormalised(self):
        with self.assertRaises(UnnormalisedTestFunction):
            levy_functional(lambda vertex: 1, self.model)

    def test_inconsistency_is_reported(self):
        with mock.patch(
            "treecorr.components.orderings.utils._covariance_form", return_value=Fraction(-1)
        ):
            with self.assertRaises(Inconsistency):
                levy_functional(lambda vertex: 0 if vertex.is_origin() else 1, self.model)

    def test_needs_poisson(self):
        tree = build_pairwise(2)
        binomial = BinomialModel(tree, Fraction(1, 2), {(1, 1): 1, (2, 2): 1, (1, 2): 1})
        with self.assertRaises(FamilyMismatch):
            levy_functional(lambda vertex: 0, binomial)


class LevyDifferenceTestCase(SimpleTestCase):
    def test_equal_vectors(self):
        model = pairwise_poisson(1, 2, 3)
        self.assertEqual(levy_difference(model, model, product_function(1, 2)), 0)

    def test_product_on_pairwise_pair(self):
        difference = levy_difference(
            pairwise_poisson(1, 1, 0), pairwise_poisson(0, 0, 1), product_function(1, 2)
        )
        self.assertEqual(difference, 1)

    def test_covariance_form_needs_equal_means(self):
        x_model, y_model = pairwise_poisson(1, 1, 0), pairwise_poisson(1, 1, 1)
        with self.assertRaises(MeanMismatch):
            levy_difference(x_model, y_model, product_function(1, 2))
        self.assertEqual(
            levy_difference(x_model, y_model, product_function(1, 2), covariance_form=False), 1
        )

    def test_different_trees(self):
        pairwise, prior = build_pairwise(3), build_prior_structure(3)
        x_model = PoissonModel(pairwise, {pair: 2 if pair[0] == pair[1] else 0 for pair in pairwise.pairs()})
        y_model = PoissonModel(
            prior, {pair: 1 if pair[0] == pair[1] or pair == (2, 3) else 0 for pair in prior.pairs()}
        )
        self.assertEqual(y_model.tree.node(2, 3), HypercubeVertex.full(3))
        self.assertEqual(levy_difference(x_model, y_model, product_function(1, 2)), 1)

    def test_battery_on_ordered_pairs(self):
        rng = random.Random(9)
        instances = 0
        while instances < 1000:
            dim = rng.randint(2, 4)
            x_model, y_model = random_ordered_poisson_pair(rng, dim)
            for member in build_battery(dim, seed=rng.randint(0, 10**6)):
                value = levy_difference(x_model, y_model, member)
                self.assertGreaterEqual(value, -1e-9 * (1 + abs(value)), member.name)
                instances += 1

    def test_product_detects_reversed_pairs(self):
        rng = random.Random(10)
        tree = build_pairwise(4)
        intensities = {pair: Fraction(rng.randint(1, 4)) for pair in tree.pairs()}
        for pair in tree.off_diagonal_pairs():
            x_model = PoissonModel(tree, intensities)
            y_model = PoissonModel(tree, increment(tree, intensities, pair, Fraction(1, 2)))
            verdict = check_supermodular(y_model, x_model)
            self.assertEqual(verdict.witness["pair"], pair)
            self.assertEqual(
                levy_difference(y_model, x_model, product_function(*pair)), Fraction(-1, 2)
            )


class LevyDecompositionTestCase(SimpleTestCase):
    def test_collapses_to_levy_measure(self):
        rng = random.Random(11)
        for _ in range(20):
            dim = rng.randint(1, 5)
            tree = random_named_tree(dim, rng)
            model = PoissonModel(tree, {pair: rng.randint(0, 4) for pair in tree.pairs()})
            decomposition = levy_decomposition(model)
            self.assertEqual(decomposition.collapse(), dict(model.levy_measure().weights))
            self.assertEqual(len(decomposition.rows), len(tree.pairs()))

    def test_serializer(self):
        model = pairwise_poisson(1, 2, 3)
        data = LevyDecompositionSerializer(levy_decomposition(model)).data
        self.assertEqual(data["weights"], {"10": "1", "01": "2", "11": "3"})
        self.assertEqual(data["collapsed"], {"10": "1", "01": "2", "11": "3"})
        row = next(row for row in data["rows"] if row["pair"] == "1,2")
        self.assertEqual(row["covariance"], "3")
        self.assertEqual(row["expansion"], {"11": 1, "01": -1, "10": -1})


class CouplingTestCase(SimpleTestCase):
    def test_exact_moments(self):
        tree = build_pairwise(3)
        p = Fraction(1, 3)
        b_model = BinomialModel(tree, p, {pair: 2 for pair in tree.pairs()})
        sampler, a_model = couple_binomial_increment(b_model, (1, 2))
        self.assertEqual(a_model.coordinate_means(), b_model.coordinate_means())
        a_cov, b_cov = a_model.covariance(), b_model.covariance()
        for i in range(1, 4):
            for j in range(i, 4):
                expected = p * (1 - p) if (i, j) == (1, 2) else 0
                self.assertEqual(b_cov.cov(i, j) - a_cov.cov(i, j), expected)
        self.assertEqual(sampler.step.deltas, {(1, 2): -1, (2, 2): 1, (1, 1): 1})

    def test_grandchild_node(self):
        tree = build_prior_structure(3)
        b_model = BinomialModel(tree, Fraction(1, 2), {pair: 1 for pair in tree.pairs()})
        sampler, a_model = couple_binomial_increment(b_model, (2, 3))
        self.assertEqual(sampler.step.grandchild_pair, (1, 1))
        self.assertEqual(a_model.counts[(1, 1)], 0)
        self.assertEqual(a_model.counts[(2, 3)], 0)
        self.assertEqual(a_model.counts[(1, 3)], 2)
        self.assertEqual(a_model.counts[(1, 2)], 2)
        data = CouplingStepSerializer(sampler.step).data
        self.assertEqual(data["grandchild"], {"vertex": "100", "pair": "1,1"})
        self.assertEqual(data["deltas"], {"2,3": -1, "1,3": 1, "1,2": 1, "1,1": -1})

    def test_four_atom_gap(self):
        rng = random.Random(12)
        for _ in range(20):
            dim = rng.randint(2, 5)
            p = rng.choice([Fraction(1, 2), Fraction(1, 3), Fraction(2, 5)])
            b_model, pair = random_binomial_with_room(rng, dim, p)
            couple_binomial_increment(b_model, pair)
            k, l = pair
            self.assertEqual(
                four_atom_gap(product_function(k, l), p, b_model.tree, pair), p * (1 - p)
            )
            base = [rng.randint(0, 3) for _ in range(dim)]
            for member in build_battery(dim, seed=rng.randint(0, 10**6)):
                gap = four_atom_gap(member, p, b_model.tree, pair, base=base)
                self.assertGreaterEqual(gap, -1e-9 * (1 + abs(gap)), member.name)

    def test_coupled_monte_carlo(self):
        rng = random.Random(13)
        for case in range(20):
            dim = rng.randint(2, 4)
            b_model, pair = random_binomial_with_room(rng, dim, Fraction(1, 2))
            sampler, _ = couple_binomial_increment(b_model, pair)
            report = coupled_battery_estimate(
                sampler, build_battery(dim, seed=case), 10**6, seed=case
            )
            self.assertEqual([row.name for row in report.flagged], [], f"case {case}")

    def test_sampler_marginals(self):
        tree = build_prior_structure(3)
        b_model = BinomialModel(tree, Fraction(1, 2), {pair: 2 for pair in tree.pairs()})
        sampler, a_model = couple_binomial_increment(b_model, (2, 3))
        a_samples, b_samples = sampler.sample(200000, seed=4)
        for model, samples in ((a_model, a_samples), (b_model, b_samples)):
            errors = samples.std(axis=0, ddof=1) / np.sqrt(samples.shape[0])
            for mean, observed, error in zip(model.coordinate_means(), samples.mean(axis=0), errors):
                self.assertLessEqual(abs(observed - float(mean)), 5 * error)
            empirical = empirical_covariance(samples)
            standard_errors = covariance_standard_errors(samples)
            expected = model.covariance()
            for i in range(3):
                for j in range(3):
                    self.assertLessEqual(
                        abs(empirical[i, j] - float(expected.cov(i + 1, j + 1))),
                        5 * standard_errors[i, j] + 1e-12,
                    )
        first, second = sampler.sample(1000, seed=4), sampler.sample(1000, seed=4)
        self.assertTrue(np.array_equal(first[0], second[0]))
        self.assertTrue(np.array_equal(first[1], second[1]))

    def test_unavailable(self):
        tree = build_pairwise(2)
        b_model = BinomialModel(tree, Fraction(1, 2), {(1, 1): 1, (2, 2): 1, (1, 2): 0})
        with self.assertRaises(CouplingUnavailable):
            couple_binomial_increment(b_model, (1, 2))
        with self.assertRaises(CouplingUnavailable):
            couple_binomial_increment(b_model, (1, 1))
        with self.assertRaises(FamilyMismatch):
            couple_binomial_increment(pairwise_poisson(1, 1, 1), (1, 2))

    def test_chain_telescopes(self):
        tree = build_pairwise(3)
        p = Fraction(1, 2)
        b_model = BinomialModel(tree, p, {pair: 3 for pair in tree.pairs()})
        steps = [(1, 2), (1, 3), (1, 2)]
        models = coupling_chain(b_model, steps)
        self.assertEqual(len(models), 3)
        final = models[-1].covariance()
        start = b_model.covariance()
        for i in range(1, 4):
            for j in range(i, 4):
                self.assertEqual(start.cov(i, j) - final.cov(i, j), steps.count((i, j)) * p * (1 - p))
        for earlier, later in zip([b_model] + models, models):
            self.assertEqual(check_supermodular(later, earlier).holds, Holds.YES)
