import math
import random
from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase, override_settings
from scipy.stats import poisson

from treecorr.components.covariances.exceptions import NegativeVariance
from treecorr.components.covariances.models import CovarianceSpec, VarianceDecomposition
from treecorr.components.covariances.utils import (
    comonotonic_decomposition,
    forward_covariance,
)
from treecorr.components.main.utils import read_fixture
from treecorr.components.trees.utils import (
    build_pairwise,
    build_prior_structure,
    load_fixture_tree,
    random_named_tree,
)
from treecorr.components.vectors.exceptions import (
    BudgetExceeded,
    InfeasibleDecomposition,
    UnsupportedFamily,
)
from treecorr.components.vectors.models import (
    BinomialModel,
    GammaModel,
    GaussianModel,
    IndependentSum,
    PoissonModel,
)
from treecorr.components.vectors.serializers import (
    model_from_document,
    model_to_document,
)
from treecorr.components.vectors.utils import (
    clt_bridge,
    construct,
    covariance_standard_errors,
    default_component_cap,
    default_grid_cap,
    empirical_covariance,
    exact_moments,
    exact_truncated_pmf,
    sample,
)

QUARTER = Fraction(1, 4)


def random_rationals(tree, rng, top=6):
    return {pair: Fraction(rng.randint(0, top), rng.randint(1, 3)) for pair in tree.pairs()}


def assert_within_standard_errors(test, samples, expected, k=5):
    empirical = empirical_covariance(samples)
    errors = covariance_standard_errors(samples)
    dim = samples.shape[1]
    for i in range(dim):
        for j in range(dim):
            test.assertLessEqual(
                abs(empirical[i, j] - float(expected[i][j])),
                k * errors[i, j] + 1e-12,
                f"entry ({i + 1},{j + 1})",
            )


class ConstructTestCase(SimpleTestCase):
    def setUp(self):
        self.tree = build_pairwise(2)
        self.cov = CovarianceSpec(2, ((2, 1), (1, 2)))

    def test_poisson_from_pairwise_inversion(self):
        model = construct(self.tree, self.cov, "poisson")
        self.assertEqual(dict(model.intensities), {(1, 1): 1, (1, 2): 1, (2, 2): 1})

    def test_binomial_counts(self):
        model = construct(self.tree, self.cov, "binomial", {"p": "1/2"})
        self.assertEqual(dict(model.counts), {(1, 1): 4, (1, 2): 4, (2, 2): 4})
        self.assertEqual(model.n, 12)

    def test_zero_matrix(self):
        zero = CovarianceSpec(2, ((0, 0), (0, 0)))
        for family, params in (
            ("binomial", {"p": QUARTER}),
            ("poisson", {}),
            ("gaussian", {}),
            ("gamma", {"scale": 3}),
        ):
            model = construct(self.tree, zero, family, params)
            self.assertEqual(set(model.component_variances().values()), {0})
            self.assertTrue(np.all(sample(model, 20, seed=1) == 0))

    def test_infeasible_covariance(self):
        cov = CovarianceSpec(2, ((1, 2), (2, 1)))
        with self.assertRaises(InfeasibleDecomposition) as raised:
            construct(self.tree, cov, "poisson")
        self.assertEqual(raised.exception.report.negative_pairs, [(1, 1), (2, 2)])
        self.assertEqual(raised.exception.detail["negative_pairs"], ["1,1", "2,2"])

    def test_negative_variance(self):
        cov = CovarianceSpec(2, ((-1, 0), (0, 1)))
        with self.assertRaises(NegativeVariance) as raised:
            construct(self.tree, cov, "gaussian")
        self.assertEqual(raised.exception.detail, {"coordinates": [1]})

    def test_integrality_defect(self):
        cov = CovarianceSpec(2, (("3/10", 0), (0, "1/4")))
        with self.assertRaises(InfeasibleDecomposition) as raised:
            construct(self.tree, cov, "binomial", {"p": "1/2"})
        self.assertEqual(raised.exception.report.integrality_defects, {(1, 1): Fraction(6, 5)})

    def test_means(self):
        with_means = CovarianceSpec(2, self.cov.entries, (2, 2))
        self.assertEqual(construct(self.tree, with_means, "poisson").coordinate_means(), (2, 2))
        wrong = CovarianceSpec(2, self.cov.entries, (2, 3))
        with self.assertRaises(InfeasibleDecomposition) as raised:
            construct(self.tree, wrong, "poisson")
        self.assertEqual(raised.exception.report.mean_defects, {2: (3, 2)})
        gaussian = construct(self.tree, wrong, "gaussian")
        self.assertEqual(gaussian.coordinate_means(), (2, 3))
        self.assertEqual(gaussian.means[(1, 2)], 0)

    def test_sum_is_not_constructed(self):
        with self.assertRaises(UnsupportedFamily):
            construct(self.tree, self.cov, "sum")


class ExactMomentsTestCase(SimpleTestCase):
    def test_golden_d5_poisson(self):
        tree = load_fixture_tree("golden_d5")
        model = PoissonModel(tree, {pair: 1 for pair in tree.pairs()})
        moments = exact_moments(model)
        self.assertEqual(moments.means[2], 7)
        for i in range(1, 6):
            self.assertEqual(moments.means[i - 1], moments.covariance.cov(i, i))

    def test_binomial_variances(self):
        model = model_from_document(read_fixture("binomial_golden_d5"))
        moments = exact_moments(model)
        for i, size in enumerate(model.coordinate_sizes(), start=1):
            self.assertEqual(moments.covariance.cov(i, i), QUARTER * size)
            self.assertEqual(moments.means[i - 1], Fraction(size, 2))

    def test_gamma_shape_additivity(self):
        tree = build_prior_structure(3)
        model = GammaModel(tree, 2, {pair: 1 for pair in tree.pairs()})
        moments = exact_moments(model)
        for i in range(1, 4):
            shape = len(tree.membership.row(i))
            self.assertEqual(moments.means[i - 1], 2 * shape)
            self.assertEqual(moments.covariance.cov(i, i), 4 * shape)

    def test_constructed_models_reproduce_the_target(self):
        rng = random.Random(4)
        for _ in range(60):
            tree = random_named_tree(rng.randint(1, 5), rng)
            counts = {pair: rng.randint(0, 4) for pair in tree.pairs()}
            binomial_cov = forward_covariance(
                tree, VarianceDecomposition(tree.dim, {pair: QUARTER * c for pair, c in counts.items()})
            )
            binomial = construct(tree, binomial_cov, "binomial", {"p": "1/2"})
            self.assertEqual(dict(binomial.counts), counts)
            self.assertEqual(exact_moments(binomial).covariance.entries, binomial_cov.entries)

            cov = forward_covariance(
                tree, VarianceDecomposition(tree.dim, random_rationals(tree, rng))
            )
            for family in ("poisson", "gaussian"):
                model = construct(tree, cov, family)
                self.assertEqual(exact_moments(model).covariance.entries, cov.entries)

    def test_independent_sum_adds_moments(self):
        tree = build_pairwise(2)
        summed = IndependentSum(
            (
                PoissonModel(tree, {(1, 1): 1, (1, 2): 2, (2, 2): 0}),
                GaussianModel(tree, {(1, 1): 0, (1, 2): 1, (2, 2): 3}, {(1, 1): 5, (1, 2): 0, (2, 2): 0}),
            )
        )
        moments = exact_moments(summed)
        self.assertEqual(moments.means, (Fraction(8), Fraction(2)))
        self.assertEqual(moments.covariance.entries[0], (Fraction(4), Fraction(3)))
        with self.assertRaises(ValueError):
            IndependentSum((summed.summands[0], summed.summands[0]))


class SampleTestCase(SimpleTestCase):
    def test_deterministic(self):
        tree = load_fixture_tree("golden_d5")
        model = PoissonModel(tree, {pair: Fraction(1, 3) for pair in tree.pairs()})
        first = sample(model, 500, seed=42)
        self.assertEqual(first.shape, (500, 5))
        self.assertTrue(np.array_equal(first, sample(model, 500, seed=42)))
        self.assertFalse(np.array_equal(first, sample(model, 500, seed=43)))

    @override_settings(TREECORR_SAMPLE_CHUNK=7)
    def test_blocks_cover_every_row(self):
        model = PoissonModel(build_pairwise(2), {(1, 1): 0, (1, 2): 2, (2, 2): 0})
        draws = sample(model, 30, seed=3)
        self.assertEqual(draws.shape, (30, 2))
        self.assertTrue(np.array_equal(draws[:, 0], draws[:, 1]))

    def test_rejects_empty_request(self):
        with self.assertRaises(ValueError):
            sample(PoissonModel(build_pairwise(1), {(1, 1): 1}), 0, seed=1)

    def test_empirical_covariance_within_standard_errors(self):
        rng = random.Random(10)
        n_samples = 10**6
        for family in ("binomial", "poisson", "gaussian"):
            tree = random_named_tree(rng.randint(2, 5), rng)
            if family == "binomial":
                dec = {pair: QUARTER * rng.randint(0, 4) for pair in tree.pairs()}
            else:
                dec = random_rationals(tree, rng, top=4)
            cov = forward_covariance(tree, VarianceDecomposition(tree.dim, dec))
            model = construct(tree, cov, family, {"p": "1/2"})
            samples = sample(model, n_samples, seed=rng.randrange(2**32))
            assert_within_standard_errors(self, samples, cov.entries)

    def test_error_halves_when_samples_quadruple(self):
        tree = build_prior_structure(3)
        model = PoissonModel(tree, {pair: Fraction(1, 2) for pair in tree.pairs()})
        target = np.array(exact_moments(model).covariance.entries, dtype=float)

        def mean_rms(n_samples):
            return np.mean(
                [
                    math.sqrt(np.mean((empirical_covariance(sample(model, n_samples, seed)) - target) ** 2))
                    for seed in range(20)
                ]
            )

        ratio = mean_rms(4 * 10**4) / mean_rms(10**4)
        self.assertGreater(ratio, 0.3)
        self.assertLess(ratio, 0.75)

    def test_independent_sum_streams(self):
        tree = build_pairwise(2)
        poisson_part = PoissonModel(tree, {(1, 1): 1, (1, 2): 1, (2, 2): 1})
        gaussian_part = GaussianModel(tree, {(1, 1): 1, (1, 2): 0, (2, 2): 1})
        summed = sample(IndependentSum((poisson_part, gaussian_part)), 100, seed=9)
        self.assertTrue(
            np.allclose(
                summed,
                sample(poisson_part, 100, 9, stream="sample/poisson")
                + sample(gaussian_part, 100, 9, stream="sample/gaussian"),
            )
        )


class ExactTruncatedPmfTestCase(SimpleTestCase):
    def test_scalar_poisson(self):
        pmf = exact_truncated_pmf(PoissonModel(build_pairwise(1), {(1, 1): 1}), 20)
        self.assertGreaterEqual(pmf.captured_mass, 1 - 1e-12)
        for (k,), probability in pmf.probabilities.items():
            self.assertAlmostEqual(probability, math.exp(-1) / math.factorial(k), places=14)

    def test_binomial_mass_is_exact(self):
        tree = build_prior_structure(3)
        rng = random.Random(6)
        model = BinomialModel(tree, "1/3", {pair: rng.randint(0, 2) for pair in tree.pairs()})
        pmf = exact_truncated_pmf(model, max(model.counts.values()))
        self.assertEqual(pmf.captured_mass, 1)
        self.assertTrue(pmf.exact)
        for i, size in enumerate(model.coordinate_sizes(), start=1):
            marginal = pmf.marginal(i)
            for value in range(size + 1):
                self.assertEqual(
                    marginal[value],
                    math.comb(size, value) * Fraction(1, 3) ** value * Fraction(2, 3) ** (size - value),
                )

    def test_truncated_binomial_loses_mass(self):
        tree = build_pairwise(1)
        pmf = exact_truncated_pmf(BinomialModel(tree, "1/2", {(1, 1): 3}), 1)
        self.assertEqual(pmf.captured_mass, Fraction(1, 2))
        self.assertEqual(pmf.mass_defect, Fraction(1, 2))

    def test_comonotonic_mass_on_diagonal(self):
        tree = build_prior_structure(3)
        dec = comonotonic_decomposition(tree, 2)
        pmf = exact_truncated_pmf(PoissonModel(tree, dict(dec.sigma2)), 15)
        for point in pmf.probabilities:
            self.assertEqual(len(set(point)), 1)

    def test_poisson_marginals(self):
        tree = build_pairwise(2)
        model = PoissonModel(tree, {(1, 1): "1/2", (1, 2): "1/4", (2, 2): 1})
        pmf = exact_truncated_pmf(model, 15)
        for i, mean in enumerate(model.coordinate_means(), start=1):
            for value, probability in pmf.marginal(i).items():
                if value <= 15:
                    self.assertLess(
                        abs(probability - poisson.pmf(value, float(mean))),
                        pmf.mass_defect + 1e-12,
                    )

    def test_pruned_grid(self):
        tree = build_pairwise(2)
        model = PoissonModel(tree, {(1, 1): "1/2", (1, 2): "1/4", (2, 2): 1})
        pruned = exact_truncated_pmf(model, 4, prune_above=4)
        self.assertTrue(all(max(point) <= 4 for point in pruned.probabilities))
        self.assertEqual(pruned.cap, 4)
        self.assertLess(pruned.captured_mass, 1)

    @override_settings(TREECORR_ENUMERATION_BUDGET=100)
    def test_budget(self):
        tree = build_pairwise(3)
        model = PoissonModel(tree, {pair: 1 for pair in tree.pairs()})
        with self.assertRaises(BudgetExceeded):
            exact_truncated_pmf(model, 5)

    def test_continuous_families_are_rejected(self):
        tree = build_pairwise(2)
        with self.assertRaises(UnsupportedFamily):
            exact_truncated_pmf(GaussianModel(tree, {pair: 1 for pair in tree.pairs()}), 3)
        with self.assertRaises(UnsupportedFamily):
            exact_truncated_pmf(GammaModel(tree, 1, {pair: 1 for pair in tree.pairs()}), 3)


class TruncationPolicyTestCase(SimpleTestCase):
    def test_caps(self):
        tree = build_pairwise(2)
        binomial = BinomialModel(tree, "1/2", {(1, 1): 2, (1, 2): 3, (2, 2): 1})
        self.assertEqual(default_component_cap(binomial), 3)
        self.assertEqual(default_grid_cap([binomial]), 5)
        model = PoissonModel(tree, {(1, 1): "1/20", (1, 2): 0, (2, 2): "1/100"})
        cap = default_component_cap(model)
        self.assertLessEqual(poisson.sf(cap, 1 / 20), 1.01e-10 / 3)
        grid_cap = default_grid_cap([model, binomial])
        self.assertGreaterEqual(grid_cap, 5)
        self.assertEqual(default_component_cap(PoissonModel(tree, {p: 0 for p in tree.pairs()})), 1)


class CltBridgeTestCase(SimpleTestCase):
    def test_single_block(self):
        tree = build_pairwise(2)
        target = GaussianModel(tree, {pair: QUARTER for pair in tree.pairs()})
        bridge = clt_bridge(target, 1)
        self.assertEqual(set(bridge.binomial.counts.values()), {1})

    def test_exact_standardized_moments(self):
        tree = build_prior_structure(3)
        target = GaussianModel(tree, {pair: Fraction(1, 3) for pair in tree.pairs()})
        target_cov = exact_moments(target).covariance
        for n in (10, 100, 1000, 10**4):
            bridge = clt_bridge(target, n)
            self.assertEqual(set(bridge.standardized_means()), {0})
            cov = bridge.standardized_covariance()
            bound = bridge.covariance_error_bound()
            self.assertEqual(bound, Fraction(6, 8 * n))
            for i in range(1, 4):
                for j in range(1, 4):
                    self.assertLessEqual(abs(cov.cov(i, j) - target_cov.cov(i, j)), bound)

    def test_standardized_samples(self):
        tree = build_pairwise(3)
        rng = random.Random(2)
        target = GaussianModel(tree, {pair: Fraction(rng.randint(1, 8), 8) for pair in tree.pairs()})
        bridge = clt_bridge(target, 10**4)
        standardized = bridge.standardize(sample(bridge.binomial, 10**6, seed=17))
        self.assertLess(abs(standardized.mean()), 0.05)
        assert_within_standard_errors(self, standardized, exact_moments(target).covariance.entries)

    def test_bad_arguments(self):
        target = GaussianModel(build_pairwise(1), {(1, 1): 1})
        with self.assertRaises(ValueError):
            clt_bridge(target, 0)
        with self.assertRaises(InfeasibleDecomposition):
            clt_bridge(target, 10, p=1)


class ModelDocumentTestCase(SimpleTestCase):
    def test_round_trips(self):
        tree = build_prior_structure(3)
        rng = random.Random(8)
        models = [
            BinomialModel(tree, "1/3", {pair: rng.randint(0, 3) for pair in tree.pairs()}),
            PoissonModel(tree, random_rationals(tree, rng)),
            GaussianModel(tree, random_rationals(tree, rng), random_rationals(tree, rng)),
            GammaModel(tree, "3/2", random_rationals(tree, rng)),
        ]
        for model in models:
            self.assertEqual(model_from_document(model_to_document(model)), model)
        summed = IndependentSum((models[1], models[2]))
        self.assertEqual(model_from_document(model_to_document(summed)), summed)

    def test_fixtures(self):
        independent = model_from_document(read_fixture("poisson_pairwise2_independent"))
        common = model_from_document(read_fixture("poisson_pairwise2_common"))
        self.assertEqual(independent.coordinate_means(), common.coordinate_means())

    def test_invalid_documents(self):
        from rest_framework.exceptions import ValidationError

        with self.assertRaises(ValidationError):
            model_from_document({"family": "binomial", "tree": {"dim": 1, "nodes": {}}, "components": {"1,1": 1}})
        with self.assertRaises(ValidationError):
            model_from_document({"family": "cauchy"})
        with self.assertRaises(ValidationError):
            model_from_document(
                {"family": "binomial", "tree": {"dim": 1, "nodes": {}}, "params": {"p": 2}, "components": {"1,1": 1}}
            )
        with self.assertRaises(InfeasibleDecomposition):
            model_from_document({"family": "poisson", "tree": {"dim": 1, "nodes": {}}, "components": {"1,1": -1}})
