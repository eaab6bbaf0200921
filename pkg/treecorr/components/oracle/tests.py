import itertools
import random
from fractions import Fraction
from unittest import mock

import numpy as np
from django.test import SimpleTestCase, override_settings

from treecorr.components.main.utils import read_fixture
from treecorr.components.oracle.battery import build_battery, self_test
from treecorr.components.oracle.exceptions import (
    BudgetExceeded,
    DegenerateMass,
    Infeasible,
    Unbounded,
)
from treecorr.components.oracle.models import CertificateVerdict, TruncatedGrid
from treecorr.components.oracle.serializers import (
    BatteryReportSerializer,
    LpCertificateSerializer,
)
from treecorr.components.oracle.simplex import solve_lp, tableau_cells
from treecorr.components.oracle.utils import (
    battery_estimate,
    certify,
    constraint_count,
    coupled_battery_estimate,
    global_violations,
    grid_pmf,
    local_constraints,
)
from treecorr.components.orderings.models import Holds, LatticeFunction
from treecorr.components.orderings.utils import check_supermodular, couple_binomial_increment
from treecorr.components.trees.utils import build_pairwise, random_named_tree
from treecorr.components.vectors.exceptions import UnsupportedFamily
from treecorr.components.vectors.models import BinomialModel, GaussianModel, PoissonModel
from treecorr.components.vectors.serializers import model_from_document


def fixture_model(name):
    return model_from_document(read_fixture(name))


def poisson_increment(tree, intensities, pair, delta):
    """Intensities moved by +δ at node(pair) and its grandchild, −δ at both children."""
    moved = dict(intensities)
    moved[pair] += delta
    for child in tree.children(pair):
        moved[child] -= delta
    _, grandchild_pair = tree.grandchild(pair)
    if grandchild_pair is not None:
        moved[grandchild_pair] += delta
    return moved


class SolveLpTestCase(SimpleTestCase):
    def test_single_box(self):
        solution = solve_lp([1], bounds=[(-1, 1)])
        self.assertEqual(solution.value, -1)
        self.assertEqual(solution.x.tolist(), [-1])

    def test_triangle(self):
        solution = solve_lp([-1, -1], [[1, 1]], [1], bounds=(0, 1), exact=True)
        self.assertEqual(solution.value, -1)
        self.assertEqual(sum(solution.x), 1)
        self.assertEqual(solution.duals.tolist(), [-1, 0, 0])
        self.assertEqual(solution.duality_gap, 0)

    def test_negative_right_hand_side_needs_phase_one(self):
        exact = solve_lp([1], [[-1]], [Fraction(-1, 2)], bounds=[(0, 1)], exact=True)
        self.assertEqual(exact.value, Fraction(1, 2))
        self.assertIsInstance(exact.value, Fraction)
        floating = solve_lp([1], [[-1]], [-0.5], bounds=[(0, 1)])
        self.assertAlmostEqual(floating.value, 0.5, places=12)

    @override_settings(TREECORR_DEGENERATE_PIVOTS=1)
    def test_cycling_example_terminates(self):
        c = [Fraction(-3, 4), 20, Fraction(-1, 2), 6]
        A = [
            [Fraction(1, 4), -8, -1, 9],
            [Fraction(1, 2), -12, Fraction(-1, 2), 3],
            [0, 0, 1, 0],
        ]
        solution = solve_lp(c, A, [0, 0, 1], exact=True)
        self.assertEqual(solution.value, Fraction(-5, 4))
        self.assertEqual(solution.x.tolist(), [1, 0, 1, 0])
        floating = solve_lp([float(v) for v in c], [[float(v) for v in row] for row in A], [0, 0, 1])
        self.assertAlmostEqual(floating.value, -1.25, places=9)

    def test_unbounded(self):
        with self.assertRaises(Unbounded):
            solve_lp([-1], bounds=[(0, None)])

    def test_infeasible(self):
        with self.assertRaises(Infeasible):
            solve_lp([1], [[1]], [-1], bounds=[(0, None)])
        with self.assertRaises(Infeasible):
            solve_lp([1], bounds=[(1, 0)])

    def test_free_variables_are_rejected(self):
        with self.assertRaises(ValueError):
            solve_lp([1], bounds=[(None, 1)])

    @override_settings(TREECORR_LP_CELL_BUDGET=20)
    def test_cell_budget(self):
        self.assertEqual(tableau_cells(2, 3), 36)
        with self.assertRaises(BudgetExceeded) as raised:
            solve_lp([1, 1], [[1, 1]], [1], bounds=(0, 1))
        self.assertEqual(raised.exception.detail["cells"], 36)

    @override_settings(TREECORR_EXACT_LP_BUDGET=3)
    def test_exact_budget(self):
        with self.assertRaises(BudgetExceeded):
            solve_lp([1, 1], [[1, 1]], [1], bounds=(0, 1), exact=True)


class GridTestCase(SimpleTestCase):
    def test_points_and_index(self):
        grid = TruncatedGrid(2, 2)
        points = grid.points()
        self.assertEqual(grid.size, 9)
        self.assertEqual(points[5].tolist(), [1, 2])
        for index, point in enumerate(points):
            self.assertEqual(grid.index(point), index)

    def test_local_constraints(self):
        grid = TruncatedGrid(2, 1)
        A, b = local_constraints(grid)
        self.assertEqual(A.tolist(), [[-1, 1, 1, -1]])
        self.assertEqual(b.tolist(), [0])
        A, _ = local_constraints(grid, monotone=True)
        self.assertEqual(A.shape, (5, 4))
        self.assertEqual(A[0].tolist(), [1, 0, -1, 0])

    def test_constraint_count(self):
        for dim in (1, 2, 3):
            for cap in (1, 2, 3):
                grid = TruncatedGrid(dim, cap)
                for monotone in (False, True):
                    A, _ = local_constraints(grid, monotone)
                    self.assertEqual(constraint_count(grid, monotone), A.shape[0])

    def test_grid_pmf(self):
        tree = build_pairwise(2)
        model = BinomialModel(tree, Fraction(1, 2), {(1, 1): 1, (2, 2): 1, (1, 2): 1})
        vector, defect = grid_pmf(model, TruncatedGrid(2, 2))
        self.assertEqual(sum(vector), 1)
        self.assertEqual(defect, 0)
        self.assertEqual(vector[TruncatedGrid(2, 2).index((2, 2))], Fraction(1, 8))

    def test_global_violations(self):
        grid = TruncatedGrid(2, 3)
        points = grid.points()
        self.assertEqual(global_violations(points[:, 0] * points[:, 1], grid), 0)
        self.assertGreater(global_violations(-points[:, 0] * points[:, 1], grid), 0)


class CertifyTestCase(SimpleTestCase):
    def setUp(self):
        self.independent = fixture_model("poisson_pairwise2_independent")
        self.common = fixture_model("poisson_pairwise2_common")

    def test_equal_vectors(self):
        certificate = certify(self.independent, self.independent)
        self.assertEqual(certificate.verdict, CertificateVerdict.CERTIFIED)
        self.assertEqual(certificate.value, 0)

    def test_common_shock_dominates(self):
        certificate = certify(self.independent, self.common)
        self.assertEqual(certificate.verdict, CertificateVerdict.CERTIFIED)
        self.assertLessEqual(certificate.epsilon_x, 2e-10)
        reversed_certificate = certify(self.common, self.independent)
        self.assertEqual(reversed_certificate.verdict, CertificateVerdict.VIOLATED)
        self.assertLess(reversed_certificate.value, -0.01)
        self.assertEqual(reversed_certificate.global_violations, 0)

    def test_exact_certificate(self):
        tree = build_pairwise(2)
        b_model = BinomialModel(tree, Fraction(1, 2), {(1, 1): 1, (2, 2): 1, (1, 2): 1})
        _, a_model = couple_binomial_increment(b_model, (1, 2))
        certificate = certify(a_model, b_model, exact=True)
        self.assertEqual(certificate.verdict, CertificateVerdict.CERTIFIED)
        self.assertEqual(certificate.value, 0)
        reversed_certificate = certify(b_model, a_model, exact=True, monotone=True)
        self.assertEqual(reversed_certificate.verdict, CertificateVerdict.VIOLATED)
        self.assertIsInstance(reversed_certificate.value, Fraction)
        self.assertLess(reversed_certificate.value, 0)

    def assert_agrees_with_criterion(self, x_model, y_model, message):
        holds = check_supermodular(x_model, y_model).holds
        certificate = certify(x_model, y_model)
        expected = (
            CertificateVerdict.CERTIFIED if holds == Holds.YES else CertificateVerdict.VIOLATED
        )
        self.assertEqual(certificate.verdict, expected, message)
        self.assertLess(max(float(certificate.epsilon_x), float(certificate.epsilon_y)), 1e-9)

    def test_poisson_pairs_agree_with_criterion(self):
        rng = random.Random(11)
        for case in range(50):
            dim = 3 if case % 10 == 0 else 2
            tree = random_named_tree(dim, rng) if dim == 3 else build_pairwise(2)
            pair = rng.choice(tree.off_diagonal_pairs())
            if dim == 2:
                levels = [0, Fraction(1, 20), Fraction(1, 10)]
                delta = rng.choice([Fraction(1, 100), Fraction(1, 20)])
            else:
                levels, delta = [0, Fraction(1, 100)], Fraction(1, 100)
            intensities = {p: rng.choice(levels) for p in tree.pairs()}
            for child in tree.children(pair):
                intensities[child] += delta
            x_model = PoissonModel(tree, intensities)
            y_model = PoissonModel(tree, poisson_increment(tree, intensities, pair, delta))
            if rng.random() < 0.5:
                x_model, y_model = y_model, x_model
            self.assert_agrees_with_criterion(x_model, y_model, f"case {case}, pair {pair}")

    def test_binomial_pairs_agree_with_criterion(self):
        rng = random.Random(12)
        for case in range(50):
            dim = 3 if case % 10 == 0 else 2
            tree = random_named_tree(dim, rng) if dim == 3 else build_pairwise(2)
            pair = rng.choice(tree.off_diagonal_pairs())
            top = 1 if dim == 3 else 2
            counts = {p: rng.randint(0, top) for p in tree.pairs()}
            counts[pair] = max(counts[pair], 1)
            _, grandchild_pair = tree.grandchild(pair)
            if grandchild_pair is not None:
                counts[grandchild_pair] = max(counts[grandchild_pair], 1)
            b_model = BinomialModel(tree, rng.choice([Fraction(1, 2), Fraction(1, 3)]), counts)
            _, a_model = couple_binomial_increment(b_model, pair)
            x_model, y_model = (a_model, b_model) if rng.random() < 0.5 else (b_model, a_model)
            self.assert_agrees_with_criterion(x_model, y_model, f"case {case}, pair {pair}")

    def test_fixed_cap(self):
        certificate = certify(self.independent, self.common, cap=8)
        self.assertEqual(certificate.verdict, CertificateVerdict.CERTIFIED)
        self.assertGreater(certificate.epsilon_x, 0)
        self.assertEqual(certificate.grid.size, 81)

    def test_matches_vertex_enumeration(self):
        """On {0,1}^2 the optimum is attained at a vertex of the constraint polytope: a
        sign vector, or three coordinates at ±1 with the fourth solving the constraint."""
        grid = TruncatedGrid(2, 1)
        A, b = local_constraints(grid)
        row = [int(v) for v in A[0]]
        rng = random.Random(5)
        for _ in range(20):
            c = [Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(4)]
            vertices = [list(signs) for signs in itertools.product((-1, 1), repeat=4)]
            for free in range(4):
                for signs in itertools.product((-1, 1), repeat=3):
                    phi = list(signs[:free]) + [0] + list(signs[free:])
                    rest = sum(r * v for r, v in zip(row, phi))
                    phi[free] = Fraction(-rest, row[free])
                    vertices.append(phi)
            feasible = [
                phi
                for phi in vertices
                if all(-1 <= v <= 1 for v in phi) and sum(r * v for r, v in zip(row, phi)) <= 0
            ]
            best = min(sum(ci * v for ci, v in zip(c, phi)) for phi in feasible)
            solution = solve_lp(c, A, b, bounds=(-1, 1), exact=True)
            self.assertEqual(solution.value, best)

    def test_truncation_too_coarse(self):
        with self.assertRaises(DegenerateMass):
            certify(self.independent, self.common, cap=2)

    @override_settings(TREECORR_LP_BUDGET=20)
    def test_budget(self):
        with self.assertRaises(BudgetExceeded):
            certify(self.independent, self.common)

    def test_dense_tableau_is_refused_before_allocation(self):
        tree = build_pairwise(3)
        model = PoissonModel(tree, {pair: 1 for pair in tree.pairs()})
        with mock.patch("treecorr.components.oracle.utils.local_constraints") as build:
            with self.assertRaises(BudgetExceeded) as raised:
                certify(model, model)
        build.assert_not_called()
        self.assertGreater(raised.exception.detail["cells"], raised.exception.detail["cell_budget"])

    def test_three_coordinates_on_a_small_grid(self):
        tree = build_pairwise(3)
        model = PoissonModel(tree, {pair: Fraction(1, 10) for pair in tree.pairs()})
        certificate = certify(model, model, cap=6)
        self.assertEqual(certificate.verdict, CertificateVerdict.CERTIFIED)
        self.assertEqual(certificate.grid.size, 343)

    def test_continuous_vectors_are_rejected(self):
        tree = build_pairwise(2)
        gaussian = GaussianModel(tree, {(1, 1): 1, (2, 2): 1, (1, 2): 1})
        with self.assertRaises(UnsupportedFamily):
            certify(gaussian, gaussian)

    def test_serializer(self):
        certificate = certify(self.independent, self.common)
        data = LpCertificateSerializer(certificate).data
        self.assertEqual(data["verdict"], "certified")
        self.assertEqual(data["grid"]["dim"], 2)
        self.assertEqual(len(data["phi"]), certificate.grid.size)
        quiet = LpCertificateSerializer(certificate, context={"include_phi": False}).data
        self.assertIsNone(quiet["phi"])


class BatteryTestCase(SimpleTestCase):
    def test_members_are_supermodular(self):
        for dim in range(1, 6):
            battery = build_battery(dim, seed=dim)
            self.assertEqual(self_test(battery, seed=dim), [])
            self.assertTrue(all(member.nondecreasing for member in battery))

    def test_deterministic(self):
        names = [member.name for member in build_battery(4, seed=3)]
        self.assertEqual(names, [member.name for member in build_battery(4, seed=3)])
        self.assertIn("x1*x2", names)
        self.assertIn("min(x3,x4)", names)

    def test_self_test_catches_submodular_members(self):
        battery = build_battery(2, seed=0)
        broken = LatticeFunction("-x1*x2", lambda points: -points[:, 0] * points[:, 1])
        battery = type(battery)(2, battery.members + (broken,), 0)
        self.assertEqual(self_test(battery), ["-x1*x2"])

    def test_equal_vectors_are_not_flagged(self):
        tree = build_pairwise(3)
        model = PoissonModel(tree, {pair: Fraction(1, 2) for pair in tree.pairs()})
        battery = build_battery(3, seed=5)
        report = battery_estimate(model, model, battery, 20000, seed=1)
        for row in report.rows:
            self.assertLessEqual(abs(row.estimate), 5 * row.standard_error + 1e-12, row.name)
        self.assertEqual(report.flagged, [])

    def test_anti_ordered_gaussians_are_flagged(self):
        tree = build_pairwise(2)
        x_model = GaussianModel(tree, {(1, 1): 1, (2, 2): 1, (1, 2): 1})
        y_model = GaussianModel(tree, {(1, 1): 2, (2, 2): 2, (1, 2): 0})
        report = battery_estimate(x_model, y_model, build_battery(2, seed=0), 100000, seed=2)
        product = next(row for row in report.rows if row.name == "x1*x2")
        self.assertTrue(product.flagged)
        self.assertAlmostEqual(product.estimate, -1, delta=0.1)
        data = BatteryReportSerializer(report).data
        self.assertIn("x1*x2", data["flagged"])

    def test_coupled_estimates(self):
        tree = build_pairwise(3)
        b_model = BinomialModel(tree, Fraction(1, 2), {pair: 3 for pair in tree.pairs()})
        sampler, _ = couple_binomial_increment(b_model, (1, 3))
        report = coupled_battery_estimate(sampler, build_battery(3, seed=4), 50000, seed=3)
        self.assertEqual(report.flagged, [])
        product = next(row for row in report.rows if row.name == "x1*x3")
        self.assertLessEqual(abs(product.estimate - 0.25), 5 * product.standard_error)
        self.assertTrue(np.isfinite([row.estimate for row in report.rows]).all())
