import io
import json
import os
import tempfile

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from treecorr.cli import main
from treecorr.components.covariances.models import VarianceDecomposition
from treecorr.components.covariances.serializers import decomposition_from_document
from treecorr.components.trees.serializers import tree_from_document
from treecorr.components.trees.utils import load_fixture_tree


def fixture_path(name):
    return os.path.join(settings.TREECORR_FIXTURES_DIR, f"{name}.json")


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self.workspace = tempfile.TemporaryDirectory()
        self.addCleanup(self.workspace.cleanup)

    def write_document(self, name, document):
        path = os.path.join(self.workspace.name, name)
        with open(path, "w", encoding="utf-8") as output:
            json.dump(document, output)
        return path

    def run_command(self, *args):
        stdout, stderr = io.StringIO(), io.StringIO()
        call_command("treecorr", *args, stdout=stdout, stderr=stderr)
        return stdout.getvalue()

    def run_failing(self, *args):
        """(returncode, JSON report) of a command expected to exit non zero."""
        stdout, stderr = io.StringIO(), io.StringIO()
        with self.assertRaises(CommandError) as raised:
            call_command("treecorr", *args, stdout=stdout, stderr=stderr)
        return raised.exception.returncode, json.loads(stdout.getvalue())


class TreeCommandTestCase(CommandTestCase):
    def test_validate_golden_tree(self):
        report = json.loads(self.run_command("tree", "validate", fixture_path("golden_d5")))
        self.assertTrue(report["valid"])
        self.assertEqual(report["dim"], 5)
        self.assertEqual(len(report["membership"]["3"]), 7)
        self.assertEqual(report["roots"], ["1,4"])

    def test_validate_reports_violations(self):
        path = self.write_document("bad.json", {"dim": 2, "nodes": {"1,2": "10"}})
        returncode, report = self.run_failing("tree", "validate", path)
        self.assertEqual(returncode, 1)
        self.assertEqual(report["error"], "h_violation")

    def test_invalid_document(self):
        path = self.write_document("bad.json", {"dim": 0, "nodes": {}})
        returncode, report = self.run_failing("tree", "validate", path)
        self.assertEqual(returncode, 2)
        self.assertEqual(report["error"], "invalid_document")

    def test_missing_file(self):
        returncode, report = self.run_failing(
            "tree", "validate", os.path.join(self.workspace.name, "absent.json")
        )
        self.assertEqual(returncode, 2)
        self.assertEqual(report["error"], "invalid_input")

    def test_build_pairwise(self):
        document = json.loads(self.run_command("tree", "build", "pairwise", "--dim", "4"))
        self.assertEqual(tree_from_document(document), load_fixture_tree("pairwise4"))

    def test_build_prior_to_output_file(self):
        path = os.path.join(self.workspace.name, "prior.json")
        self.assertEqual(self.run_command("tree", "build", "prior", "--dim", "5", "--output", path), "")
        with open(path, encoding="utf-8") as output:
            document = json.load(output)
        self.assertEqual(tree_from_document(document), load_fixture_tree("prior5"))


class CovarianceCommandTestCase(CommandTestCase):
    def test_invert_recovers_the_generator(self):
        tree_path = fixture_path("pairwise4")
        components = {
            "1,1": "2", "2,2": "1/2", "3,3": "0", "4,4": "3",
            "1,2": "1", "1,3": "0", "1,4": "5/2",
            "2,3": "1/3", "2,4": "0", "3,4": "4",
        }
        generator = self.write_document(
            "dec.json", {"dim": 4, "components": components}
        )
        cov = json.loads(self.run_command("forward", "--tree", tree_path, "--dec", generator))
        self.assertEqual(cov["matrix"][0][1], "1")
        cov_path = self.write_document("cov.json", cov)
        document = json.loads(self.run_command("invert", "--tree", tree_path, "--cov", cov_path))
        self.assertTrue(document["feasible"])
        self.assertEqual(
            decomposition_from_document(document),
            VarianceDecomposition(
                4, {tuple(map(int, key.split(","))): value for key, value in components.items()}
            ),
        )

    def test_forward_keeps_negative_variances(self):
        generator = self.write_document(
            "dec.json", {"dim": 2, "components": {"1,1": "-2", "2,2": "1", "1,2": "1"}}
        )
        tree_path = fixture_path("pairwise2")
        cov = json.loads(self.run_command("forward", "--tree", tree_path, "--dec", generator))
        self.assertEqual(cov["matrix"], [["-1", "1"], ["1", "2"]])
        document = json.loads(
            self.run_command("invert", "--tree", tree_path, "--cov", self.write_document("cov.json", cov))
        )
        self.assertFalse(document["feasible"])
        self.assertEqual(document["components"]["1,1"], "-2")

    def test_construct_negative_variance(self):
        cov_path = self.write_document("cov.json", {"dim": 2, "matrix": [["-1", "0"], ["0", "1"]]})
        returncode, report = self.run_failing(
            "construct", "--tree", fixture_path("pairwise2"), "--cov", cov_path, "--family", "gaussian"
        )
        self.assertEqual(returncode, 2)
        self.assertEqual(report["error"], "negative_variance")
        self.assertEqual(report["detail"], {"coordinates": [1]})

    def test_construct_infeasible(self):
        cov_path = self.write_document(
            "cov.json", {"dim": 2, "matrix": [["1", "-1"], ["-1", "1"]]}
        )
        returncode, report = self.run_failing(
            "construct",
            "--tree",
            fixture_path("pairwise2"),
            "--cov",
            cov_path,
            "--family",
            "poisson",
        )
        self.assertEqual(returncode, 2)
        self.assertEqual(report["error"], "infeasible_decomposition")
        self.assertEqual(report["detail"]["negative_pairs"], ["1,2"])

    def test_construct_binomial(self):
        cov_path = self.write_document(
            "cov.json", {"dim": 2, "matrix": [["1", "1/2"], ["1/2", "3/4"]]}
        )
        document = json.loads(
            self.run_command(
                "construct",
                "--tree",
                fixture_path("pairwise2"),
                "--cov",
                cov_path,
                "--family",
                "binomial",
                "--p",
                "1/2",
            )
        )
        self.assertEqual(document["family"], "binomial")
        self.assertEqual(document["components"], {"1,1": 2, "2,2": 1, "1,2": 2})


class ModelCommandTestCase(CommandTestCase):
    def test_sample_is_deterministic(self):
        args = ("sample", "--model", fixture_path("poisson_pairwise2_common"), "--n", "50")
        first = self.run_command(*args, "--seed", "7", "--format", "csv")
        second = self.run_command(*args, "--seed", "7", "--format", "csv")
        self.assertEqual(first, second)
        lines = first.strip().split("\n")
        self.assertEqual(lines[0], "X1,X2")
        self.assertEqual(len(lines), 51)
        for line in lines[1:]:
            x1, x2 = line.split(",")
            self.assertEqual(x1, x2)

    def test_sample_requires_seed(self):
        with self.assertRaises(SystemExit) as raised:
            call_command(
                "treecorr",
                "sample",
                "--model",
                fixture_path("poisson_pairwise2_common"),
                "--n",
                "5",
                stdout=io.StringIO(),
                stderr=io.StringIO(),
            )
        self.assertEqual(raised.exception.code, 2)

    def test_moments(self):
        report = json.loads(
            self.run_command("moments", "--model", fixture_path("poisson_pairwise2_common"))
        )
        self.assertEqual(report["means"], ["1", "1"])
        self.assertEqual(report["covariance"], [["1", "1"], ["1", "1"]])

    def test_binomial_pmf(self):
        report = json.loads(
            self.run_command("pmf", "--model", fixture_path("binomial_golden_d5"), "--cap", "2")
        )
        self.assertTrue(report["exact"])
        self.assertEqual(report["captured_mass"], "1")
        self.assertEqual(report["mass_defect"], "0")

    def test_clt_bridge_needs_gaussian(self):
        returncode, report = self.run_failing(
            "clt", "bridge", "--model", fixture_path("poisson_pairwise2_common"), "--n", "100"
        )
        self.assertEqual(returncode, 2)
        self.assertEqual(report["error"], "unsupported_family")

    def test_clt_bridge(self):
        path = self.write_document(
            "gaussian.json",
            {
                "family": "gaussian",
                "tree": {"dim": 2, "nodes": {"1,2": "11"}},
                "params": {},
                "components": {"1,1": "1", "2,2": "1/2", "1,2": "1/4"},
            },
        )
        report = json.loads(self.run_command("clt", "bridge", "--model", path, "--n", "100"))
        self.assertEqual(report["binomial"]["components"], {"1,1": 400, "2,2": 200, "1,2": 100})
        self.assertEqual(report["standardized_covariance"]["matrix"], [["5/4", "1/4"], ["1/4", "3/4"]])
        self.assertEqual(report["covariance_error_bound"], "3/800")


class OrderCommandTestCase(CommandTestCase):
    def setUp(self):
        super().setUp()
        self.independent = fixture_path("poisson_pairwise2_independent")
        self.common = fixture_path("poisson_pairwise2_common")

    def test_check_holds(self):
        report = json.loads(
            self.run_command(
                "order", "check", "--relation", "sm", "--x", self.independent, "--y", self.common
            )
        )
        self.assertEqual(report["relation"], "supermodular")
        self.assertEqual(report["holds"], "yes")

    def test_check_fails(self):
        returncode, report = self.run_failing(
            "order", "check", "--relation", "sm", "--x", self.common, "--y", self.independent
        )
        self.assertEqual(returncode, 1)
        self.assertEqual(report["holds"], "no")

    def test_convex_check_needs_equal_laws(self):
        returncode, report = self.run_failing(
            "order", "check", "--relation", "cx", "--x", self.independent, "--y", self.common
        )
        self.assertEqual(returncode, 1)
        self.assertEqual(report["relation"], "convex")
        self.assertEqual(report["holds"], "no")

    def test_oracle_certifies(self):
        report = json.loads(
            self.run_command(
                "order", "oracle", "--x", self.independent, "--y", self.common, "--omit-phi"
            )
        )
        self.assertEqual(report["verdict"], "certified")
        self.assertIsNone(report["phi"])

    def test_oracle_finds_violation(self):
        returncode, report = self.run_failing(
            "order", "oracle", "--x", self.common, "--y", self.independent
        )
        self.assertEqual(returncode, 1)
        self.assertEqual(report["verdict"], "violated")
        self.assertEqual(report["global_violations"], 0)
        self.assertEqual(len(report["phi"]), report["grid"]["size"])

    def test_oracle_rejects_gaussian(self):
        path = self.write_document(
            "gaussian.json",
            {
                "family": "gaussian",
                "tree": {"dim": 2, "nodes": {"1,2": "11"}},
                "params": {},
                "components": {"1,1": "1", "2,2": "1", "1,2": "1"},
            },
        )
        returncode, report = self.run_failing("order", "oracle", "--x", path, "--y", path)
        self.assertEqual(returncode, 2)
        self.assertEqual(report["error"], "unsupported_family")

    def test_battery_flags_the_product(self):
        returncode, report = self.run_failing(
            "order",
            "battery",
            "--x",
            self.common,
            "--y",
            self.independent,
            "--n",
            "20000",
            "--seed",
            "3",
        )
        self.assertEqual(returncode, 1)
        self.assertIn("x1*x2", report["flagged"])

    def test_couple_csv(self):
        output = self.run_command(
            "order",
            "couple",
            "--model",
            fixture_path("binomial_golden_d5"),
            "--pair",
            "1,2",
            "--n",
            "40",
            "--seed",
            "5",
        )
        lines = output.strip().split("\n")
        self.assertEqual(
            lines[0].split(","),
            [f"XA{i}" for i in range(1, 6)] + [f"XB{i}" for i in range(1, 6)],
        )
        self.assertEqual(len(lines), 41)

    def test_couple_report(self):
        report = json.loads(
            self.run_command(
                "order",
                "couple",
                "--model",
                fixture_path("binomial_golden_d5"),
                "--pair",
                "1,2",
                "--n",
                "20000",
                "--seed",
                "5",
                "--format",
                "json",
            )
        )
        self.assertEqual(report["step"]["pair"], "1,2")
        self.assertEqual(report["a_model"]["components"]["1,2"], 1)
        self.assertEqual(report["report"]["flagged"], [])

    def test_levy_decompose(self):
        report = json.loads(self.run_command("levy", "decompose", "--model", self.common))
        self.assertEqual(report["weights"], {"11": "1"})
        self.assertEqual(report["collapsed"], {"11": "1"})


class ConsoleScriptTestCase(SimpleTestCase):
    def test_unknown_subcommand(self):
        self.assertEqual(main(["frobnicate"]), 2)

    def test_missing_option(self):
        self.assertEqual(main(["order", "check", "--relation", "sm"]), 2)

    def test_success(self):
        self.assertEqual(main(["tree", "build", "pairwise", "--dim", "3"]), 0)
