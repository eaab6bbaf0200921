"""
The treecorr command line: trees, covariance inversion, model construction, sampling,
ordering checks, the binomial coupling and the LP oracle.

Usage:

Locally with an active poetry environment:

    ./manage.sh treecorr tree validate treecorr/fixtures/golden_d5.json
    ./manage.sh treecorr invert --tree pairwise4.json --cov cov.json
    ./manage.sh treecorr order oracle --x x.json --y y.json --arithmetic exact

Or through the console script installed by poetry:

    treecorr order check --relation sm --x x.json --y y.json

Reports are JSON on stdout, a one line summary goes to stderr. The exit status is 0 on
success or a verdict that holds, 1 when the verdict is evidence against an ordering,
2 on bad input and 3 when a check runs but can not decide.
"""
import argparse
import io
import logging

from django.core.management.base import BaseCommand, CommandError, CommandParser
from rest_framework.exceptions import ValidationError

from treecorr.components.covariances.models import DistributionFamily
from treecorr.components.covariances.serializers import (
    covariance_from_document,
    covariance_to_document,
    decomposition_from_document,
    decomposition_to_document,
)
from treecorr.components.covariances.utils import forward_covariance, invert_covariance
from treecorr.components.main.utils import (
    dump_json,
    format_pair,
    format_rational,
    parse_pair,
    read_json_document,
    to_fraction,
    write_csv,
)
from treecorr.components.oracle.battery import build_battery
from treecorr.components.oracle.models import CertificateVerdict
from treecorr.components.oracle.serializers import (
    BatteryReportSerializer,
    LpCertificateSerializer,
)
from treecorr.components.oracle.utils import (
    battery_estimate,
    certify,
    coupled_battery_estimate,
)
from treecorr.components.orderings.models import Holds, Relation
from treecorr.components.orderings.serializers import (
    CouplingStepSerializer,
    LevyDecompositionSerializer,
    OrderingVerdictSerializer,
)
from treecorr.components.orderings.utils import (
    check_convex,
    check_increasing_supermodular,
    check_supermodular,
    couple_binomial_increment,
    levy_decomposition,
)
from treecorr.components.trees.serializers import tree_from_document
from treecorr.components.trees.utils import build_pairwise, build_prior_structure
from treecorr.components.vectors.exceptions import UnsupportedFamily
from treecorr.components.vectors.models import BinomialModel, GaussianModel
from treecorr.components.vectors.serializers import (
    model_from_document,
    model_to_document,
    moments_to_document,
)
from treecorr.components.vectors.utils import (
    clt_bridge,
    construct,
    exact_moments,
    exact_truncated_pmf,
    sample,
)
from treecorr.exceptions import TreecorrError

logger = logging.getLogger(__name__)

EXIT_NO = 1
EXIT_INPUT = 2
EXIT_UNDECIDED = 3

CHECKS = {
    Relation.SUPERMODULAR: check_supermodular,
    Relation.INCREASING_SUPERMODULAR: check_increasing_supermodular,
    Relation.CONVEX: check_convex,
}


class TreecorrParser(CommandParser):
    """Sub-command parser that prints the usage text and exits with status 2."""

    def error(self, message):
        argparse.ArgumentParser.error(self, message)


def _nonnegative(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"Expected a nonnegative integer, got {text}.")
    return value


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"Expected a positive integer, got {text}.")
    return value


def _pair(text):
    try:
        return parse_pair(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _rational(text):
    try:
        return to_fraction(text)
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(str(e))


class Command(BaseCommand):
    help = "Tree dependence structures, covariance inversion and stochastic ordering checks."

    requires_system_checks = []
    _summary = ""

    def add_arguments(self, parser):
        commands = parser.add_subparsers(
            dest="command", required=True, parser_class=TreecorrParser
        )

        tree = commands.add_parser("tree", help="Validate or build dependency trees.")
        tree_actions = tree.add_subparsers(dest="action", required=True)
        validate = tree_actions.add_parser("validate", help="Check a tree document.")
        validate.add_argument("path", type=str)
        build = tree_actions.add_parser("build", help="Write a standard tree.")
        build.add_argument("structure", choices=["pairwise", "prior"])
        build.add_argument("--dim", type=_positive, required=True)
        build.add_argument("--output", help="Write the tree here instead of stdout.")

        forward = commands.add_parser("forward", help="Covariance of a decomposition.")
        forward.add_argument("--tree", required=True)
        forward.add_argument("--dec", "--decomposition", dest="decomposition", required=True)

        invert = commands.add_parser("invert", help="Decomposition of a covariance.")
        invert.add_argument("--tree", required=True)
        invert.add_argument("--cov", required=True)

        construct = commands.add_parser("construct", help="Model realising a covariance.")
        construct.add_argument("--tree", required=True)
        construct.add_argument("--cov", required=True)
        construct.add_argument(
            "--family",
            required=True,
            choices=[family.value for family in DistributionFamily if family != DistributionFamily.SUM],
        )
        construct.add_argument("--p", type=_rational)
        construct.add_argument("--scale", type=_rational)

        sampler = commands.add_parser("sample", help="Seeded draws from a model.")
        sampler.add_argument("--model", required=True)
        sampler.add_argument("--n", type=_positive, required=True)
        sampler.add_argument("--seed", type=_nonnegative, required=True)
        self._add_output_arguments(sampler)

        moments = commands.add_parser("moments", help="Exact means and covariance.")
        moments.add_argument("--model", required=True)

        pmf = commands.add_parser("pmf", help="Truncated joint pmf of a lattice model.")
        pmf.add_argument("--model", required=True)
        pmf.add_argument("--cap", type=_nonnegative, required=True)
        pmf.add_argument("--prune-above", type=_nonnegative)
        self._add_output_arguments(pmf)

        clt = commands.add_parser("clt", help="Binomial approximations of Gaussian models.")
        clt_actions = clt.add_subparsers(dest="action", required=True)
        bridge = clt_actions.add_parser("bridge", help="Binomial model for a Gaussian target.")
        bridge.add_argument("--model", required=True)
        bridge.add_argument("--n", type=_positive, required=True)
        bridge.add_argument("--p", type=_rational)

        order = commands.add_parser("order", help="Stochastic ordering checks.")
        order_actions = order.add_subparsers(dest="action", required=True)
        check = order_actions.add_parser("check", help="Closed form ordering criterion.")
        check.add_argument("--relation", required=True, choices=["sm", "ism", "cx"])
        check.add_argument("--x", required=True)
        check.add_argument("--y", required=True)

        couple = order_actions.add_parser("couple", help="Binomial increment coupling.")
        couple.add_argument("--model", required=True)
        couple.add_argument("--pair", type=_pair, required=True)
        couple.add_argument("--n", type=_positive, required=True)
        couple.add_argument("--seed", type=_nonnegative, required=True)
        couple.add_argument("--battery-seed", type=_nonnegative, default=0)
        self._add_output_arguments(couple, default_format="csv")

        oracle = order_actions.add_parser("oracle", help="LP certificate on a truncated grid.")
        oracle.add_argument("--x", required=True)
        oracle.add_argument("--y", required=True)
        oracle.add_argument("--cap", type=_positive)
        oracle.add_argument("--monotone", action="store_true")
        oracle.add_argument("--arithmetic", choices=["exact", "float"], default="float")
        oracle.add_argument("--omit-phi", action="store_true")

        battery = order_actions.add_parser("battery", help="Monte Carlo supermodular battery.")
        battery.add_argument("--x", required=True)
        battery.add_argument("--y", required=True)
        battery.add_argument("--n", type=_positive, required=True)
        battery.add_argument("--seed", type=_nonnegative, required=True)
        battery.add_argument("--battery-seed", type=_nonnegative, default=0)
        self._add_output_arguments(battery)

        levy = commands.add_parser("levy", help="Lévy measures of Poisson models.")
        levy_actions = levy.add_subparsers(dest="action", required=True)
        decompose = levy_actions.add_parser("decompose", help="Covariance form of the measure.")
        decompose.add_argument("--model", required=True)

    def _add_output_arguments(self, parser, default_format="json"):
        parser.add_argument("--format", choices=["json", "csv"], default=default_format)
        parser.add_argument("--output", help="Write the report here instead of stdout.")

    def handle(self, *args, **options):
        name = options["command"]
        if options.get("action"):
            name = f"{name}_{options['action']}"
        handler = getattr(self, f"_{name}")
        logger.debug(f"Running treecorr {name} with {options}.")
        try:
            report, status = handler(options)
        except TreecorrError as e:
            self._fail(e.code, e.detail if e.detail is not None else str(e), e.exit_code, str(e))
        except ValidationError as e:
            self._fail("invalid_document", e.detail, EXIT_INPUT, "The input document is invalid.")
        except (OSError, ValueError, TypeError) as e:
            self._fail("invalid_input", str(e), EXIT_INPUT, str(e))

        if report is not None:
            self._emit(report, options)
        if status:
            raise CommandError(f"treecorr {name}: {self._summary}", returncode=status)
        self.stderr.write(f"treecorr {name}: {self._summary}")

    def _fail(self, code, detail, exit_code, message):
        logger.error(f"{code}: {message}")
        self.stdout.write(dump_json({"error": code, "detail": detail}))
        raise CommandError(message, returncode=exit_code)

    def _emit(self, report, options):
        if isinstance(report, str):
            text = report
        else:
            text = dump_json(report)
        if options.get("output"):
            with open(options["output"], "w", encoding="utf-8") as output:
                output.write(text if text.endswith("\n") else text + "\n")
        else:
            self.stdout.write(text, ending="" if text.endswith("\n") else "\n")

    def _csv(self, header, rows):
        buffer = io.StringIO()
        write_csv(buffer, header, rows)
        return buffer.getvalue()

    def _read_model(self, path):
        return model_from_document(read_json_document(path))

    def _tree_validate(self, options):
        tree = tree_from_document(read_json_document(options["path"]))
        self._summary = f"valid tree of dimension {tree.dim}"
        return {
            "valid": True,
            "dim": tree.dim,
            "height": tree.height(),
            "roots": [format_pair(pair) for pair in tree.root_pairs()],
            "tree": tree.to_document(),
            "membership": {
                str(i): [format_pair(pair) for pair in sorted(tree.membership.row(i))]
                for i in range(1, tree.dim + 1)
            },
        }, 0

    def _tree_build(self, options):
        builders = {"pairwise": build_pairwise, "prior": build_prior_structure}
        tree = builders[options["structure"]](options["dim"])
        self._summary = f"{options['structure']} tree of dimension {tree.dim}"
        return tree.to_document(), 0

    def _forward(self, options):
        tree = tree_from_document(read_json_document(options["tree"]))
        dec = decomposition_from_document(read_json_document(options["decomposition"]))
        cov = forward_covariance(tree, dec)
        self._summary = f"covariance of dimension {cov.dim}"
        return covariance_to_document(cov), 0

    def _invert(self, options):
        tree = tree_from_document(read_json_document(options["tree"]))
        cov = covariance_from_document(read_json_document(options["cov"]))
        dec = invert_covariance(tree, cov)
        self._summary = (
            "nonnegative decomposition"
            if dec.feasible
            else f"decomposition with negative components at {dec.negative_pairs()}"
        )
        return decomposition_to_document(dec), 0

    def _construct(self, options):
        tree = tree_from_document(read_json_document(options["tree"]))
        cov = covariance_from_document(read_json_document(options["cov"]))
        params = {
            key: options[key] for key in ("p", "scale") if options.get(key) is not None
        }
        model = construct(tree, cov, options["family"], params)
        self._summary = f"constructed a {model.family.value} model"
        return model_to_document(model), 0

    def _sample(self, options):
        model = self._read_model(options["model"])
        samples = sample(model, options["n"], options["seed"])
        self._summary = f"{options['n']} draws with seed {options['seed']}"
        if options["format"] == "csv":
            header = [f"X{i}" for i in range(1, model.dim + 1)]
            return self._csv(header, samples.tolist()), 0
        return {
            "family": model.family.value,
            "n_samples": options["n"],
            "seed": options["seed"],
            "samples": samples,
        }, 0

    def _moments(self, options):
        model = self._read_model(options["model"])
        self._summary = f"exact moments of a {model.family.value} model"
        return moments_to_document(exact_moments(model)), 0

    def _pmf(self, options):
        model = self._read_model(options["model"])
        pmf = exact_truncated_pmf(model, options["cap"], options.get("prune_above"))
        self._summary = f"{len(pmf.probabilities)} points, mass defect {float(pmf.mass_defect)!r}"
        if options["format"] == "csv":
            header = [f"X{i}" for i in range(1, model.dim + 1)] + ["probability"]
            rows = [
                list(point) + [format_rational(p) if pmf.exact else float(p)]
                for point, p in pmf.probabilities.items()
            ]
            return self._csv(header, rows), 0
        return {
            "dim": pmf.dim,
            "cap": pmf.cap,
            "exact": pmf.exact,
            "captured_mass": pmf.captured_mass,
            "mass_defect": pmf.mass_defect,
            "points": [
                {"point": list(point), "probability": probability}
                for point, probability in pmf.probabilities.items()
            ],
        }, 0

    def _clt_bridge(self, options):
        target = self._read_model(options["model"])
        if not isinstance(target, GaussianModel):
            error_message = f"The bridge targets gaussian models, not {target.family.value}."
            logger.error(error_message)
            raise UnsupportedFamily(error_message)
        bridge = clt_bridge(target, options["n"], options.get("p"))
        self._summary = f"binomial bridge at n={bridge.n}"
        return {
            "n": bridge.n,
            "binomial": model_to_document(bridge.binomial),
            "target": covariance_to_document(target.covariance()),
            "standardized_covariance": covariance_to_document(
                bridge.standardized_covariance()
            ),
            "covariance_error_bound": bridge.covariance_error_bound(),
        }, 0

    def _order_check(self, options):
        relation = Relation.from_alias(options["relation"])
        X, Y = self._read_model(options["x"]), self._read_model(options["y"])
        verdict = CHECKS[relation](X, Y)
        self._summary = f"{relation.value} order: {verdict.holds.value}"
        status = {Holds.YES: 0, Holds.NO: EXIT_NO}.get(verdict.holds, EXIT_UNDECIDED)
        return OrderingVerdictSerializer(verdict).data, status

    def _order_couple(self, options):
        B = self._read_model(options["model"])
        if not isinstance(B, BinomialModel):
            error_message = f"The coupling needs a binomial model, not {B.family.value}."
            logger.error(error_message)
            raise UnsupportedFamily(error_message)
        sampler, A = couple_binomial_increment(B, options["pair"])
        if options["format"] == "csv":
            a_samples, b_samples = sampler.sample(options["n"], options["seed"])
            header = [f"XA{i}" for i in range(1, B.dim + 1)]
            header += [f"XB{i}" for i in range(1, B.dim + 1)]
            rows = [list(a) + list(b) for a, b in zip(a_samples.tolist(), b_samples.tolist())]
            self._summary = f"{options['n']} coupled draws at {options['pair']}"
            return self._csv(header, rows), 0

        battery = build_battery(B.dim, seed=options["battery_seed"])
        report = coupled_battery_estimate(sampler, battery, options["n"], options["seed"])
        self._summary = f"coupled battery flags {len(report.flagged)} member(s)"
        return {
            "step": CouplingStepSerializer(sampler.step).data,
            "a_model": model_to_document(A),
            "report": BatteryReportSerializer(report).data,
        }, EXIT_NO if report.flagged else 0

    def _order_oracle(self, options):
        X, Y = self._read_model(options["x"]), self._read_model(options["y"])
        certificate = certify(
            X,
            Y,
            cap=options.get("cap"),
            monotone=options["monotone"],
            exact=options["arithmetic"] == "exact",
        )
        self._summary = (
            f"{certificate.verdict.value} on a grid of {certificate.grid.size} points"
        )
        status = {
            CertificateVerdict.CERTIFIED: 0,
            CertificateVerdict.VIOLATED: EXIT_NO,
        }.get(certificate.verdict, EXIT_UNDECIDED)
        serializer = LpCertificateSerializer(
            certificate, context={"include_phi": not options["omit_phi"]}
        )
        return serializer.data, status

    def _order_battery(self, options):
        X, Y = self._read_model(options["x"]), self._read_model(options["y"])
        battery = build_battery(X.dim, seed=options["battery_seed"])
        report = battery_estimate(X, Y, battery, options["n"], options["seed"])
        self._summary = f"battery flags {len(report.flagged)} member(s)"
        status = EXIT_NO if report.flagged else 0
        if options["format"] == "csv":
            rows = [
                [row.name, row.estimate, row.standard_error, int(row.flagged)]
                for row in report.rows
            ]
            return self._csv(["name", "estimate", "standard_error", "flagged"], rows), status
        return BatteryReportSerializer(report).data, status

    def _levy_decompose(self, options):
        model = self._read_model(options["model"])
        decomposition = levy_decomposition(model)
        self._summary = f"Lévy measure on {len(decomposition.weights)} vertices"
        return LevyDecompositionSerializer(decomposition).data, 0
