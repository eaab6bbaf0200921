import logging

from rest_framework import serializers

from treecorr.components.covariances.models import CovarianceSpec, VarianceDecomposition
from treecorr.components.main.serializers import (
    PairKeyedRationalsField,
    RationalField,
    RationalMatrixField,
)
from treecorr.components.main.utils import format_pair, format_rational, parse_pair

logger = logging.getLogger(__name__)


class CovarianceDocumentSerializer(serializers.Serializer):
    """{ "dim": d, "matrix": [[...]], "means": [...] }"""

    dim = serializers.IntegerField(min_value=1)
    matrix = RationalMatrixField()
    means = serializers.ListField(child=RationalField(), required=False)

    def validate(self, data):
        dim = data["dim"]
        if len(data["matrix"]) != dim or any(len(row) != dim for row in data["matrix"]):
            raise serializers.ValidationError(
                {"matrix": f"The matrix must be {dim}x{dim}."}
            )
        if "means" in data and len(data["means"]) != dim:
            raise serializers.ValidationError({"means": f"Expected {dim} means."})
        return data

    def create(self, validated_data):
        return CovarianceSpec(
            validated_data["dim"],
            tuple(tuple(row) for row in validated_data["matrix"]),
            tuple(validated_data["means"]) if "means" in validated_data else None,
        )


class DecompositionDocumentSerializer(serializers.Serializer):
    """{ "dim": d, "components": { "k,l": rational } }"""

    dim = serializers.IntegerField(min_value=1)
    components = PairKeyedRationalsField()

    def validate_components(self, value):
        parsed = {}
        for key, rational in value.items():
            try:
                parsed[parse_pair(key)] = rational
            except ValueError as e:
                raise serializers.ValidationError({key: str(e)})
        return parsed

    def create(self, validated_data):
        return VarianceDecomposition(
            validated_data["dim"], validated_data["components"]
        )


def covariance_to_document(cov):
    document = {
        "dim": cov.dim,
        "matrix": [[format_rational(value) for value in row] for row in cov.entries],
    }
    if cov.means is not None:
        document["means"] = [format_rational(value) for value in cov.means]
    return document


def decomposition_to_document(dec):
    return {
        "dim": dec.dim,
        "components": {
            format_pair(pair): format_rational(value)
            for pair, value in dec.sigma2.items()
        },
        "feasible": dec.feasible,
    }


class FeasibilityReportSerializer(serializers.Serializer):
    family = serializers.CharField(source="family.value")
    feasible = serializers.BooleanField()
    negative_pairs = serializers.SerializerMethodField()
    p = RationalField(allow_null=True)
    scale = RationalField(allow_null=True)
    counts = serializers.SerializerMethodField()
    integrality_defects = serializers.SerializerMethodField()
    shapes = serializers.SerializerMethodField()
    intensities = serializers.SerializerMethodField()
    mean_defects = serializers.SerializerMethodField()

    def get_negative_pairs(self, report):
        return [format_pair(pair) for pair in report.negative_pairs]

    def get_counts(self, report):
        return {format_pair(pair): count for pair, count in report.counts.items()}

    def get_integrality_defects(self, report):
        return {
            format_pair(pair): None if quotient is None else format_rational(quotient)
            for pair, quotient in report.integrality_defects.items()
        }

    def get_shapes(self, report):
        return {
            format_pair(pair): format_rational(shape)
            for pair, shape in report.shapes.items()
        }

    def get_intensities(self, report):
        return {
            format_pair(pair): format_rational(value)
            for pair, value in report.intensities.items()
        }

    def get_mean_defects(self, report):
        return {
            str(index): {"expected": format_rational(e), "implied": format_rational(i)}
            for index, (e, i) in report.mean_defects.items()
        }


def covariance_from_document(document, context=None):
    serializer = CovarianceDocumentSerializer(data=document, context=context or {})
    serializer.is_valid(raise_exception=True)
    return serializer.save()


def decomposition_from_document(document, context=None):
    serializer = DecompositionDocumentSerializer(data=document, context=context or {})
    serializer.is_valid(raise_exception=True)
    return serializer.save()
