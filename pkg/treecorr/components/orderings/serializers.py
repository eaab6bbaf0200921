import logging
from fractions import Fraction

from rest_framework import serializers

from treecorr.components.main.utils import format_pair, format_rational

logger = logging.getLogger(__name__)


def _plain(value):
    """JSON form of evidence values: rationals as "p/q", pairs as "k,l"."""
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, tuple) and len(value) == 2 and all(isinstance(v, int) for v in value):
        return format_pair(value)
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    return value


class ComparisonSerializer(serializers.Serializer):
    key = serializers.SerializerMethodField()
    x = serializers.SerializerMethodField()
    y = serializers.SerializerMethodField()
    ok = serializers.BooleanField()

    def get_key(self, comparison):
        return _plain(comparison.key)

    def get_x(self, comparison):
        return _plain(comparison.x)

    def get_y(self, comparison):
        return _plain(comparison.y)


class OrderingVerdictSerializer(serializers.Serializer):
    relation = serializers.CharField(source="relation.value")
    holds = serializers.CharField(source="holds.value")
    means = ComparisonSerializer(many=True)
    covariances = ComparisonSerializer(many=True)
    witness = serializers.SerializerMethodField()
    notes = serializers.ListField(child=serializers.CharField())

    def get_witness(self, verdict):
        return _plain(verdict.witness)


class LevyDecompositionSerializer(serializers.Serializer):
    dim = serializers.IntegerField()
    weights = serializers.SerializerMethodField()
    rows = serializers.SerializerMethodField()
    collapsed = serializers.SerializerMethodField()

    def get_weights(self, decomposition):
        return {
            vertex.to_bitstring(): format_rational(weight)
            for vertex, weight in decomposition.weights.items()
        }

    def get_rows(self, decomposition):
        return [
            {
                "pair": format_pair(row.pair),
                "covariance": format_rational(row.covariance),
                "expansion": {
                    vertex.to_bitstring(): weight for vertex, weight in row.expansion.items()
                },
            }
            for row in decomposition.rows
        ]

    def get_collapsed(self, decomposition):
        return {
            vertex.to_bitstring(): format_rational(weight)
            for vertex, weight in sorted(
                decomposition.collapse().items(), key=lambda item: item[0].sort_key()
            )
        }


class CouplingStepSerializer(serializers.Serializer):
    pair = serializers.SerializerMethodField()
    children = serializers.SerializerMethodField()
    grandchild = serializers.SerializerMethodField()
    deltas = serializers.SerializerMethodField()
    p = serializers.SerializerMethodField()

    def get_pair(self, step):
        return format_pair(step.pair)

    def get_children(self, step):
        return [format_pair(child) for child in step.children]

    def get_grandchild(self, step):
        return {
            "vertex": step.grandchild.to_bitstring(),
            "pair": None if step.grandchild_pair is None else format_pair(step.grandchild_pair),
        }

    def get_deltas(self, step):
        return {format_pair(pair): change for pair, change in step.deltas.items()}

    def get_p(self, step):
        return format_rational(step.p)
