import logging
from fractions import Fraction

from rest_framework import serializers

from treecorr.components.main.utils import format_rational

logger = logging.getLogger(__name__)


def _number(value):
    """Exact results as "p/q" strings, floating ones as JSON numbers."""
    if isinstance(value, Fraction):
        return format_rational(value)
    return float(value)


class TruncatedGridSerializer(serializers.Serializer):
    dim = serializers.IntegerField()
    cap = serializers.IntegerField()
    size = serializers.IntegerField(read_only=True)


class LpCertificateSerializer(serializers.Serializer):
    """The verdict, the optimum and the witness Φ listed by grid point."""

    verdict = serializers.CharField(source="verdict.value")
    value = serializers.SerializerMethodField()
    epsilon_x = serializers.SerializerMethodField()
    epsilon_y = serializers.SerializerMethodField()
    tolerance = serializers.FloatField()
    grid = TruncatedGridSerializer()
    monotone = serializers.BooleanField()
    exact = serializers.BooleanField()
    global_violations = serializers.IntegerField()
    pivots = serializers.IntegerField()
    phi = serializers.SerializerMethodField()

    def get_value(self, certificate):
        return _number(certificate.value)

    def get_epsilon_x(self, certificate):
        return _number(certificate.epsilon_x)

    def get_epsilon_y(self, certificate):
        return _number(certificate.epsilon_y)

    def get_phi(self, certificate):
        if not self.context.get("include_phi", True):
            return None
        points = certificate.grid.points().tolist()
        return [
            {"point": point, "value": _number(value)}
            for point, value in zip(points, certificate.phi)
        ]


class BatteryRowSerializer(serializers.Serializer):
    name = serializers.CharField()
    estimate = serializers.FloatField()
    standard_error = serializers.FloatField()
    flagged = serializers.BooleanField()


class BatteryReportSerializer(serializers.Serializer):
    n_samples = serializers.IntegerField()
    seed = serializers.IntegerField()
    threshold = serializers.FloatField()
    rows = BatteryRowSerializer(many=True)
    flagged = serializers.SerializerMethodField()

    def get_flagged(self, report):
        return [row.name for row in report.flagged]
