import logging
from fractions import Fraction

from rest_framework import serializers

from treecorr.components.main.utils import format_rational, to_fraction

logger = logging.getLogger(__name__)


class RationalField(serializers.Field):
    """A rational number written as an integer, a "p/q" string, a decimal string or a
    JSON float. Always serialized back as a "p/q" string."""

    default_error_messages = {
        "invalid": "A rational must be an integer, a 'p/q' string or a decimal number.",
        "float": "Floats are not accepted here, write the value as a 'p/q' string.",
    }

    def __init__(self, *args, **kwargs):
        self.allow_float = kwargs.pop("allow_float", True)
        super().__init__(*args, **kwargs)

    def to_internal_value(self, data):
        if isinstance(data, bool) or data is None:
            self.fail("invalid")
        if isinstance(data, float):
            if not self.allow_float:
                self.fail("float")
            if self.context.get("arithmetic", "exact") == "exact":
                logger.warning(
                    f"Float {data!r} read as the rational {to_fraction(data)} in exact mode."
                )
        try:
            return to_fraction(data)
        except (TypeError, ValueError, ZeroDivisionError, OverflowError):
            self.fail("invalid")

    def to_representation(self, value):
        return format_rational(Fraction(value))


class RationalMatrixField(serializers.ListField):
    child = serializers.ListField(child=RationalField())


class PairKeyedRationalsField(serializers.DictField):
    """Maps "k,l" keys to rationals."""

    child = RationalField()
