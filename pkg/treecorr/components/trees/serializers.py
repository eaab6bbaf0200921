import logging

from django.conf import settings
from rest_framework import serializers

from treecorr.components.hypercube.models import HypercubeVertex
from treecorr.components.main.utils import parse_pair
from treecorr.components.trees.utils import validate_tree

logger = logging.getLogger(__name__)


class TreeDocumentSerializer(serializers.Serializer):
    """{ "dim": d, "nodes": { "k,l": "bitstring", ... } }; leaves may be omitted."""

    dim = serializers.IntegerField(min_value=1)
    nodes = serializers.DictField(child=serializers.CharField())

    def validate_dim(self, value):
        if value > settings.TREECORR_MAX_DIM:
            raise serializers.ValidationError(
                f"Dimension {value} exceeds {settings.TREECORR_MAX_DIM}."
            )
        return value

    def validate(self, data):
        dim = data["dim"]
        candidate = {}
        errors = {}
        for key, bitstring in data["nodes"].items():
            try:
                pair = parse_pair(key)
            except ValueError as e:
                errors[key] = str(e)
                continue
            if len(bitstring) != dim or set(bitstring) - {"0", "1"}:
                errors[key] = f"'{bitstring}' is not a bitstring of length {dim}."
                continue
            if pair in candidate:
                errors[key] = f"The pair {pair} is listed twice."
                continue
            candidate[pair] = HypercubeVertex.from_bitstring(bitstring)
        if errors:
            raise serializers.ValidationError({"nodes": errors})
        for i in range(1, dim + 1):
            candidate.setdefault((i, i), HypercubeVertex.basis(dim, i))
        data["candidate"] = candidate
        return data


def tree_from_document(document):
    serializer = TreeDocumentSerializer(data=document)
    serializer.is_valid(raise_exception=True)
    return validate_tree(
        serializer.validated_data["candidate"], serializer.validated_data["dim"]
    )
