import logging

from rest_framework import serializers

from treecorr.components.covariances.models import DistributionFamily
from treecorr.components.main.serializers import PairKeyedRationalsField, RationalField
from treecorr.components.main.utils import format_pair, format_rational, parse_pair
from treecorr.components.trees.serializers import tree_from_document
from treecorr.components.vectors.models import (
    BinomialModel,
    GammaModel,
    GaussianModel,
    IndependentSum,
    PoissonModel,
)
from treecorr.exceptions import TreecorrError

logger = logging.getLogger(__name__)


def _pair_keyed(values):
    parsed = {}
    for key, value in values.items():
        try:
            parsed[parse_pair(key)] = value
        except ValueError as e:
            raise serializers.ValidationError({key: str(e)})
    return parsed


class ModelParamsSerializer(serializers.Serializer):
    p = RationalField(required=False)
    scale = RationalField(required=False)
    means = PairKeyedRationalsField(required=False)


class ModelDocumentSerializer(serializers.Serializer):
    """{ "family": ..., "tree": {...}, "params": {...}, "components": {"k,l": value} },
    or { "family": "sum", "summands": [model documents] }."""

    family = serializers.ChoiceField(choices=[family.value for family in DistributionFamily])
    tree = serializers.DictField(required=False)
    params = serializers.DictField(required=False)
    components = PairKeyedRationalsField(required=False)
    summands = serializers.ListField(child=serializers.DictField(), required=False)

    def validate_components(self, value):
        return _pair_keyed(value)

    def _params(self, data):
        params = ModelParamsSerializer(data=data.get("params") or {}, context=self.context)
        if not params.is_valid():
            raise serializers.ValidationError({"params": params.errors})
        return params.validated_data

    def _summands(self, data):
        summands = []
        for index, document in enumerate(data.get("summands") or []):
            nested = ModelDocumentSerializer(data=document, context=self.context)
            if not nested.is_valid():
                raise serializers.ValidationError({"summands": {index: nested.errors}})
            summands.append(nested.save())
        return summands

    def validate(self, data):
        family = DistributionFamily(data["family"])
        try:
            if family == DistributionFamily.SUM:
                data["model"] = IndependentSum(tuple(self._summands(data)))
                return data

            if "tree" not in data or "components" not in data:
                raise serializers.ValidationError(
                    f"A {family.value} model needs a tree and components."
                )
            tree = tree_from_document(data["tree"])
            params = self._params(data)
            components = data["components"]
            if family == DistributionFamily.BINOMIAL:
                if "p" not in params:
                    raise serializers.ValidationError({"params": "A binomial model needs p."})
                data["model"] = BinomialModel(tree, params["p"], components)
            elif family == DistributionFamily.POISSON:
                data["model"] = PoissonModel(tree, components)
            elif family == DistributionFamily.GAUSSIAN:
                means = _pair_keyed(params["means"]) if "means" in params else None
                data["model"] = GaussianModel(tree, components, means)
            else:
                data["model"] = GammaModel(tree, params.get("scale", 1), components)
        except TreecorrError:
            raise
        except (TypeError, ValueError) as e:
            raise serializers.ValidationError(str(e))
        return data

    def create(self, validated_data):
        return validated_data["model"]


def model_from_document(document, context=None):
    serializer = ModelDocumentSerializer(data=document, context=context or {})
    serializer.is_valid(raise_exception=True)
    return serializer.save()


def _components(values):
    return {format_pair(pair): format_rational(value) for pair, value in values.items()}


def model_to_document(model):
    if isinstance(model, IndependentSum):
        return {
            "family": model.family.value,
            "summands": [model_to_document(summand) for summand in model.summands],
        }
    document = {
        "family": model.family.value,
        "tree": model.tree.to_document(),
        "params": {},
    }
    if isinstance(model, BinomialModel):
        document["params"]["p"] = format_rational(model.p)
        document["components"] = {
            format_pair(pair): count for pair, count in model.counts.items()
        }
    elif isinstance(model, PoissonModel):
        document["components"] = _components(model.intensities)
    elif isinstance(model, GaussianModel):
        document["params"]["means"] = _components(model.means)
        document["components"] = _components(model.variances)
    else:
        document["params"]["scale"] = format_rational(model.scale)
        document["components"] = _components(model.shapes)
    return document


def moments_to_document(moments):
    return {
        "means": [format_rational(mean) for mean in moments.means],
        "covariance": [
            [format_rational(value) for value in row] for row in moments.covariance.entries
        ],
    }
