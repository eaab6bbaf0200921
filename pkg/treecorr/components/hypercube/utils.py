import hashlib
import logging

from django.conf import settings
from django.core.cache import cache

from treecorr.components.hypercube.exceptions import DimensionError, OrderError
from treecorr.components.hypercube.models import HypercubeVertex

logger = logging.getLogger(__name__)


def precedes(x, y):
    """x ⪯ y, i.e. members(x) ⊆ members(y)."""
    return x.precedes(y)


def remove(x, a):
    return x.remove(a)


def all_vertices(dim):
    if dim > 20:
        error_message = f"Refusing to enumerate the 2^{dim} vertices of C_{dim}."
        logger.error(error_message)
        raise DimensionError(error_message)
    return [HypercubeVertex(dim, mask) for mask in range(1 << dim)]


def _canonical_key(dim, x, poset):
    digest = hashlib.sha256(
        ",".join(str(mask) for mask in sorted(v.mask for v in poset)).encode("ascii")
    ).hexdigest()
    return settings.CACHE_KEY_MOEBIUS.format(dim, x.mask, digest)


def moebius_column(x, within):
    """Return {y: μ(x, y)} for every y ⪯ x in the poset induced by ``within`` ∪ {x}.

    The column is filled top down: μ(x, x) = 1 and μ(x, y) = -Σ μ(x, z) over the z of
    the poset with y ≺ z ⪯ x. Elements are visited by decreasing size so every z above
    y is settled before y.
    """
    poset = set(within)
    poset.add(x)
    for vertex in poset:
        if vertex.dim != x.dim:
            error_message = (
                f"Vertex {vertex} of dimension {vertex.dim} in a poset of dimension {x.dim}."
            )
            logger.error(error_message)
            raise DimensionError(error_message)

    cache_key = _canonical_key(x.dim, x, poset)
    column = cache.get(cache_key)
    if column is None:
        below = sorted(
            (vertex for vertex in poset if vertex.precedes(x)),
            key=lambda vertex: (-vertex.size, vertex.mask),
        )
        values = {}
        for y in below:
            if y.mask == x.mask:
                values[y.mask] = 1
                continue
            values[y.mask] = -sum(
                value
                for mask, value in values.items()
                if mask != y.mask and y.mask & ~mask == 0
            )
        column = values
        cache.set(cache_key, column, settings.CACHE_TIMEOUT_MOEBIUS)
        logger.debug(f"Möbius column of {x} computed over {len(below)} vertices.")
    return {HypercubeVertex(x.dim, mask): value for mask, value in column.items()}


def moebius(x, y, within):
    """μ(x, y) of the sub-poset induced by ``within`` ∪ {x, y}; requires y ⪯ x."""
    if not y.precedes(x):
        error_message = f"Möbius function requested for {y} which is not below {x}."
        logger.error(error_message)
        raise OrderError(error_message)
    poset = set(within)
    poset.add(y)
    return moebius_column(x, poset)[y]
