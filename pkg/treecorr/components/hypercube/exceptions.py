""" Custom exceptions for the hypercube component """
import logging

from treecorr.exceptions import TreecorrError

logger = logging.getLogger(__name__)


class DimensionError(TreecorrError, ValueError):
    """The exception to be raised if vertices, trees or matrices of different dimensions are
    combined, or a dimension is outside 1..TREECORR_MAX_DIM"""

    code = "dimension_error"


class VertexIndexError(TreecorrError, IndexError):
    """The exception to be raised if a coordinate index is not in 1..dim"""

    code = "index_error"


class OrderError(TreecorrError):
    """The exception to be raised if the Möbius function is requested for y not below x"""

    code = "order_error"
