""" Custom exceptions for the covariances component """
import logging

from treecorr.exceptions import TreecorrError

logger = logging.getLogger(__name__)


class NotRepresentable(TreecorrError):
    """The exception to be raised if the forward map of an inverted covariance does not give
    the covariance back. ``detail`` holds the residual matrix."""

    code = "not_representable"


class AsymmetricCovariance(TreecorrError):
    """The exception to be raised if a covariance matrix is not symmetric"""

    code = "asymmetric_covariance"


class NegativeVariance(TreecorrError):
    """The exception to be raised if a covariance handed to a random vector construction has a
    negative variance on its diagonal. ``detail`` lists the offending coordinates."""

    code = "negative_variance"


class InversionPathsDisagree(TreecorrError):
    """The exception to be raised if the Möbius inversion and the root to leaves recursion
    return different decompositions (signals a bug)"""

    code = "inversion_paths_disagree"
