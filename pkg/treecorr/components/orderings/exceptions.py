""" Custom exceptions for the orderings component """
import logging

from treecorr.exceptions import TreecorrError

logger = logging.getLogger(__name__)


class FamilyMismatch(TreecorrError):
    """The exception to be raised if two models can not be compared by the same criterion"""

    code = "family_mismatch"


class MeanMismatch(TreecorrError):
    """The exception to be raised if the covariance form of a Lévy difference is requested for
    vectors with different means"""

    code = "mean_mismatch"


class Inconsistency(TreecorrError):
    """The exception to be raised if two independent evaluations of the same quantity disagree
    (signals a bug)"""

    code = "inconsistency"


class MissingVertex(TreecorrError):
    """The exception to be raised if a test function is undefined on a vertex it is needed at"""

    code = "missing_vertex"


class UnnormalisedTestFunction(TreecorrError):
    """The exception to be raised if a test function on C_d does not vanish at the origin"""

    code = "unnormalised_test_function"


class CouplingUnavailable(TreecorrError):
    """The exception to be raised if the binomial coupling can not be run at a pair"""

    code = "coupling_unavailable"
