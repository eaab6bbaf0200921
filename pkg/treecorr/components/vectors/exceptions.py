""" Custom exceptions for the vectors component """
import logging

from treecorr.exceptions import TreecorrError

logger = logging.getLogger(__name__)


class InfeasibleDecomposition(TreecorrError):
    """The exception to be raised if a covariance can not be realised by the requested family
    on the given tree. ``report`` is the FeasibilityReport, ``detail`` its JSON form."""

    code = "infeasible_decomposition"

    def __init__(self, message="", detail=None, report=None):
        super().__init__(message, detail)
        self.report = report


class BudgetExceeded(TreecorrError):
    """The exception to be raised if an enumeration or LP is larger than the configured budget"""

    code = "budget_exceeded"


class UnsupportedFamily(TreecorrError):
    """The exception to be raised if an operation is not defined for a distribution family"""

    code = "unsupported_family"
