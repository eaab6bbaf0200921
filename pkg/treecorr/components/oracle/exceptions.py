""" Custom exceptions for the oracle component """
import logging

from treecorr.components.vectors.exceptions import BudgetExceeded  # noqa: F401
from treecorr.exceptions import TreecorrError

logger = logging.getLogger(__name__)


class DegenerateMass(TreecorrError):
    """The exception to be raised if a truncated grid misses more probability mass than the
    certificate tolerance allows"""

    code = "degenerate_mass"


class Unbounded(TreecorrError):
    """The exception to be raised if a linear program has no finite optimum"""

    code = "unbounded"


class Infeasible(TreecorrError):
    """The exception to be raised if a linear program has no feasible point"""

    code = "infeasible"


class NumericalFailure(TreecorrError):
    """The exception to be raised if the simplex runs out of pivots or its solution fails the
    primal, dual or duality gap checks"""

    code = "numerical_failure"
