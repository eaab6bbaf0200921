""" Custom exceptions for the trees component """
import logging

from treecorr.exceptions import TreecorrError

logger = logging.getLogger(__name__)


class HViolation(TreecorrError):
    """The exception to be raised if a candidate family fails the binary tree hypothesis.

    ``detail`` holds the list of violated clauses, one dict per offending pair."""

    code = "h_violation"
    exit_code = 1

    @property
    def offending_pairs(self):
        return sorted({tuple(violation["pair"]) for violation in self.detail or []})
