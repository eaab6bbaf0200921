import logging
from fractions import Fraction

import numpy as np
from django.conf import settings

from treecorr.components.oracle.exceptions import (
    BudgetExceeded,
    Infeasible,
    NumericalFailure,
    Unbounded,
)
from treecorr.components.oracle.models import LpSolution

logger = logging.getLogger(__name__)


def _exact_array(values, shape=None):
    array = np.empty(len(values), dtype=object)
    array[:] = [Fraction(value) for value in values]
    return array if shape is None else array.reshape(shape)


class TableauSimplex:
    """Dense two-phase tableau simplex for

        minimize c^T u  subject to  A u <= b, u >= 0

    Row 0 of the tableau holds the reduced costs and minus the objective value, rows 1..m
    the constraints. Columns are the structural variables, one slack per row, the phase one
    artificials and the right hand side, in that order.

    Pricing is Dantzig's most negative reduced cost until TREECORR_DEGENERATE_PIVOTS
    consecutive degenerate pivots, then Bland's smallest index rule for the rest of the
    phase. With exact=True every entry is a Fraction and all comparisons are exact.
    """

    def __init__(self, c, A, b, exact=False, tolerance=None, max_pivots=None):
        self.exact = exact
        self.tolerance = (
            Fraction(0)
            if exact
            else float(
                settings.TREECORR_LP_TOLERANCE if tolerance is None else tolerance
            )
        )
        self.max_pivots = (
            settings.TREECORR_LP_MAX_PIVOTS if max_pivots is None else max_pivots
        )
        self.degenerate_limit = settings.TREECORR_DEGENERATE_PIVOTS
        self.n = len(c)
        if exact:
            self.c = _exact_array(list(c))
            self.A = _exact_array(np.asarray(A, dtype=object).ravel().tolist()).reshape(
                -1, self.n
            )
            self.b = _exact_array(list(b))
        else:
            self.c = np.asarray(c, dtype=float)
            self.A = np.asarray(A, dtype=float).reshape(-1, self.n)
            self.b = np.asarray(b, dtype=float)
        self.m = self.A.shape[0]
        self.pivots = 0
        self.tableau, self.basis, self.n_artificial = self._initialize_tableau()

    def _zeros(self, shape):
        if self.exact:
            return np.full(shape, Fraction(0), dtype=object)
        return np.zeros(shape)

    def _initialize_tableau(self):
        """Slack basis, with rows of negative right hand side negated and given an
        artificial variable."""
        n, m = self.n, self.m
        negative = [i for i in range(m) if self.b[i] < 0]
        tableau = self._zeros((m + 1, n + m + len(negative) + 1))
        tableau[1:, :n] = self.A
        tableau[1:, -1] = self.b
        one = Fraction(1) if self.exact else 1.0
        for i in range(m):
            tableau[1 + i, n + i] = one
        basis = [n + i for i in range(m)]
        for a, i in enumerate(negative):
            tableau[1 + i, : n + m] = -tableau[1 + i, : n + m]
            tableau[1 + i, -1] = -tableau[1 + i, -1]
            tableau[1 + i, n + m + a] = one
            basis[i] = n + m + a
        return tableau, basis, len(negative)

    def _find_pivot_column(self, columns, bland):
        costs = self.tableau[0, :columns]
        candidates = np.nonzero(costs < -self.tolerance)[0]
        if len(candidates) == 0:
            return None
        if bland:
            return int(candidates[0])
        return int(candidates[np.argmin(costs[candidates])])

    def _find_pivot_row(self, pivot_col):
        """Minimum ratio test; ties go to the row whose basic variable has the smallest
        index."""
        column = self.tableau[1:, pivot_col]
        rows = np.nonzero(column > self.tolerance)[0]
        if len(rows) == 0:
            return None
        ratios = self.tableau[1:, -1][rows] / column[rows]
        best = min(ratios)
        ties = rows[ratios <= best + self.tolerance]
        return 1 + int(min(ties, key=lambda row: self.basis[row]))

    def _pivot(self, pivot_row, pivot_col):
        tableau = self.tableau
        tableau[pivot_row, :] = tableau[pivot_row, :] / tableau[pivot_row, pivot_col]
        factors = tableau[:, pivot_col].copy()
        factors[pivot_row] = 0
        rows = np.nonzero(factors)[0]
        if len(rows):
            tableau[rows, :] -= np.outer(factors[rows], tableau[pivot_row, :])
        if not self.exact:
            tableau[:, pivot_col] = 0.0
            tableau[pivot_row, pivot_col] = 1.0
        self.basis[pivot_row - 1] = pivot_col
        self.pivots += 1
        if self.pivots > self.max_pivots:
            error_message = f"The simplex exceeded {self.max_pivots} pivots."
            logger.error(error_message)
            raise NumericalFailure(error_message)

    def _iterate(self, columns):
        """Pivot to optimality over the first `columns` columns. Returns the entering
        column of an unbounded ray, or None at an optimum."""
        bland = False
        degenerate = 0
        while True:
            pivot_col = self._find_pivot_column(columns, bland)
            if pivot_col is None:
                return None
            pivot_row = self._find_pivot_row(pivot_col)
            if pivot_row is None:
                return pivot_col
            step = self.tableau[pivot_row, -1] / self.tableau[pivot_row, pivot_col]
            if step <= self.tolerance:
                degenerate += 1
                if not bland and degenerate >= self.degenerate_limit:
                    logger.debug(
                        f"{degenerate} degenerate pivots in a row, switching to Bland's rule."
                    )
                    bland = True
            else:
                degenerate = 0
            self._pivot(pivot_row, pivot_col)

    def _phase_one(self):
        n, m = self.n, self.m
        tableau = self.tableau
        tableau[0, :] = self._zeros(tableau.shape[1])
        tableau[0, n + m : n + m + self.n_artificial] = Fraction(1) if self.exact else 1.0
        for row, variable in enumerate(self.basis):
            if variable >= n + m:
                tableau[0, :] -= tableau[1 + row, :]
        if self._iterate(n + m + self.n_artificial) is not None:
            error_message = "Phase one of the simplex reported an unbounded ray."
            logger.error(error_message)
            raise NumericalFailure(error_message)
        infeasibility = -tableau[0, -1]
        scale = 1 + sum(abs(value) for value in self.b)
        if infeasibility > self.tolerance * scale:
            error_message = (
                f"The linear program is infeasible, the artificial variables sum to "
                f"{float(infeasibility)} at best."
            )
            logger.error(error_message)
            raise Infeasible(error_message, detail={"infeasibility": float(infeasibility)})

    def _transition_to_phase_two(self):
        """Drive zero-level artificials out of the basis, drop redundant rows and the
        artificial columns, and price the original objective against the basis."""
        n, m = self.n, self.m
        redundant = []
        for row, variable in enumerate(list(self.basis)):
            if variable < n + m:
                continue
            entries = np.abs(self.tableau[1 + row, : n + m])
            candidates = np.nonzero(entries > self.tolerance)[0]
            if len(candidates):
                self._pivot(1 + row, int(candidates[0]))
            else:
                redundant.append(row)
        if redundant:
            logger.debug(f"Dropping {len(redundant)} redundant constraint rows.")
            self.tableau = np.delete(self.tableau, [1 + row for row in redundant], axis=0)
            self.basis = [v for row, v in enumerate(self.basis) if row not in redundant]
        keep = list(range(n + m)) + [self.tableau.shape[1] - 1]
        self.tableau = self.tableau[:, keep]
        self.n_artificial = 0

    def _price(self):
        tableau = self.tableau
        tableau[0, :] = self._zeros(tableau.shape[1])
        tableau[0, : self.n] = self.c
        for row, variable in enumerate(self.basis):
            if tableau[0, variable] != 0:
                tableau[0, :] -= tableau[0, variable] * tableau[1 + row, :]

    def solve(self):
        """Returns (u, value, duals) where duals[i] <= 0 is the multiplier of row i."""
        if self.n_artificial:
            self._phase_one()
            self._transition_to_phase_two()
        self._price()
        ray = self._iterate(self.n + self.m)
        if ray is not None:
            error_message = f"The linear program is unbounded along variable {ray}."
            logger.error(error_message)
            raise Unbounded(error_message, detail={"column": ray})
        u = self._zeros(self.n)
        for row, variable in enumerate(self.basis):
            if variable < self.n:
                u[variable] = self.tableau[1 + row, -1]
        value = -self.tableau[0, -1]
        duals = -self.tableau[0, self.n : self.n + self.m]
        return u, value, duals


def tableau_cells(n_variables, n_rows):
    """Upper bound on the dense tableau: the objective row over the variables, one slack
    and at most one artificial per row, and the right hand side."""
    return (n_rows + 1) * (n_variables + 2 * n_rows + 1)


def check_lp_budget(n_variables, n_rows, exact=False):
    """Raise BudgetExceeded unless a program of this shape fits both the size and the
    tableau cell budgets. Called before any tableau is allocated."""
    if exact:
        budget = settings.TREECORR_EXACT_LP_BUDGET
        cell_budget = settings.TREECORR_EXACT_LP_CELL_BUDGET
    else:
        budget = settings.TREECORR_LP_BUDGET
        cell_budget = settings.TREECORR_LP_CELL_BUDGET
    size = n_variables + n_rows
    cells = tableau_cells(n_variables, n_rows)
    if size > budget or cells > cell_budget:
        error_message = (
            f"The linear program has {n_variables} variables and {n_rows} constraints "
            f"({cells} tableau cells), over the {'exact ' if exact else ''}budget of "
            f"{budget} variables and constraints or {cell_budget} cells."
        )
        logger.error(error_message)
        raise BudgetExceeded(
            error_message,
            detail={
                "size": size,
                "budget": budget,
                "cells": cells,
                "cell_budget": cell_budget,
            },
        )


def _normalise_bounds(bounds, n):
    if bounds is None:
        return [(0, None)] * n
    if len(bounds) == 2 and not isinstance(bounds[0], (tuple, list)):
        return [tuple(bounds)] * n
    if len(bounds) != n:
        raise ValueError(f"Expected {n} bounds, got {len(bounds)}.")
    return [tuple(bound) for bound in bounds]


def solve_lp(c, A_ub=None, b_ub=None, bounds=None, exact=False, tolerance=None):
    """Minimize c^T x subject to A_ub x <= b_ub and lo <= x <= hi.

    bounds is one (lo, hi) pair for every variable or a list of pairs; lo must be finite,
    hi may be None. Variables are shifted to x = lo + u and finite upper bounds become
    rows, so the returned duals cover the rows of A_ub followed by one row per finite
    upper bound. The solution is checked for primal and dual feasibility and a duality gap
    within TREECORR_LP_TOLERANCE * (1 + |value|) before it is returned.
    """
    n = len(c)
    bounds = _normalise_bounds(bounds, n)
    if any(lo is None for lo, _ in bounds):
        raise ValueError("Every variable needs a finite lower bound.")
    A = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=object if exact else float)
    A = A.reshape(-1, n)
    b = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=object if exact else float)
    if A.shape[0] != len(b):
        raise ValueError(f"A_ub has {A.shape[0]} rows but b_ub has {len(b)} entries.")

    box = [j for j, (lo, hi) in enumerate(bounds) if hi is not None]
    for j in box:
        if bounds[j][1] < bounds[j][0]:
            error_message = f"Variable {j} has an empty range {bounds[j]}."
            logger.error(error_message)
            raise Infeasible(error_message)

    check_lp_budget(n, A.shape[0] + len(box), exact)

    if exact:
        c = _exact_array(list(c))
        lo = _exact_array([lo for lo, _ in bounds])
        A = _exact_array(A.ravel().tolist(), shape=(-1, n)) if A.size else A.astype(object)
        b = _exact_array(list(b))
        zero = Fraction(0)
    else:
        c = np.asarray(c, dtype=float)
        lo = np.array([lo for lo, _ in bounds], dtype=float)
        zero = 0.0

    box_rows = np.full((len(box), n), zero, dtype=A.dtype)
    box_rhs = np.full(len(box), zero, dtype=A.dtype)
    for row, j in enumerate(box):
        box_rows[row, j] = 1
        box_rhs[row] = bounds[j][1] - lo[j]
    A_full = np.vstack([A, box_rows]) if len(box) else A
    b_full = np.concatenate([b - A.dot(lo) if A.shape[0] else b, box_rhs])

    simplex = TableauSimplex(c, A_full, b_full, exact=exact, tolerance=tolerance)
    u, _, duals = simplex.solve()
    x = lo + u
    value = c.dot(x)
    dual_value = b_full.dot(duals) + c.dot(lo)
    gap = abs(value - dual_value)

    tol = simplex.tolerance
    scale = 1 + abs(value)
    residuals = {
        "primal": max([zero] + list(A_full.dot(u) - b_full) + list(-u)),
        "dual": max([zero] + list(A_full.T.dot(duals) - c) + list(duals)),
        "gap": gap,
    }
    failed = {key: float(residual) for key, residual in residuals.items() if residual > tol * scale}
    if failed:
        error_message = f"The simplex solution failed its checks: {failed}"
        logger.error(error_message)
        raise NumericalFailure(error_message, detail=failed)

    logger.info(
        f"Solved a {A_full.shape[0]}x{n} linear program in {simplex.pivots} pivots, "
        f"value {float(value)}."
    )
    return LpSolution(
        value=value,
        x=x,
        duals=duals,
        duality_gap=gap,
        pivots=simplex.pivots,
        exact=exact,
    )
