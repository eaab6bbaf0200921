"""
    This module provides the truncated lattice linear programs and the Monte Carlo battery
    estimates of the oracle component
"""
import logging
import math
from fractions import Fraction

import numpy as np
from django.conf import settings

from treecorr.components.hypercube.exceptions import DimensionError
from treecorr.components.main.decorators import timeit
from treecorr.components.oracle.exceptions import DegenerateMass
from treecorr.components.oracle.models import (
    BatteryReport,
    BatteryRow,
    CertificateVerdict,
    LpCertificate,
    TruncatedGrid,
)
from treecorr.components.oracle.simplex import check_lp_budget, solve_lp
from treecorr.components.vectors.utils import (
    default_grid_cap,
    exact_truncated_pmf,
    sample,
)

logger = logging.getLogger(__name__)

# Full pair enumeration in global_violations below this many pairs, sampling above.
FULL_PAIR_CHECK = 500000


def _check_dims(*models):
    dims = {model.dim for model in models}
    if len(dims) != 1:
        error_message = f"The vectors live in different dimensions {sorted(dims)}."
        logger.error(error_message)
        raise DimensionError(error_message)
    return dims.pop()


def grid_pmf(model, grid):
    """The pmf of `model` on the grid points in grid order and the mass it leaves outside."""
    if model.dim != grid.dim:
        raise DimensionError(f"A {model.dim} dimensional vector on a {grid.dim} dimensional grid.")
    pmf = exact_truncated_pmf(model, cap=grid.cap, prune_above=grid.cap)
    if pmf.exact:
        vector = np.full(grid.size, Fraction(0), dtype=object)
    else:
        vector = np.zeros(grid.size)
    for point, probability in pmf.probabilities.items():
        vector[grid.index(point)] = probability
    return vector, pmf.mass_defect


def constraint_count(grid, monotone=False):
    """Number of rows local_constraints builds for `grid`."""
    m, d = grid.cap, grid.dim
    count = math.comb(d, 2) * m**2 * (m + 1) ** (d - 2) if d > 1 else 0
    if monotone:
        count += d * m * (m + 1) ** (d - 1)
    return count


def local_constraints(grid, monotone=False):
    """Rows of A Φ <= 0 stating the local supermodular inequalities

        Φ(x + e_i + e_j) + Φ(x) >= Φ(x + e_i) + Φ(x + e_j)   for i < j,

    and with monotone=True also Φ(x) <= Φ(x + e_i), for every grid point x where the
    shifted points stay on the grid.
    """
    points = grid.points()
    m, d = grid.cap, grid.dim
    strides = [(m + 1) ** (d - 1 - i) for i in range(d)]
    entries = []
    for index, point in enumerate(points.tolist()):
        for i in range(d):
            if point[i] == m:
                continue
            if monotone:
                entries.append({index: 1, index + strides[i]: -1})
            for j in range(i + 1, d):
                if point[j] == m:
                    continue
                entries.append(
                    {
                        index + strides[i] + strides[j]: -1,
                        index: -1,
                        index + strides[i]: 1,
                        index + strides[j]: 1,
                    }
                )
    A = np.zeros((len(entries), grid.size))
    for row, coefficients in enumerate(entries):
        for column, coefficient in coefficients.items():
            A[row, column] = coefficient
    return A, np.zeros(len(entries))


def global_violations(phi, grid, tolerance=None, n_pairs=100000, seed=0):
    """Number of pairs (x, y) of grid points with Φ(x∨y) + Φ(x∧y) < Φ(x) + Φ(y) − tol.

    All pairs are checked on small grids and `n_pairs` random pairs otherwise.
    """
    tolerance = settings.TREECORR_LP_TOLERANCE if tolerance is None else tolerance
    values = np.asarray([float(value) for value in phi])
    points = grid.points()
    radix = np.array([(grid.cap + 1) ** (grid.dim - 1 - i) for i in range(grid.dim)])
    if grid.size * (grid.size - 1) // 2 <= FULL_PAIR_CHECK:
        first, second = np.triu_indices(grid.size, 1)
    else:
        generator = np.random.default_rng(seed)
        first = generator.integers(0, grid.size, size=n_pairs)
        second = generator.integers(0, grid.size, size=n_pairs)
    join = np.maximum(points[first], points[second]) @ radix
    meet = np.minimum(points[first], points[second]) @ radix
    slack = values[join] + values[meet] - values[first] - values[second]
    scale = 1 + np.abs(values).max(initial=0)
    return int(np.count_nonzero(slack < -tolerance * scale))


@timeit
def certify(X, Y, cap=None, monotone=False, exact=False, tolerance=None):
    """Search for a supermodular Φ: {0..m}^d -> [-1, 1] with E[Φ(Y)] < E[Φ(X)].

    Solves min Σ_x (p_Y(x) − p_X(x)) Φ(x) over the local supermodular inequalities
    (nondecreasing as well with monotone=True). Φ = 0 is feasible so the optimum v* is at
    most 0. The verdict is certified when v* >= −(tol + ε_X + ε_Y), with ε the mass each
    vector leaves outside the grid; violated when it is below that and the returned Φ
    re-evaluates to the same value; inconclusive otherwise.
    """
    dim = _check_dims(X, Y)
    tolerance = settings.TREECORR_LP_TOLERANCE if tolerance is None else tolerance
    cap = default_grid_cap([X, Y]) if cap is None else cap
    grid = TruncatedGrid(dim, cap)
    # one box row per grid point on top of the lattice rows
    check_lp_budget(grid.size, constraint_count(grid, monotone) + grid.size, exact)
    A, b = local_constraints(grid, monotone)

    p_x, epsilon_x = grid_pmf(X, grid)
    p_y, epsilon_y = grid_pmf(Y, grid)
    defect = max(float(epsilon_x), float(epsilon_y))
    if defect > settings.TREECORR_MAX_MASS_DEFECT:
        error_message = (
            f"The grid {{0..{cap}}}^{dim} misses mass {defect!r}, more than "
            f"{settings.TREECORR_MAX_MASS_DEFECT!r}."
        )
        logger.error(error_message)
        raise DegenerateMass(
            error_message, detail={"epsilon_x": float(epsilon_x), "epsilon_y": float(epsilon_y)}
        )

    if exact:
        c = [Fraction(y) - Fraction(x) for x, y in zip(p_x, p_y)]
    else:
        c = (p_y.astype(float) - p_x.astype(float)).tolist()
    solution = solve_lp(c, A, b, bounds=(-1, 1), exact=exact, tolerance=tolerance)
    value, phi = solution.value, solution.x

    threshold = tolerance + float(epsilon_x) + float(epsilon_y)
    if value >= -threshold:
        verdict = CertificateVerdict.CERTIFIED
    else:
        recomputed = sum(coefficient * entry for coefficient, entry in zip(c, phi))
        feasible = (
            float(max(A.dot(phi.astype(float)), default=0.0)) <= tolerance
            and float(max(abs(entry) for entry in phi)) <= 1 + tolerance
        )
        confirmed = math.isclose(
            float(recomputed), float(value), rel_tol=1e-9, abs_tol=tolerance
        )
        verdict = (
            CertificateVerdict.VIOLATED
            if feasible and confirmed and recomputed < -threshold
            else CertificateVerdict.INCONCLUSIVE
        )

    certificate = LpCertificate(
        verdict=verdict,
        value=value,
        phi=phi,
        epsilon_x=epsilon_x,
        epsilon_y=epsilon_y,
        tolerance=tolerance,
        grid=grid,
        monotone=monotone,
        exact=exact,
        global_violations=global_violations(phi, grid, tolerance),
        pivots=solution.pivots,
    )
    logger.info(
        f"Certificate on {{0..{cap}}}^{dim}: {verdict.value}, value {float(value)!r} "
        f"after {solution.pivots} pivots."
    )
    return certificate


def _estimate_rows(differences, threshold):
    rows = []
    for name, estimate, standard_error in differences:
        if standard_error > 0:
            flagged = estimate < -threshold * standard_error
        else:
            flagged = estimate < 0
        rows.append(BatteryRow(name, float(estimate), float(standard_error), bool(flagged)))
    return rows


@timeit
def battery_estimate(X, Y, battery, n_samples, seed, threshold=None):
    """E[φ(Y)] − E[φ(X)] per battery member from independent samples of X and Y.

    A member is flagged when its estimate is below −threshold standard errors, which is
    evidence against X <=sm Y.
    """
    dim = _check_dims(X, Y)
    if dim != battery.dim:
        raise DimensionError(f"A dimension {battery.dim} battery for {dim} dimensional vectors.")
    threshold = settings.TREECORR_FLAG_STANDARD_ERRORS if threshold is None else threshold
    xs = sample(X, n_samples, seed, stream="battery/x")
    ys = sample(Y, n_samples, seed, stream="battery/y")
    differences = []
    for member in battery:
        fx, fy = member(xs), member(ys)
        variance = fy.var(ddof=1) / n_samples + fx.var(ddof=1) / n_samples if n_samples > 1 else 0
        differences.append((member.name, fy.mean() - fx.mean(), math.sqrt(variance)))
    report = BatteryReport(n_samples, seed, threshold, _estimate_rows(differences, threshold))
    if report.flagged:
        logger.info(f"{len(report.flagged)} battery members flagged against X <=sm Y.")
    return report


@timeit
def coupled_battery_estimate(sampler, battery, n_samples, seed, threshold=None):
    """E[φ(X_B) − φ(X_A)] per member from the coupled draw, with per-draw differences."""
    threshold = settings.TREECORR_FLAG_STANDARD_ERRORS if threshold is None else threshold
    a_samples, b_samples = sampler.sample(n_samples, seed)
    differences = []
    for member in battery:
        delta = member(b_samples) - member(a_samples)
        error = delta.std(ddof=1) / math.sqrt(n_samples) if n_samples > 1 else 0.0
        differences.append((member.name, delta.mean(), error))
    return BatteryReport(n_samples, seed, threshold, _estimate_rows(differences, threshold))
