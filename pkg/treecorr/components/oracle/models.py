import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from django.conf import settings

from treecorr.components.oracle.exceptions import BudgetExceeded

logger = logging.getLogger(__name__)


class CertificateVerdict(str, Enum):
    CERTIFIED = "certified"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class TruncatedGrid:
    """The lattice {0..cap}^dim in lexicographic order (last coordinate fastest)."""

    dim: int
    cap: int

    def __post_init__(self):
        if self.dim < 1 or self.cap < 0:
            raise ValueError(f"Invalid grid {{0..{self.cap}}}^{self.dim}.")
        if self.size > settings.TREECORR_LP_BUDGET:
            error_message = (
                f"The grid {{0..{self.cap}}}^{self.dim} has {self.size} points, over the "
                f"budget of {settings.TREECORR_LP_BUDGET}."
            )
            logger.error(error_message)
            raise BudgetExceeded(error_message)

    @property
    def size(self):
        return (self.cap + 1) ** self.dim

    def points(self):
        return np.array(
            list(itertools.product(range(self.cap + 1), repeat=self.dim)), dtype=np.int64
        ).reshape(self.size, self.dim)

    def index(self, point):
        index = 0
        for value in point:
            index = index * (self.cap + 1) + int(value)
        return index

    def contains(self, point):
        return all(0 <= value <= self.cap for value in point)


@dataclass
class LpSolution:
    value: object
    x: np.ndarray
    duals: np.ndarray
    duality_gap: object
    pivots: int
    exact: bool


@dataclass
class LpCertificate:
    verdict: CertificateVerdict
    value: object
    phi: np.ndarray
    epsilon_x: object
    epsilon_y: object
    tolerance: float
    grid: TruncatedGrid
    monotone: bool = False
    exact: bool = False
    global_violations: int = 0
    pivots: int = 0


@dataclass(frozen=True)
class SupermodularBattery:
    dim: int
    members: tuple
    seed: Optional[int] = None

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def member(self, name):
        for member in self.members:
            if member.name == name:
                return member
        raise KeyError(name)


@dataclass(frozen=True)
class BatteryRow:
    name: str
    estimate: float
    standard_error: float
    flagged: bool


@dataclass
class BatteryReport:
    n_samples: int
    seed: int
    threshold: float
    rows: list = field(default_factory=list)

    @property
    def flagged(self):
        return [row for row in self.rows if row.flagged]
