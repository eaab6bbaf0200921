"""
Vertices of the d-dimensional unit hypercube.

A vertex is a subset of {1..d}. It is stored as a bitmask where coordinate i lives in
bit i - 1, and written as a bitstring whose first character is coordinate 1, so the
subset {1, 2, 5} of {1..5} reads "11001".
"""
import logging
from dataclasses import dataclass

from django.conf import settings

from treecorr.components.hypercube.exceptions import DimensionError, VertexIndexError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HypercubeVertex:
    dim: int
    mask: int

    def __post_init__(self):
        if not 1 <= self.dim <= settings.TREECORR_MAX_DIM:
            error_message = (
                f"Dimension {self.dim} is outside 1..{settings.TREECORR_MAX_DIM}."
            )
            logger.error(error_message)
            raise DimensionError(error_message)
        if not 0 <= self.mask < (1 << self.dim):
            error_message = f"Mask {self.mask} does not fit in {self.dim} coordinates."
            logger.error(error_message)
            raise DimensionError(error_message)

    @classmethod
    def from_members(cls, dim, members):
        mask = 0
        for index in members:
            if not 1 <= index <= dim:
                error_message = f"Index {index} is outside 1..{dim}."
                logger.error(error_message)
                raise VertexIndexError(error_message)
            mask |= 1 << (index - 1)
        return cls(dim, mask)

    @classmethod
    def from_bitstring(cls, bitstring):
        bitstring = bitstring.strip()
        if not bitstring or set(bitstring) - {"0", "1"}:
            error_message = f"'{bitstring}' is not a bitstring."
            logger.error(error_message)
            raise ValueError(error_message)
        return cls.from_members(
            len(bitstring),
            [position + 1 for position, bit in enumerate(bitstring) if bit == "1"],
        )

    @classmethod
    def basis(cls, dim, index):
        return cls.from_members(dim, [index])

    @classmethod
    def origin(cls, dim):
        return cls(dim, 0)

    @classmethod
    def full(cls, dim):
        return cls(dim, (1 << dim) - 1)

    @property
    def members(self):
        return frozenset(i + 1 for i in range(self.dim) if self.mask >> i & 1)

    @property
    def size(self):
        return bin(self.mask).count("1")

    def is_origin(self):
        return self.mask == 0

    def __contains__(self, index):
        return 1 <= index <= self.dim and bool(self.mask >> (index - 1) & 1)

    def __len__(self):
        return self.size

    def __str__(self):
        return self.to_bitstring()

    def _check_same_dim(self, other):
        if self.dim != other.dim:
            error_message = (
                f"Vertices of dimensions {self.dim} and {other.dim} can not be compared."
            )
            logger.error(error_message)
            raise DimensionError(error_message)

    def _check_index(self, index):
        if not 1 <= index <= self.dim:
            error_message = f"Index {index} is outside 1..{self.dim}."
            logger.error(error_message)
            raise VertexIndexError(error_message)

    def precedes(self, other):
        self._check_same_dim(other)
        return self.mask & ~other.mask == 0

    def strictly_precedes(self, other):
        return self.precedes(other) and self.mask != other.mask

    def remove(self, index):
        self._check_index(index)
        return HypercubeVertex(self.dim, self.mask & ~(1 << (index - 1)))

    def add(self, index):
        self._check_index(index)
        return HypercubeVertex(self.dim, self.mask | (1 << (index - 1)))

    def join(self, other):
        self._check_same_dim(other)
        return HypercubeVertex(self.dim, self.mask | other.mask)

    def meet(self, other):
        self._check_same_dim(other)
        return HypercubeVertex(self.dim, self.mask & other.mask)

    def permute(self, permutation):
        """Image of the vertex under ``permutation`` (a mapping i -> pi(i) on 1..dim)."""
        return HypercubeVertex.from_members(
            self.dim, [permutation[index] for index in self.members]
        )

    def to_bitstring(self):
        return "".join("1" if self.mask >> i & 1 else "0" for i in range(self.dim))

    def to_vector(self):
        return tuple(self.mask >> i & 1 for i in range(self.dim))

    def sort_key(self):
        return (self.size, self.to_bitstring())
