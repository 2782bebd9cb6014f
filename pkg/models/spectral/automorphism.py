from dataclasses import dataclass
from functools import cached_property
from typing import List, Sequence, Tuple

import numpy as np
import sympy

_X = sympy.Symbol('x')


@dataclass(frozen=True)
class IntegerMatrix:
    """
    Square integer matrix with determinant +-1, i.e. an automorphism of the torus.

    The determinant is computed exactly, so unimodularity is checked without rounding.
    """
    entries: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in row) for row in self.entries)
        object.__setattr__(self, 'entries', rows)
        d = len(rows)
        if d < 2:
            raise ValueError(f"Matrix dimension must be at least 2, got {d}")
        if any(len(row) != d for row in rows):
            raise ValueError("Matrix must be square")
        if abs(self.determinant) != 1:
            raise ValueError(f"Matrix must have determinant +-1, got {self.determinant}")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "IntegerMatrix":
        return cls(tuple(tuple(row) for row in rows))

    @property
    def dim(self) -> int:
        return len(self.entries)

    @cached_property
    def determinant(self) -> int:
        return int(self.to_sympy().det())

    @cached_property
    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=float)

    @cached_property
    def inverse(self) -> "IntegerMatrix":
        inv = self.to_sympy().inv()
        return IntegerMatrix.from_rows([[int(inv[i, j]) for j in range(self.dim)] for i in range(self.dim)])

    @cached_property
    def transpose(self) -> "IntegerMatrix":
        return IntegerMatrix(tuple(zip(*self.entries)))

    def to_sympy(self) -> sympy.Matrix:
        return sympy.Matrix(self.entries)

    def power_minus_identity(self, n: int) -> sympy.Matrix:
        """Exact integer matrix M^n - I."""
        return self.to_sympy() ** n - sympy.eye(self.dim)

    def to_list(self) -> List[List[int]]:
        return [list(row) for row in self.entries]


def characteristic_polynomial(matrix: IntegerMatrix) -> List[int]:
    """
    Computes det(xI - M) exactly.

    Args:
        matrix (IntegerMatrix): The automorphism.

    Returns:
        List[int]: Monic integer coefficients, highest degree first.
    """
    poly = matrix.to_sympy().charpoly(_X)
    return [int(c) for c in poly.all_coeffs()]


def companion(coeffs: Sequence[int]) -> IntegerMatrix:
    """
    Builds the companion matrix of a monic integer polynomial.

    Ones sit on the subdiagonal and the last column holds the negated coefficients,
    so the characteristic polynomial reproduces `coeffs`.

    Args:
        coeffs (Sequence[int]): Coefficients, highest degree first, leading coefficient 1.

    Returns:
        IntegerMatrix: The companion matrix.
    """
    coeffs = [int(c) for c in coeffs]
    if coeffs[0] != 1:
        raise ValueError(f"Polynomial must be monic, got leading coefficient {coeffs[0]}")
    d = len(coeffs) - 1
    rows = [[0] * d for _ in range(d)]
    for i in range(d):
        rows[i][d - 1] = -coeffs[d - i]
        if i > 0:
            rows[i][i - 1] = 1
    return IntegerMatrix.from_rows(rows)


def square_free_factors(coeffs: Sequence[int]) -> List[Tuple[List[int], int]]:
    """Exact square-free decomposition as (factor coefficients, multiplicity) pairs."""
    _, factors = sympy.Poly(list(coeffs), _X).sqf_list()
    return [([int(c) for c in f.all_coeffs()], int(m)) for f, m in factors if f.degree() > 0]
