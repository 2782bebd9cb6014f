from fractions import Fraction
from typing import Sequence, Tuple

import numpy as np

ExactPoint = Tuple[Fraction, ...]


def exact_scalar(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, str):
        return Fraction(c)
    if isinstance(c, (int, np.integer)):
        return Fraction(int(c))
    return Fraction(float(c))


def to_exact(x) -> ExactPoint:
    """
    Converts a point to exact rationals reduced into [0, 1)^d.

    Floats are converted without rounding, so `to_float(to_exact(x)) == x % 1`.

    Args:
        x: Sequence of floats, ints or Fractions.

    Returns:
        ExactPoint: Tuple of Fractions in [0, 1).
    """
    return tuple(exact_scalar(c) % 1 for c in x)


def to_float(x: ExactPoint) -> np.ndarray:
    return np.array([float(c) for c in x])


def shift(x: ExactPoint, v: Sequence[float]) -> ExactPoint:
    """Adds a (float or rational) displacement exactly and reduces mod 1."""
    return tuple((c + exact_scalar(d)) % 1 for c, d in zip(x, v))


def affine_step(rows: Tuple[Tuple[int, ...], ...], translation: ExactPoint, x: ExactPoint) -> ExactPoint:
    """
    Applies x -> Mx + v (mod 1) in exact arithmetic.

    Args:
        rows: Integer matrix rows.
        translation: Rational translation part.
        x: Exact point.

    Returns:
        ExactPoint: Image point.
    """
    return tuple((sum(m * c for m, c in zip(row, x)) + t) % 1 for row, t in zip(rows, translation))


def wrap(delta: np.ndarray) -> np.ndarray:
    """Wraps displacements into [-1/2, 1/2)."""
    return (np.asarray(delta, dtype=float) + 0.5) % 1.0 - 0.5


def exact_wrap(delta: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    half = Fraction(1, 2)
    return tuple((c + half) % 1 - half for c in delta)


def torus_distance(x, y) -> float:
    return float(np.linalg.norm(wrap(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))))
