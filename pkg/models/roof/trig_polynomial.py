from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, Sequence, Tuple, Union

import numpy as np

from scripts.logging_config import logger

Frequency = Tuple[int, ...]
TWO_PI = 2.0 * np.pi
HERMITIAN_TOL = 1e-14
_CHUNK = 1 << 16


@dataclass(frozen=True, eq=False)
class TrigPolynomial:
    """
    Real-valued trigonometric polynomial on the d-torus.

    Stored as sorted (frequency, complex coefficient) pairs; the coefficient of -k must be
    the conjugate of the coefficient of k.
    """
    dim: int
    terms: Tuple[Tuple[Frequency, complex], ...]

    def __post_init__(self):
        merged: Dict[Frequency, complex] = {}
        for k, c in self.terms:
            k = tuple(int(v) for v in k)
            if len(k) != self.dim:
                raise ValueError(f"Frequency {k} does not match dimension {self.dim}")
            merged[k] = merged.get(k, 0j) + complex(c)
        cleaned = tuple(sorted((k, c) for k, c in merged.items() if c != 0))
        object.__setattr__(self, 'terms', cleaned)
        for k, c in cleaned:
            partner = merged.get(tuple(-v for v in k), 0j)
            if abs(partner - c.conjugate()) > HERMITIAN_TOL * (1.0 + abs(c)):
                raise ValueError(f"Coefficients at {k} and its negative are not conjugate; polynomial is not real")

    @classmethod
    def from_terms(cls, dim: int, mapping: Union[Dict[Frequency, complex], Iterable]) -> "TrigPolynomial":
        items = mapping.items() if isinstance(mapping, dict) else mapping
        return cls(dim, tuple((tuple(k), complex(c)) for k, c in items))

    @classmethod
    def constant(cls, dim: int, value: float) -> "TrigPolynomial":
        return cls(dim, (((0,) * dim, complex(value)),))

    @classmethod
    def cosine(cls, dim: int, k: Sequence[int], amplitude: float) -> "TrigPolynomial":
        """amplitude * cos(2 pi k.x)"""
        k = tuple(k)
        neg = tuple(-v for v in k)
        return cls(dim, ((k, amplitude / 2.0), (neg, amplitude / 2.0)))

    @classmethod
    def sine(cls, dim: int, k: Sequence[int], amplitude: float) -> "TrigPolynomial":
        """amplitude * sin(2 pi k.x)"""
        k = tuple(k)
        neg = tuple(-v for v in k)
        return cls(dim, ((k, -0.5j * amplitude), (neg, 0.5j * amplitude)))

    def coefficient(self, k: Sequence[int]) -> complex:
        return dict(self.terms).get(tuple(int(v) for v in k), 0j)

    @cached_property
    def frequencies(self) -> np.ndarray:
        if not self.terms:
            return np.zeros((0, self.dim))
        return np.array([k for k, _ in self.terms], dtype=float)

    @cached_property
    def coefficients(self) -> np.ndarray:
        return np.array([c for _, c in self.terms], dtype=complex)

    @property
    def max_frequency(self) -> int:
        return max((max(abs(v) for v in k) for k, _ in self.terms), default=0)

    @property
    def mean(self) -> float:
        return self.coefficient((0,) * self.dim).real

    @property
    def is_constant(self) -> bool:
        return all(not any(k) for k, _ in self.terms)

    @property
    def lipschitz_bound(self) -> float:
        """Upper bound for the Euclidean norm of the gradient."""
        return float(np.sum(np.abs(self.coefficients) * TWO_PI * np.linalg.norm(self.frequencies, axis=1)))

    @property
    def hessian_bound(self) -> float:
        return float(np.sum(np.abs(self.coefficients) * (TWO_PI * np.linalg.norm(self.frequencies, axis=1)) ** 2))

    @property
    def sup_bound(self) -> float:
        return float(np.sum(np.abs(self.coefficients)))

    def _phases(self, points: np.ndarray) -> np.ndarray:
        return np.exp(1j * TWO_PI * (points @ self.frequencies.T))

    def evaluate(self, x) -> Union[float, np.ndarray]:
        """
        Evaluates the finite Fourier sum.

        Args:
            x: A point of shape (d,) or a batch of shape (N, d).

        Returns:
            float or np.ndarray: Value(s) of the polynomial.
        """
        points = np.asarray(x, dtype=float)
        single = points.ndim == 1
        points = np.atleast_2d(points)
        out = np.empty(points.shape[0])
        for start in range(0, points.shape[0], _CHUNK):
            block = points[start:start + _CHUNK]
            out[start:start + _CHUNK] = np.real(self._phases(block) @ self.coefficients)
        return float(out[0]) if single else out

    def gradient(self, x) -> np.ndarray:
        """Term-wise analytic gradient, shape (d,) or (N, d)."""
        points = np.asarray(x, dtype=float)
        single = points.ndim == 1
        points = np.atleast_2d(points)
        weighted = self._phases(points) * self.coefficients
        grad = np.real(weighted @ (1j * TWO_PI * self.frequencies))
        return grad[0] if single else grad

    def __add__(self, other: "TrigPolynomial") -> "TrigPolynomial":
        return TrigPolynomial(self.dim, self.terms + other.terms)

    def __sub__(self, other: "TrigPolynomial") -> "TrigPolynomial":
        return self + other.scaled(-1.0)

    def scaled(self, factor: float) -> "TrigPolynomial":
        return TrigPolynomial(self.dim, tuple((k, c * factor) for k, c in self.terms))

    def compose(self, matrix) -> "TrigPolynomial":
        """The polynomial x -> p(Mx); frequency k moves to M^T k."""
        mt = np.array(matrix.entries, dtype=np.int64).T
        return TrigPolynomial(self.dim, tuple((tuple(int(v) for v in mt @ np.array(k)), c) for k, c in self.terms))

    def shifted(self, v: Sequence[float]) -> "TrigPolynomial":
        """The polynomial x -> p(x - v)."""
        v = np.asarray([float(c) for c in v])
        return TrigPolynomial(self.dim, tuple(
            (k, c * np.exp(-1j * TWO_PI * float(np.dot(k, v)))) for k, c in self.terms))

    def to_json_dict(self) -> dict:
        return {
            "dim": self.dim,
            "terms": [{"k": list(k), "re": c.real, "im": c.imag} for k, c in self.terms],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "TrigPolynomial":
        return cls(int(data["dim"]), tuple(
            (tuple(t["k"]), complex(t["re"], t.get("im", 0.0))) for t in data["terms"]))


@dataclass(frozen=True, eq=False)
class RoofFunction:
    """A trigonometric polynomial certified positive on the whole torus."""
    poly: TrigPolynomial
    positivity_margin: float

    @classmethod
    def certify(cls, poly: TrigPolynomial) -> "RoofFunction":
        """
        Certifies positivity by a grid minimum minus a Lipschitz slack.

        Axes carrying a nonzero frequency get 256 points (the first two such axes) or 32
        points (the rest); axes the polynomial does not depend on need a single point.

        Args:
            poly (TrigPolynomial): Candidate roof.

        Returns:
            RoofFunction: The certified roof.

        Raises:
            ValueError: The certified lower bound is not positive.
        """
        active = [j for j in range(poly.dim) if np.any(poly.frequencies[:, j] != 0)] if poly.terms else []
        sizes = [1] * poly.dim
        for rank, j in enumerate(active):
            sizes[j] = 256 if rank < 2 else 32
        axes = [np.arange(n) / n for n in sizes]
        grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing='ij')], axis=1)
        grid_min = float(np.min(poly.evaluate(grid)))
        cell = float(np.sqrt(sum((1.0 / sizes[j]) ** 2 for j in active))) if active else 0.0
        margin = grid_min - poly.lipschitz_bound * cell
        if margin <= 0:
            raise ValueError(f"Roof is not certified positive (grid min {grid_min:.6g}, margin {margin:.6g})")
        logger.debug(f"Roof certified positive with margin {margin:.6g} on {grid.shape[0]} grid points")
        return cls(poly, margin)

    @property
    def dim(self) -> int:
        return self.poly.dim

    @property
    def mean(self) -> float:
        return self.poly.mean

    @property
    def is_constant(self) -> bool:
        return self.poly.is_constant

    def evaluate(self, x):
        return self.poly.evaluate(x)

    def gradient(self, x):
        return self.poly.gradient(x)
