import numpy as np
import scipy.linalg


def orthonormal_columns(basis: np.ndarray) -> np.ndarray:
    """
    Orthonormalizes the columns of a basis matrix.

    Args:
        basis (np.ndarray): Array of shape (d, k).

    Returns:
        np.ndarray: Orthonormal array of shape (d, k) spanning the same subspace.
    """
    if basis.shape[1] == 0:
        return basis.copy()
    q, _ = scipy.linalg.qr(basis, mode='economic')
    return q


def smallest_singular_subspace(matrix: np.ndarray, dim: int) -> np.ndarray:
    """
    Returns the right singular vectors of the `dim` smallest singular values.

    Used for null spaces whose dimension is known exactly from integer arithmetic,
    so no rank cutoff is needed.
    """
    _, _, vh = scipy.linalg.svd(matrix)
    return vh[vh.shape[0] - dim:].T.copy()


def numerical_rank(matrix: np.ndarray, rel_cutoff: float = 1e-9, abs_floor: float = 1e-12) -> int:
    if matrix.size == 0:
        return 0
    s = scipy.linalg.svd(matrix, compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > max(rel_cutoff * s[0], abs_floor)))


def distance_to_subspace(vector: np.ndarray, basis: np.ndarray) -> float:
    """Euclidean distance from a vector to the column span of `basis`."""
    if basis.shape[1] == 0:
        return float(np.linalg.norm(vector))
    q = orthonormal_columns(basis)
    return float(np.linalg.norm(vector - q @ (q.T @ vector)))


def principal_angle_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Largest principal angle (radians) between the column spans of u and v."""
    if u.shape[1] == 0 and v.shape[1] == 0:
        return 0.0
    if u.shape[1] == 0 or v.shape[1] == 0:
        return float(np.pi / 2)
    return float(np.max(scipy.linalg.subspace_angles(u, v)))


def loglog_slope(x_vals, y_vals) -> float:
    """Least-squares slope of log(y) against log(x)."""
    coeffs = np.polyfit(np.log(np.asarray(x_vals, dtype=float)), np.log(np.asarray(y_vals, dtype=float)), 1)
    return float(coeffs[0])
