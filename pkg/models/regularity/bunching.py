import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy.stats import norm, qmc

from models.spectral.spectrum import SpectralData
from scripts.logging_config import logger
from utils.errors import NotCodimensionOne

NU_STEP = 0.1
NU_MAX = 4.0
SATISFIED_TOL = 1e-12
VOLUME_TOL = 1e-12
BUNCHING_COLUMNS = ['t', 'nu', 'weak_sup', 'stable_sup']


def default_nu_grid() -> np.ndarray:
    return np.round(np.arange(0.0, NU_MAX + NU_STEP / 2, NU_STEP), 10)


@dataclass(frozen=True, eq=False)
class BunchingReport:
    """
    Closed-form bunching sups of the linear suspension at flow time t.

    Attributes:
        t (float): Flow time.
        nu_grid (np.ndarray): Exponents.
        weak_sups (np.ndarray): sup |D^t v^s| |D^{-t} v_1^u| |D^t v_2^u|^nu per exponent.
        stable_sups (np.ndarray): sup |D^t v^s| |D^t v^u|^nu per exponent.
        weak_stable_sup (float): Weak sup at nu = 1.
        stable_sup (float): Stable sup at nu = 1.
        nu_max_weak (Optional[float]): Largest exponent whose weak condition holds.
        nu_max_stable (Optional[float]): Largest exponent whose stable condition holds.
        volume_defect (Optional[float]): |J^s J^u - 1|, None when E^s is not one-dimensional.
    """
    t: float
    nu_grid: np.ndarray
    weak_sups: np.ndarray
    stable_sups: np.ndarray
    weak_stable_sup: float
    stable_sup: float
    nu_max_weak: Optional[float]
    nu_max_stable: Optional[float]
    volume_defect: Optional[float] = None


def _log_rates(spectral: SpectralData):
    return (math.log(spectral.stable_modulus), math.log(spectral.min_unstable_modulus),
            math.log(spectral.max_unstable_modulus))


def _largest_satisfied(nu_grid: np.ndarray, logs: np.ndarray) -> Optional[float]:
    ok = logs < -SATISFIED_TOL
    return float(nu_grid[ok].max()) if ok.any() else None


def volume_identity_defect(spectral: SpectralData, t: float = 1.0, roof_mean: float = 1.0) -> float:
    """
    |J^s J^u - 1| over flow time t, with Jacobians taken from the eigenvalue moduli.

    Raises:
        NotCodimensionOne: E^s is not one-dimensional.
    """
    if spectral.stable_dim != 1:
        raise NotCodimensionOne(f"Volume identity check needs dim E^s = 1, got {spectral.stable_dim}")
    moduli = np.abs(np.asarray(spectral.eigenvalues, dtype=complex))
    log_js = float(np.sum(np.log(moduli[moduli < 1.0])))
    log_ju = float(np.sum(np.log(moduli[moduli > 1.0])))
    return abs(math.expm1((log_js + log_ju) * t / roof_mean))


def bunching_report(spectral: SpectralData, roof_mean: float, t: float,
                    nu_grid: Optional[Sequence[float]] = None) -> BunchingReport:
    """
    Evaluates both sup-conditions for C^nu regularity of the stable distributions.

    For a linear base the extremal vectors are the root directions, so with n = t / roof_mean
    the stable sup is (lam xi_l^nu)^n and the weak one (lam xi_1^{-1} xi_l^nu)^n. A condition
    holds when its logarithm is below -1e-12.

    Args:
        spectral (SpectralData): Spectral data of the base.
        roof_mean (float): Mean return time.
        t (float): Flow time, at least roof_mean.
        nu_grid (Optional[Sequence[float]]): Exponents; 0.1 steps on [0, 4] by default.

    Returns:
        BunchingReport: Sups per exponent, values at nu = 1 and the largest admissible exponents.
    """
    if roof_mean <= 0:
        raise ValueError("roof_mean must be positive")
    if t < roof_mean:
        raise ValueError(f"t = {t} is shorter than one return time {roof_mean}")
    nu = default_nu_grid() if nu_grid is None else np.asarray(nu_grid, dtype=float)
    n = t / roof_mean
    log_lam, log_xi1, log_xil = _log_rates(spectral)
    stable_logs = n * (log_lam + nu * log_xil)
    weak_logs = n * (log_lam - log_xi1 + nu * log_xil)

    defect = None
    if spectral.stable_dim == 1:
        defect = volume_identity_defect(spectral, t, roof_mean)
        if defect > VOLUME_TOL:
            logger.warning(f"Volume identity off by {defect:.2e}")

    report = BunchingReport(
        t=float(t), nu_grid=nu, weak_sups=np.exp(weak_logs), stable_sups=np.exp(stable_logs),
        weak_stable_sup=math.exp(n * (log_lam - log_xi1 + log_xil)), stable_sup=math.exp(n * (log_lam + log_xil)),
        nu_max_weak=_largest_satisfied(nu, weak_logs), nu_max_stable=_largest_satisfied(nu, stable_logs),
        volume_defect=defect,
    )
    logger.info(f"Bunching at t={t:g}: stable sup {report.stable_sup:.6g}, nu_max stable {report.nu_max_stable}, "
                f"weak {report.nu_max_weak}")
    return report


def bunching_frame(reports: Sequence[BunchingReport]) -> pd.DataFrame:
    rows = [{'t': r.t, 'nu': float(v), 'weak_sup': float(w), 'stable_sup': float(s)}
            for r in reports for v, w, s in zip(r.nu_grid, r.weak_sups, r.stable_sups)]
    return pd.DataFrame(rows, columns=BUNCHING_COLUMNS)


@dataclass(frozen=True)
class SampledSup:
    sampled: float
    closed_form: float
    steps: int

    @property
    def rate_ratio(self) -> float:
        """(sampled / closed form)^(1/n); tends to 1 as n grows."""
        return (self.sampled / self.closed_form) ** (1.0 / self.steps)


def _sphere(dim: int, samples: int, seed: int) -> np.ndarray:
    points = qmc.Sobol(d=dim, scramble=True, seed=seed).random_base2(int(math.ceil(math.log2(samples))))
    vectors = norm.ppf(points[:samples])
    return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)


def sampled_bunching_sup(spectral: SpectralData, steps: int, nu: float, weak: bool = False,
                         samples: int = 1024, seed: int = 0) -> SampledSup:
    """
    Stable (or weak) sup over quasi-random unit vectors after `steps` base iterations.

    The sup of a product of independent factors is the product of the factor sups. Norms
    are taken in the orthonormal leaf bases, which differ from the adapted norm of the
    closed form by a bounded factor, so agreement is in growth rate.
    """
    if steps < 1:
        raise ValueError("steps must be positive")
    stable = np.linalg.matrix_power(spectral.stable_matrix, steps)
    unstable = np.linalg.matrix_power(spectral.unstable_matrix, steps)
    vs = _sphere(spectral.stable_dim, samples, seed)
    vu = _sphere(spectral.unstable_dim, samples, seed + 1)
    expand = float(np.max(np.linalg.norm(vu @ unstable.T, axis=1)))
    value = float(np.max(np.linalg.norm(vs @ stable.T, axis=1))) * expand ** nu
    log_lam, log_xi1, log_xil = _log_rates(spectral)
    closed = steps * (log_lam + nu * log_xil)
    if weak:
        back = np.linalg.inv(unstable)
        value *= float(np.max(np.linalg.norm(vu @ back.T, axis=1)))
        closed -= steps * log_xi1
    logger.debug(f"Sampled sup {value:.6g} over {samples} vectors, closed form {math.exp(closed):.6g}")
    return SampledSup(sampled=value, closed_form=math.exp(closed), steps=steps)
