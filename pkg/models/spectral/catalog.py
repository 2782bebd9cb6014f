import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import pandas as pd

from models.spectral.automorphism import IntegerMatrix, characteristic_polynomial, companion
from models.spectral.conditions import SpectralGapReport, spectral_gap_condition
from models.spectral.spectrum import SpectralData, spectral_data
from scripts.logging_config import logger
from utils.errors import NotHyperbolic, RootCertificationError

CATALOG_COLUMNS = ['poly_coeffs', 'd', 'moduli', 'codim_one', 'complex_pair',
                   'mu', 'xi1', 'xil', 'lhs', 'rhs', 'satisfied']


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    matrix: IntegerMatrix
    spectral: SpectralData
    gap: SpectralGapReport

    @property
    def coeffs(self) -> List[int]:
        return characteristic_polynomial(self.matrix)


def _candidate_polynomials(d: int, coeff_bound: int):
    for middle in itertools.product(range(-coeff_bound, coeff_bound + 1), repeat=d - 1):
        for constant in (-1, 1):
            yield (1, *middle, constant)


def _classify(coeffs: Tuple[int, ...]) -> Optional[CatalogEntry]:
    matrix = companion(coeffs)
    try:
        spectral = spectral_data(matrix)
    except (NotHyperbolic, RootCertificationError):
        return None
    if not spectral.codimension_one:
        return None
    return CatalogEntry(matrix=matrix, spectral=spectral, gap=spectral_gap_condition(spectral))


def enumerate_catalog(d: int, coeff_bound: int, workers: int = 1) -> List[CatalogEntry]:
    """
    Enumerates hyperbolic codimension-one companion matrices.

    Candidates are monic integer polynomials with constant term +-1 and remaining
    coefficients in [-coeff_bound, coeff_bound], visited in lexicographic order of their
    coefficients. The order of the result never depends on `workers`.

    Args:
        d (int): Degree, one of 2..5.
        coeff_bound (int): Coefficient bound, at most 10.
        workers (int): Number of worker processes.

    Returns:
        List[CatalogEntry]: Matching matrices with spectral data and gap reports.
    """
    if d not in (2, 3, 4, 5):
        raise ValueError(f"d must be in 2..5, got {d}")
    if not 0 <= coeff_bound <= 10:
        raise ValueError(f"coeff_bound must be in 0..10, got {coeff_bound}")

    candidates = list(_candidate_polynomials(d, coeff_bound))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_classify, candidates, chunksize=64))
    else:
        results = [_classify(c) for c in candidates]

    entries = [r for r in results if r is not None]
    logger.info(f"Catalog d={d}, bound={coeff_bound}: {len(entries)} of {len(candidates)} candidates kept")
    return entries


def catalog_frame(entries: List[CatalogEntry]) -> pd.DataFrame:
    """Tabulates catalog entries with the CSV export columns."""
    rows = []
    for e in entries:
        rows.append({
            'poly_coeffs': ' '.join(str(c) for c in e.coeffs),
            'd': e.matrix.dim,
            'moduli': ' '.join(f"{m:.12g}" for m in e.spectral.moduli),
            'codim_one': e.spectral.codimension_one,
            'complex_pair': e.spectral.complex_unstable_pair,
            'mu': e.gap.mu,
            'xi1': e.gap.xi_1,
            'xil': e.gap.xi_l,
            'lhs': e.gap.lhs,
            'rhs': e.gap.rhs,
            'satisfied': e.gap.satisfied,
        })
    return pd.DataFrame(rows, columns=CATALOG_COLUMNS)
