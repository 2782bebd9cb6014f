from models.spectral.automorphism import IntegerMatrix, characteristic_polynomial, companion
from models.spectral.catalog import CatalogEntry, catalog_frame, enumerate_catalog
from models.spectral.conditions import (
    InvariantSubspaceCatalog,
    SpectralGapReport,
    invariant_unstable_subspaces,
    spectral_gap_condition,
)
from models.spectral.spectrum import RootBlock, SpectralData, spectral_data
