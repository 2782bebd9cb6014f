from models.pcf.matching import (
    MatchingKernelReport,
    MatchingPair,
    PatchReconstruction,
    PlantedConjugacy,
    conjugacy_invariance_check,
    find_independent_pairs,
    matching_kernel_dimension,
    random_pairs,
    reconstruct_conjugacy_patch,
)
from models.pcf.temporal_distance import (
    Quadrilateral,
    TemporalDistanceSample,
    antisymmetry_defect,
    pcf_gradient,
    sample_frame,
    sample_quadrilaterals,
    sample_temporal_distances,
    temporal_distance_geometric,
    temporal_distance_series,
)
