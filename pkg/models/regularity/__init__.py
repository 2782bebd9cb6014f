from models.regularity.bunching import (
    BunchingReport,
    SampledSup,
    bunching_frame,
    bunching_report,
    default_nu_grid,
    sampled_bunching_sup,
    volume_identity_defect,
)
