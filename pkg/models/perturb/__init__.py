from models.perturb.holonomy import (
    Claim44Report,
    GraphTime,
    SweepReport,
    claim44_check,
    claim44_frame,
    default_gradient_grid,
    grassmannian_sweep,
    graph_time_terms,
    holonomy_derivative,
    kappa,
    remainder_exponent,
    returning_sequence,
    stable_graph_time,
)
from models.perturb.section import Bump, HeteroclinicDatum, SectionChart
