from models.roof.livshits import (
    CoboundarySolution,
    ObstructionReport,
    PeriodicOrbitRecord,
    birkhoff_sum,
    is_constant_roof_equivalent,
    obstruction_frame,
    periodic_obstructions,
    periodic_points,
    solve_coboundary,
)
from models.roof.trig_polynomial import RoofFunction, TrigPolynomial
