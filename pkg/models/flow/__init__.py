from models.flow.leaves import (
    CHART_RADIUS,
    AdjustmentSeries,
    PreciseLeaves,
    leaf_coordinates,
    precise_leaves,
    stable_adjustment,
    stable_adjustment_gradient,
    strong_manifold_point,
    time_adjustment,
    unstable_adjustment,
    unstable_adjustment_gradient,
)
from models.flow.suspension import FlowPoint, SuspensionFlow, evolve, flow_distance, hitting_time, trajectory_frame
