"""Interval reachability analysis for nonlinear systems in closed loop with
feed-forward neural-network controllers.

The toolkit combines backward linear bound propagation for the controller
with mixed-monotone decomposition functions for the plant: the closed loop is
embedded into a system of twice the dimension whose single trajectory carries
the moving corners of a box over-approximating the reachable set.  A
two-level partitioning driver trades tightness against runtime.
"""

from .bounds import (
    LayerRelaxation,
    LinearBounds,
    PreActivationBounds,
    activation_relaxation,
    crown_bounds,
    ibp_bounds,
    inclusion_G,
    inclusion_H,
    relu_relaxation,
)
from .config import Obstacle, ScenarioConfig, data_path, load_scenario
from .embedding import (
    STRATEGIES,
    EmbeddingRHS,
    canonical_strategy,
    closed_loop_field,
    make_rhs,
)
from .errors import (
    BoundsEscape,
    BranchError,
    ConfigError,
    DimensionMismatch,
    NNReachError,
    NumericsError,
    OrderingViolation,
)
from .intervals import (
    Box,
    EmbeddingState,
    MetzlerSplit,
    SignedMatrixSplit,
    box_contains,
    metzler_split,
    replace_coord,
    se_leq,
    signed_split,
)
from .network import (
    FeedForwardNetwork,
    Layer,
    forward,
    load_network,
    random_network,
    save_network,
)
from .reach import (
    IntegratorConfig,
    ReachTube,
    check_safety,
    integrate_embedding,
    monte_carlo_trajectories,
    run_algorithm1,
    uniform_partition,
    validate_containment,
)
from .systems import (
    LinearSystemModel,
    SystemModel,
    VehicleModel,
    d_bilinear,
    d_cos,
    d_sin,
    linear_decomposition,
    tight_decomposition_oracle,
    vehicle_decomposition,
    vehicle_field,
)

__version__ = "0.1.0"

__all__ = [
    "Box",
    "BoundsEscape",
    "BranchError",
    "ConfigError",
    "DimensionMismatch",
    "EmbeddingRHS",
    "EmbeddingState",
    "FeedForwardNetwork",
    "IntegratorConfig",
    "Layer",
    "LayerRelaxation",
    "LinearBounds",
    "LinearSystemModel",
    "MetzlerSplit",
    "NNReachError",
    "NumericsError",
    "Obstacle",
    "OrderingViolation",
    "PreActivationBounds",
    "ReachTube",
    "STRATEGIES",
    "ScenarioConfig",
    "SignedMatrixSplit",
    "SystemModel",
    "VehicleModel",
    "activation_relaxation",
    "box_contains",
    "canonical_strategy",
    "check_safety",
    "closed_loop_field",
    "crown_bounds",
    "d_bilinear",
    "d_cos",
    "d_sin",
    "data_path",
    "forward",
    "ibp_bounds",
    "inclusion_G",
    "inclusion_H",
    "integrate_embedding",
    "linear_decomposition",
    "load_network",
    "load_scenario",
    "make_rhs",
    "metzler_split",
    "monte_carlo_trajectories",
    "random_network",
    "relu_relaxation",
    "replace_coord",
    "run_algorithm1",
    "save_network",
    "se_leq",
    "signed_split",
    "tight_decomposition_oracle",
    "uniform_partition",
    "validate_containment",
    "vehicle_decomposition",
    "vehicle_field",
]
