"""gpm: composite indices, spatial panel econometrics, Parzen-window
decision fusion, and a three-party evolutionary game."""

from .errors import GpmError, NumericalError, SchemaError, ValidationError
from .panel import (
    PanelDataset,
    SpatialWeights,
    build_inverse_distance_weights,
    haversine_km,
    load_coordinates_csv,
    load_panel_csv,
    write_panel_csv,
)
from .indices import (
    IndexResult,
    Indicator,
    IndicatorSystem,
    build_index,
    composite_index,
    entropy_weights,
    normalize_minmax,
)
from .econometrics import (
    CoefTable,
    ModerationFit,
    RegressionSpec,
    SdmFit,
    ThresholdFit,
    fit_fixed_effects,
    fit_moderation,
    fit_sdm,
    fit_threshold,
)
from .fusion import (
    FusionDecision,
    FusionModel,
    KernelSpec,
    append_observation,
    class_conditional_density,
    fuse_decision,
    parzen_density,
)
from .game import (
    EquilibriumReport,
    GamePayoffParams,
    StrategyState,
    Trajectory,
    default_preset,
    expected_payoffs,
    find_equilibria,
    jacobian,
    payoff_table,
    replicator_rhs,
    simulate_trajectory,
    vertex_eigenvalues,
)
from .report import emit_svg, save_png

__version__ = "0.1.0"
