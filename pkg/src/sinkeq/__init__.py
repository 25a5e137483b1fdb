"""Exact sink-equilibrium analysis for finite normal-form games."""

from .dynamics import (
    BEST,
    BETTER,
    ResponseSet,
    TransitionKernel,
    best_response_set,
    better_response_set,
    build_kernel,
    is_singleton_br,
)
from .errors import (
    CertificateNotFoundError,
    DegenerateWelfareError,
    GameAnalysisError,
    InvalidActionError,
    InvalidParametersError,
    NoEquilibriumError,
    NumericalFailureError,
    SchemaError,
    ValidationError,
    WitnessNotFoundError,
)
from .game import (
    JointAction,
    NormalFormGame,
    enumerate_nash,
    game_from_dict,
    game_to_dict,
    is_nash,
    load_game,
    optimal_profile,
    price_of_anarchy,
)
from .generators import (
    CoveringInstance,
    CoveringMonteCarloSpec,
    MonteCarloSummary,
    RadioInstance,
    RadioMonteCarloSpec,
    TrialResult,
    counterexample_game,
    covering_instance_from_dict,
    covering_instance_to_dict,
    covering_sinking_bound,
    expected_covering_misalignment,
    make_covering_game,
    make_radio_game,
    philox_rng,
    radio_instance_from_dict,
    radio_instance_to_dict,
    radio_sinking_bound,
    run_monte_carlo,
    sample_covering_instance,
    sample_radio_instance,
    trial_rng,
)
from .sinks import (
    SinkEquilibrium,
    price_of_sinking,
    sink_components,
    sink_equilibria,
    stationary_distribution,
    strongly_connected_components,
)
from .smoothness import (
    BoundReport,
    MisalignmentReport,
    SinkWitness,
    SmoothnessCertificate,
    additive_sinking_bound,
    arithmetic_misalignment,
    best_smoothness,
    better_response_witness,
    bound_report,
    check_smoothness,
    geometric_misalignment,
    measure_misalignment,
    multiplicative_sinking_bound,
)

__version__ = "0.1.0"
