"""Networks of linear control loops sharing a contention-based sensor link.

The package simulates event-triggered LQG loops whose sensors contend for a
p-persistent CSMA medium: scheduler policies (including the innovation
threshold that keeps the loop free of control/estimation coupling), the
prediction observer, finite-horizon LQG control, the contention model, a
seeded Monte Carlo harness, and the exact scalar two-step problem where the
probing incentive of the first input can be computed and compared against
certainty equivalence.
"""

from .control import (
    CostReport,
    RiccatiSolution,
    ce_control,
    ce_u0,
    evaluate_cost,
    jdp_closed_form,
    riccati_backward,
    two_step_s1,
    two_step_stationarity_residual,
    two_step_u0_optimal,
    two_step_u1,
)
from .errors import (
    BracketingError,
    ConfigurationError,
    DegenerateTruncationError,
    InfeasibleConditioningError,
    NumericalError,
    ProtocolError,
    QuadratureError,
)
from .estimation import (
    BurstEstimate,
    ObserverState,
    SensorKf,
    TwoStepPosterior,
    general_estimate_burst,
    observer_update,
    sensor_kf_step,
    tau_update,
    two_step_posterior,
)
from .model import (
    LoopConfig,
    NetworkScenario,
    PlantModel,
    RngStream,
    plant_step,
    sample_noise,
    scenario_equal,
    uncontrolled_state,
)
from .network import (
    CrmConfig,
    SlotOutcome,
    TrafficSource,
    resolve_contention,
    traffic_step,
)
from .scheduling import (
    SchedulerInput,
    SchedulerPolicy,
    decide,
    is_symmetric_control_free,
)
from .sim import (
    DualEffectReport,
    LoopTrace,
    MonteCarloResult,
    SweepResult,
    ce_law,
    dual_effect_experiment,
    monte_carlo,
    run_episode,
    sweep_threshold,
    zero_law,
)
from .stats import (
    QuadratureSpec,
    TruncatedGaussian,
    compound_density,
    conditional_moments_compound,
    find_root,
    integrate,
    std_normal_cdf,
    std_normal_pdf,
    truncated_moments,
)

__version__ = "0.1.0"
