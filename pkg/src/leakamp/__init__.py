"""Exact analysis and simulation of two-party channels with log-ratio leakage."""

from .amplify import (
    AmplifyParams,
    PipelineReport,
    SimStats,
    SweepRow,
    agreement_bracket,
    amplified_leakage,
    amplified_sd,
    amplified_views,
    bounded_execution,
    bounded_output_distribution,
    delta_exact,
    delta_output_pairs,
    delta_simulate,
    delta_simulator,
    expected_calls_delta,
    expected_calls_lambda,
    full_pipeline,
    gap_amplification_params,
    lambda_simulate,
    lambda_simulator,
    predicted_agreement,
    simulate,
    success_probability,
    sweep_threshold,
)
from .channel import (
    Channel,
    LeakageProfile,
    SWBSCParams,
    WBSCParams,
    agreement,
    balance,
    conditioned_views,
    is_balanced,
    leakage,
    leakage_wrt_output,
    normalize_agreement,
    swbsc_params,
    swbsc_to_wbsc,
    wbsc_params,
    wullschleger_condition,
)
from .constructions import (
    NoiseSpec,
    bsc_channel,
    constant_functionality,
    exact_xor_functionality,
    noisy_example_channel,
    noisy_xor_functionality,
    parity_functionality,
    randomized_response_channel,
    revealing_xor_functionality,
    rr_agreement,
    rr_xor_functionality,
)
from .dist import (
    INFINITE,
    Dist,
    LogRatioBudget,
    RepetitionBound,
    condition,
    kl_divergence,
    log_ratio_delta,
    log_ratio_epsilon,
    product,
    product_pair,
    project_to_eps_ball,
    pushforward,
    repetition_bound,
    statistical_distance,
)
from .dpfunc import (
    DPReport,
    Functionality,
    check_eps_dp,
    dp_xor_to_channel,
    group_privacy,
    leakage_wrt_outputs_check,
    measure_accuracy,
    restrict_functionality,
)
from .errors import *  # noqa: F401,F403
from .fanalysis import (
    TruthTable,
    XorWitness,
    find_embedded_xor,
    is_monotone_under_relabeling,
    reduction_report,
)

__version__ = "0.1.0"
