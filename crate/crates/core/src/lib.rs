//! Two-qubit CHSH Bell-test simulation and data-consistency analysis.
//!
//! The crate covers the full pipeline of a CHSH experiment at desk scale:
//!
//! - [`linalg`] / [`state`]: dense complex 2x2/4x4 operators, a Hermitian
//!   Jacobi eigensolver, rotation gates, validated density matrices;
//! - [`chsh`]: Bell signals, trace-norm error terms eta and the corrected
//!   classical bound 2 + sum(eta);
//! - [`crosstalk`]: the marginal-difference parameters delta, their eta
//!   budgets, and the rough total-error estimate;
//! - [`channel`] / [`sampling`]: noise models and seeded Born-rule shot
//!   sampling;
//! - [`stats`]: estimators with standard errors and significance counts;
//! - [`optimizer`]: Nelder-Mead settings search and the bias study showing
//!   how optimizing the signal can suppress delta while eta stays large.
//!
//! All numeric code is generic over [`scalar::Scalar`] (`f64` or `f32`); the
//! `*64` aliases below are the concrete types ordinary users want.

pub use num_complex;

pub mod channel;
pub mod chsh;
pub mod crosstalk;
pub mod error;
pub mod linalg;
pub mod optimizer;
pub mod random;
pub mod sampling;
pub mod scalar;
pub mod state;
pub mod stats;

pub use channel::{apply_channel, CrosstalkModel};
pub use chsh::{
    bell_signal, corrected_classical_bound, correlators_from_state, eta, max_error_bound,
    setting_states, verdict, AliceSetting, BellOutcome, BobSetting, CorrelatorTable, EtaTable,
    SettingMoments, SettingPair, SettingStates, Verdict,
};
pub use crosstalk::{
    asymmetry_index, crosstalk_parameters, delta_eta_bounds_check, rough_total_estimate,
    DeltaEtaSlack, DeltaTable,
};
pub use error::{Error, Result};
pub use linalg::{
    hermitian_eigen, hermitian_eigenvalues, kron, operator_norm, trace_norm, Operator,
};
pub use optimizer::{
    bias_study, diagnose_settings, objective, optimize, BiasDiagnostics, BiasStudyReport,
    OptimizationConfig, OptimizationResult,
};
pub use sampling::{
    born_probabilities, run_experiment, sample_shots, sub_seed, CountsRecord, ExperimentRun,
    SettingCounts, SplitMix64, RNG_ID,
};
pub use scalar::Scalar;
pub use state::{
    expectation, prepare_ideal_state, rotation_gate, validate_density, DensityMatrix,
    MeasurementAngles, SettingsQuad, Violation,
};
pub use stats::{
    bell_stderr, correlator_from_counts, correlator_table_from_counts, delta_report,
    marginals_from_counts, sigmas_above_classical, DeltaReport, EstimatedQuantity,
};

/// `f64` aliases for the main types.
pub type Operator64 = linalg::Operator<f64>;
pub type DensityMatrix64 = state::DensityMatrix<f64>;
pub type MeasurementAngles64 = state::MeasurementAngles<f64>;
pub type SettingsQuad64 = state::SettingsQuad<f64>;
pub type CorrelatorTable64 = chsh::CorrelatorTable<f64>;
pub type EtaTable64 = chsh::EtaTable<f64>;
pub type DeltaTable64 = crosstalk::DeltaTable<f64>;
pub type CrosstalkModel64 = channel::CrosstalkModel<f64>;
pub type OptimizationConfig64 = optimizer::OptimizationConfig<f64>;
pub type BiasStudyReport64 = optimizer::BiasStudyReport<f64>;
pub type EstimatedQuantity64 = stats::EstimatedQuantity<f64>;

/// `f32` aliases for the low-precision kernel.
pub type Operator32 = linalg::Operator<f32>;
pub type DensityMatrix32 = state::DensityMatrix<f32>;
pub type SettingsQuad32 = state::SettingsQuad<f32>;
