//! Bell-inequality identities for ±1 data sets, their correlation and
//! probability forms, Bell-state and hidden-variable models, and finite-N
//! experiment simulations.
//!
//! Three or four aligned ±1 data sets satisfy |C_ab − C_ac| ≤ 1 − C_bc and
//! |S| ≤ 2 identically; [`inequality`] evaluates these exactly. Violations can
//! only appear once correlations are supplied from elsewhere: an all-cosine
//! model, or estimates taken from independent runs ([`experiments`]).

pub mod dataset;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod inequality;
pub mod io;
pub mod model;
pub mod quantum;
pub mod seed;

pub use dataset::{
    apply_crosstalk, enumerate_all, gen_from_lhv, gen_random_iid, AlignedRuns, DataSet, Enumeration,
    LhvProcess, Outcome, Pickup,
};
pub use error::{Error, Result};
pub use estimators::{correlate, sigma_count, CorrelationEstimate, SigmaReport};
pub use experiments::{
    run_joint_protocol, run_separate_protocol, run_sequential_protocol, scaling_study, sigma_comparison,
    ExperimentSpec, Protocol, ScalingReport, SigmaComparison,
};
pub use inequality::{
    bell3_bellform, bell3_correlation_form, bell3_identity, chsh4_identity, chsh_correlation_form,
    delta_decomposition, wigner_probability_form, DeltaDecomposition, DeltaSource, InequalityId,
    InequalityReport,
};
pub use model::{Convention, ModelKind};
pub use quantum::{
    reconstruct_corr_4_1, scan_bell3_qm, scan_wigner, AngleConfig, BellStateModel, Reconstruction, ScanResult,
};
