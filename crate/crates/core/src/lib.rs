//! Two-sample testing with random Fourier feature MMD statistics.

pub mod error;
pub mod estimators;
pub mod features;
pub mod harness;
pub mod kernels;
pub mod oracles;
pub mod permutation;
pub mod scenarios;
pub mod sample;

pub use error::{Error, Result};
pub use estimators::{BlockSize, EstimatorId, IncompleteDesign};
pub use features::{feature_map, feature_matrix, mean_feature_row, FeatureMatrix, FrequencyDraw};
pub use kernels::{median_heuristic, sample_frequencies, KernelSpec};
pub use sample::{derive_stream, validate_pair, PooledSample, RngStream, SampleSet, SignificanceLevel};
pub use permutation::{
    calibrate, permute_and_evaluate, rff_mmd_test, Bandwidth, PermutationPlan, RffVariant, TestContext, TestResult,
};
pub use scenarios::{sample_scenario, Scenario, ScenarioSpec};
