//! Generalized labeled multi-Bernoulli filter with spawning: joint
//! prediction and update with Gibbs-sampled associations, Gaussian mixture
//! track densities, scenario simulation and Monte Carlo evaluation.

pub mod assignment;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod gaussian;
pub mod glmb;
pub mod labels;
pub mod lsap;
pub mod metrics;
pub mod models;
pub mod oracle;
pub mod seeds;
pub mod selftest;
pub mod simulator;

pub use error::{ConfigError, FilterError, GaussianError, LabelError, OracleError, RunError};
pub use estimation::TrackEstimate;
pub use gaussian::{Gaussian, GaussianMixture, MeasVec, StateMat, StateVec, TrackDensity};
pub use glmb::{joint_predict_update, GlmbComponent, GlmbDensity, StepOutput, StepStats};
pub use labels::{Label, Scan};
pub use models::{Models, ScenarioConfig, Truncation};
pub use simulator::Truth;
