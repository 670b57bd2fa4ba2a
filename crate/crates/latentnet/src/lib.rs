//! Latent space network models: maximum-likelihood fitting by projected
//! gradient descent with adaptive step sizes, spectral initialization, and
//! normal-approximation inference on the fitted embedding.
//!
//! The model places each node `i` at a latent position `z_i ∈ R^k` with a
//! degree parameter `α_i`, and edge weights `A_ij` follow a one-parameter
//! exponential family with natural parameter `Θ_ij = α_i + α_j + ⟨z_i, z_j⟩`.
//! Core numerics are generic over the scalar type; `f64` aliases are exported
//! at the crate root.

pub mod error;
pub mod family;
pub mod inference;
pub mod io;
pub mod likelihood;
pub mod linalg;
pub mod network;
pub mod pgd;
pub mod rasvt;
pub mod scalar;
pub mod simulation;
pub mod state;

pub use error::{Error, Result};
pub use family::EdgeFamily;
pub use inference::{compare_networks, InferenceReport, Target};
pub use linalg::{center_reparam, dist2, procrustes_align};
pub use network::Network;
pub use pgd::{default_eta_init, fit, FitResult, PgdConfig};
pub use rasvt::{default_config as rasvt_default_config, ra_svt, RasvtConfig};
pub use state::LatentState;

/// Concrete double-precision aliases for the generic core types.
pub type LatentState64 = state::LatentState<f64>;
pub type Network64 = network::Network<f64>;
pub type PgdConfig64 = pgd::PgdConfig<f64>;
pub type RasvtConfig64 = rasvt::RasvtConfig<f64>;
pub type FitResult64 = pgd::FitResult<f64>;
pub type InferenceReport64 = inference::InferenceReport<f64>;
pub type ComparisonResult64 = inference::ComparisonResult<f64>;

/// Single-precision aliases; useful when memory dominates and the score
/// tolerance is loose.
pub type LatentState32 = state::LatentState<f32>;
pub type Network32 = network::Network<f32>;
pub type PgdConfig32 = pgd::PgdConfig<f32>;
