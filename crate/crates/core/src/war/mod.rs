//! Weighted adaptation regularization: class-weighted squared-loss kernel
//! classifiers with marginal and conditional MMD penalties between a source
//! domain and the target.

mod ensemble;
mod kernel;
mod model;
mod problem;
mod ridge;
mod solver;

pub use ensemble::{fit_ensemble, fit_source, war_multi, EnsembleFit, SourceRef};
pub use kernel::{
    kernel_matrix, kernel_with_gamma, median_heuristic_gamma, resolve_gamma, squared_distances, GramCache, PairGram,
};
pub use model::{decisions, fuse_scores, predict, solve_war, solve_war_detailed, FusedClassifier, WarFit, WarModel};
pub use problem::{build_reg_matrices, sample_weights, RegMatrices, WarProblem};
pub use ridge::fit_weighted_ridge;
