//! Two-sample tests for the equality of high-dimensional mean vectors,
//! built around subset-sampled Hotelling statistics combined with the
//! Simes step-up rule, plus the classical and regularized competitors and
//! a deterministic Monte Carlo study engine.
//!
//! The main entry points:
//!
//! - [`sh_test`]: draw B random m-dimensional subsets, compute a Hotelling
//!   p-value on each, combine with Simes. Valid for p ≫ n.
//! - [`psh_test`] / [`thulin_test`]: permutation-calibrated variants, exact
//!   under exchangeability.
//! - [`hotelling_two_sample`], [`welch_hotelling`], [`marginal_simes_test`]:
//!   the classical building blocks.
//! - [`sd_test`], [`cq_test`], [`lopes_test`]: regularized and
//!   random-projection competitors.
//! - [`run_scenario`]: replicated evaluation of any set of tests on
//!   simulated data, reproducible for any worker count.
//!
//! All randomness flows through explicit [`RngState`] values (ChaCha12
//! streams; normal variates by the ziggurat method), so every result is
//! reproducible across platforms and thread counts.

mod baselines;
mod classic;
mod error;
mod matrix;
mod mvn;
mod rng;
mod sh;
mod sim;
mod special;
mod subsets;

pub use baselines::{cq_test, lopes_test, sd_test};
pub use classic::{
    bonferroni, hotelling_two_sample, marginal_simes_test, pooled_t_test, simes, welch_hotelling,
    welch_t_test, DegreesOfFreedom, TestOutcome,
};
pub use error::{Error, Result};
pub use matrix::{column_means, pooled_covariance, quadratic_form_inv, CholeskyFactor, DataMatrix, SpdMatrix};
pub use mvn::{mvn_sample, mvn_sample_with_factor};
pub use rng::RngState;
pub use sh::{
    psh_test, sh_subset_pvalues, sh_test, thulin_test, Combiner, ShConfig, DEFAULT_PERMUTATIONS,
    DEFAULT_SEED,
};
pub use sim::{
    add_noise, evaluate_test, ks_distance_uniform, make_covariance, make_signal, minmin_score,
    run_scenario, target_norm_sq, CovKind, CovarianceSpec, MonteCarloReport, NamedTest, NoiseKind,
    ScenarioSpec, SignalSpec, TestRates, TestSpec,
};
pub use special::{f_cdf, normal_cdf, regularized_incomplete_beta, t_cdf};
pub use subsets::{default_b, default_m, sample_subset, SubsetDraw};
