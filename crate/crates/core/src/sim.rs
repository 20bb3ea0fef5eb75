//! Monte Carlo study machinery: covariance model generators, sparse signal
//! construction, noise augmentation, the replicated scenario runner, and the
//! min-min score.
//!
//! The runner derives every replicate's randomness from (seed, replicate
//! index) alone, so reports are identical for any worker count.

use ndarray::Array2;
use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{cq_test, lopes_test, sd_test};
use crate::classic::{hotelling_two_sample, marginal_simes_test, welch_hotelling, TestOutcome};
use crate::error::{Error, Result};
use crate::matrix::{CholeskyFactor, DataMatrix, SpdMatrix};
use crate::mvn::mvn_sample_with_factor;
use crate::rng::RngState;
use crate::sh::{psh_test, sh_test, thulin_test, ShConfig};
use crate::subsets::sample_indices;

/// The dependence structures used by the simulation study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovKind {
    /// σ_ij = ρ^|i−j|, |ρ| < 1.
    Ar { rho: f64 },
    /// Within-block correlation ρ, unit diagonal, zero across blocks.
    /// A trailing partial block is truncated.
    Block { block_size: usize, rho: f64 },
    /// Unit-diagonal base with σ*_ij = 0.5 |i−j|^{-5}, rescaled by a random
    /// diagonal D with d_ii ~ U[1, 3]: Σ = D^{1/2} Σ* D^{1/2}.
    Model7,
    /// σ_ij = ρ off the diagonal, 1 on it, 0 ≤ ρ < 1.
    EquiCorr { rho: f64 },
    Identity,
}

/// A covariance model at a given dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub kind: CovKind,
    pub p: usize,
}

impl CovarianceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p < 1 {
            return Err(Error::ConfigInvalid("covariance needs p >= 1".into()));
        }
        match self.kind {
            CovKind::Ar { rho } => {
                if !(rho.abs() < 1.0) {
                    return Err(Error::ConfigInvalid(format!(
                        "AR correlation must satisfy |rho| < 1, got {rho}"
                    )));
                }
            }
            CovKind::Block { block_size, rho } => {
                if block_size < 1 {
                    return Err(Error::ConfigInvalid("block size must be >= 1".into()));
                }
                if !(0.0..1.0).contains(&rho) {
                    return Err(Error::ConfigInvalid(format!(
                        "block correlation must lie in [0, 1), got {rho}"
                    )));
                }
            }
            CovKind::EquiCorr { rho } => {
                if !(0.0..1.0).contains(&rho) {
                    return Err(Error::ConfigInvalid(format!(
                        "equicorrelation must lie in [0, 1), got {rho}"
                    )));
                }
            }
            CovKind::Model7 | CovKind::Identity => {}
        }
        Ok(())
    }

    /// True when the generated matrix depends on the rng (Model7's random
    /// diagonal); such models are redrawn per replicate.
    pub fn is_random(&self) -> bool {
        matches!(self.kind, CovKind::Model7)
    }
}

/// Build the covariance matrix a spec describes. `rng` is consumed only by
/// random models (Model7's diagonal).
pub fn make_covariance(spec: &CovarianceSpec, rng: RngState) -> Result<SpdMatrix> {
    spec.validate()?;
    let p = spec.p;
    let mut m = Array2::<f64>::zeros((p, p));
    match spec.kind {
        CovKind::Identity => {
            for i in 0..p {
                m[(i, i)] = 1.0;
            }
        }
        CovKind::Ar { rho } => {
            for i in 0..p {
                for j in 0..p {
                    m[(i, j)] = rho.powi((i as i32 - j as i32).abs());
                }
            }
        }
        CovKind::Block { block_size, rho } => {
            for i in 0..p {
                for j in 0..p {
                    m[(i, j)] = if i == j {
                        1.0
                    } else if i / block_size == j / block_size {
                        rho
                    } else {
                        0.0
                    };
                }
            }
        }
        CovKind::EquiCorr { rho } => {
            for i in 0..p {
                for j in 0..p {
                    m[(i, j)] = if i == j { 1.0 } else { rho };
                }
            }
        }
        CovKind::Model7 => {
            let mut r = rng.rng();
            let d: Vec<f64> = (0..p).map(|_| r.gen_range(1.0..3.0)).collect();
            for i in 0..p {
                for j in 0..p {
                    let base = if i == j {
                        1.0
                    } else {
                        0.5 * ((i as f64 - j as f64).abs()).powi(-5)
                    };
                    m[(i, j)] = base * (d[i] * d[j]).sqrt();
                }
            }
        }
    }
    SpdMatrix::new(m)
}

/// A sparse mean-shift: beta·p zero entries; the rest split into five equal
/// groups with values (i/5)·L, i = 1..5, at uniformly random positions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub p: usize,
    /// Proportion of exactly-null dimensions.
    pub beta: f64,
    /// Target squared Euclidean norm of the shift.
    pub norm_sq: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SignalSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::ConfigInvalid(format!(
                "beta must lie in [0, 1], got {}",
                self.beta
            )));
        }
        if !(self.norm_sq > 0.0) {
            return Err(Error::ConfigInvalid(format!(
                "norm_sq must be positive, got {}",
                self.norm_sq
            )));
        }
        if self.nonzero_count()? == 0 {
            return Err(Error::ConfigInvalid(
                "signal construction needs (1 - beta) * p >= 5 nonzero dimensions".into(),
            ));
        }
        Ok(())
    }

    /// (1−beta)·p rounded to the nearest multiple of five (the five-group
    /// construction needs divisibility), capped at p.
    pub fn nonzero_count(&self) -> Result<usize> {
        let raw = (1.0 - self.beta) * self.p as f64;
        if raw < 5.0 {
            return Err(Error::ConfigInvalid(format!(
                "(1 - beta) * p = {raw:.2} is below the 5 nonzero dimensions the construction needs"
            )));
        }
        let rounded = ((raw / 5.0).round() as usize) * 5;
        Ok(rounded.min(self.p / 5 * 5))
    }
}

/// Materialize the shift vector a [`SignalSpec`] describes. The positions of
/// the nonzero entries come from `rng`; the magnitudes solve
/// ‖μ‖² = (k/5) Σ_{i=1..5} (iL/5)² = norm_sq exactly, i.e.
/// L = sqrt(25 norm_sq / (11 k)).
pub fn make_signal(spec: &SignalSpec, rng: RngState) -> Result<Vec<f64>> {
    spec.validate()?;
    let k = spec.nonzero_count()?;
    let level = (25.0 * spec.norm_sq / (11.0 * k as f64)).sqrt();
    let mut mu = vec![0.0; spec.p];
    let positions = sample_indices(spec.p, k, &mut rng.rng());
    let group = k / 5;
    for (rank, &pos) in positions.iter().enumerate() {
        let g = (rank / group).min(4); // 0..5
        mu[pos] = (g as f64 + 1.0) / 5.0 * level;
    }
    Ok(mu)
}

/// ‖μ_X − μ_Y‖² = factor · sqrt(40 / (n_x + n_y)).
pub fn target_norm_sq(n_x: usize, n_y: usize, factor: f64) -> f64 {
    factor * (40.0 / (n_x + n_y) as f64).sqrt()
}

/// Marginal noise kinds for the non-Gaussian robustness study. Both variants
/// add unit variance to every dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    /// Laplace(0, 1/√2): generated as (E₁ − E₂)/√2 from two unit
    /// exponentials, variance exactly 1.
    Laplace,
    /// Exp(1) − 1: centered unit exponential, variance 1.
    Exponential,
}

impl Default for NoiseKind {
    fn default() -> Self {
        NoiseKind::None
    }
}

/// Add i.i.d. marginal noise to every entry.
pub fn add_noise(x: &DataMatrix, kind: NoiseKind, rng: RngState) -> DataMatrix {
    match kind {
        NoiseKind::None => x.clone(),
        NoiseKind::Laplace => {
            let mut r = rng.rng();
            let b = 1.0 / std::f64::consts::SQRT_2;
            transform(x, |v| {
                let e1: f64 = r.sample(Exp1);
                let e2: f64 = r.sample(Exp1);
                v + b * (e1 - e2)
            })
        }
        NoiseKind::Exponential => {
            let mut r = rng.rng();
            transform(x, |v| {
                let e: f64 = r.sample(Exp1);
                v + e - 1.0
            })
        }
    }
}

fn transform(x: &DataMatrix, mut f: impl FnMut(f64) -> f64) -> DataMatrix {
    let rows: Vec<Vec<f64>> = (0..x.n())
        .map(|i| x.row(i).iter().map(|&v| f(v)).collect())
        .collect();
    DataMatrix::from_rows(&rows).expect("noise keeps data finite")
}

/// One simulation cell: group sizes, covariance model, optional mean shift,
/// optional marginal noise, and the group-1 covariance scale (e.g. 2 for the
/// unequal-covariance study).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n_x: usize,
    pub n_y: usize,
    pub cov: CovarianceSpec,
    #[serde(default)]
    pub signal: Option<SignalSpec>,
    #[serde(default)]
    pub noise: NoiseKind,
    #[serde(default = "default_true")]
    pub equal_cov_groups: bool,
    #[serde(default = "default_scale")]
    pub scale_factor_group1: f64,
}

fn default_true() -> bool {
    true
}

fn default_scale() -> f64 {
    1.0
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_x < 2 || self.n_y < 2 {
            return Err(Error::ConfigInvalid(
                "each group needs at least 2 observations".into(),
            ));
        }
        self.cov.validate()?;
        if let Some(sig) = &self.signal {
            sig.validate()?;
            if sig.p != self.cov.p {
                return Err(Error::ConfigInvalid(format!(
                    "signal dimension {} does not match covariance dimension {}",
                    sig.p, self.cov.p
                )));
            }
        }
        if !(self.scale_factor_group1 > 0.0) {
            return Err(Error::ConfigInvalid(
                "group-1 covariance scale must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.cov.p
    }

    pub fn n_total(&self) -> usize {
        self.n_x + self.n_y
    }
}

/// A test to evaluate inside the Monte Carlo runner or on user data.
#[derive(Clone, Debug, PartialEq)]
pub enum TestSpec {
    Sh(ShConfig),
    Psh(ShConfig),
    Thulin(ShConfig),
    MarginalSimes { equal_var: bool },
    Sd,
    Cq,
    Lopes { k: usize },
    Hotelling,
    WelchHotelling,
}

impl TestSpec {
    pub fn default_name(&self) -> &'static str {
        match self {
            TestSpec::Sh(_) => "sh",
            TestSpec::Psh(_) => "psh",
            TestSpec::Thulin(_) => "thulin",
            TestSpec::MarginalSimes { .. } => "simes",
            TestSpec::Sd => "sd",
            TestSpec::Cq => "cq",
            TestSpec::Lopes { .. } => "lopes",
            TestSpec::Hotelling => "hotelling",
            TestSpec::WelchHotelling => "welch_hotelling",
        }
    }

    /// True when the test consumes randomness of its own.
    pub fn is_randomized(&self) -> bool {
        matches!(
            self,
            TestSpec::Sh(_) | TestSpec::Psh(_) | TestSpec::Thulin(_) | TestSpec::Lopes { .. }
        )
    }

    /// Static validation against the shape of a scenario.
    fn validate(&self, n_total: usize, p: usize) -> Result<()> {
        match self {
            TestSpec::Sh(cfg) => cfg.validate(n_total, p),
            TestSpec::Psh(cfg) | TestSpec::Thulin(cfg) => {
                cfg.validate(n_total, p)?;
                if cfg.l < 1 {
                    return Err(Error::ConfigInvalid(
                        "permutation variants need l >= 1".into(),
                    ));
                }
                Ok(())
            }
            TestSpec::Lopes { k } => {
                if *k < 1 || *k + 2 > n_total {
                    return Err(Error::ConfigInvalid(format!(
                        "lopes projection dimension {k} must lie in [1, n - 2]"
                    )));
                }
                Ok(())
            }
            TestSpec::Hotelling | TestSpec::WelchHotelling => {
                if n_total < p + 2 {
                    return Err(Error::ConfigInvalid(format!(
                        "the full Hotelling tests need n >= p + 2, got n = {n_total}, p = {p}"
                    )));
                }
                Ok(())
            }
            TestSpec::MarginalSimes { .. } | TestSpec::Sd | TestSpec::Cq => Ok(()),
        }
    }
}

/// A test with the name it reports under.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedTest {
    pub name: String,
    pub spec: TestSpec,
}

impl From<TestSpec> for NamedTest {
    fn from(spec: TestSpec) -> Self {
        NamedTest {
            name: spec.default_name().to_string(),
            spec,
        }
    }
}

/// Evaluate one test on one dataset. `rng` feeds the test's internal
/// randomness (subset draws, shuffles, projections); deterministic tests
/// ignore it.
pub fn evaluate_test(
    spec: &TestSpec,
    x: &DataMatrix,
    y: &DataMatrix,
    rng: RngState,
) -> Result<TestOutcome> {
    match spec {
        TestSpec::Sh(cfg) => {
            let mut cfg = *cfg;
            cfg.seed ^= rng.derive_u64();
            sh_test(x, y, &cfg)
        }
        TestSpec::Psh(cfg) => {
            let mut cfg = *cfg;
            cfg.seed ^= rng.derive_u64();
            psh_test(x, y, &cfg)
        }
        TestSpec::Thulin(cfg) => {
            let mut cfg = *cfg;
            cfg.seed ^= rng.derive_u64();
            thulin_test(x, y, &cfg)
        }
        TestSpec::MarginalSimes { equal_var } => marginal_simes_test(x, y, *equal_var),
        TestSpec::Sd => sd_test(x, y),
        TestSpec::Cq => cq_test(x, y),
        TestSpec::Lopes { k } => lopes_test(x, y, *k, rng),
        TestSpec::Hotelling => hotelling_two_sample(x, y),
        TestSpec::WelchHotelling => welch_hotelling(x, y),
    }
}

/// Per-test Monte Carlo summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestRates {
    pub method: String,
    pub rejection_rate: f64,
    /// Binomial standard error sqrt(r (1 − r) / R).
    pub standard_error: f64,
    pub statistic_mean: f64,
}

/// The result of one simulated scenario cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub scenario: ScenarioSpec,
    pub alpha: f64,
    pub seed: u64,
    pub replicates: usize,
    pub per_test: Vec<TestRates>,
}

// Substream tags for the independent randomness sources of one replicate.
const SUB_COV: u64 = 0;
const SUB_SIGNAL: u64 = 1;
const SUB_GROUP_X: u64 = 2;
const SUB_GROUP_Y: u64 = 3;
const SUB_NOISE_X: u64 = 4;
const SUB_NOISE_Y: u64 = 5;
const SUB_TEST_BASE: u64 = 16;

/// Run every test on `reps` independently simulated datasets from one
/// scenario and report per-test rejection rates at `alpha`.
///
/// Replicate r draws all of its randomness from substreams of
/// (seed, r), so the report is identical for any worker count. A test
/// failure inside any replicate aborts the run, tagged with the replicate
/// index.
pub fn run_scenario(
    scn: &ScenarioSpec,
    tests: &[NamedTest],
    reps: usize,
    alpha: f64,
    seed: u64,
) -> Result<MonteCarloReport> {
    scn.validate()?;
    if tests.is_empty() {
        return Err(Error::EmptyInput("no tests to run".into()));
    }
    if reps < 1 {
        return Err(Error::ConfigInvalid("need at least one replicate".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::ConfigInvalid(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    for t in tests {
        t.spec
            .validate(scn.n_total(), scn.p())
            .map_err(|e| Error::ConfigInvalid(format!("test '{}': {e}", t.name)))?;
    }

    let p = scn.p();
    let root = RngState::new(seed);
    // deterministic covariance models factor once and are shared read-only
    let fixed: Option<(CholeskyFactor, CholeskyFactor)> = if scn.cov.is_random() {
        None
    } else {
        let cov = make_covariance(&scn.cov, root)?;
        let base = cov.cholesky()?;
        let scaled = scale_factor(&base, scn.scale_factor_group1);
        Some((base, scaled))
    };

    let zero = vec![0.0; p];
    let results: Vec<Result<Vec<(bool, f64)>>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let state = root.substream(rep as u64);
            let run = || -> Result<Vec<(bool, f64)>> {
                let local: Option<(CholeskyFactor, CholeskyFactor)> = if fixed.is_none() {
                    let cov = make_covariance(&scn.cov, state.substream(SUB_COV))?;
                    let base = cov.cholesky()?;
                    let scaled = scale_factor(&base, scn.scale_factor_group1);
                    Some((base, scaled))
                } else {
                    None
                };
                let (base, scaled) = fixed.as_ref().or(local.as_ref()).expect("one source");
                let mu_x = match &scn.signal {
                    Some(sig) => make_signal(sig, state.substream(SUB_SIGNAL).substream(sig.seed))?,
                    None => zero.clone(),
                };
                let mut x =
                    mvn_sample_with_factor(&mu_x, scaled, scn.n_x, state.substream(SUB_GROUP_X))?;
                let mut y =
                    mvn_sample_with_factor(&zero, base, scn.n_y, state.substream(SUB_GROUP_Y))?;
                if scn.noise != NoiseKind::None {
                    x = add_noise(&x, scn.noise, state.substream(SUB_NOISE_X));
                    y = add_noise(&y, scn.noise, state.substream(SUB_NOISE_Y));
                }
                tests
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let out = evaluate_test(
                            &t.spec,
                            &x,
                            &y,
                            state.substream(SUB_TEST_BASE + i as u64),
                        )?;
                        Ok((out.p_value <= alpha, out.statistic))
                    })
                    .collect()
            };
            run().map_err(|e| e.in_replicate(rep))
        })
        .collect();

    let mut rejections = vec![0usize; tests.len()];
    let mut stat_sums = vec![0.0f64; tests.len()];
    for rep in results {
        let rep = rep?;
        for (i, (reject, stat)) in rep.into_iter().enumerate() {
            if reject {
                rejections[i] += 1;
            }
            stat_sums[i] += stat;
        }
    }
    let per_test = tests
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let rate = rejections[i] as f64 / reps as f64;
            TestRates {
                method: t.name.clone(),
                rejection_rate: rate,
                standard_error: (rate * (1.0 - rate) / reps as f64).sqrt(),
                statistic_mean: stat_sums[i] / reps as f64,
            }
        })
        .collect();
    Ok(MonteCarloReport {
        scenario: scn.clone(),
        alpha,
        seed,
        replicates: reps,
        per_test,
    })
}

fn scale_factor(base: &CholeskyFactor, scale: f64) -> CholeskyFactor {
    if scale == 1.0 {
        base.clone()
    } else {
        base.scaled(scale)
    }
}

/// Min-min score: each method's worst-case power ratio against the best
/// method, over a grid of scenarios. `power[method][scenario]`.
pub fn minmin_score(power: &[Vec<f64>]) -> Result<Vec<f64>> {
    if power.is_empty() || power[0].is_empty() {
        return Err(Error::EmptyInput("empty power table".into()));
    }
    let cols = power[0].len();
    if power.iter().any(|row| row.len() != cols) {
        return Err(Error::DimensionMismatch(
            "power table rows have unequal lengths".into(),
        ));
    }
    let mut scores = vec![f64::INFINITY; power.len()];
    for c in 0..cols {
        let best = power
            .iter()
            .map(|row| row[c])
            .fold(f64::NEG_INFINITY, f64::max);
        if !(best > 0.0) {
            return Err(Error::DegenerateScenario(format!(
                "scenario column {c} has no method with positive power"
            )));
        }
        for (m, row) in power.iter().enumerate() {
            scores[m] = scores[m].min(row[c] / best);
        }
    }
    Ok(scores)
}

/// Kolmogorov–Smirnov distance of a sample to the uniform distribution on
/// [0, 1]. Used to check p-value calibration.
pub fn ks_distance_uniform(sample: &[f64]) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite sample"));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &v) in sorted.iter().enumerate() {
        let hi = (i as f64 + 1.0) / n - v;
        let lo = v - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}
