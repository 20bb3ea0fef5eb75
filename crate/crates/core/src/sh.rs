//! The subset-sampled Hotelling global-null tests: SH (F-calibrated),
//! PSH (its permutation extension), and the averaged-statistic variant.
//!
//! SH draws B random m-dimensional subsets, computes a Hotelling p-value per
//! subset from its F(m, n−1−m) null law (or the Welch variant when group
//! covariances differ), and combines the B p-values with the Simes step-up
//! rule. PSH replaces the F calibration with label permutations and is exact
//! under exchangeability.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classic::{bonferroni, simes, TestOutcome};
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::rng::RngState;
use crate::subsets::{
    pooled_subset_pvalue, pooled_subset_t2, sample_permutation, sample_subset, welch_subset_pvalue,
    welch_subset_stat, CombinedData, SubsetDraw, SubsetScratch,
};

/// Fixed default seed so results are reproducible when no seed is given.
pub const DEFAULT_SEED: u64 = 1729;

/// Default permutation count for the permutation-calibrated variants.
pub const DEFAULT_PERMUTATIONS: usize = 250;

// Substream tags for the independent randomness sources of one test run.
const TAG_SUBSETS: u64 = 0;
const TAG_SHUFFLES: u64 = 1;

/// How the per-subset results are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    /// Simes step-up combination of the B p-values.
    Simes,
    /// Bonferroni combination of the B p-values.
    Bonferroni,
    /// Average the B statistics; only meaningful with permutation calibration.
    MeanStat,
}

/// Parameters of the subset-sampled tests.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShConfig {
    /// Subset size (dimensions drawn per iteration).
    pub m: usize,
    /// Number of subset draws.
    pub b: usize,
    /// Permutation count (permutation variants only).
    pub l: usize,
    /// Pooled-covariance subset statistic when true, Welch-type otherwise.
    pub equal_cov: bool,
    pub combiner: Combiner,
    pub seed: u64,
}

impl ShConfig {
    /// Paper-scale defaults for a problem of this shape: m = min(n/2, p, n−2),
    /// B = ceil(p ln p), L = 250, pooled covariance, Simes combination.
    pub fn defaults(n_total: usize, p: usize) -> Self {
        ShConfig {
            m: crate::subsets::default_m(n_total, p),
            b: crate::subsets::default_b(p),
            l: DEFAULT_PERMUTATIONS,
            equal_cov: true,
            combiner: Combiner::Simes,
            seed: DEFAULT_SEED,
        }
    }

    /// Check this configuration against a problem of n total observations in
    /// p dimensions.
    pub fn validate(&self, n_total: usize, p: usize) -> Result<()> {
        if n_total < 4 {
            return Err(Error::ConfigInvalid(format!(
                "need at least 4 observations in total, got {n_total}"
            )));
        }
        let cap = p.min(n_total - 2);
        if self.m < 1 || self.m > cap {
            return Err(Error::ConfigInvalid(format!(
                "subset size m = {} must lie in [1, min(p, n - 2)] = [1, {cap}]",
                self.m
            )));
        }
        if self.b < 1 {
            return Err(Error::ConfigInvalid("need at least one subset draw".into()));
        }
        Ok(())
    }

    fn validate_permutation(&self, n_total: usize, p: usize) -> Result<()> {
        self.validate(n_total, p)?;
        if self.l < 1 {
            return Err(Error::ConfigInvalid(
                "permutation variants need l >= 1".into(),
            ));
        }
        Ok(())
    }
}

fn check_dims(x: &DataMatrix, y: &DataMatrix) -> Result<usize> {
    if x.p() != y.p() {
        return Err(Error::DimensionMismatch(format!(
            "group dimensions differ: {} vs {}",
            x.p(),
            y.p()
        )));
    }
    Ok(x.p())
}

fn combine(pvals: &[f64], combiner: Combiner) -> Result<f64> {
    match combiner {
        Combiner::Simes => simes(pvals),
        Combiner::Bonferroni => bonferroni(pvals),
        Combiner::MeanStat => Err(Error::ConfigInvalid(
            "MeanStat combines statistics, not p-values; use the averaging test".into(),
        )),
    }
}

/// Subset draws for one run; draw i comes from the substream with index i,
/// so extending b only appends draws and never disturbs earlier ones.
fn draw_subsets(p: usize, m: usize, b: usize, root: RngState) -> Vec<SubsetDraw> {
    let stream = root.substream(TAG_SUBSETS);
    (0..b)
        .map(|i| sample_subset(p, m, stream.substream(i as u64)))
        .collect()
}

/// The B per-subset p-values behind [`sh_test`], in draw order.
///
/// Exposed so callers can inspect the subset evidence; `sh_test` is exactly
/// a combination of this vector.
pub fn sh_subset_pvalues(x: &DataMatrix, y: &DataMatrix, cfg: &ShConfig) -> Result<Vec<f64>> {
    let p = check_dims(x, y)?;
    let n = x.n() + y.n();
    cfg.validate(n, p)?;
    let combined = CombinedData::new(x, y);
    let subsets = draw_subsets(p, cfg.m, cfg.b, RngState::new(cfg.seed));
    let (m1, m2) = combined.group_means(None);
    let (n1, n2) = (combined.n1, combined.n2);
    if cfg.equal_cov {
        let gram = combined.total_gram();
        subsets
            .par_iter()
            .map_init(SubsetScratch::default, |scratch, s| {
                let t2 =
                    pooled_subset_t2(&gram, p, &m1, &m2, n1, n2, s.indices(), scratch)?;
                pooled_subset_pvalue(t2, cfg.m, n)
            })
            .collect()
    } else {
        let (g1, g2) = combined.group_grams(None);
        subsets
            .par_iter()
            .map_init(SubsetScratch::default, |scratch, s| {
                let (t2, nu) =
                    welch_subset_stat(&g1, &g2, p, &m1, &m2, n1, n2, s.indices(), scratch)?;
                welch_subset_pvalue(t2, nu, cfg.m)
            })
            .collect()
    }
}

/// The SH global-null test: B random m-subsets, one Hotelling p-value each,
/// combined with Simes (or Bonferroni).
pub fn sh_test(x: &DataMatrix, y: &DataMatrix, cfg: &ShConfig) -> Result<TestOutcome> {
    if cfg.combiner == Combiner::MeanStat {
        return Err(Error::ConfigInvalid(
            "sh_test supports Simes or Bonferroni combination".into(),
        ));
    }
    let pvals = sh_subset_pvalues(x, y, cfg)?;
    let combined = combine(&pvals, cfg.combiner)?;
    let min_p = pvals.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(TestOutcome::new("sh", combined, combined)
        .with_extra("m", cfg.m as f64)
        .with_extra("b", cfg.b as f64)
        .with_extra("min_subset_p", min_p))
}

/// Subset statistics for the original labeling and `l` label shuffles.
/// Returns columns[j][i] = T² of subset i under labeling j (j = 0 original).
fn subset_stat_columns(
    x: &DataMatrix,
    y: &DataMatrix,
    cfg: &ShConfig,
) -> Result<Vec<Vec<f64>>> {
    let p = check_dims(x, y)?;
    let n = x.n() + y.n();
    let combined = CombinedData::new(x, y);
    let (n1, n2) = (combined.n1, combined.n2);
    let root = RngState::new(cfg.seed);
    let subsets = draw_subsets(p, cfg.m, cfg.b, root);
    let shuffle_stream = root.substream(TAG_SHUFFLES);
    let perms: Vec<Option<Vec<usize>>> = std::iter::once(None)
        .chain((1..=cfg.l).map(|j| Some(sample_permutation(n, shuffle_stream.substream(j as u64)))))
        .collect();
    let gram = if cfg.equal_cov {
        Some(combined.total_gram())
    } else {
        None
    };
    perms
        .par_iter()
        .map_init(SubsetScratch::default, |scratch, perm| {
            let perm = perm.as_deref();
            let (m1, m2) = combined.group_means(perm);
            if let Some(gram) = &gram {
                subsets
                    .iter()
                    .map(|s| pooled_subset_t2(gram, p, &m1, &m2, n1, n2, s.indices(), scratch))
                    .collect::<Result<Vec<f64>>>()
            } else {
                let (g1, g2) = combined.group_grams(perm);
                subsets
                    .iter()
                    .map(|s| {
                        welch_subset_stat(&g1, &g2, p, &m1, &m2, n1, n2, s.indices(), scratch)
                            .map(|(t2, _)| t2)
                    })
                    .collect::<Result<Vec<f64>>>()
            }
        })
        .collect()
}

/// The permutation extension of SH.
///
/// Fixed subsets S¹..S^B; statistics T_{i,j} for the original labeling
/// (j = 0) and L shuffles. Each T_{i,j} becomes a permutation p-value
/// P_{i,j} = #{k : T_{i,k} ≥ T_{i,j}} / (L+1) (small = extreme, ties count
/// toward the extreme side), each labeling's vector is combined across
/// subsets, and the final p-value is the fraction of labelings whose
/// combined value is at most the original one.
pub fn psh_test(x: &DataMatrix, y: &DataMatrix, cfg: &ShConfig) -> Result<TestOutcome> {
    if cfg.combiner == Combiner::MeanStat {
        return Err(Error::ConfigInvalid(
            "psh_test combines p-values; use the averaging test for MeanStat".into(),
        ));
    }
    cfg.validate_permutation(x.n() + y.n(), x.p().min(y.p()))?;
    let columns = subset_stat_columns(x, y, cfg)?;
    let cols = columns.len(); // L + 1
    let b = cfg.b;
    let inv = 1.0 / cols as f64;

    // per-subset permutation p-values, column-major
    let mut pcols = vec![vec![0.0f64; b]; cols];
    let mut row = vec![0.0f64; cols];
    let mut sorted = vec![0.0f64; cols];
    for i in 0..b {
        for j in 0..cols {
            row[j] = columns[j][i];
        }
        sorted.copy_from_slice(&row);
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("statistics are finite"));
        for j in 0..cols {
            // #{k : T_k >= T_j} = cols − #{k : T_k < T_j}
            let below = sorted.partition_point(|&t| t < row[j]);
            pcols[j][i] = (cols - below) as f64 * inv;
        }
    }

    let mut combined = Vec::with_capacity(cols);
    for col in &pcols {
        combined.push(combine(col, cfg.combiner)?);
    }
    let p0 = combined[0];
    let count = combined.iter().filter(|&&pj| pj <= p0).count();
    let p_final = count as f64 * inv;
    Ok(TestOutcome::new("psh", p0, p_final)
        .with_extra("m", cfg.m as f64)
        .with_extra("b", cfg.b as f64)
        .with_extra("l", cfg.l as f64))
}

/// Averaged-statistic variant: the statistic is the mean of the B subset
/// Hotelling T² values, calibrated by the same L label shuffles over the
/// same subsets; p = #{labelings with mean ≥ original} / (L+1).
pub fn thulin_test(x: &DataMatrix, y: &DataMatrix, cfg: &ShConfig) -> Result<TestOutcome> {
    cfg.validate_permutation(x.n() + y.n(), x.p().min(y.p()))?;
    let columns = subset_stat_columns(x, y, cfg)?;
    let b = cfg.b as f64;
    let means: Vec<f64> = columns
        .iter()
        .map(|col| col.iter().sum::<f64>() / b)
        .collect();
    let original = means[0];
    let count = means.iter().filter(|&&s| s >= original).count();
    let p_value = count as f64 / means.len() as f64;
    Ok(TestOutcome::new("thulin", original, p_value)
        .with_extra("m", cfg.m as f64)
        .with_extra("b", cfg.b as f64)
        .with_extra("l", cfg.l as f64))
}
