//! The `simulate` subcommand: run a scenario grid and emit one report row
//! per (scenario, test).

use anyhow::{bail, Context, Result};
use hdmean::{
    default_b, default_m, run_scenario, target_norm_sq, Combiner, CovKind, CovarianceSpec,
    NamedTest, NoiseKind, RngState, ScenarioSpec, ShConfig, SignalSpec, TestSpec,
    DEFAULT_PERMUTATIONS, DEFAULT_SEED,
};
use serde::Deserialize;

use crate::io::write_atomic;
use crate::SimulateArgs;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimConfig {
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default = "default_reps")]
    reps: usize,
    #[serde(default = "default_seed")]
    seed: u64,
    scenarios: Vec<CellConfig>,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_reps() -> usize {
    1000
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CellConfig {
    id: Option<String>,
    n_x: usize,
    n_y: usize,
    p: usize,
    cov: CovKind,
    signal: Option<SignalConfig>,
    noise: Option<NoiseKind>,
    scale_factor_group1: Option<f64>,
    equal_cov_groups: Option<bool>,
    tests: Vec<String>,
    #[serde(default)]
    overrides: Overrides,
    /// Replicate count for this cell only.
    reps: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SignalConfig {
    beta: f64,
    /// Target squared norm; alternative to `norm_factor`.
    norm_sq: Option<f64>,
    /// Squared norm via factor * sqrt(40 / (n_x + n_y)).
    norm_factor: Option<f64>,
    seed: Option<u64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Overrides {
    m: Option<usize>,
    b: Option<usize>,
    l: Option<usize>,
    k: Option<usize>,
    equal_cov: Option<bool>,
    combiner: Option<Combiner>,
}

fn parse_config(path: &std::path::Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let is_json = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    let cfg: SimConfig = if is_json {
        serde_json::from_str(&text).with_context(|| format!("invalid JSON config: {}", path.display()))?
    } else {
        toml::from_str(&text).with_context(|| format!("invalid TOML config: {}", path.display()))?
    };
    if cfg.scenarios.is_empty() {
        bail!("config has no scenarios");
    }
    Ok(cfg)
}

fn build_scenario(cell: &CellConfig, master_seed: u64) -> Result<ScenarioSpec> {
    let signal = match &cell.signal {
        None => None,
        Some(s) => {
            let norm_sq = match (s.norm_sq, s.norm_factor) {
                (Some(v), None) => v,
                (None, Some(f)) => target_norm_sq(cell.n_x, cell.n_y, f),
                (Some(_), Some(_)) => bail!("signal: give norm_sq or norm_factor, not both"),
                (None, None) => bail!("signal: one of norm_sq or norm_factor is required"),
            };
            Some(SignalSpec {
                p: cell.p,
                beta: s.beta,
                norm_sq,
                seed: s.seed.unwrap_or(master_seed),
            })
        }
    };
    let scale = cell.scale_factor_group1.unwrap_or(1.0);
    Ok(ScenarioSpec {
        n_x: cell.n_x,
        n_y: cell.n_y,
        cov: CovarianceSpec {
            kind: cell.cov,
            p: cell.p,
        },
        signal,
        noise: cell.noise.unwrap_or(NoiseKind::None),
        equal_cov_groups: cell.equal_cov_groups.unwrap_or(scale == 1.0),
        scale_factor_group1: scale,
    })
}

fn build_tests(cell: &CellConfig, scn: &ScenarioSpec) -> Result<Vec<NamedTest>> {
    let (n, p) = (scn.n_total(), scn.p());
    let ov = &cell.overrides;
    let equal_cov = ov.equal_cov.unwrap_or(scn.equal_cov_groups);
    let sh_config = ShConfig {
        m: ov.m.unwrap_or_else(|| default_m(n, p)),
        b: ov.b.unwrap_or_else(|| default_b(p)),
        l: ov.l.unwrap_or(DEFAULT_PERMUTATIONS),
        equal_cov,
        combiner: ov.combiner.unwrap_or(Combiner::Simes),
        seed: DEFAULT_SEED,
    };
    cell.tests
        .iter()
        .map(|name| {
            let spec = match name.as_str() {
                "sh" => TestSpec::Sh(sh_config),
                "psh" => TestSpec::Psh(sh_config),
                "thulin" => TestSpec::Thulin(sh_config),
                "simes" => TestSpec::MarginalSimes {
                    equal_var: equal_cov,
                },
                "sd" => TestSpec::Sd,
                "cq" => TestSpec::Cq,
                "lopes" => TestSpec::Lopes {
                    k: ov.k.unwrap_or_else(|| (n / 2).clamp(1, n.saturating_sub(2))),
                },
                "hotelling" => TestSpec::Hotelling,
                "welch_hotelling" => TestSpec::WelchHotelling,
                other => bail!("scenario references an unknown test '{other}'"),
            };
            Ok(NamedTest::from(spec))
        })
        .collect()
}

fn cov_label(kind: &CovKind) -> String {
    match kind {
        CovKind::Ar { rho } => format!("ar{rho}"),
        CovKind::Block { block_size, rho } => format!("block{block_size}-{rho}"),
        CovKind::Model7 => "model7".into(),
        CovKind::EquiCorr { rho } => format!("equi{rho}"),
        CovKind::Identity => "ident".into(),
    }
}

fn scenario_id(cell: &CellConfig, scn: &ScenarioSpec) -> String {
    if let Some(id) = &cell.id {
        return id.clone();
    }
    let signal = match &scn.signal {
        None => "null".to_string(),
        Some(s) => format!("b{}q{:.4}", s.beta, s.norm_sq),
    };
    let noise = match scn.noise {
        NoiseKind::None => "",
        NoiseKind::Laplace => "_lap",
        NoiseKind::Exponential => "_exp",
    };
    let scale = if scn.scale_factor_group1 != 1.0 {
        format!("_s{}", scn.scale_factor_group1)
    } else {
        String::new()
    };
    format!(
        "n{}-{}_p{}_{}_{}{}{}",
        scn.n_x,
        scn.n_y,
        scn.p(),
        cov_label(&scn.cov.kind),
        signal,
        noise,
        scale
    )
}

pub fn run(args: SimulateArgs) -> Result<()> {
    if let Some(workers) = args.workers {
        if workers < 1 {
            bail!("--workers must be at least 1");
        }
        // reports do not depend on the pool size; this only bounds parallelism
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("worker pool already initialized")?;
    }
    let cfg = parse_config(&args.config)?;
    let alpha = cfg.alpha;
    let master_seed = args.seed.unwrap_or(cfg.seed);
    let master = RngState::new(master_seed);

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "scenario_id",
        "method",
        "statistic_mean",
        "rejection_rate",
        "se",
        "reps",
        "alpha",
        "seed",
    ])?;
    for (index, cell) in cfg.scenarios.iter().enumerate() {
        let scn = build_scenario(cell, master_seed)
            .with_context(|| format!("scenario {index}"))?;
        let tests = build_tests(cell, &scn).with_context(|| format!("scenario {index}"))?;
        let reps = args.reps.or(cell.reps).unwrap_or(cfg.reps);
        // per-cell seed, derived from (master seed, cell index); rerunning a
        // single cell with this seed reproduces its rows exactly
        let cell_seed = master.substream(index as u64).derive_u64();
        let id = scenario_id(cell, &scn);
        let report = run_scenario(&scn, &tests, reps, alpha, cell_seed)
            .with_context(|| format!("scenario {index} ('{id}')"))?;
        for rates in &report.per_test {
            w.write_record([
                id.as_str(),
                rates.method.as_str(),
                &rates.statistic_mean.to_string(),
                &rates.rejection_rate.to_string(),
                &rates.standard_error.to_string(),
                &reps.to_string(),
                &alpha.to_string(),
                &cell_seed.to_string(),
            ])?;
        }
    }
    let rendered = String::from_utf8(w.into_inner()?)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create output directory {}", args.out.display()))?;
    let path = args.out.join("report.csv");
    write_atomic(&path, &rendered)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}
