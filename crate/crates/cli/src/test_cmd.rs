//! The `test` subcommand: run selected tests on two CSV samples.

use anyhow::{bail, Context, Result};
use hdmean::{
    default_b, default_m, evaluate_test, Combiner, DataMatrix, DegreesOfFreedom, RngState,
    ShConfig, TestOutcome, TestSpec, DEFAULT_PERMUTATIONS,
};

use crate::io::{read_matrix, write_out};
use crate::{OutputFormat, TestArgs};

/// Resolve a test name to a concrete spec for data of this shape.
fn resolve(name: &str, args: &TestArgs, n: usize, p: usize) -> Result<TestSpec> {
    let sh_config = || ShConfig {
        m: args.m.unwrap_or_else(|| default_m(n, p)),
        b: args.b.unwrap_or_else(|| default_b(p)),
        l: args.l.unwrap_or(DEFAULT_PERMUTATIONS),
        equal_cov: !args.unequal_cov,
        combiner: Combiner::Simes,
        seed: args.seed,
    };
    Ok(match name {
        "sh" => TestSpec::Sh(sh_config()),
        "psh" => TestSpec::Psh(sh_config()),
        "thulin" => TestSpec::Thulin(sh_config()),
        "simes" => TestSpec::MarginalSimes {
            equal_var: !args.unequal_cov,
        },
        "sd" => TestSpec::Sd,
        "cq" => TestSpec::Cq,
        "lopes" => TestSpec::Lopes {
            k: args.k.unwrap_or_else(|| (n / 2).clamp(1, n.saturating_sub(2))),
        },
        other => bail!(
            "unknown test '{other}' (available: sh, simes, sd, cq, lopes, psh, thulin)"
        ),
    })
}

/// Randomized tests whose p-values may be averaged over repetitions.
fn supports_repeats(spec: &TestSpec) -> bool {
    matches!(spec, TestSpec::Sh(_) | TestSpec::Lopes { .. })
}

pub fn run(args: TestArgs) -> Result<()> {
    if args.repeats < 1 {
        bail!("--repeats must be at least 1");
    }
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        bail!("--alpha must lie in (0, 1)");
    }
    let x = read_matrix(&args.group1, args.transpose)?;
    let y = read_matrix(&args.group2, args.transpose)?;
    if x.p() != y.p() {
        bail!(
            "dimension mismatch: {} has {} columns, {} has {}",
            args.group1.display(),
            x.p(),
            args.group2.display(),
            y.p()
        );
    }
    let (n, p) = (x.n() + y.n(), x.p());

    let root = RngState::new(args.seed);
    let mut outcomes: Vec<TestOutcome> = Vec::new();
    for (i, name) in args.tests.iter().enumerate() {
        let spec = resolve(name, &args, n, p)?;
        let test_stream = root.substream(i as u64);
        let outcome = if args.repeats > 1 && supports_repeats(&spec) {
            average_over_repeats(&spec, &x, &y, test_stream, args.repeats)?
        } else {
            evaluate_test(&spec, &x, &y, test_stream)
                .with_context(|| format!("test '{name}' failed"))?
        };
        outcomes.push(outcome);
    }

    let rendered = match args.format {
        OutputFormat::Csv => render_csv(&outcomes)?,
        OutputFormat::Json => render_json(&outcomes, &args)?,
    };
    write_out(args.out.as_deref(), &rendered)
}

/// Mean p-value (and statistic) over independent repetitions of a
/// randomized test, to lower its draw-to-draw variance.
fn average_over_repeats(
    spec: &TestSpec,
    x: &DataMatrix,
    y: &DataMatrix,
    stream: RngState,
    repeats: usize,
) -> Result<TestOutcome> {
    let mut acc: Option<TestOutcome> = None;
    for r in 0..repeats {
        let out = evaluate_test(spec, x, y, stream.substream(r as u64))?;
        acc = Some(match acc {
            None => out,
            Some(mut a) => {
                a.statistic += out.statistic;
                a.p_value += out.p_value;
                a
            }
        });
    }
    let mut out = acc.expect("repeats >= 1");
    out.statistic /= repeats as f64;
    out.p_value /= repeats as f64;
    out.extras.insert("repeats".into(), repeats as f64);
    Ok(out)
}

fn render_csv(outcomes: &[TestOutcome]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "statistic", "p_value", "df1", "df2", "extras"])?;
    for o in outcomes {
        let (df1, df2) = match o.df {
            Some(DegreesOfFreedom::Single(a)) => (a.to_string(), String::new()),
            Some(DegreesOfFreedom::Pair(a, b)) => (a.to_string(), b.to_string()),
            None => (String::new(), String::new()),
        };
        let extras = o
            .extras
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            o.method.as_str(),
            &o.statistic.to_string(),
            &o.p_value.to_string(),
            &df1,
            &df2,
            &extras,
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn render_json(outcomes: &[TestOutcome], args: &TestArgs) -> Result<String> {
    let doc = serde_json::json!({
        "alpha": args.alpha,
        "seed": args.seed,
        "repeats": args.repeats,
        "results": outcomes,
    });
    Ok(format!("{}\n", serde_json::to_string_pretty(&doc)?))
}
