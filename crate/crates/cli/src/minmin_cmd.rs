//! The `minmin` subcommand: aggregate power reports into per-method
//! worst-case power ratios, grouped by sample size.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use hdmean::minmin_score;

use crate::io::write_out;
use crate::MinminArgs;

#[derive(Debug, Clone)]
struct Row {
    scenario_id: String,
    method: String,
    rejection_rate: f64,
}

fn read_report(path: &std::path::Path) -> Result<Vec<Row>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{}: missing column '{name}'", path.display()))
    };
    let (c_id, c_method, c_rate) = (col("scenario_id")?, col("method")?, col("rejection_rate")?);
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let rate: f64 = record
            .get(c_rate)
            .unwrap_or_default()
            .parse()
            .with_context(|| {
                format!("{}: line {}: bad rejection_rate", path.display(), idx + 2)
            })?;
        rows.push(Row {
            scenario_id: record.get(c_id).unwrap_or_default().to_string(),
            method: record.get(c_method).unwrap_or_default().to_string(),
            rejection_rate: rate,
        });
    }
    Ok(rows)
}

/// Sample-size group of a scenario id: the leading "n{a}-{b}" token of the
/// ids `simulate` generates. Ids without it land in one "all" group.
fn group_of(scenario_id: &str) -> String {
    let token = scenario_id.split('_').next().unwrap_or_default();
    if token.len() > 1
        && token.starts_with('n')
        && token[1..].split('-').count() == 2
        && token[1..].split('-').all(|t| t.parse::<usize>().is_ok())
    {
        token.to_string()
    } else {
        "all".to_string()
    }
}

pub fn run(args: MinminArgs) -> Result<()> {
    let mut rows = Vec::new();
    for path in &args.inputs {
        rows.extend(read_report(path)?);
    }
    if rows.is_empty() {
        bail!("no report rows found");
    }

    // group -> scenario -> method -> power
    let mut groups: BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>> = BTreeMap::new();
    for row in rows {
        groups
            .entry(group_of(&row.scenario_id))
            .or_default()
            .entry(row.scenario_id)
            .or_default()
            .insert(row.method, row.rejection_rate);
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["group", "method", "score"])?;
    for (group, scenarios) in &groups {
        let methods: Vec<String> = scenarios
            .values()
            .next()
            .expect("group is non-empty")
            .keys()
            .cloned()
            .collect();
        for (scenario, table) in scenarios {
            let found: Vec<&String> = table.keys().collect();
            if found.len() != methods.len() || !methods.iter().all(|m| table.contains_key(m)) {
                bail!(
                    "scenario '{scenario}' reports methods {found:?}, expected {methods:?}; \
                     min-min needs a shared method set"
                );
            }
        }
        let power: Vec<Vec<f64>> = methods
            .iter()
            .map(|m| scenarios.values().map(|table| table[m]).collect())
            .collect();
        let scores = minmin_score(&power)
            .with_context(|| format!("group '{group}'"))?;
        for (method, score) in methods.iter().zip(scores) {
            w.write_record([group.as_str(), method.as_str(), &score.to_string()])?;
        }
    }
    let rendered = String::from_utf8(w.into_inner()?)?;
    write_out(args.out.as_deref(), &rendered)
}
