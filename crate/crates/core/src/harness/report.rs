//! Size-scaling trends and the bounded-energy / floored-coverage verdict.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::sweep::{cmp_params, RunSummary};

/// Floor applied before taking logs in [`trend_stat`].
pub const EPS_TREND: f64 = 1e-12;

/// Least-squares slope of `log2(max(v, EPS_TREND))` against `log2(n)`:
/// relative growth per doubling of `n`.
pub fn trend_stat(values: &[f64], n_values: &[usize]) -> Result<f64> {
    if values.len() != n_values.len() {
        return Err(Error::InvalidConfig(format!(
            "trend: {} values for {} swarm sizes",
            values.len(),
            n_values.len()
        )));
    }
    let mut distinct = n_values.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != n_values.len() || n_values.len() < 2 {
        return Err(Error::InsufficientData {
            field: "n_values",
            needed: 2,
            got: distinct.len(),
        });
    }

    let xs: Vec<f64> = n_values.iter().map(|&n| (n as f64).log2()).collect();
    let ys: Vec<f64> = values.iter().map(|&v| v.max(EPS_TREND).log2()).collect();
    // Shift by the first value so a constant series is exactly flat.
    let ys: Vec<f64> = ys.iter().map(|y| y - ys[0]).collect();
    let m = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / m;
    let y_mean = ys.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - x_mean) * (y - y_mean);
        sxx += (x - x_mean) * (x - x_mean);
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Violated,
    HypothesesFailed,
}

impl Verdict {
    /// The verdict as a pure function of the three flags.
    pub fn decide(energy_bounded: bool, coverage_floored: bool, hypotheses_held: bool) -> Self {
        if !hypotheses_held {
            Verdict::HypothesesFailed
        } else if energy_bounded && !coverage_floored {
            Verdict::Violated
        } else {
            Verdict::Consistent
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeAggregate {
    pub n: usize,
    pub runs: usize,
    /// Median over seeds of the per-run max energy. `None` (JSON `null`)
    /// when the median run never had a non-degenerate sample.
    pub median_max_energy: Option<f64>,
    pub median_min_coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub tool_version: String,
    pub params: BTreeMap<String, f64>,
    pub gamma: f64,
    pub per_n: Vec<SizeAggregate>,
    pub energy_trend: f64,
    pub coverage_trend: f64,
    pub energy_bounded: bool,
    pub coverage_floored: bool,
    pub hypotheses_held: bool,
    pub theorem_consistent: Verdict,
    /// Max over n of the median max energy.
    #[serde(rename = "fitted_C")]
    pub fitted_c: Option<f64>,
    /// Min over n of the median min coverage.
    #[serde(rename = "fitted_Cprime")]
    pub fitted_c_prime: f64,
    pub failed_runs: usize,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len();
    if m % 2 == 1 {
        xs[m / 2]
    } else {
        0.5 * (xs[m / 2 - 1] + xs[m / 2])
    }
}

/// Aggregates one parameter set's summaries. Failed runs are left out of
/// the medians and make `hypotheses_held` false.
pub fn robustness_report(summaries: &[RunSummary], gamma: f64) -> Result<RobustnessReport> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidConfig("`gamma` must be positive".into()));
    }
    let failed_runs = summaries.iter().filter(|s| s.is_failed()).count();
    let mut by_n: BTreeMap<usize, Vec<&RunSummary>> = BTreeMap::new();
    for s in summaries.iter().filter(|s| !s.is_failed()) {
        by_n.entry(s.n).or_default().push(s);
    }
    if by_n.len() < 2 {
        return Err(Error::InsufficientData {
            field: "n_values",
            needed: 2,
            got: by_n.len(),
        });
    }

    let per_n: Vec<SizeAggregate> = by_n
        .iter()
        .map(|(&n, runs)| {
            // A run with no finite energy sample counts as unbounded energy.
            let e = median(runs.iter().map(|s| s.max_energy.unwrap_or(f64::INFINITY)).collect());
            SizeAggregate {
                n,
                runs: runs.len(),
                median_max_energy: e.is_finite().then_some(e),
                median_min_coverage: median(runs.iter().map(|s| s.min_coverage).collect()),
            }
        })
        .collect();

    let ns: Vec<usize> = per_n.iter().map(|a| a.n).collect();
    let energies: Vec<f64> = per_n
        .iter()
        .map(|a| a.median_max_energy.unwrap_or(f64::INFINITY))
        .collect();
    let coverages: Vec<f64> = per_n.iter().map(|a| a.median_min_coverage).collect();

    let energy_trend = trend_stat(&energies, &ns)?;
    let coverage_trend = trend_stat(&coverages, &ns)?;
    let fitted_c = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let fitted_c_prime = coverages.iter().copied().fold(f64::INFINITY, f64::min);

    // NaN trends (infinite energies) compare false and so never count as bounded.
    let energy_bounded = energy_trend <= gamma;
    let coverage_floored = coverage_trend >= -gamma && fitted_c_prime > 0.0;
    let hypotheses_held = failed_runs == 0 && summaries.iter().all(|s| s.hypothesis_ok);

    let mut params = summaries.first().map(|s| s.params.clone()).unwrap_or_default();
    if summaries
        .iter()
        .any(|s| cmp_params(&s.params, &params) != std::cmp::Ordering::Equal)
    {
        params.clear();
    }

    Ok(RobustnessReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        params,
        gamma,
        per_n,
        energy_trend,
        coverage_trend,
        energy_bounded,
        coverage_floored,
        hypotheses_held,
        theorem_consistent: Verdict::decide(energy_bounded, coverage_floored, hypotheses_held),
        fitted_c: fitted_c.is_finite().then_some(fitted_c),
        fitted_c_prime,
        failed_runs,
    })
}

/// One report per distinct parameter set, in canonical parameter order.
pub fn robustness_reports(summaries: &[RunSummary], gamma: f64) -> Result<Vec<RobustnessReport>> {
    let mut groups: Vec<(BTreeMap<String, f64>, Vec<RunSummary>)> = Vec::new();
    for s in summaries {
        match groups
            .iter_mut()
            .find(|(p, _)| cmp_params(p, &s.params) == std::cmp::Ordering::Equal)
        {
            Some((_, g)) => g.push(s.clone()),
            None => groups.push((s.params.clone(), vec![s.clone()])),
        }
    }
    groups.sort_by(|a, b| cmp_params(&a.0, &b.0));
    groups.iter().map(|(_, g)| robustness_report(g, gamma)).collect()
}
