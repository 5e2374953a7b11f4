//! Parameter sweeps over swarm size, parameter grid and seed.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run, RunConfig, RunRecord, ViolationKind};
use crate::error::{Error, Result};

pub const DEFAULT_GAMMA: f64 = 0.2;

fn one() -> usize {
    1
}
fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Template; `n` and `seed` are overwritten per cell.
    pub base: RunConfig,
    pub n_values: Vec<usize>,
    #[serde(default = "one")]
    pub seeds_per_cell: usize,
    /// Param name to candidate values. Names are controller params, or one
    /// of `delta`, `ball_radius`, `coherence_c`, `dt`, `v_max`, `spacing`,
    /// `extent`, `cluster_gap`, `jitter`, `velocity_jitter`.
    #[serde(default)]
    pub param_grid: BTreeMap<String, Vec<f64>>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

impl SweepConfig {
    pub fn new(base: RunConfig, n_values: Vec<usize>) -> Self {
        Self {
            base,
            n_values,
            seeds_per_cell: 1,
            param_grid: BTreeMap::new(),
            gamma: DEFAULT_GAMMA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.len() < 2 {
            return Err(Error::InsufficientData {
                field: "n_values",
                needed: 2,
                got: self.n_values.len(),
            });
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("`n_values` must be strictly increasing".into()));
        }
        if self.seeds_per_cell < 1 {
            return Err(Error::InvalidConfig("`seeds_per_cell` must be at least 1".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidConfig("`gamma` must be positive".into()));
        }
        for (k, vs) in &self.param_grid {
            if vs.is_empty() {
                return Err(Error::InvalidConfig(format!("param_grid `{k}` has no values")));
            }
        }
        for cell in self.cells() {
            cell.validate()?;
        }
        Ok(())
    }

    /// Every parameter combination, in key order with the last key varying
    /// fastest.
    pub fn param_sets(&self) -> Vec<BTreeMap<String, f64>> {
        let mut sets = vec![BTreeMap::new()];
        for (key, values) in &self.param_grid {
            sets = sets
                .into_iter()
                .flat_map(|set| {
                    values.iter().map(move |v| {
                        let mut s = set.clone();
                        s.insert(key.clone(), *v);
                        s
                    })
                })
                .collect();
        }
        sets
    }

    /// One run config per (n, params, seed) cell, in canonical order.
    pub fn cells(&self) -> Vec<RunConfig> {
        self.jobs().into_iter().map(|(cfg, _)| cfg).collect()
    }

    fn jobs(&self) -> Vec<(RunConfig, BTreeMap<String, f64>)> {
        let mut out = Vec::new();
        for &n in &self.n_values {
            for params in self.param_sets() {
                for k in 0..self.seeds_per_cell {
                    let mut cfg = self.base.clone();
                    cfg.n = n;
                    cfg.seed = self.base.seed.wrapping_add(k as u64);
                    apply_params(&mut cfg, &params);
                    out.push((cfg, params.clone()));
                }
            }
        }
        out
    }
}

fn apply_params(cfg: &mut RunConfig, params: &BTreeMap<String, f64>) {
    for (key, &v) in params {
        match key.as_str() {
            "delta" => cfg.delta = v,
            "ball_radius" => cfg.ball_radius = Some(v),
            "coherence_c" => cfg.coherence_c = v,
            "dt" => cfg.dt = v,
            "v_max" => cfg.v_max = v,
            "spacing" => cfg.scenario.spacing = v,
            "extent" => cfg.scenario.extent = v,
            "cluster_gap" => cfg.scenario.cluster_gap = v,
            "jitter" => cfg.scenario.jitter = v,
            "velocity_jitter" => cfg.scenario.velocity_jitter = v,
            _ => {
                cfg.controller.params.insert(key.clone(), v);
            }
        }
    }
}

/// Per-run extrema over sampled times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub n: usize,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
    /// Max energy over non-degenerate samples; `None` if every sample was
    /// degenerate.
    pub max_energy: Option<f64>,
    pub min_coverage: f64,
    pub min_separation_overall: f64,
    pub max_vdev_overall: f64,
    pub hypothesis_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed: Option<String>,
}

impl RunSummary {
    pub fn from_record(record: &RunRecord, params: BTreeMap<String, f64>) -> Self {
        let s = &record.samples;
        let max_energy = s.iter().filter_map(|m| m.energy).reduce(f64::max);
        let breached = record.count(ViolationKind::SeparationBreach)
            + record.count(ViolationKind::CoherenceBreach)
            + record.count(ViolationKind::DegenerateEnergy);
        Self {
            n: record.config.n,
            params,
            seed: record.config.seed,
            max_energy,
            min_coverage: s.iter().map(|m| m.coverage.value).fold(f64::INFINITY, f64::min),
            min_separation_overall: s.iter().map(|m| m.min_separation).fold(f64::INFINITY, f64::min),
            max_vdev_overall: s.iter().map(|m| m.max_velocity_deviation).fold(0.0, f64::max),
            hypothesis_ok: breached == 0,
            failed: None,
        }
    }

    fn failed(cfg: &RunConfig, params: BTreeMap<String, f64>, err: &Error) -> Self {
        Self {
            n: cfg.n,
            params,
            seed: cfg.seed,
            max_energy: None,
            min_coverage: 0.0,
            min_separation_overall: 0.0,
            max_vdev_overall: 0.0,
            hypothesis_ok: false,
            failed: Some(err.to_string()),
        }
    }

    pub fn is_failed(&self) -> bool {
        self.failed.is_some()
    }
}

pub fn cmp_params(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> Ordering {
    let mut ia = a.iter();
    let mut ib = b.iter();
    loop {
        match (ia.next(), ib.next()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some((ka, va)), Some((kb, vb))) => {
                let o = ka.cmp(kb).then(va.total_cmp(vb));
                if o != Ordering::Equal {
                    return o;
                }
            }
        }
    }
}

fn cmp_summary(a: &RunSummary, b: &RunSummary) -> Ordering {
    a.n.cmp(&b.n)
        .then_with(|| cmp_params(&a.params, &b.params))
        .then(a.seed.cmp(&b.seed))
}

/// Result of one sweep cell. `record` is absent for failed runs.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub summary: RunSummary,
    pub record: Option<RunRecord>,
}

/// Runs every cell on a pool of `parallelism` threads. Output order is
/// canonical (n, params, seed) whatever the scheduling. Runtime failures
/// become failed summaries; config errors abort before anything runs.
pub fn run_sweep_records(sweep: &SweepConfig, parallelism: usize) -> Result<Vec<CellResult>> {
    sweep.validate()?;
    let jobs = sweep.jobs();

    let exec = |(cfg, params): &(RunConfig, BTreeMap<String, f64>)| match run(cfg) {
        Ok(record) => CellResult {
            summary: RunSummary::from_record(&record, params.clone()),
            record: Some(record),
        },
        Err(e) => CellResult {
            summary: RunSummary::failed(cfg, params.clone(), &e),
            record: None,
        },
    };

    let mut results: Vec<CellResult> = if parallelism <= 1 {
        jobs.iter().map(exec).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(|| jobs.par_iter().map(exec).collect())
    };
    results.sort_by(|a, b| cmp_summary(&a.summary, &b.summary));
    Ok(results)
}

pub fn run_sweep(sweep: &SweepConfig, parallelism: usize) -> Result<Vec<RunSummary>> {
    Ok(run_sweep_records(sweep, parallelism)?
        .into_iter()
        .map(|c| c.summary)
        .collect())
}
