//! Initial-condition generators.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{mean_point, AgentState, SwarmState, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Grid,
    Line,
    TwoClusters,
    UniformBox,
}

/// How lattice spacing changes with swarm size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingGrowth {
    #[default]
    Fixed,
    /// `spacing / n`
    InverseN,
}

/// How the distance between cluster centroids changes with swarm size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapGrowth {
    #[default]
    Fixed,
    /// `cluster_gap * n`
    LinearInN,
}

fn one() -> f64 {
    1.0
}
fn ten() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: ScenarioKind,
    /// Lattice spacing for `grid`, `line` and the clusters (m).
    #[serde(default = "one")]
    pub spacing: f64,
    #[serde(default)]
    pub spacing_growth: SpacingGrowth,
    /// Side of the `uniform_box` cube (m).
    #[serde(default = "ten")]
    pub extent: f64,
    /// Distance between the two cluster centroids (m).
    #[serde(default = "ten")]
    pub cluster_gap: f64,
    #[serde(default)]
    pub gap_growth: GapGrowth,
    /// Velocity given to every agent; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_velocity: Option<Vector>,
    /// Uniform position noise in `[-jitter, jitter]` per component (m).
    #[serde(default)]
    pub jitter: f64,
    /// Uniform velocity noise in `[-velocity_jitter, velocity_jitter]` per
    /// component (m/s).
    #[serde(default)]
    pub velocity_jitter: f64,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, spacing: f64) -> Self {
        Self {
            kind,
            spacing,
            spacing_growth: SpacingGrowth::Fixed,
            extent: 10.0,
            cluster_gap: 10.0,
            gap_growth: GapGrowth::Fixed,
            initial_velocity: None,
            jitter: 0.0,
            velocity_jitter: 0.0,
        }
    }

    pub fn with_jitter(mut self, jitter: f64) -> Self {
        self.jitter = jitter;
        self
    }

    pub fn with_velocity(mut self, v: Vector) -> Self {
        self.initial_velocity = Some(v);
        self
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("scenario: {msg}")));
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return bad("`spacing` must be positive");
        }
        if !(self.extent > 0.0 && self.extent.is_finite()) {
            return bad("`extent` must be positive");
        }
        if !(self.cluster_gap >= 0.0 && self.cluster_gap.is_finite()) {
            return bad("`cluster_gap` must be non-negative");
        }
        if !(self.jitter >= 0.0) || !(self.velocity_jitter >= 0.0) {
            return bad("jitter must be non-negative");
        }
        if let Some(v) = &self.initial_velocity {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                });
            }
        }
        Ok(())
    }

    fn spacing_for(&self, n: usize) -> f64 {
        match self.spacing_growth {
            SpacingGrowth::Fixed => self.spacing,
            SpacingGrowth::InverseN => self.spacing / n as f64,
        }
    }

    fn gap_for(&self, n: usize) -> f64 {
        match self.gap_growth {
            GapGrowth::Fixed => self.cluster_gap,
            GapGrowth::LinearInN => self.cluster_gap * n as f64,
        }
    }
}

/// Smallest `k` with `k^d >= n`.
fn lattice_side(n: usize, d: usize) -> usize {
    let mut k = (n as f64).powf(1.0 / d as f64).floor().max(1.0) as usize;
    while k.saturating_pow(d as u32) < n {
        k += 1;
    }
    k
}

/// First `n` points of a `k^d` lattice, first coordinate varying fastest.
fn lattice(n: usize, d: usize, spacing: f64) -> Vec<Vector> {
    let k = lattice_side(n, d);
    (0..n)
        .map(|mut t| {
            (0..d)
                .map(|_| {
                    let digit = t % k;
                    t /= k;
                    digit as f64 * spacing
                })
                .collect()
        })
        .collect()
}

fn shifted(points: Vec<Vector>, to: &[f64]) -> Vec<Vector> {
    if points.is_empty() {
        return points;
    }
    let c = mean_point(&points);
    points
        .into_iter()
        .map(|p| p.iter().zip(&c).zip(to).map(|((x, c), t)| x - c + t).collect())
        .collect()
}

pub fn make_scenario<R: Rng + ?Sized>(scenario: &Scenario, n: usize, d: usize, rng: &mut R) -> Result<SwarmState> {
    if n < 1 {
        return Err(Error::NotEnoughAgents { needed: 1, got: 0 });
    }
    scenario.validate(d)?;
    let spacing = scenario.spacing_for(n);

    let mut positions = match scenario.kind {
        ScenarioKind::Grid => lattice(n, d, spacing),
        ScenarioKind::Line => (0..n)
            .map(|i| {
                let mut p = vec![0.0; d];
                p[0] = i as f64 * spacing;
                p
            })
            .collect(),
        ScenarioKind::TwoClusters => {
            let (na, nb) = (n.div_ceil(2), n / 2);
            let mut far = vec![0.0; d];
            far[0] = scenario.gap_for(n);
            let mut ps = shifted(lattice(na, d, spacing), &vec![0.0; d]);
            ps.extend(shifted(lattice(nb, d, spacing), &far));
            ps
        }
        ScenarioKind::UniformBox => (0..n)
            .map(|_| (0..d).map(|_| scenario.extent * rng.random::<f64>()).collect())
            .collect(),
    };

    if scenario.jitter > 0.0 {
        let j = scenario.jitter;
        for p in &mut positions {
            for x in p.iter_mut() {
                *x += rng.random_range(-j..=j);
            }
        }
    }

    let base_v = scenario.initial_velocity.clone().unwrap_or_else(|| vec![0.0; d]);
    let agents = positions
        .into_iter()
        .map(|p| {
            let mut v = base_v.clone();
            if scenario.velocity_jitter > 0.0 {
                let j = scenario.velocity_jitter;
                for x in v.iter_mut() {
                    *x += rng.random_range(-j..=j);
                }
            }
            AgentState::new(p, v)
        })
        .collect();
    SwarmState::new(0.0, d, agents)
}
