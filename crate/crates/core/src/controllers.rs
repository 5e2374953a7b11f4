//! Swarming control laws. Each maps a [`SwarmState`] to one acceleration
//! per agent, in agent order.
//!
//! | name              | params                                          |
//! |-------------------|-------------------------------------------------|
//! | `cucker_smale`    | `lambda`, `beta`                                |
//! | `boids`           | `w_sep`, `w_align`, `w_coh`, `r_sep`, `r_neigh`, `w_mig` |
//! | `potential_flock` | `d_star`, `k_pot`, `k_align`, `r_cut`, `w_mig`  |
//! | `random_walk`     | `sigma`                                         |
//! | `static`          | none                                            |
//!
//! Missing params take the defaults in [`ControllerKind::defaults`]; unknown
//! names are rejected.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{axpy, dist2, sub, SwarmState, Vector};
use crate::grid::{adjacency, neighbors_within};
use crate::metrics::EPS_SEPARATION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    CuckerSmale,
    Boids,
    PotentialFlock,
    RandomWalk,
    Static,
}

impl ControllerKind {
    pub fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            ControllerKind::CuckerSmale => &[("lambda", 1.0), ("beta", 0.5)],
            ControllerKind::Boids => &[
                ("w_sep", 1.5),
                ("w_align", 1.0),
                ("w_coh", 0.8),
                ("r_sep", 1.0),
                ("r_neigh", 3.0),
                ("w_mig", 0.5),
            ],
            ControllerKind::PotentialFlock => &[
                ("d_star", 1.0),
                ("k_pot", 1.0),
                ("k_align", 0.5),
                ("r_cut", 2.5),
                ("w_mig", 0.5),
            ],
            ControllerKind::RandomWalk => &[("sigma", 1.0)],
            ControllerKind::Static => &[],
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ControllerKind::CuckerSmale => "cucker_smale",
            ControllerKind::Boids => "boids",
            ControllerKind::PotentialFlock => "potential_flock",
            ControllerKind::RandomWalk => "random_walk",
            ControllerKind::Static => "static",
        };
        f.write_str(s)
    }
}

/// Named control law plus its parameters, as it appears in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerSpec {
    pub name: ControllerKind,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Commanded travel velocity; defaults to the unit vector along the
    /// first axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub migration_velocity: Option<Vector>,
}

impl ControllerSpec {
    pub fn new(name: ControllerKind) -> Self {
        Self {
            name,
            params: BTreeMap::new(),
            migration_velocity: None,
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn with_migration(mut self, v: Vector) -> Self {
        self.migration_velocity = Some(v);
        self
    }

    /// Validates params and resolves defaults for a `dim`-dimensional run.
    pub fn resolve(&self, dim: usize) -> Result<ControlLaw> {
        let defaults = self.name.defaults();
        for (key, value) in &self.params {
            if !defaults.iter().any(|(k, _)| k == key) {
                return Err(Error::InvalidConfig(format!(
                    "unknown parameter `{key}` for controller {}",
                    self.name
                )));
            }
            if !value.is_finite() {
                return Err(Error::InvalidConfig(format!("parameter `{key}` must be finite")));
            }
        }
        let get = |key: &str| {
            self.params
                .get(key)
                .copied()
                .unwrap_or_else(|| defaults.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).unwrap())
        };
        let migration = match &self.migration_velocity {
            Some(v) if v.len() != dim => {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                })
            }
            Some(v) => v.clone(),
            None => {
                let mut v = vec![0.0; dim];
                v[0] = 1.0;
                v
            }
        };
        let nonneg = |key: &str| -> Result<f64> {
            let v = get(key);
            if v < 0.0 {
                return Err(Error::InvalidConfig(format!("`{key}` must be non-negative")));
            }
            Ok(v)
        };
        let positive = |key: &str| -> Result<f64> {
            let v = get(key);
            if v <= 0.0 {
                return Err(Error::InvalidConfig(format!("`{key}` must be positive")));
            }
            Ok(v)
        };

        Ok(match self.name {
            ControllerKind::CuckerSmale => ControlLaw::CuckerSmale {
                lambda: nonneg("lambda")?,
                beta: nonneg("beta")?,
            },
            ControllerKind::Boids => ControlLaw::Boids(BoidsParams {
                w_sep: nonneg("w_sep")?,
                w_align: nonneg("w_align")?,
                w_coh: nonneg("w_coh")?,
                r_sep: positive("r_sep")?,
                r_neigh: positive("r_neigh")?,
                w_mig: nonneg("w_mig")?,
                migration,
            }),
            ControllerKind::PotentialFlock => {
                let p = PotentialParams {
                    d_star: positive("d_star")?,
                    k_pot: nonneg("k_pot")?,
                    k_align: nonneg("k_align")?,
                    r_cut: positive("r_cut")?,
                    w_mig: nonneg("w_mig")?,
                    migration,
                };
                if p.r_cut <= p.d_star {
                    return Err(Error::InvalidConfig("`r_cut` must exceed `d_star`".into()));
                }
                ControlLaw::PotentialFlock(p)
            }
            ControllerKind::RandomWalk => ControlLaw::RandomWalk {
                sigma: nonneg("sigma")?,
            },
            ControllerKind::Static => ControlLaw::Static,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoidsParams {
    pub w_sep: f64,
    pub w_align: f64,
    pub w_coh: f64,
    pub r_sep: f64,
    pub r_neigh: f64,
    pub w_mig: f64,
    pub migration: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialParams {
    pub d_star: f64,
    pub k_pot: f64,
    pub k_align: f64,
    pub r_cut: f64,
    pub w_mig: f64,
    pub migration: Vector,
}

/// A validated control law with every parameter filled in.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlLaw {
    CuckerSmale { lambda: f64, beta: f64 },
    Boids(BoidsParams),
    PotentialFlock(PotentialParams),
    RandomWalk { sigma: f64 },
    Static,
}

/// Per-agent accelerations (m/s²), indexed by agent id.
#[derive(Debug, Clone, PartialEq)]
pub struct Accelerations(pub Vec<Vector>);

impl Accelerations {
    pub fn zeros(n: usize, dim: usize) -> Self {
        Self(vec![vec![0.0; dim]; n])
    }

    pub fn total(&self) -> Vector {
        let dim = self.0.first().map_or(0, Vec::len);
        let mut t = vec![0.0; dim];
        for a in &self.0 {
            axpy(&mut t, 1.0, a);
        }
        t
    }
}

impl ControlLaw {
    /// Evaluates the law. Only `RandomWalk` draws from `rng`.
    pub fn accelerations<R: Rng + ?Sized>(&self, state: &SwarmState, rng: &mut R) -> Result<Accelerations> {
        match self {
            ControlLaw::CuckerSmale { lambda, beta } => Ok(cucker_smale_accel(state, *lambda, *beta)),
            ControlLaw::Boids(p) => boids_accel(state, p),
            ControlLaw::PotentialFlock(p) => potential_flock_accel(state, p),
            ControlLaw::RandomWalk { sigma } => Ok(random_walk_accel(state, *sigma, rng)),
            ControlLaw::Static => Ok(static_accel(state)),
        }
    }
}

/// Alignment dynamics `a_i = (λ/n) Σ_j ψ(|x_j - x_i|) (v_j - v_i)` with
/// `ψ(r) = (1 + r²)^-β`, summed exactly over all pairs.
pub fn cucker_smale_accel(state: &SwarmState, lambda: f64, beta: f64) -> Accelerations {
    let n = state.len();
    let mut acc = Accelerations::zeros(n, state.dim);
    let scale = lambda / n as f64;
    for i in 0..n {
        for j in i + 1..n {
            let (ai, aj) = (&state.agents[i], &state.agents[j]);
            let psi = (1.0 + dist2(&ai.position, &aj.position)).powf(-beta);
            let w = scale * psi;
            for k in 0..state.dim {
                // The same rounded term goes to both agents with opposite sign.
                let t = w * (aj.velocity[k] - ai.velocity[k]);
                acc.0[i][k] += t;
                acc.0[j][k] -= t;
            }
        }
    }
    acc
}

fn check_pairs(state: &SwarmState, pairs: &[(usize, usize)]) -> Result<()> {
    let floor2 = EPS_SEPARATION * EPS_SEPARATION;
    for &(i, j) in pairs {
        let r2 = dist2(&state.agents[i].position, &state.agents[j].position);
        if r2 < floor2 {
            return Err(Error::DegenerateDistance {
                i,
                j,
                distance: r2.sqrt(),
            });
        }
    }
    Ok(())
}

/// Separation, alignment, cohesion and migration steering.
pub fn boids_accel(state: &SwarmState, p: &BoidsParams) -> Result<Accelerations> {
    let n = state.len();
    let dim = state.dim;
    let positions = state.positions();
    let pairs = neighbors_within(&positions, p.r_sep.max(p.r_neigh));
    check_pairs(state, &pairs)?;
    let adj = adjacency(n, &pairs);
    let (rs2, rn2) = (p.r_sep * p.r_sep, p.r_neigh * p.r_neigh);

    let mut out = Accelerations::zeros(n, dim);
    for (i, neigh) in adj.iter().enumerate() {
        let me = &state.agents[i];
        let mut sep = vec![0.0; dim];
        let mut mean_v = vec![0.0; dim];
        let mut mean_x = vec![0.0; dim];
        let mut count = 0usize;
        for &j in neigh {
            let other = &state.agents[j];
            let r2 = dist2(&me.position, &other.position);
            if r2 <= rs2 {
                axpy(&mut sep, 1.0 / r2, &sub(&me.position, &other.position));
            }
            if r2 <= rn2 {
                axpy(&mut mean_v, 1.0, &other.velocity);
                axpy(&mut mean_x, 1.0, &other.position);
                count += 1;
            }
        }
        let a = &mut out.0[i];
        axpy(a, p.w_sep, &sep);
        if count > 0 {
            let inv = 1.0 / count as f64;
            for k in 0..dim {
                a[k] += p.w_align * (mean_v[k] * inv - me.velocity[k]);
                a[k] += p.w_coh * (mean_x[k] * inv - me.position[k]);
            }
        }
        for k in 0..dim {
            a[k] += p.w_mig * (p.migration[k] - me.velocity[k]);
        }
    }
    Ok(out)
}

/// Pairwise potential with equilibrium spacing `d_star`: radial force
/// `k_pot (1/r - r/d_star²)` along `x_i - x_j` for `r <= r_cut`, plus
/// summed velocity alignment over the same neighbors and migration feedback.
pub fn potential_flock_accel(state: &SwarmState, p: &PotentialParams) -> Result<Accelerations> {
    let n = state.len();
    let dim = state.dim;
    let positions = state.positions();
    let pairs = neighbors_within(&positions, p.r_cut);
    check_pairs(state, &pairs)?;

    let mut out = Accelerations::zeros(n, dim);
    let inv_d2 = 1.0 / (p.d_star * p.d_star);
    for &(i, j) in &pairs {
        let (ai, aj) = (&state.agents[i], &state.agents[j]);
        let r = dist2(&ai.position, &aj.position).sqrt();
        let magnitude = p.k_pot * (1.0 / r - r * inv_d2);
        for k in 0..dim {
            let f = magnitude * (ai.position[k] - aj.position[k]) / r;
            let align = p.k_align * (aj.velocity[k] - ai.velocity[k]);
            out.0[i][k] += f + align;
            out.0[j][k] -= f + align;
        }
    }
    for (a, agent) in out.0.iter_mut().zip(&state.agents) {
        for k in 0..dim {
            a[k] += p.w_mig * (p.migration[k] - agent.velocity[k]);
        }
    }
    Ok(out)
}

/// I.i.d. Gaussian accelerations with per-component std `sigma`, drawn in
/// agent order then component order.
pub fn random_walk_accel<R: Rng + ?Sized>(state: &SwarmState, sigma: f64, rng: &mut R) -> Accelerations {
    Accelerations(
        (0..state.len())
            .map(|_| {
                (0..state.dim)
                    .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect(),
    )
}

pub fn static_accel(state: &SwarmState) -> Accelerations {
    Accelerations::zeros(state.len(), state.dim)
}
