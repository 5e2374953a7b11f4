//! Swarm state types and elementary reductions over agents.
//!
//! Vectors are plain `Vec<f64>` of a fixed dimension `d` per run. Every
//! reduction walks agents in index order so results are bit-reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point or velocity in R^d.
pub type Vector = Vec<f64>;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `acc += s * v`
#[inline]
pub fn axpy(acc: &mut [f64], s: f64, v: &[f64]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += s * x;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub position: Vector,
    pub velocity: Vector,
}

impl AgentState {
    pub fn new(position: Vector, velocity: Vector) -> Self {
        Self { position, velocity }
    }
}

/// Positions and velocities of `n` agents at one instant. Agent index is
/// its id and stays fixed for the whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub time: f64,
    pub dim: usize,
    pub agents: Vec<AgentState>,
}

impl SwarmState {
    /// Builds a state, checking that every vector has dimension `dim`.
    pub fn new(time: f64, dim: usize, agents: Vec<AgentState>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("dimension must be at least 1".into()));
        }
        if agents.is_empty() {
            return Err(Error::NotEnoughAgents { needed: 1, got: 0 });
        }
        for a in &agents {
            for len in [a.position.len(), a.velocity.len()] {
                if len != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: len,
                    });
                }
            }
        }
        Ok(Self { time, dim, agents })
    }

    /// State at rest with the given positions.
    pub fn from_positions(positions: Vec<Vector>) -> Result<Self> {
        let dim = positions.first().map_or(0, Vec::len);
        let agents = positions
            .into_iter()
            .map(|p| AgentState::new(p, vec![0.0; dim]))
            .collect();
        Self::new(0.0, dim, agents)
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn positions(&self) -> Vec<Vector> {
        self.agents.iter().map(|a| a.position.clone()).collect()
    }

    pub fn velocities(&self) -> Vec<Vector> {
        self.agents.iter().map(|a| a.velocity.clone()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.agents
            .iter()
            .all(|a| a.position.iter().all(|x| x.is_finite()) && a.velocity.iter().all(|x| x.is_finite()))
    }
}

/// Axis-aligned cube. Every point it was built from lies within `side / 2`
/// of `center` in each coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub center: Vector,
    pub side: f64,
}

impl Cube {
    pub fn volume(&self) -> f64 {
        self.side.powi(self.center.len() as i32)
    }
}

fn mean_of<'a>(dim: usize, vs: impl ExactSizeIterator<Item = &'a Vector>) -> Vector {
    let n = vs.len() as f64;
    let mut acc = vec![0.0; dim];
    for v in vs {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
    }
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

pub fn centroid(state: &SwarmState) -> Vector {
    mean_of(state.dim, state.agents.iter().map(|a| &a.position))
}

pub fn mean_velocity(state: &SwarmState) -> Vector {
    mean_of(state.dim, state.agents.iter().map(|a| &a.velocity))
}

/// Mean of a list of points. Panics on an empty slice.
pub fn mean_point(points: &[Vector]) -> Vector {
    assert!(!points.is_empty(), "mean of empty point set");
    mean_of(points[0].len(), points.iter())
}

/// Smallest axis-aligned cube containing `positions`, centred on the
/// bounding-box midpoint.
pub fn bounding_cube_of(positions: &[Vector]) -> Cube {
    assert!(!positions.is_empty(), "bounding cube of empty point set");
    let dim = positions[0].len();
    let mut lo = positions[0].clone();
    let mut hi = positions[0].clone();
    for p in &positions[1..] {
        for k in 0..dim {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let side = (0..dim).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
    let center = lo.iter().zip(&hi).map(|(l, h)| l + 0.5 * (h - l)).collect();
    Cube { center, side }
}

pub fn bounding_cube(state: &SwarmState) -> Cube {
    bounding_cube_of(&state.positions())
}
