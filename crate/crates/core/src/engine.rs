//! Deterministic time stepping with periodic metric sampling and
//! hypothesis checks.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controllers::{ControlLaw, ControllerSpec};
use crate::error::{Error, Result};
use crate::geometry::{norm, SwarmState};
use crate::harness::scenario::{make_scenario, Scenario};
use crate::metrics::{sample_metrics, MetricsSample, DEFAULT_MC_SAMPLES};

pub use crate::grid::neighbors_within;

pub const PRNG_NAME: &str = "ChaCha8Rng";

const SCENARIO_STREAM: u64 = 0;
const DYNAMICS_STREAM: u64 = 1;
/// Salt for the coverage seed. Every sample of a run reuses the same
/// Monte Carlo points relative to its cube, so a frozen swarm yields
/// identical rows.
const COVERAGE_SALT: u64 = 0xC0FE;

fn default_dim() -> usize {
    2
}
fn default_dt() -> f64 {
    0.01
}
fn default_metrics_every() -> usize {
    10
}
fn default_delta() -> f64 {
    1.0
}
fn default_coherence_c() -> f64 {
    0.1
}
fn default_mc_samples() -> usize {
    DEFAULT_MC_SAMPLES
}
fn default_v_max() -> f64 {
    5.0
}
fn default_true() -> bool {
    true
}

/// Everything needed to reproduce one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub controller: ControllerSpec,
    pub n: usize,
    #[serde(default = "default_dim")]
    pub d: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub steps: usize,
    #[serde(default = "default_metrics_every")]
    pub metrics_every: usize,
    /// Minimum-separation threshold (m).
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Coverage ball radius (m); same as `delta` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball_radius: Option<f64>,
    /// Coherence constant: breach when `max |v_j - v_avg| >= coherence_c * delta`.
    #[serde(default = "default_coherence_c")]
    pub coherence_c: f64,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_v_max")]
    pub v_max: f64,
    #[serde(default = "default_true")]
    pub center_frames: bool,
}

impl RunConfig {
    pub fn new(scenario: Scenario, controller: ControllerSpec, n: usize) -> Self {
        Self {
            scenario,
            controller,
            n,
            d: default_dim(),
            dt: default_dt(),
            steps: 0,
            metrics_every: default_metrics_every(),
            delta: default_delta(),
            ball_radius: None,
            coherence_c: default_coherence_c(),
            mc_samples: default_mc_samples(),
            seed: 0,
            v_max: default_v_max(),
            center_frames: true,
        }
    }

    pub fn ball_radius(&self) -> f64 {
        self.ball_radius.unwrap_or(self.delta)
    }

    pub fn validate(&self) -> Result<ControlLaw> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.n < 2 {
            return bad("`n` must be at least 2");
        }
        if self.d < 1 {
            return bad("`d` must be at least 1");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("`dt` must be positive");
        }
        if self.metrics_every < 1 {
            return bad("`metrics_every` must be at least 1");
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad("`delta` must be positive");
        }
        if !(self.ball_radius() > 0.0 && self.ball_radius().is_finite()) {
            return bad("`ball_radius` must be positive");
        }
        if !(self.coherence_c > 0.0 && self.coherence_c.is_finite()) {
            return bad("`coherence_c` must be positive");
        }
        if self.mc_samples < 1 {
            return bad("`mc_samples` must be at least 1");
        }
        if !(self.v_max > 0.0) {
            return bad("`v_max` must be positive");
        }
        self.scenario.validate(self.d)?;
        self.controller.resolve(self.d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    SeparationBreach,
    CoherenceBreach,
    DegenerateEnergy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub time: f64,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub prng_name: String,
    pub samples: Vec<MetricsSample>,
    pub violations: Vec<Violation>,
    /// Host timing; left out of serialized records so they stay
    /// reproducible byte for byte.
    #[serde(skip)]
    pub wall_time: f64,
}

impl RunRecord {
    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

/// Semi-implicit Euler: `v' = clamp(v + a dt, v_max)`, `x' = x + v' dt`.
pub fn step<R: Rng + ?Sized>(
    state: &SwarmState,
    law: &ControlLaw,
    dt: f64,
    v_max: f64,
    rng: &mut R,
) -> Result<SwarmState> {
    let acc = law.accelerations(state, rng)?;
    let mut next = state.clone();
    next.time = state.time + dt;
    for (agent, a) in next.agents.iter_mut().zip(&acc.0) {
        for (v, ak) in agent.velocity.iter_mut().zip(a) {
            *v += ak * dt;
        }
        let speed = norm(&agent.velocity);
        if speed > v_max {
            let s = v_max / speed;
            agent.velocity.iter_mut().for_each(|v| *v *= s);
        }
        for (x, v) in agent.position.iter_mut().zip(&agent.velocity) {
            *x += v * dt;
        }
    }
    if !next.is_finite() {
        return Err(Error::NumericBlowup { step: 0 });
    }
    Ok(next)
}

/// SplitMix64 finalizer over `seed` and `salt`.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn scenario_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SCENARIO_STREAM);
    rng
}

fn dynamics_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(DYNAMICS_STREAM);
    rng
}

/// Runs `config` to completion. A sample is taken at step 0 and every
/// `metrics_every` steps after it.
pub fn run(config: &RunConfig) -> Result<RunRecord> {
    let started = Instant::now();
    let law = config.validate()?;
    let mut state = make_scenario(&config.scenario, config.n, config.d, &mut scenario_rng(config.seed))?;
    let mut rng = dynamics_rng(config.seed);

    let coverage_seed = mix_seed(config.seed, COVERAGE_SALT);
    let threshold_v = config.coherence_c * config.delta;
    let mut samples = Vec::with_capacity(config.steps / config.metrics_every + 1);
    let mut violations = Vec::new();

    for k in 0..=config.steps {
        if k > 0 {
            state = step(&state, &law, config.dt, config.v_max, &mut rng).map_err(|e| match e {
                Error::NumericBlowup { .. } => Error::NumericBlowup { step: k },
                other => other,
            })?;
            // Step index times dt, so sample times carry no accumulated drift.
            state.time = k as f64 * config.dt;
        }
        if k % config.metrics_every != 0 {
            continue;
        }
        let row = sample_metrics(
            &state,
            config.ball_radius(),
            config.mc_samples,
            coverage_seed,
            config.center_frames,
        )?;
        let mut flag = |kind| violations.push(Violation { time: row.time, kind });
        if row.is_degenerate() {
            flag(ViolationKind::DegenerateEnergy);
        }
        if row.min_separation < config.delta {
            flag(ViolationKind::SeparationBreach);
        }
        if row.max_velocity_deviation >= threshold_v {
            flag(ViolationKind::CoherenceBreach);
        }
        samples.push(row);
    }

    Ok(RunRecord {
        config: config.clone(),
        prng_name: PRNG_NAME.to_string(),
        samples,
        violations,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::ControllerKind;
    use crate::geometry::AgentState;
    use crate::harness::scenario::ScenarioKind;

    fn one_agent(x: [f64; 2], v: [f64; 2]) -> SwarmState {
        SwarmState::new(0.0, 2, vec![AgentState::new(x.to_vec(), v.to_vec())]).unwrap()
    }

    /// Applies a constant acceleration: pre-kicking v by a*dt and stepping
    /// with zero acceleration is the same update.
    fn constant_push(st: &SwarmState, accel: [f64; 2], dt: f64, v_max: f64) -> SwarmState {
        let mut kicked = st.clone();
        for a in &mut kicked.agents {
            for (v, p) in a.velocity.iter_mut().zip(accel) {
                *v += p * dt;
            }
        }
        let mut rng = dynamics_rng(0);
        step(&kicked, &ControlLaw::Static, dt, v_max, &mut rng).unwrap()
    }

    #[test]
    fn euler_update() {
        let next = constant_push(&one_agent([0., 0.], [1., 0.]), [0., 1.], 0.1, 1e9);
        let a = &next.agents[0];
        assert!((a.velocity[0] - 1.0).abs() < 1e-15 && (a.velocity[1] - 0.1).abs() < 1e-15);
        assert!((a.position[0] - 0.1).abs() < 1e-15 && (a.position[1] - 0.01).abs() < 1e-15);
        assert!((next.time - 0.1).abs() < 1e-15);
    }

    #[test]
    fn pure_drift() {
        let mut rng = dynamics_rng(0);
        let st = one_agent([1., 2.], [3., -4.]);
        let next = step(&st, &ControlLaw::Static, 0.5, f64::MAX, &mut rng).unwrap();
        assert_eq!(next.agents[0].position, vec![2.5, 0.0]);
        assert_eq!(next.agents[0].velocity, vec![3.0, -4.0]);
    }

    #[test]
    fn speed_clamp() {
        let mut rng = dynamics_rng(0);
        let st = one_agent([0., 0.], [3., 4.]);
        let next = step(&st, &ControlLaw::Static, 0.1, 2.0, &mut rng).unwrap();
        let v = &next.agents[0].velocity;
        assert!((norm(v) - 2.0).abs() <= 1e-15);
        assert!((v[0] / v[1] - 0.75).abs() <= 1e-15);
    }

    #[test]
    fn blowup_is_reported_with_step() {
        let mut cfg = RunConfig::new(
            Scenario::new(ScenarioKind::Grid, 1.0).with_jitter(0.3),
            ControllerSpec::new(ControllerKind::PotentialFlock).with_param("k_pot", 1e300),
            9,
        );
        cfg.v_max = f64::INFINITY;
        cfg.dt = 1e10;
        cfg.steps = 50;
        assert!(matches!(run(&cfg), Err(Error::NumericBlowup { step }) if step >= 1));
    }

    #[test]
    fn static_square_run() {
        let mut cfg = RunConfig::new(
            Scenario::new(ScenarioKind::Grid, 1.0),
            ControllerSpec::new(ControllerKind::Static),
            4,
        );
        cfg.steps = 100;
        cfg.mc_samples = 2000;
        let rec = run(&cfg).unwrap();
        assert_eq!(rec.samples.len(), 11);
        for s in &rec.samples {
            assert!((s.energy.unwrap() - 5.0 / 6.0).abs() <= 1e-12);
            let mut a = s.clone();
            a.time = 0.0;
            let mut b = rec.samples[0].clone();
            b.time = 0.0;
            assert_eq!(a, b);
        }
        assert!(rec.violations.is_empty());

        let again = run(&cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&rec).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }

    #[test]
    fn steps_zero_gives_one_sample() {
        let cfg = RunConfig::new(
            Scenario::new(ScenarioKind::Line, 1.0),
            ControllerSpec::new(ControllerKind::Static),
            3,
        );
        let rec = run(&cfg).unwrap();
        assert_eq!(rec.samples.len(), 1);
        assert_eq!(rec.samples[0].time, 0.0);
    }

    #[test]
    fn config_validation() {
        let base = RunConfig::new(
            Scenario::new(ScenarioKind::Grid, 1.0),
            ControllerSpec::new(ControllerKind::Static),
            4,
        );
        for bad in [
            RunConfig {
                dt: 0.0,
                ..base.clone()
            },
            RunConfig {
                metrics_every: 0,
                ..base.clone()
            },
            RunConfig {
                delta: -1.0,
                ..base.clone()
            },
            RunConfig {
                coherence_c: 0.0,
                ..base.clone()
            },
            RunConfig {
                v_max: 0.0,
                ..base.clone()
            },
            RunConfig { n: 1, ..base.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))), "{bad:?}");
        }
        let json = r#"{"scenario":{"kind":"grid","spacing":1.0},"controller":{"name":"static"},"n":4,"bogus":1}"#;
        assert!(serde_json::from_str::<RunConfig>(json).is_err());
    }

    #[test]
    fn mix_seed_spreads() {
        assert_ne!(mix_seed(0, 0), mix_seed(0, 1));
        assert_ne!(mix_seed(1, 0), mix_seed(0, 1));
        assert_eq!(mix_seed(5, 7), mix_seed(5, 7));
    }
}
