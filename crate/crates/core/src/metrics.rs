//! Configuration diagnostics: pairwise inverse-square energy, frame
//! potential, optimal frame bounds, δ-ball coverage ratio, minimum
//! separation and velocity-coherence deviation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eigen::symmetric_eigenvalues;
use crate::error::{Error, Result};
use crate::geometry::{self, bounding_cube_of, dist, dist2, dot, SwarmState, Vector};
use crate::grid::UniformGrid;

/// Pairs closer than this (m) count as coincident.
pub const EPS_SEPARATION: f64 = 1e-12;
/// Cubes thinner than this (m) are degenerate; coverage is 1 by convention.
pub const EPS_SIDE: f64 = 1e-9;
pub const DEFAULT_MC_SAMPLES: usize = 65_536;

/// Above this many agents coverage queries go through the uniform grid.
const GRID_QUERY_THRESHOLD: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
}

impl FrameBounds {
    pub fn is_tight(&self, tol: f64) -> bool {
        self.upper - self.lower <= tol * self.upper.max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageEstimate {
    pub value: f64,
    pub std_err: f64,
    pub samples: usize,
    pub delta: f64,
}

/// One row of diagnostics at a sampled time. `energy` is `None` when two
/// agents coincide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSample {
    pub time: f64,
    pub energy: Option<f64>,
    pub frame_potential: f64,
    pub frame_bounds: FrameBounds,
    pub coverage: CoverageEstimate,
    pub min_separation: f64,
    pub max_velocity_deviation: f64,
    pub cube_side: f64,
}

impl MetricsSample {
    pub fn is_degenerate(&self) -> bool {
        self.energy.is_none()
    }
}

fn check_dims(vectors: &[Vector]) -> Result<usize> {
    let dim = vectors.first().map_or(0, Vec::len);
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
    }
    Ok(dim)
}

/// Normalized inverse-square pair energy `(1 / C(n,2)) Σ_{i<j} 1/|x_i - x_j|²`.
pub fn energy(positions: &[Vector]) -> Result<f64> {
    let n = positions.len();
    if n < 2 {
        return Err(Error::NotEnoughAgents { needed: 2, got: n });
    }
    let floor2 = EPS_SEPARATION * EPS_SEPARATION;
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let r2 = dist2(&positions[i], &positions[j]);
            if r2 < floor2 {
                return Err(Error::DegenerateDistance {
                    i,
                    j,
                    distance: r2.sqrt(),
                });
            }
            sum += 1.0 / r2;
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(sum / pairs)
}

/// `Σ_i Σ_j <f_i, f_j>²` over all ordered pairs, including `i = j`.
pub fn frame_potential(vectors: &[Vector]) -> f64 {
    let mut sum = 0.0;
    for fi in vectors {
        for fj in vectors {
            let g = dot(fi, fj);
            sum += g * g;
        }
    }
    sum
}

/// Frame operator `S = Σ_j f_j f_jᵀ`, row-major `d x d`.
pub fn frame_operator(vectors: &[Vector]) -> Result<Vec<f64>> {
    let dim = check_dims(vectors)?;
    let mut s = vec![0.0; dim * dim];
    for f in vectors {
        for r in 0..dim {
            for c in 0..dim {
                s[r * dim + c] += f[r] * f[c];
            }
        }
    }
    Ok(s)
}

/// Optimal frame bounds: the extreme eigenvalues of the frame operator.
/// `lower == 0` means the vectors do not span R^d.
pub fn frame_bounds(vectors: &[Vector]) -> Result<FrameBounds> {
    let dim = check_dims(vectors)?;
    if vectors.is_empty() || dim == 0 {
        return Err(Error::NotEnoughAgents { needed: 1, got: 0 });
    }
    let eig = symmetric_eigenvalues(&frame_operator(vectors)?, dim);
    // S is positive semidefinite; rounding can push the smallest eigenvalue
    // a hair below zero.
    let lower = eig[0].max(0.0);
    let upper = eig[dim - 1].max(lower);
    Ok(FrameBounds { lower, upper })
}

/// Monte Carlo estimate of the fraction of the bounding cube lying within
/// `delta` of some agent. Sample points come from a ChaCha8 stream seeded
/// with `seed` and depend only on the cube, never on `delta`.
pub fn coverage_ratio(positions: &[Vector], delta: f64, samples: usize, seed: u64) -> Result<CoverageEstimate> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::BadDelta(delta));
    }
    if positions.is_empty() {
        return Err(Error::NotEnoughAgents { needed: 1, got: 0 });
    }
    if samples == 0 {
        return Err(Error::InvalidConfig("coverage needs at least one sample".into()));
    }
    let dim = check_dims(positions)?;
    let cube = bounding_cube_of(positions);
    if cube.side < EPS_SIDE {
        return Ok(CoverageEstimate {
            value: 1.0,
            std_err: 0.0,
            samples,
            delta,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut point = vec![0.0; dim];
    let sample = |rng: &mut ChaCha8Rng, point: &mut Vector| {
        for (x, c) in point.iter_mut().zip(&cube.center) {
            *x = c + cube.side * (rng.random::<f64>() - 0.5);
        }
    };

    let hits = if positions.len() > GRID_QUERY_THRESHOLD {
        let grid = UniformGrid::new(positions, delta);
        (0..samples)
            .filter(|_| {
                sample(&mut rng, &mut point);
                grid.any_within(&point, delta)
            })
            .count()
    } else {
        let d2 = delta * delta;
        (0..samples)
            .filter(|_| {
                sample(&mut rng, &mut point);
                positions.iter().any(|p| dist2(p, &point) <= d2)
            })
            .count()
    };

    let m = samples as f64;
    let p = hits as f64 / m;
    Ok(CoverageEstimate {
        value: p,
        std_err: (p * (1.0 - p) / m).sqrt(),
        samples,
        delta,
    })
}

pub fn min_separation(positions: &[Vector]) -> Result<f64> {
    let n = positions.len();
    if n < 2 {
        return Err(Error::NotEnoughAgents { needed: 2, got: n });
    }
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            best = best.min(dist2(&positions[i], &positions[j]));
        }
    }
    Ok(best.sqrt())
}

/// `max_j |v_j - v_avg|`.
pub fn max_velocity_deviation(state: &SwarmState) -> f64 {
    let avg = geometry::mean_velocity(state);
    state.agents.iter().map(|a| dist(&a.velocity, &avg)).fold(0.0, f64::max)
}

/// Positions shifted so their centroid is the origin.
pub fn centered(positions: &[Vector]) -> Vec<Vector> {
    let c = geometry::mean_point(positions);
    positions.iter().map(|p| geometry::sub(p, &c)).collect()
}

/// All diagnostics for one snapshot. Frame metrics use centroid-centred
/// positions when `center_frames` is set; nothing else depends on it.
pub fn sample_metrics(
    state: &SwarmState,
    delta: f64,
    mc_samples: usize,
    seed: u64,
    center_frames: bool,
) -> Result<MetricsSample> {
    let positions = state.positions();
    let energy = match energy(&positions) {
        Ok(e) => Some(e),
        Err(Error::DegenerateDistance { .. }) => None,
        Err(e) => return Err(e),
    };
    let frames = if center_frames {
        centered(&positions)
    } else {
        positions.clone()
    };
    Ok(MetricsSample {
        time: state.time,
        energy,
        frame_potential: frame_potential(&frames),
        frame_bounds: frame_bounds(&frames)?,
        coverage: coverage_ratio(&positions, delta, mc_samples, seed)?,
        min_separation: min_separation(&positions)?,
        max_velocity_deviation: max_velocity_deviation(state),
        cube_side: bounding_cube_of(&positions).side,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AgentState;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn square() -> Vec<Vector> {
        vec![vec![0., 0.], vec![1., 0.], vec![0., 1.], vec![1., 1.]]
    }

    fn mercedes() -> Vec<Vector> {
        (0..3)
            .map(|k| {
                let a = PI / 2.0 + 2.0 * PI * k as f64 / 3.0;
                vec![a.cos(), a.sin()]
            })
            .collect()
    }

    fn brute_energy(ps: &[Vector]) -> f64 {
        let n = ps.len();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let d: f64 = ps[i].iter().zip(&ps[j]).map(|(a, b)| (a - b).powi(2)).sum();
                    s += 0.5 / d;
                }
            }
        }
        s * 2.0 / (n * (n - 1)) as f64
    }

    #[test]
    fn energy_fixtures() {
        assert_eq!(energy(&[vec![0., 0.], vec![1., 0.]]).unwrap(), 1.0);
        assert_relative_eq!(energy(&square()).unwrap(), 5.0 / 6.0, max_relative = 1e-12);
        let tri = vec![vec![0., 0.], vec![2., 0.], vec![1., 3f64.sqrt()]];
        assert_relative_eq!(energy(&tri).unwrap(), 0.25, max_relative = 1e-12);
        assert!(matches!(
            energy(&[vec![0., 0.], vec![0., 0.]]),
            Err(Error::DegenerateDistance { i: 0, j: 1, .. })
        ));
        assert!(matches!(energy(&[vec![0., 0.]]), Err(Error::NotEnoughAgents { .. })));
    }

    #[test]
    fn frame_potential_fixtures() {
        assert_eq!(frame_potential(&[vec![1., 0.], vec![0., 1.]]), 2.0);
        assert_eq!(frame_potential(&[vec![1., 0.]]), 1.0);
        assert_relative_eq!(frame_potential(&[vec![0.6, 0.8]]), 1.0, max_relative = 1e-15);
        assert_relative_eq!(frame_potential(&mercedes()), 4.5, max_relative = 1e-12);
    }

    #[test]
    fn frame_bounds_fixtures() {
        let fb = frame_bounds(&[vec![1., 0.], vec![0., 1.]]).unwrap();
        assert_eq!((fb.lower, fb.upper), (1.0, 1.0));
        let fb = frame_bounds(&[vec![1., 0.], vec![1., 0.], vec![0., 1.]]).unwrap();
        assert_eq!((fb.lower, fb.upper), (1.0, 2.0));
        let fb = frame_bounds(&mercedes()).unwrap();
        assert_relative_eq!(fb.lower, 1.5, max_relative = 1e-12);
        assert_relative_eq!(fb.upper, 1.5, max_relative = 1e-12);
        let fb = frame_bounds(&[vec![1., 0.]]).unwrap();
        assert_eq!((fb.lower, fb.upper), (0.0, 1.0));
        assert!(matches!(
            frame_bounds(&[vec![1., 0.], vec![1.]]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn coverage_fixtures() {
        let one = coverage_ratio(&[vec![3., 4.]], 0.1, 100, 0).unwrap();
        assert_eq!((one.value, one.std_err), (1.0, 0.0));

        let big = coverage_ratio(&[vec![0., 0.], vec![1., 0.]], 10.0, 10_000, 5).unwrap();
        assert_eq!(big.value, 1.0);

        let corners = vec![vec![0., 0.], vec![2., 0.], vec![0., 2.], vec![2., 2.]];
        let est = coverage_ratio(&corners, 1.0, 200_000, 42).unwrap();
        assert!((est.value - FRAC_PI_4).abs() <= (3.0 * est.std_err).max(0.01));
        assert!(est.std_err <= 0.5 / (est.samples as f64).sqrt() + 1e-15);

        assert!(matches!(coverage_ratio(&corners, 0.0, 10, 0), Err(Error::BadDelta(_))));
        assert!(matches!(coverage_ratio(&corners, -1.0, 10, 0), Err(Error::BadDelta(_))));
    }

    #[test]
    fn coverage_grid_path_matches_scan_path() {
        // 40 agents exceed the grid threshold; recompute with the scan by hand.
        let ps: Vec<Vector> = (0..40)
            .map(|i| vec![(i % 8) as f64 * 1.7, (i / 8) as f64 * 1.3])
            .collect();
        let est = coverage_ratio(&ps, 0.9, 5000, 9).unwrap();
        let cube = bounding_cube_of(&ps);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut hits = 0;
        for _ in 0..5000 {
            let q: Vector = cube
                .center
                .iter()
                .map(|c| c + cube.side * (rng.random::<f64>() - 0.5))
                .collect();
            if ps.iter().any(|p| dist2(p, &q) <= 0.81) {
                hits += 1;
            }
        }
        assert_eq!(est.value, hits as f64 / 5000.0);
    }

    #[test]
    fn min_separation_fixtures() {
        assert_eq!(min_separation(&[vec![0., 0.], vec![3., 4.]]).unwrap(), 5.0);
        assert_eq!(min_separation(&square()).unwrap(), 1.0);
        assert_eq!(
            min_separation(&[vec![0., 0.], vec![0., 0.], vec![9., 9.]]).unwrap(),
            0.0
        );
        assert!(matches!(
            min_separation(&[vec![1., 1.]]),
            Err(Error::NotEnoughAgents { .. })
        ));
    }

    #[test]
    fn velocity_deviation_fixtures() {
        let st = |vs: &[[f64; 2]]| {
            SwarmState::new(
                0.0,
                2,
                vs.iter()
                    .enumerate()
                    .map(|(i, v)| AgentState::new(vec![i as f64, 0.0], v.to_vec()))
                    .collect(),
            )
            .unwrap()
        };
        assert_eq!(max_velocity_deviation(&st(&[[1., 0.], [1., 0.], [1., 0.]])), 0.0);
        assert_eq!(max_velocity_deviation(&st(&[[1., 0.], [-1., 0.]])), 1.0);
        assert_eq!(max_velocity_deviation(&st(&[[3., 2.]])), 0.0);
    }

    #[test]
    fn sample_row_for_square() {
        let agents = square()
            .into_iter()
            .map(|p| AgentState::new(p, vec![1.0, 0.0]))
            .collect();
        let st = SwarmState::new(0.0, 2, agents).unwrap();
        let on = sample_metrics(&st, 1.0, 4096, 1, true).unwrap();
        assert_relative_eq!(on.energy.unwrap(), 5.0 / 6.0, max_relative = 1e-12);
        assert_eq!(on.min_separation, 1.0);
        assert_eq!(on.max_velocity_deviation, 0.0);
        assert_eq!(on.cube_side, 1.0);

        let off = sample_metrics(&st, 1.0, 4096, 1, false).unwrap();
        assert_eq!(on.energy, off.energy);
        assert_eq!(on.coverage, off.coverage);
        assert_eq!(on.min_separation, off.min_separation);
        assert_ne!(on.frame_potential, off.frame_potential);
        // Centred square: four vectors (±.5, ±.5), S = I, FP = trace(S²) = 2.
        assert_relative_eq!(on.frame_bounds.lower, 1.0, max_relative = 1e-12);
        assert_relative_eq!(on.frame_bounds.upper, 1.0, max_relative = 1e-12);
        assert_relative_eq!(on.frame_potential, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn sample_row_for_coincident_cluster() {
        let st = SwarmState::from_positions(vec![vec![2.0, 2.0]; 5]).unwrap();
        let row = sample_metrics(&st, 1.0, 100, 0, true).unwrap();
        assert!(row.is_degenerate());
        assert_eq!(row.coverage.value, 1.0);
        assert_eq!(row.min_separation, 0.0);
    }

    fn config(max_n: usize, dim: usize) -> impl Strategy<Value = Vec<Vector>> {
        prop::collection::vec(prop::collection::vec(-10.0..10.0f64, dim), 2..max_n)
    }

    fn rotation(theta: f64) -> impl Fn(&Vector) -> Vector {
        let (s, c) = theta.sin_cos();
        move |v: &Vector| vec![c * v[0] - s * v[1], s * v[0] + c * v[1]]
    }

    proptest! {
        #[test]
        fn energy_matches_double_loop(ps in config(64, 2)) {
            prop_assume!(min_separation(&ps).unwrap() > 1e-6);
            let e = energy(&ps).unwrap();
            prop_assert!((e - brute_energy(&ps)).abs() <= 1e-12 * e);
        }

        #[test]
        fn energy_symmetries(ps in config(30, 2), shift in prop::collection::vec(-5.0..5.0f64, 2), s in 0.2..5.0f64) {
            prop_assume!(min_separation(&ps).unwrap() > 1e-3);
            let e = energy(&ps).unwrap();
            let moved: Vec<Vector> = ps.iter().map(|p| vec![p[0] + shift[0], p[1] + shift[1]]).collect();
            prop_assert!((energy(&moved).unwrap() - e).abs() <= 1e-9 * e);
            let scaled: Vec<Vector> = ps.iter().map(|p| vec![s * p[0], s * p[1]]).collect();
            prop_assert!((energy(&scaled).unwrap() - e / (s * s)).abs() <= 1e-9 * e / (s * s));
            let mut rev = ps.clone();
            rev.reverse();
            prop_assert!((energy(&rev).unwrap() - e).abs() <= 1e-12 * e);
        }

        #[test]
        fn separation_bounds_energy(ps in config(30, 3)) {
            let sep = min_separation(&ps).unwrap();
            prop_assume!(sep > 1e-3);
            prop_assert!(energy(&ps).unwrap() <= 1.0 / (sep * sep) * (1.0 + 1e-12));
        }

        #[test]
        fn frame_potential_three_ways(fs in config(20, 3)) {
            let fp = frame_potential(&fs);
            let s = frame_operator(&fs).unwrap();
            let trace_s2: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| s[i * 3 + j] * s[j * 3 + i]).sum();
            let eig = symmetric_eigenvalues(&s, 3);
            let eig_sq: f64 = eig.iter().map(|l| l * l).sum();
            prop_assert!((fp - trace_s2).abs() <= 1e-9 * fp.max(1e-300));
            prop_assert!((fp - eig_sq).abs() <= 1e-9 * fp.max(1e-300));
        }

        #[test]
        fn frame_metrics_rotation_invariant(fs in config(20, 2), theta in 0.0..6.3f64) {
            let rot = rotation(theta);
            let turned: Vec<Vector> = fs.iter().map(&rot).collect();
            let (fp, fq) = (frame_potential(&fs), frame_potential(&turned));
            prop_assert!((fp - fq).abs() <= 1e-9 * fp);
            let (a, b) = (frame_bounds(&fs).unwrap(), frame_bounds(&turned).unwrap());
            prop_assert!((a.lower - b.lower).abs() <= 1e-9 * a.upper);
            prop_assert!((a.upper - b.upper).abs() <= 1e-9 * a.upper);
        }

        #[test]
        fn bounds_sandwich_random_tests(fs in config(20, 3), seed in any::<u64>()) {
            let fb = frame_bounds(&fs).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..1000 {
                let y: Vector = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y2 = dot(&y, &y);
                let sum: f64 = fs.iter().map(|f| dot(&y, f).powi(2)).sum();
                let eps = 1e-9 * fb.upper * y2;
                prop_assert!(fb.lower * y2 - eps <= sum && sum <= fb.upper * y2 + eps);
            }
        }

        #[test]
        fn coverage_monotone_in_delta(ps in config(12, 2), seed in any::<u64>(), d1 in 0.05..3.0f64, grow in 0.0..3.0f64) {
            let a = coverage_ratio(&ps, d1, 2000, seed).unwrap();
            let b = coverage_ratio(&ps, d1 + grow, 2000, seed).unwrap();
            prop_assert!((0.0..=1.0).contains(&a.value));
            prop_assert!(a.value <= b.value);
        }
    }
}
