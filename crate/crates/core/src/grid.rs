//! Uniform-grid spatial hash for fixed-radius neighbor queries in R^d.

use std::collections::HashMap;

use crate::geometry::{dist2, Vector};

type CellKey = Vec<i64>;

/// Bins points into cubic cells of side `cell`. A query of radius
/// `r <= cell` only has to look at the 3^d cells around the query point.
#[derive(Debug, Clone)]
pub struct UniformGrid<'a> {
    points: &'a [Vector],
    cell: f64,
    cells: HashMap<CellKey, Vec<usize>>,
    offsets: Vec<Vec<i64>>,
}

impl<'a> UniformGrid<'a> {
    pub fn new(points: &'a [Vector], cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "cell size must be positive");
        let dim = points.first().map_or(0, Vec::len);
        let mut cells: HashMap<CellKey, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(key(p, cell)).or_default().push(i);
        }
        Self {
            points,
            cell,
            cells,
            offsets: stencil(dim),
        }
    }

    fn candidates<'s>(&'s self, p: &'s [f64]) -> impl Iterator<Item = usize> + 's {
        let home = key(p, self.cell);
        self.offsets.iter().flat_map(move |off| {
            let k: CellKey = home.iter().zip(off).map(|(h, o)| h.saturating_add(*o)).collect();
            self.cells.get(&k).into_iter().flatten().copied()
        })
    }

    /// Whether some indexed point lies within distance `r` of `p`.
    pub fn any_within(&self, p: &[f64], r: f64) -> bool {
        debug_assert!(r <= self.cell);
        let r2 = r * r;
        self.candidates(p).any(|j| dist2(p, &self.points[j]) <= r2)
    }

    /// All pairs `(i, j)`, `i < j`, with `|x_i - x_j| <= r`, sorted.
    pub fn pairs_within(&self, r: f64) -> Vec<(usize, usize)> {
        debug_assert!(r <= self.cell);
        let r2 = r * r;
        let mut out = Vec::new();
        for (i, p) in self.points.iter().enumerate() {
            for j in self.candidates(p) {
                if j > i && dist2(p, &self.points[j]) <= r2 {
                    out.push((i, j));
                }
            }
        }
        out.sort_unstable();
        out
    }
}

fn key(p: &[f64], cell: f64) -> CellKey {
    p.iter().map(|x| (x / cell).floor() as i64).collect()
}

fn stencil(dim: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (-1..=1).map(move |o| {
                    let mut v = prefix.clone();
                    v.push(o);
                    v
                })
            })
            .collect();
    }
    out
}

/// Unordered pairs `(i, j)`, `i < j`, with `|x_i - x_j| <= r`, sorted
/// lexicographically.
pub fn neighbors_within(positions: &[Vector], r: f64) -> Vec<(usize, usize)> {
    assert!(r > 0.0, "neighbor radius must be positive");
    UniformGrid::new(positions, r).pairs_within(r)
}

/// Per-agent neighbor lists built from a sorted pair list. Each list comes
/// out in ascending index order.
pub fn adjacency(n: usize, pairs: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in pairs {
        adj[i].push(j);
        adj[j].push(i);
    }
    adj
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(points: &[Vector], r: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if dist2(&points[i], &points[j]) <= r * r {
                    out.push((i, j));
                }
            }
        }
        out
    }

    #[test]
    fn small_fixtures() {
        assert_eq!(neighbors_within(&[vec![0.0, 0.0], vec![0.5, 0.0]], 1.0), vec![(0, 1)]);
        assert!(neighbors_within(&[vec![0.0, 0.0], vec![5.0, 0.0]], 1.0).is_empty());
    }

    #[test]
    fn matches_brute_force_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Vector> = (0..200)
            .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        assert_eq!(neighbors_within(&pts, 0.3), brute(&pts, 0.3));
    }

    #[test]
    fn negative_coordinates_and_3d() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Vector> = (0..150)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        assert_eq!(neighbors_within(&pts, 0.7), brute(&pts, 0.7));
    }

    #[test]
    fn any_within_agrees_with_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vector> = (0..50)
            .map(|_| vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
            .collect();
        let grid = UniformGrid::new(&pts, 0.8);
        for _ in 0..2000 {
            let q = vec![rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)];
            let expect = pts.iter().any(|p| dist2(p, &q) <= 0.64);
            assert_eq!(grid.any_within(&q, 0.8), expect);
        }
    }

    #[test]
    fn adjacency_lists_are_sorted() {
        let adj = adjacency(4, &[(0, 2), (0, 3), (1, 2), (2, 3)]);
        assert_eq!(adj[2], vec![0, 1, 3]);
        assert_eq!(adj[3], vec![0, 2]);
    }
}
