//! Meshless Laplacian smoothing over per-leaf representative points.
//!
//! Each non-empty leaf of an octree over the filtered points contributes
//! the mean of its points. A representative's neighbors are chosen once:
//! candidates within `4 * leaf_size` are grouped by which of the 24 squares
//! (side `leaf_size / 2`) on the boundary of a cube of side `leaf_size`,
//! centered at the representative, the connecting ray exits through. The
//! nearest candidate of each group is kept.
//!
//! Every step moves each point toward the Gaussian-weighted mean of its
//! neighbors by the factor `lambda`. A move is applied only when it is longer
//! than the mean neighbor distance divided by `gamma`. All moves of a step are
//! computed from the same snapshot and applied together.

use alloc::vec::Vec;

use crate::geometry::{Aabb, Point3, PointCloud};
use crate::octree::{uniformize, Octree, OctreeConfig};
use crate::spatial::PointGrid;
use crate::{Error, Result};

/// Maximum number of neighbors, one per boundary square.
pub const GROUP_COUNT: usize = 24;

/// Neighbor candidates lie within this many leaf sizes.
pub const BALL_RADIUS_FACTOR: f64 = 4.0;

const COINCIDENT_FACTOR: f64 = 1e-12;
const BRUTE_FORCE_BELOW: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingConfig {
    pub lambda: f64,
    pub gamma: f64,
    /// Overrides the cap derived by [`compute_iteration_cap`].
    pub max_iterations: Option<usize>,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            lambda: 0.25,
            gamma: 40.0,
            max_iterations: None,
        }
    }
}

impl SmoothingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: "must lie in (0, 1]",
            });
        }
        if !(self.gamma >= 1.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: "must be a finite value >= 1",
            });
        }
        Ok(())
    }
}

/// Where representatives come from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RepresentativeSource {
    /// Non-empty leaves of the balanced adaptive octree.
    #[default]
    AdaptiveOctree,
    /// Occupied cells of the uniformized grid at the given `alpha`.
    UniformGrid { alpha: f64 },
}

/// Representative points with their source leaf sizes and neighbor sets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RepresentativeSet {
    pub positions: Vec<Point3>,
    pub leaf_sizes: Vec<f64>,
    /// Neighbor ids per representative, empty until
    /// [`select_neighbors`] runs.
    pub neighbors: Vec<Vec<u32>>,
}

impl RepresentativeSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

fn mean_of(cloud: &PointCloud, indices: &[u32]) -> Point3 {
    let mut sum = Point3::ORIGIN;
    for &i in indices {
        sum += cloud.points()[i as usize];
    }
    sum / indices.len() as f64
}

/// One representative per non-empty leaf, at the mean of the leaf's points.
pub fn build_representatives(
    cloud: &PointCloud,
    source: RepresentativeSource,
    octree: &OctreeConfig,
) -> Result<RepresentativeSet> {
    let tree = Octree::build_with(cloud, octree)?;
    let mut set = RepresentativeSet::default();
    match source {
        RepresentativeSource::AdaptiveOctree => {
            for leaf in tree.leaves().filter(|l| !l.is_empty()) {
                set.positions.push(mean_of(cloud, leaf.points));
                set.leaf_sizes.push(leaf.size);
            }
        }
        RepresentativeSource::UniformGrid { alpha } => {
            let grid = uniformize(&tree, cloud, alpha)?;
            for cell in grid.cells() {
                set.positions.push(mean_of(cloud, &cell.points));
                set.leaf_sizes.push(grid.cell_size());
            }
        }
    }
    set.neighbors = alloc::vec![Vec::new(); set.positions.len()];
    Ok(set)
}

/// Boundary square (0..24) hit by the ray from the center of a cube in
/// direction `dir`.
///
/// The exit face is on the axis with the largest `|dir|` component (first
/// such axis on ties), signed by that component. Within the face, each of
/// the two remaining axes picks the positive half when its component is
/// `>= 0`.
pub fn square_group(dir: Point3) -> usize {
    let abs = [dir.x.abs(), dir.y.abs(), dir.z.abs()];
    let mut axis = 0;
    for a in 1..3 {
        if abs[a] > abs[axis] {
            axis = a;
        }
    }
    let side = usize::from(dir[axis] >= 0.0);
    let (b, c) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let qb = usize::from(dir[b] >= 0.0);
    let qc = usize::from(dir[c] >= 0.0);
    axis * 8 + side * 4 + qb * 2 + qc
}

/// Nearest candidate per boundary square, among representatives within
/// `4 * leaf_size`. Returned ids are ordered by square.
fn neighbors_of(set: &RepresentativeSet, i: usize, candidates: impl Iterator<Item = u32>) -> Vec<u32> {
    let q = set.positions[i];
    let size = set.leaf_sizes[i];
    let radius = BALL_RADIUS_FACTOR * size;
    let r2 = radius * radius;
    let eps = COINCIDENT_FACTOR * size;
    let mut best: [Option<(f64, u32)>; GROUP_COUNT] = [None; GROUP_COUNT];
    for j in candidates {
        if j as usize == i {
            continue;
        }
        let v = set.positions[j as usize] - q;
        let d2 = v.norm_squared();
        if d2 > r2 || libm::sqrt(d2) < eps {
            continue;
        }
        let g = square_group(v);
        let replace = match best[g] {
            None => true,
            Some((bd, bj)) => d2 < bd || (d2 == bd && j < bj),
        };
        if replace {
            best[g] = Some((d2, j));
        }
    }
    best.iter().filter_map(|b| b.map(|(_, j)| j)).collect()
}

/// Fixes `set.neighbors` from the current positions.
pub fn select_neighbors(set: &mut RepresentativeSet) {
    let n = set.len();
    let neighbors: Vec<Vec<u32>> = if n < BRUTE_FORCE_BELOW {
        (0..n)
            .map(|i| neighbors_of(set, i, 0..n as u32))
            .collect()
    } else {
        let mut sizes = set.leaf_sizes.clone();
        let mid = sizes.len() / 2;
        let (_, median, _) = sizes.select_nth_unstable_by(mid, f64::total_cmp);
        let grid = PointGrid::new(&set.positions, BALL_RADIUS_FACTOR * *median);
        let mut found = Vec::new();
        (0..n)
            .map(|i| {
                found.clear();
                grid.for_each_within(
                    &set.positions,
                    set.positions[i],
                    BALL_RADIUS_FACTOR * set.leaf_sizes[i],
                    |j| found.push(j),
                );
                neighbors_of(set, i, found.iter().copied())
            })
            .collect()
    };
    set.neighbors = neighbors;
}

/// Result of one Jacobi smoothing step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub positions: Vec<Point3>,
    pub moved: usize,
}

/// Candidate position of one point and its move threshold `m / gamma`, or
/// `None` when the point cannot move (no neighbors, or all coincident).
pub fn candidate_move(
    positions: &[Point3],
    neighbors: &[u32],
    i: usize,
    config: &SmoothingConfig,
) -> Option<(Point3, f64)> {
    if neighbors.is_empty() {
        return None;
    }
    let p = positions[i];
    let mut sum_d = 0.0;
    let mut max_d: f64 = 0.0;
    for &j in neighbors {
        let d = positions[j as usize].distance(p);
        sum_d += d;
        max_d = max_d.max(d);
    }
    if max_d == 0.0 {
        return None;
    }
    let mean_d = sum_d / neighbors.len() as f64;
    let inv = 1.0 / (max_d * max_d);
    let mut acc = Point3::ORIGIN;
    let mut wsum = 0.0;
    for &j in neighbors {
        let v = positions[j as usize] - p;
        let w = libm::exp(-v.norm_squared() * inv);
        acc += v * w;
        wsum += w;
    }
    Some((p + acc * (config.lambda / wsum), mean_d / config.gamma))
}

pub fn smooth_step(
    positions: &[Point3],
    neighbors: &[Vec<u32>],
    config: &SmoothingConfig,
) -> StepResult {
    let mut next = positions.to_vec();
    let mut moved = 0;
    for (i, nb) in neighbors.iter().enumerate() {
        if let Some((cand, threshold)) = candidate_move(positions, nb, i, config) {
            if cand.distance(positions[i]) > threshold {
                next[i] = cand;
                moved += 1;
            }
        }
    }
    StepResult {
        positions: next,
        moved,
    }
}

/// Iteration cap `floor(d_avg^2 * |Q| / 2)`, where `d_avg` is the mean over
/// representatives of their mean neighbor distance, measured after scaling
/// the set so its bounding cube has side 2. Representatives without
/// neighbors do not contribute to `d_avg`.
pub fn compute_iteration_cap(set: &RepresentativeSet) -> usize {
    let extent = Aabb::from_points(&set.positions)
        .map(|b| {
            let e = b.extent();
            e.x.max(e.y).max(e.z)
        })
        .unwrap_or(0.0);
    if extent <= 0.0 {
        return 0;
    }
    let scale = 2.0 / extent;
    let mut total = 0.0;
    let mut count = 0usize;
    for (i, nb) in set.neighbors.iter().enumerate() {
        if nb.is_empty() {
            continue;
        }
        let p = set.positions[i];
        let mean: f64 =
            nb.iter().map(|&j| set.positions[j as usize].distance(p)).sum::<f64>() / nb.len() as f64;
        total += mean * scale;
        count += 1;
    }
    if count == 0 {
        return 0;
    }
    let d_avg = total / count as f64;
    libm::floor(d_avg * d_avg * set.len() as f64 / 2.0) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothOutcome {
    pub positions: Vec<Point3>,
    pub iterations: usize,
    pub cap: usize,
    /// Moves applied in the last step; zero means the set converged.
    pub last_moved: usize,
}

/// Repeats [`smooth_step`] until nothing moves or the cap is reached.
pub fn smooth(set: &RepresentativeSet, config: &SmoothingConfig) -> Result<SmoothOutcome> {
    config.validate()?;
    let cap = config
        .max_iterations
        .unwrap_or_else(|| compute_iteration_cap(set));
    let mut positions = set.positions.clone();
    let mut iterations = 0;
    let mut last_moved = 0;
    while iterations < cap {
        let step = smooth_step(&positions, &set.neighbors, config);
        positions = step.positions;
        iterations += 1;
        last_moved = step.moved;
        if step.moved == 0 {
            break;
        }
    }
    Ok(SmoothOutcome {
        positions,
        iterations,
        cap,
        last_moved,
    })
}
