//! Removal of very noisy points by neighborhood-size pruning.
//!
//! The neighborhood size of an occupied cell is the number of points in the
//! cube of side `5 * cell_size` centered on the cell, which is exactly the
//! 5×5×5 block of cells around it. While `beta * n_sd > n_avg`, every cell
//! whose neighborhood size is at or below the 1st percentile is dropped.

use alloc::vec::Vec;

use crate::octree::UniformLeafGrid;
use crate::{Error, Result};

const BLOCK_RADIUS: i64 = 2;

/// Below this many cells the pruning loop stops.
pub const MIN_CELLS: usize = 8;

/// Neighborhood sizes of every cell of a grid, in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodStats {
    pub sizes: Vec<usize>,
    pub mean: f64,
    /// Population standard deviation.
    pub std_dev: f64,
}

fn block(coords: [u64; 3]) -> impl Iterator<Item = [u64; 3]> {
    let r = BLOCK_RADIUS;
    (-r..=r).flat_map(move |x| {
        (-r..=r).flat_map(move |y| {
            (-r..=r).filter_map(move |z| {
                Some([
                    coords[0].checked_add_signed(x)?,
                    coords[1].checked_add_signed(y)?,
                    coords[2].checked_add_signed(z)?,
                ])
            })
        })
    })
}

/// Points in the 5×5×5 block of cells centered on `coords`.
pub fn neighborhood_size(grid: &UniformLeafGrid, coords: [u64; 3]) -> usize {
    block(coords)
        .filter_map(|c| grid.cell(c))
        .map(|c| c.points.len())
        .sum()
}

fn mean_and_sd(values: impl Iterator<Item = usize> + Clone) -> (f64, f64) {
    let (n, sum) = values
        .clone()
        .fold((0usize, 0.0f64), |(n, s), v| (n + 1, s + v as f64));
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = sum / n as f64;
    let var = values
        .map(|v| {
            let d = v as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n as f64;
    (mean, libm::sqrt(var))
}

pub fn neighborhood_stats(grid: &UniformLeafGrid) -> NeighborhoodStats {
    let sizes: Vec<usize> = grid
        .cells()
        .iter()
        .map(|c| neighborhood_size(grid, c.coords))
        .collect();
    let (mean, std_dev) = mean_and_sd(sizes.iter().copied());
    NeighborhoodStats {
        sizes,
        mean,
        std_dev,
    }
}

/// Nearest-rank percentile: the value at 1-based rank `ceil(q * m)` of the
/// ascending values (rank at least 1).
pub fn nearest_rank_percentile(values: &mut [usize], q: f64) -> Option<usize> {
    if values.is_empty() {
        return None;
    }
    let m = values.len();
    let rank = (libm::ceil(q * m as f64) as usize).clamp(1, m);
    let (_, v, _) = values.select_nth_unstable(rank - 1);
    Some(*v)
}

/// Why the pruning loop stopped before reaching `beta * n_sd <= n_avg`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneGuard {
    /// An iteration found nothing at or below the threshold.
    NoCellsRemoved,
    /// Fewer than [`MIN_CELLS`] cells remained.
    TooFewCells,
}

/// One removal round.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneRound {
    pub cells_before: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub threshold: usize,
    pub removed_cells: usize,
    pub removed_points: usize,
}

#[derive(Debug, Clone)]
pub struct PruneOutcome {
    pub grid: UniformLeafGrid,
    pub rounds: Vec<PruneRound>,
    pub guard: Option<PruneGuard>,
    /// Statistics of the returned grid.
    pub mean: f64,
    pub std_dev: f64,
}

impl PruneOutcome {
    pub fn iterations(&self) -> usize {
        self.rounds.len()
    }
}

/// Iteratively prunes low-density cells until `beta * n_sd <= n_avg`.
pub fn prune_very_noisy(grid: &UniformLeafGrid, beta: f64) -> Result<PruneOutcome> {
    if !(beta >= 1.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "beta",
            reason: "must be a finite value >= 1",
        });
    }
    if grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    let cells = grid.cells();
    let counts: Vec<usize> = cells.iter().map(|c| c.points.len()).collect();
    let mut sizes: Vec<usize> = cells
        .iter()
        .map(|c| neighborhood_size(grid, c.coords))
        .collect();
    let mut alive = alloc::vec![true; cells.len()];
    let mut alive_count = cells.len();
    let mut rounds = Vec::new();
    let mut scratch: Vec<usize> = Vec::with_capacity(cells.len());

    let alive_sizes = |sizes: &[usize], alive: &[bool]| {
        let s: Vec<usize> = sizes
            .iter()
            .zip(alive)
            .filter_map(|(&v, &a)| a.then_some(v))
            .collect();
        s
    };

    let guard = loop {
        let current = alive_sizes(&sizes, &alive);
        let (mean, sd) = mean_and_sd(current.iter().copied());
        if beta * sd <= mean {
            break None;
        }
        if alive_count < MIN_CELLS {
            break Some(PruneGuard::TooFewCells);
        }
        scratch.clear();
        scratch.extend_from_slice(&current);
        let threshold = nearest_rank_percentile(&mut scratch, 0.01).unwrap_or(0);
        let doomed: Vec<usize> = (0..cells.len())
            .filter(|&i| alive[i] && sizes[i] <= threshold)
            .collect();
        if doomed.is_empty() {
            break Some(PruneGuard::NoCellsRemoved);
        }
        let mut removed_points = 0;
        for &i in &doomed {
            alive[i] = false;
            removed_points += counts[i];
        }
        alive_count -= doomed.len();
        for &i in &doomed {
            for c in block(cells[i].coords) {
                if let Some(j) = grid.cell_index(c) {
                    if alive[j] {
                        sizes[j] -= counts[i];
                    }
                }
            }
        }
        rounds.push(PruneRound {
            cells_before: current.len(),
            mean,
            std_dev: sd,
            threshold,
            removed_cells: doomed.len(),
            removed_points,
        });
    };

    let pruned = {
        let mut i = 0;
        grid.filter_cells(|_| {
            let keep = alive[i];
            i += 1;
            keep
        })
    };
    let (mean, std_dev) = mean_and_sd(alive_sizes(&sizes, &alive).into_iter());
    Ok(PruneOutcome {
        grid: pruned,
        rounds,
        guard,
        mean,
        std_dev,
    })
}
