//! White-noise and outlier removal by connected components of occupied cells.
//!
//! Occupied cells of a [`UniformLeafGrid`] are graph vertices; two cells are
//! adjacent when their integer coordinates differ by at most one on every
//! axis. Surface samples form one large component, while sparse noise and
//! small dense clusters form components with few cells.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::geometry::PointCloud;
use crate::octree::{neighbor_offsets, UniformLeafGrid};
use crate::{Error, Result};

/// Same-level adjacency between occupied cells.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafGraph {
    /// Cell coordinates; vertex `i` is cell `i` of the source grid.
    pub vertices: Vec<[u64; 3]>,
    /// Sorted neighbor lists.
    pub adjacency: Vec<Vec<u32>>,
}

impl LeafGraph {
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}

pub fn build_leaf_graph(grid: &UniformLeafGrid) -> LeafGraph {
    let vertices: Vec<[u64; 3]> = grid.cells().iter().map(|c| c.coords).collect();
    let adjacency = vertices
        .iter()
        .map(|&c| {
            let mut nb: Vec<u32> = neighbor_offsets()
                .filter_map(|d| {
                    let mut n = [0u64; 3];
                    for a in 0..3 {
                        n[a] = c[a].checked_add_signed(d[a])?;
                    }
                    grid.cell_index(n).map(|i| i as u32)
                })
                .collect();
            nb.sort_unstable();
            nb
        })
        .collect();
    LeafGraph {
        vertices,
        adjacency,
    }
}

/// Connected components ranked by size.
///
/// Component `0` has the most cells; equal sizes are ordered by the
/// lexicographically smallest cell coordinate they contain.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentLabeling {
    /// Component id of every vertex.
    pub component_of: Vec<u32>,
    /// Cell count of each component, non-increasing.
    pub sizes: Vec<usize>,
}

impl ComponentLabeling {
    pub fn component_count(&self) -> usize {
        self.sizes.len()
    }
}

pub fn connected_components(graph: &LeafGraph) -> ComponentLabeling {
    let n = graph.vertices.len();
    let mut raw = alloc::vec![u32::MAX; n];
    // (size, smallest coordinate) per raw component.
    let mut stats: Vec<(usize, [u64; 3])> = Vec::new();
    let mut queue = VecDeque::new();
    for s in 0..n {
        if raw[s] != u32::MAX {
            continue;
        }
        let id = stats.len() as u32;
        raw[s] = id;
        queue.push_back(s as u32);
        let mut size = 0usize;
        let mut min_coord = graph.vertices[s];
        while let Some(v) = queue.pop_front() {
            size += 1;
            min_coord = min_coord.min(graph.vertices[v as usize]);
            for &w in &graph.adjacency[v as usize] {
                if raw[w as usize] == u32::MAX {
                    raw[w as usize] = id;
                    queue.push_back(w);
                }
            }
        }
        stats.push((size, min_coord));
    }
    let mut rank: Vec<u32> = (0..stats.len() as u32).collect();
    rank.sort_unstable_by(|&a, &b| {
        let (sa, ca) = stats[a as usize];
        let (sb, cb) = stats[b as usize];
        sb.cmp(&sa).then(ca.cmp(&cb))
    });
    let mut new_id = alloc::vec![0u32; stats.len()];
    for (r, &old) in rank.iter().enumerate() {
        new_id[old as usize] = r as u32;
    }
    ComponentLabeling {
        component_of: raw.into_iter().map(|c| new_id[c as usize]).collect(),
        sizes: rank.iter().map(|&c| stats[c as usize].0).collect(),
    }
}

/// Cells of each of the `k` largest components, as indices into
/// `grid.cells()`. Fewer than `k` groups come back when fewer components exist.
pub fn k_largest_cells(labeling: &ComponentLabeling, k: usize) -> Vec<Vec<usize>> {
    let kept = k.min(labeling.component_count());
    let mut groups = alloc::vec![Vec::new(); kept];
    for (cell, &c) in labeling.component_of.iter().enumerate() {
        if (c as usize) < kept {
            groups[c as usize].push(cell);
        }
    }
    groups
}

/// Points of the `k` largest components, in ascending source order, with
/// labels carried over.
pub fn extract_k_largest(
    cloud: &PointCloud,
    grid: &UniformLeafGrid,
    labeling: &ComponentLabeling,
    k: usize,
) -> Result<PointCloud> {
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "must be at least 1",
        });
    }
    let mut idx: Vec<u32> = k_largest_cells(labeling, k)
        .into_iter()
        .flatten()
        .flat_map(|cell| grid.cells()[cell].points.iter().copied())
        .collect();
    idx.sort_unstable();
    Ok(cloud.select(&idx))
}
