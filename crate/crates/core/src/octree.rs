//! Balanced adaptive octree and its uniform-resolution leaf grid.
//!
//! A leaf is *splittable* when its points occupy at least two cells of its
//! 8×8×8 subdivision. Construction dequeues leaves, splits the splittable
//! ones, and after each split restores 2:1 balance between every pair of
//! contacting leaves (face, edge or corner contact) by splitting the coarse
//! side, recursively.
//!
//! Cell membership is computed from each point's position normalized to the
//! root cube, `u = (p - min) / side`. Scaling `u` by a power of two is exact,
//! so a point's cell at level `L + 1` always lies inside its cell at level `L`.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::geometry::{bounding_cube_of, BoundingCube, Point3, PointCloud};
use crate::{Error, FxHashMap, Result};

/// Index of a node inside an [`Octree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

const NO_CHILD: u32 = u32::MAX;

/// Deepest level a node may be split to.
pub const DEFAULT_MAX_DEPTH: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OctreeConfig {
    /// Splitting a node at this level fails with [`Error::DepthExceeded`].
    pub max_depth: u32,
}

impl Default for OctreeConfig {
    fn default() -> Self {
        Self {
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    coords: [u64; 3],
    level: u32,
    first_child: u32,
    start: u32,
    len: u32,
}

impl Node {
    fn is_leaf(&self) -> bool {
        self.first_child == NO_CHILD
    }
}

/// Read-only view of one leaf.
#[derive(Debug, Clone, Copy)]
pub struct Leaf<'a> {
    pub id: NodeId,
    pub level: u32,
    /// Integer cell coordinates at `level`; the leaf spans
    /// `[coords, coords + 1) * size` from the root's minimum corner.
    pub coords: [u64; 3],
    pub size: f64,
    pub cube: BoundingCube,
    /// Indices into the source cloud.
    pub points: &'a [u32],
}

impl Leaf<'_> {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Balanced adaptive octree over a point cloud.
#[derive(Debug, Clone)]
pub struct Octree {
    cube: BoundingCube,
    nodes: Vec<Node>,
    /// Permutation of point indices; each node owns a contiguous range.
    order: Vec<u32>,
    /// Every node by (level, coords).
    registry: FxHashMap<(u32, [u64; 3]), u32>,
    max_depth: u32,
}

/// Cell index of normalized coordinate `u` at `level`, clamped into the grid.
fn cell_of(u: f64, level: u32) -> u64 {
    let scaled = libm::floor(libm::ldexp(u, level as i32));
    let max = max_index(level);
    if scaled <= 0.0 {
        0
    } else if scaled >= libm::ldexp(1.0, level as i32) {
        max
    } else {
        (scaled as u64).min(max)
    }
}

fn max_index(level: u32) -> u64 {
    if level >= 64 {
        u64::MAX
    } else {
        (1u64 << level) - 1
    }
}

/// Which of the 8×8×8 subcells of its level-`level` cell `u` falls into.
fn subcell_of(u: f64, level: u32) -> u8 {
    let s = libm::ldexp(u, level as i32);
    let cell = libm::floor(s);
    if cell >= libm::ldexp(1.0, level as i32) {
        return 7;
    }
    let sub = libm::floor((s - cell) * 8.0);
    (sub.max(0.0) as u8).min(7)
}

fn normalize(points: &[Point3], cube: &BoundingCube) -> Vec<[f64; 3]> {
    points
        .iter()
        .map(|p| {
            let d = *p - cube.min_corner;
            [d.x / cube.side, d.y / cube.side, d.z / cube.side]
        })
        .collect()
}

/// Splittability of an arbitrary cube holding `points`: true when at least
/// two of its 512 subcells of side `side / 8` are occupied. Subcell indices
/// are `floor((p - corner) / (side / 8))`, clamped to `[0, 7]`.
pub fn is_splittable(cube: &BoundingCube, points: &[Point3]) -> bool {
    let sub = cube.side / 8.0;
    let idx = |p: &Point3| -> [i64; 3] {
        let mut out = [0i64; 3];
        for (a, o) in out.iter_mut().enumerate() {
            let v = libm::floor((p[a] - cube.min_corner[a]) / sub) as i64;
            *o = v.clamp(0, 7);
        }
        out
    };
    let mut it = points.iter();
    let Some(first) = it.next() else {
        return false;
    };
    let first = idx(first);
    it.any(|p| idx(p) != first)
}

/// The 26 offsets of the face/edge/corner neighborhood.
pub(crate) fn neighbor_offsets() -> impl Iterator<Item = [i64; 3]> {
    (-1i64..=1).flat_map(move |x| {
        (-1i64..=1).flat_map(move |y| {
            (-1i64..=1).filter_map(move |z| (x != 0 || y != 0 || z != 0).then_some([x, y, z]))
        })
    })
}

fn offset_coords(c: [u64; 3], d: [i64; 3], level: u32) -> Option<[u64; 3]> {
    let max = max_index(level);
    let mut out = [0u64; 3];
    for a in 0..3 {
        out[a] = match d[a] {
            -1 => c[a].checked_sub(1)?,
            1 => {
                if c[a] >= max {
                    return None;
                }
                c[a] + 1
            }
            _ => c[a],
        };
    }
    Some(out)
}

struct Builder<'a> {
    tree: Octree,
    unit: &'a [[f64; 3]],
    queue: VecDeque<u32>,
    scratch: Vec<u32>,
}

impl Builder<'_> {
    fn splittable(&self, id: u32) -> bool {
        let n = &self.tree.nodes[id as usize];
        let pts = &self.tree.order[n.start as usize..(n.start + n.len) as usize];
        let key = |i: u32| {
            let u = &self.unit[i as usize];
            [
                subcell_of(u[0], n.level),
                subcell_of(u[1], n.level),
                subcell_of(u[2], n.level),
            ]
        };
        let mut it = pts.iter();
        let Some(&first) = it.next() else {
            return false;
        };
        let first = key(first);
        it.any(|&i| key(i) != first)
    }

    fn split(&mut self, id: u32) -> Result<()> {
        let (level, coords, start, len) = {
            let n = &self.tree.nodes[id as usize];
            debug_assert!(n.is_leaf());
            (n.level, n.coords, n.start as usize, n.len as usize)
        };
        if level >= self.tree.max_depth {
            return Err(Error::DepthExceeded {
                cap: self.tree.max_depth,
            });
        }
        let child_level = level + 1;

        // Counting sort of the node's points into the 8 octants.
        let range = start..start + len;
        let octant = |i: u32| -> usize {
            let u = &self.unit[i as usize];
            let mut o = 0;
            for a in 0..3 {
                let bit = cell_of(u[a], child_level) - 2 * coords[a];
                debug_assert!(bit <= 1);
                o |= (bit as usize & 1) << a;
            }
            o
        };
        let mut counts = [0u32; 8];
        for &i in &self.tree.order[range.clone()] {
            counts[octant(i)] += 1;
        }
        let mut offsets = [0u32; 8];
        for o in 1..8 {
            offsets[o] = offsets[o - 1] + counts[o - 1];
        }
        self.scratch.clear();
        self.scratch.resize(len, 0);
        let mut cursor = offsets;
        for &i in &self.tree.order[range.clone()] {
            let o = octant(i);
            self.scratch[cursor[o] as usize] = i;
            cursor[o] += 1;
        }
        self.tree.order[range].copy_from_slice(&self.scratch);

        let first_child = self.tree.nodes.len() as u32;
        for o in 0..8u32 {
            let c = [
                2 * coords[0] + u64::from(o & 1),
                2 * coords[1] + u64::from((o >> 1) & 1),
                2 * coords[2] + u64::from((o >> 2) & 1),
            ];
            let child = first_child + o;
            self.tree.nodes.push(Node {
                coords: c,
                level: child_level,
                first_child: NO_CHILD,
                start: (start as u32) + offsets[o as usize],
                len: counts[o as usize],
            });
            self.tree.registry.insert((child_level, c), child);
        }
        self.tree.nodes[id as usize].first_child = first_child;

        for child in first_child..first_child + 8 {
            self.balance(child)?;
        }
        for child in first_child..first_child + 8 {
            if self.tree.nodes[child as usize].len > 0 {
                self.queue.push_back(child);
            }
        }
        Ok(())
    }

    /// Splits every leaf touching `id` that is four times its size.
    fn balance(&mut self, id: u32) -> Result<()> {
        let (level, coords) = {
            let n = &self.tree.nodes[id as usize];
            (n.level, n.coords)
        };
        if level < 2 {
            return Ok(());
        }
        let mut coarse: Vec<u32> = Vec::new();
        for d in neighbor_offsets() {
            let Some(nc) = offset_coords(coords, d, level) else {
                continue;
            };
            let key = (level - 2, [nc[0] >> 2, nc[1] >> 2, nc[2] >> 2]);
            if let Some(&y) = self.tree.registry.get(&key) {
                if self.tree.nodes[y as usize].is_leaf() && !coarse.contains(&y) {
                    coarse.push(y);
                }
            }
        }
        for y in coarse {
            // An earlier split in this loop may already have handled it.
            if self.tree.nodes[y as usize].is_leaf() {
                self.split(y)?;
            }
        }
        Ok(())
    }
}

impl Octree {
    /// Builds the balanced adaptive octree of `cloud` with default settings.
    pub fn build(cloud: &PointCloud) -> Result<Octree> {
        Self::build_with(cloud, &OctreeConfig::default())
    }

    pub fn build_with(cloud: &PointCloud, config: &OctreeConfig) -> Result<Octree> {
        if config.max_depth > 64 {
            return Err(Error::InvalidParameter {
                name: "max_depth",
                reason: "must be at most 64",
            });
        }
        cloud.validate()?;
        if cloud.len() > u32::MAX as usize {
            return Err(Error::InvalidParameter {
                name: "cloud",
                reason: "more than 2^32 - 1 points",
            });
        }
        let cube = bounding_cube_of(cloud.points())?;
        let unit = normalize(cloud.points(), &cube);
        let n = cloud.len() as u32;
        let mut registry = FxHashMap::default();
        registry.insert((0, [0; 3]), 0);
        let tree = Octree {
            cube,
            nodes: alloc::vec![Node {
                coords: [0; 3],
                level: 0,
                first_child: NO_CHILD,
                start: 0,
                len: n,
            }],
            order: (0..n).collect(),
            registry,
            max_depth: config.max_depth,
        };
        let mut b = Builder {
            tree,
            unit: &unit,
            queue: VecDeque::from([0u32]),
            scratch: Vec::new(),
        };
        while let Some(x) = b.queue.pop_front() {
            // Balancing may have split a queued leaf already.
            if b.tree.nodes[x as usize].is_leaf() && b.splittable(x) {
                b.split(x)?;
            }
        }
        Ok(b.tree)
    }

    pub fn root_cube(&self) -> BoundingCube {
        self.cube
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// The depth cap the tree was built with.
    pub fn depth_cap(&self) -> u32 {
        self.max_depth
    }

    /// Level of the deepest leaf.
    pub fn depth(&self) -> u32 {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0)
    }

    fn size_at(&self, level: u32) -> f64 {
        libm::ldexp(self.cube.side, -(level as i32))
    }

    fn leaf_view(&self, id: u32) -> Leaf<'_> {
        let n = &self.nodes[id as usize];
        let size = self.size_at(n.level);
        let min_corner = self.cube.min_corner
            + Point3::new(
                n.coords[0] as f64 * size,
                n.coords[1] as f64 * size,
                n.coords[2] as f64 * size,
            );
        Leaf {
            id: NodeId(id),
            level: n.level,
            coords: n.coords,
            size,
            cube: BoundingCube {
                min_corner,
                side: size,
            },
            points: &self.order[n.start as usize..(n.start + n.len) as usize],
        }
    }

    /// All leaves, empty ones included, in creation order.
    pub fn leaves(&self) -> impl Iterator<Item = Leaf<'_>> + '_ {
        (0..self.nodes.len() as u32)
            .filter(|&i| self.nodes[i as usize].is_leaf())
            .map(|i| self.leaf_view(i))
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// The leaf registered at `(level, coords)`, if that node exists and is a leaf.
    pub fn leaf_at(&self, level: u32, coords: [u64; 3]) -> Option<Leaf<'_>> {
        let &id = self.registry.get(&(level, coords))?;
        self.nodes[id as usize].is_leaf().then(|| self.leaf_view(id))
    }

    /// Splittability test of a leaf, in the tree's own normalized coordinates.
    pub fn leaf_is_splittable(&self, leaf: NodeId, cloud: &PointCloud) -> bool {
        let n = &self.nodes[leaf.index()];
        let pts = &self.order[n.start as usize..(n.start + n.len) as usize];
        let key = |i: u32| {
            let d = (cloud.points()[i as usize] - self.cube.min_corner) / self.cube.side;
            [
                subcell_of(d.x, n.level),
                subcell_of(d.y, n.level),
                subcell_of(d.z, n.level),
            ]
        };
        let mut it = pts.iter();
        match it.next() {
            Some(&first) => {
                let first = key(first);
                it.any(|&i| key(i) != first)
            }
            None => false,
        }
    }

    /// Leaves touching `leaf` across a face, edge or corner, at any level.
    pub fn neighbor_leaves(&self, leaf: NodeId) -> Vec<NodeId> {
        let n = &self.nodes[leaf.index()];
        let mut out: Vec<NodeId> = Vec::new();
        for d in neighbor_offsets() {
            let Some(nc) = offset_coords(n.coords, d, n.level) else {
                continue;
            };
            // Coarser or equal leaf covering the adjacent cell.
            let mut found = false;
            for up in 0..=n.level {
                let lvl = n.level - up;
                let key = (lvl, [nc[0] >> up, nc[1] >> up, nc[2] >> up]);
                if let Some(&id) = self.registry.get(&key) {
                    if self.nodes[id as usize].is_leaf() {
                        if !out.contains(&NodeId(id)) {
                            out.push(NodeId(id));
                        }
                        found = true;
                        break;
                    }
                }
            }
            if !found {
                // The adjacent cell is subdivided: collect finer leaves on the
                // side facing `leaf`.
                if let Some(&id) = self.registry.get(&(n.level, nc)) {
                    self.collect_facing(id, d, &mut out);
                }
            }
        }
        out
    }

    fn collect_facing(&self, id: u32, d: [i64; 3], out: &mut Vec<NodeId>) {
        let n = &self.nodes[id as usize];
        if n.is_leaf() {
            if !out.contains(&NodeId(id)) {
                out.push(NodeId(id));
            }
            return;
        }
        for o in 0..8u32 {
            let bits = [o & 1, (o >> 1) & 1, (o >> 2) & 1];
            // Offset +1 means the neighbor lies above: its low half faces us.
            let faces = (0..3).all(|a| match d[a] {
                1 => bits[a] == 0,
                -1 => bits[a] == 1,
                _ => true,
            });
            if faces {
                self.collect_facing(n.first_child + o, d, out);
            }
        }
    }

    /// Arithmetic mean of the sizes of the non-empty leaves.
    pub fn mean_leaf_size(&self) -> Result<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for n in self.nodes.iter().filter(|n| n.is_leaf() && n.len > 0) {
            sum += self.size_at(n.level);
            count += 1;
        }
        if count == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(sum / count as f64)
    }

    /// Per level: (level, leaves, non-empty leaves), levels ascending.
    pub fn level_histogram(&self) -> Vec<(u32, usize, usize)> {
        let mut hist: Vec<(u32, usize, usize)> = Vec::new();
        for n in self.nodes.iter().filter(|n| n.is_leaf()) {
            match hist.iter_mut().find(|h| h.0 == n.level) {
                Some(h) => {
                    h.1 += 1;
                    h.2 += usize::from(n.len > 0);
                }
                None => hist.push((n.level, 1, usize::from(n.len > 0))),
            }
        }
        hist.sort_unstable();
        hist
    }
}

/// Convenience wrapper over [`Octree::build`].
pub fn build_adaptive_octree(cloud: &PointCloud) -> Result<Octree> {
    Octree::build(cloud)
}

/// One occupied cell of a [`UniformLeafGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub coords: [u64; 3],
    /// Indices into the source cloud, ascending.
    pub points: Vec<u32>,
}

/// Occupied cells of equal size `cell_size` tiling the root cube.
#[derive(Debug, Clone)]
pub struct UniformLeafGrid {
    origin: Point3,
    level: u32,
    cell_size: f64,
    /// Sorted by coordinates.
    cells: Vec<GridCell>,
    index: FxHashMap<[u64; 3], u32>,
}

impl UniformLeafGrid {
    /// Buckets `points` into cells of side `root.side / 2^level` anchored at
    /// the root's minimum corner. Cell coordinates are
    /// `floor((p - origin) / cell_size)`, clamped to the grid.
    pub fn bucket(points: &[Point3], root: &BoundingCube, level: u32) -> UniformLeafGrid {
        let cell_size = libm::ldexp(root.side, -(level as i32));
        let max = max_index(level);
        let mut index: FxHashMap<[u64; 3], u32> = FxHashMap::default();
        let mut cells: Vec<GridCell> = Vec::new();
        for (i, p) in points.iter().enumerate() {
            let mut c = [0u64; 3];
            for (a, slot) in c.iter_mut().enumerate() {
                let v = libm::floor((p[a] - root.min_corner[a]) / cell_size);
                *slot = if v <= 0.0 { 0 } else { (v as u64).min(max) };
            }
            let slot = *index.entry(c).or_insert_with(|| {
                cells.push(GridCell {
                    coords: c,
                    points: Vec::new(),
                });
                (cells.len() - 1) as u32
            });
            cells[slot as usize].points.push(i as u32);
        }
        Self::from_cells(root.min_corner, level, cell_size, cells)
    }

    fn from_cells(origin: Point3, level: u32, cell_size: f64, mut cells: Vec<GridCell>) -> Self {
        cells.sort_unstable_by_key(|c| c.coords);
        let index = cells
            .iter()
            .enumerate()
            .map(|(i, c)| (c.coords, i as u32))
            .collect();
        UniformLeafGrid {
            origin,
            level,
            cell_size,
            cells,
            index,
        }
    }

    pub fn origin(&self) -> Point3 {
        self.origin
    }

    /// Power-of-two depth `d` with `cell_size = root_side / 2^d`.
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn cells(&self) -> &[GridCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell_index(&self, coords: [u64; 3]) -> Option<usize> {
        self.index.get(&coords).map(|&i| i as usize)
    }

    pub fn cell(&self, coords: [u64; 3]) -> Option<&GridCell> {
        self.cell_index(coords).map(|i| &self.cells[i])
    }

    pub fn point_count(&self) -> usize {
        self.cells.iter().map(|c| c.points.len()).sum()
    }

    /// All point indices, ascending.
    pub fn point_indices(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.cells.iter().flat_map(|c| c.points.iter().copied()).collect();
        v.sort_unstable();
        v
    }

    pub fn cell_center(&self, coords: [u64; 3]) -> Point3 {
        let h = self.cell_size;
        self.origin
            + Point3::new(
                (coords[0] as f64 + 0.5) * h,
                (coords[1] as f64 + 0.5) * h,
                (coords[2] as f64 + 0.5) * h,
            )
    }

    /// A grid holding only the cells at the given positions of [`cells`](Self::cells).
    pub fn subgrid(&self, cell_indices: &[usize]) -> UniformLeafGrid {
        let cells = cell_indices.iter().map(|&i| self.cells[i].clone()).collect();
        Self::from_cells(self.origin, self.level, self.cell_size, cells)
    }

    /// A grid holding the cells for which `keep` returns true.
    pub fn filter_cells(&self, mut keep: impl FnMut(&GridCell) -> bool) -> UniformLeafGrid {
        let cells = self.cells.iter().filter(|c| keep(c)).cloned().collect();
        Self::from_cells(self.origin, self.level, self.cell_size, cells)
    }
}

/// Smallest `d >= 0` with `root_side / 2^d <= alpha * mean_leaf_size`.
pub fn uniform_level(root_side: f64, mean_leaf_size: f64, alpha: f64) -> u32 {
    let target = alpha * mean_leaf_size;
    let mut d = 0u32;
    while libm::ldexp(root_side, -(d as i32)) > target && d < 1074 {
        d += 1;
    }
    d
}

/// Rebuckets every point of `cloud` into the uniform grid whose cell size
/// `l_P` is the power-of-two fraction of the root side in
/// `(alpha * l_avg / 2, alpha * l_avg]`; `l_P` is the root side itself when
/// the root is already no larger than `alpha * l_avg`.
pub fn uniformize(tree: &Octree, cloud: &PointCloud, alpha: f64) -> Result<UniformLeafGrid> {
    if !(alpha >= 1.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: "must be a finite value >= 1",
        });
    }
    let l_avg = tree.mean_leaf_size()?;
    let root = tree.root_cube();
    let level = uniform_level(root.side, l_avg, alpha);
    Ok(UniformLeafGrid::bucket(cloud.points(), &root, level))
}
