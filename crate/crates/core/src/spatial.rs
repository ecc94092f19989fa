//! Uniform hash grid for fixed-radius and nearest-point queries.

use alloc::vec::Vec;

use crate::geometry::Point3;
use crate::FxHashMap;

/// Buckets points into cubic cells of a fixed size.
#[derive(Debug, Clone)]
pub struct PointGrid {
    cell: f64,
    buckets: FxHashMap<[i64; 3], Vec<u32>>,
}

impl PointGrid {
    /// `cell` must be positive and finite.
    pub fn new(points: &[Point3], cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "grid cell size must be positive");
        let mut buckets: FxHashMap<[i64; 3], Vec<u32>> = FxHashMap::default();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(key(*p, cell)).or_default().push(i as u32);
        }
        Self { cell, buckets }
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    /// Calls `f(index)` for every point within `radius` (inclusive) of
    /// `center`. Visit order follows the grid layout.
    pub fn for_each_within(
        &self,
        points: &[Point3],
        center: Point3,
        radius: f64,
        mut f: impl FnMut(u32),
    ) {
        let r2 = radius * radius;
        self.visit_range(center, radius, |b| {
            for &i in b {
                if points[i as usize].distance_squared(center) <= r2 {
                    f(i);
                }
            }
            false
        });
    }

    pub fn any_within(&self, points: &[Point3], center: Point3, radius: f64) -> bool {
        let r2 = radius * radius;
        self.visit_range(center, radius, |b| {
            b.iter()
                .any(|&i| points[i as usize].distance_squared(center) <= r2)
        })
    }

    /// Calls `f` on every bucket overlapping the box of half-side `radius`
    /// around `center` until it returns true. Large boxes scan the occupied
    /// buckets instead of every cell in range.
    fn visit_range(&self, center: Point3, radius: f64, mut f: impl FnMut(&[u32]) -> bool) -> bool {
        let lo = key(center - Point3::new(radius, radius, radius), self.cell);
        let hi = key(center + Point3::new(radius, radius, radius), self.cell);
        let span = |a: usize| (hi[a] as f64 - lo[a] as f64 + 1.0).max(0.0);
        if span(0) * span(1) * span(2) > self.buckets.len() as f64 {
            for (k, b) in &self.buckets {
                if (0..3).all(|a| lo[a] <= k[a] && k[a] <= hi[a]) && f(b) {
                    return true;
                }
            }
            return false;
        }
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                for z in lo[2]..=hi[2] {
                    if let Some(b) = self.buckets.get(&[x, y, z]) {
                        if f(b) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// Nearest indexed point to `query` and its distance. Ties go to the
    /// smaller index.
    pub fn nearest(&self, points: &[Point3], query: Point3) -> Option<(u32, f64)> {
        if self.buckets.is_empty() {
            return None;
        }
        let q = key(query, self.cell);
        let mut best: Option<(u32, f64)> = None;
        let mut ring: i64 = 0;
        loop {
            // Cells visited so far grow as side^3; past the bucket count a
            // plain scan is cheaper.
            let side = (2 * ring + 1) as f64;
            if ring > 0 && side * side * side > 2.0 * self.buckets.len() as f64 {
                return self.nearest_by_scan(points, query, best);
            }
            for x in q[0] - ring..=q[0] + ring {
                for y in q[1] - ring..=q[1] + ring {
                    let face = (x - q[0]).abs() == ring || (y - q[1]).abs() == ring;
                    let step = if face || ring == 0 { 1 } else { 2 * ring as usize };
                    for z in (q[2] - ring..=q[2] + ring).step_by(step) {
                        if let Some(b) = self.buckets.get(&[x, y, z]) {
                            for &i in b {
                                let d2 = points[i as usize].distance_squared(query);
                                let better = match best {
                                    None => true,
                                    Some((bi, bd)) => d2 < bd || (d2 == bd && i < bi),
                                };
                                if better {
                                    best = Some((i, d2));
                                }
                            }
                        }
                    }
                }
            }
            // Every unvisited cell is at least `ring * cell` away.
            if let Some((_, bd)) = best {
                let reach = ring as f64 * self.cell;
                if bd <= reach * reach {
                    break;
                }
            }
            ring += 1;
        }
        best.map(|(i, d2)| (i, libm::sqrt(d2)))
    }

    fn nearest_by_scan(&self, points: &[Point3], query: Point3, mut best: Option<(u32, f64)>) -> Option<(u32, f64)> {
        for b in self.buckets.values() {
            for &i in b {
                let d2 = points[i as usize].distance_squared(query);
                let better = match best {
                    None => true,
                    Some((bi, bd)) => d2 < bd || (d2 == bd && i < bi),
                };
                if better {
                    best = Some((i, d2));
                }
            }
        }
        best.map(|(i, d2)| (i, libm::sqrt(d2)))
    }
}

fn key(p: Point3, cell: f64) -> [i64; 3] {
    [
        libm::floor(p.x / cell) as i64,
        libm::floor(p.y / cell) as i64,
        libm::floor(p.z / cell) as i64,
    ]
}
