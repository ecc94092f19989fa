//! Postprocessing of a reconstructed triangle mesh.
//!
//! Reconstructors that produce watertight output patch boundary holes with
//! triangles that have unusually large circumradii. Pruning every triangle
//! whose circumradius exceeds `r_avg + epsilon * r_sd` reopens those holes;
//! uniform 1-ring Laplacian smoothing then relaxes the surface.

use alloc::vec::Vec;

use crate::geometry::Point3;
use crate::{Error, Result};

/// Ratio of doubled area to squared longest edge below which a triangle is
/// treated as degenerate.
const DEGENERACY: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[u32; 3]>) -> Result<TriangleMesh> {
        let mesh = TriangleMesh {
            vertices,
            triangles,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Checks index ranges and rejects triangles repeating a vertex.
    pub fn validate(&self) -> Result<()> {
        for (index, t) in self.triangles.iter().enumerate() {
            for &v in t {
                if v as usize >= self.vertices.len() {
                    return Err(Error::IndexOutOfRange { index, vertex: v });
                }
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::DegenerateTriangle);
            }
        }
        Ok(())
    }

    pub fn corners(&self, t: usize) -> [Point3; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Drops vertices no triangle references and renumbers the rest.
    pub fn compact(&self) -> TriangleMesh {
        let mut remap = alloc::vec![u32::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        for t in &self.triangles {
            for &v in t {
                if remap[v as usize] == u32::MAX {
                    remap[v as usize] = vertices.len() as u32;
                    vertices.push(self.vertices[v as usize]);
                }
            }
        }
        let triangles = self
            .triangles
            .iter()
            .map(|t| t.map(|v| remap[v as usize]))
            .collect();
        TriangleMesh {
            vertices,
            triangles,
        }
    }
}

/// Circumradius `abc / (4 * area)` of a triangle.
pub fn circumradius(tri: [Point3; 3]) -> Result<f64> {
    let [p, q, r] = tri;
    let a = q.distance(r);
    let b = p.distance(r);
    let c = p.distance(q);
    let twice_area = (q - p).cross(r - p).norm();
    let longest = a.max(b).max(c);
    if !(twice_area > DEGENERACY * longest * longest) {
        return Err(Error::DegenerateTriangle);
    }
    Ok(a * b * c / (2.0 * twice_area))
}

/// Circumradius statistics of a mesh: per-triangle radii, mean and
/// population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct CircumradiusStats {
    pub radii: Vec<f64>,
    pub mean: f64,
    pub std_dev: f64,
}

impl CircumradiusStats {
    pub fn threshold(&self, epsilon: f64) -> f64 {
        self.mean + epsilon * self.std_dev
    }
}

pub fn circumradius_stats(mesh: &TriangleMesh) -> Result<CircumradiusStats> {
    if mesh.triangles.is_empty() {
        return Err(Error::EmptyInput);
    }
    let radii = (0..mesh.triangles.len())
        .map(|t| circumradius(mesh.corners(t)))
        .collect::<Result<Vec<f64>>>()?;
    let n = radii.len() as f64;
    // Corrected two-pass mean: exact when every radius is identical.
    let rough = radii.iter().sum::<f64>() / n;
    let mean = rough + radii.iter().map(|r| r - rough).sum::<f64>() / n;
    let var = radii.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    Ok(CircumradiusStats {
        radii,
        mean,
        std_dev: libm::sqrt(var),
    })
}

/// Removes triangles with circumradius strictly above
/// `r_avg + epsilon * r_sd`. Vertices are kept, so indices stay valid.
pub fn prune_large_triangles(mesh: &TriangleMesh, epsilon: f64) -> Result<TriangleMesh> {
    let stats = circumradius_stats(mesh)?;
    let limit = stats.threshold(epsilon);
    let triangles = mesh
        .triangles
        .iter()
        .zip(&stats.radii)
        .filter(|(_, &r)| !(r > limit))
        .map(|(t, _)| *t)
        .collect();
    Ok(TriangleMesh {
        vertices: mesh.vertices.clone(),
        triangles,
    })
}

/// Sorted, deduplicated edge-neighbors of every vertex.
pub fn one_ring(mesh: &TriangleMesh) -> Vec<Vec<u32>> {
    let mut ring: Vec<Vec<u32>> = alloc::vec![Vec::new(); mesh.vertices.len()];
    for t in &mesh.triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            ring[a as usize].push(b);
            ring[b as usize].push(a);
        }
    }
    for r in &mut ring {
        r.sort_unstable();
        r.dedup();
    }
    ring
}

/// Jacobi iterations of `v += step * (mean(1-ring) - v)`. Vertices without
/// edges stay put.
pub fn mesh_laplacian_smooth(mesh: &TriangleMesh, iterations: usize, step: f64) -> Result<TriangleMesh> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "step",
            reason: "must lie in (0, 1]",
        });
    }
    let ring = one_ring(mesh);
    let mut current = mesh.vertices.clone();
    for _ in 0..iterations {
        let next = current
            .iter()
            .zip(&ring)
            .map(|(&v, nb)| {
                if nb.is_empty() {
                    return v;
                }
                let mut c = Point3::ORIGIN;
                for &j in nb {
                    c += current[j as usize];
                }
                let c = c / nb.len() as f64;
                v + (c - v) * step
            })
            .collect();
        current = next;
    }
    Ok(TriangleMesh {
        vertices: current,
        triangles: mesh.triangles.clone(),
    })
}
