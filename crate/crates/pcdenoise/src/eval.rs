//! Accuracy metrics against analytic surfaces, reference clouds and labels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use pcdenoise_core::spatial::PointGrid;
use pcdenoise_core::{Aabb, Label, Point3, PointCloud};

/// An analytic surface to measure against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceDescriptor {
    Sphere { center: Point3, radius: f64 },
    /// Torus around the z axis through `center`.
    Torus { center: Point3, major: f64, minor: f64 },
    /// Plane through `point` with the given normal (need not be unit).
    Plane { point: Point3, normal: Point3 },
}

impl SurfaceDescriptor {
    pub fn unit_sphere() -> Self {
        SurfaceDescriptor::Sphere {
            center: Point3::ORIGIN,
            radius: 1.0,
        }
    }

    /// Unsigned distance from `p` to the surface.
    pub fn distance(&self, p: Point3) -> f64 {
        match *self {
            SurfaceDescriptor::Sphere { center, radius } => (p.distance(center) - radius).abs(),
            SurfaceDescriptor::Torus { center, major, minor } => {
                let q = p - center;
                let ring = (q.x * q.x + q.y * q.y).sqrt() - major;
                ((ring * ring + q.z * q.z).sqrt() - minor).abs()
            }
            SurfaceDescriptor::Plane { point, normal } => ((p - point).dot(normal) / normal.norm()).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("bad surface descriptor '{input}': {reason}")]
pub struct SurfaceParseError {
    input: String,
    reason: String,
}

/// Parses `sphere:r=1[,cx=..,cy=..,cz=..]`, `torus:R=1,r=0.25[,cx=..]` or
/// `plane:nx=0,ny=0,nz=1[,px=..,py=..,pz=..]`.
impl FromStr for SurfaceDescriptor {
    type Err = SurfaceParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fail = |reason: &str| SurfaceParseError {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = Vec::new();
        for part in args.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| fail("expected key=value"))?;
            let v: f64 = v.trim().parse().map_err(|_| fail("value is not a number"))?;
            kv.push((k.trim().to_string(), v));
        }
        let get = |key: &str| kv.iter().find(|(k, _)| k == key).map(|&(_, v)| v);
        let allowed: &[&str] = match kind {
            "sphere" => &["r", "cx", "cy", "cz"],
            "torus" => &["R", "r", "cx", "cy", "cz"],
            "plane" => &["nx", "ny", "nz", "px", "py", "pz"],
            _ => return Err(fail("unknown surface kind")),
        };
        if let Some((k, _)) = kv.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(fail(&format!("unknown key '{k}'")));
        }
        let center = Point3::new(get("cx").unwrap_or(0.0), get("cy").unwrap_or(0.0), get("cz").unwrap_or(0.0));
        match kind {
            "sphere" => Ok(SurfaceDescriptor::Sphere {
                center,
                radius: get("r").unwrap_or(1.0),
            }),
            "torus" => Ok(SurfaceDescriptor::Torus {
                center,
                major: get("R").ok_or_else(|| fail("torus needs R"))?,
                minor: get("r").ok_or_else(|| fail("torus needs r"))?,
            }),
            _ => {
                let normal = Point3::new(get("nx").unwrap_or(0.0), get("ny").unwrap_or(0.0), get("nz").unwrap_or(1.0));
                if !(normal.norm() > 0.0) {
                    return Err(fail("plane normal is zero"));
                }
                Ok(SurfaceDescriptor::Plane {
                    point: Point3::new(get("px").unwrap_or(0.0), get("py").unwrap_or(0.0), get("pz").unwrap_or(0.0)),
                    normal,
                })
            }
        }
    }
}

/// Summary of per-point distances.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DistanceMetrics {
    pub count: usize,
    pub rms: f64,
    pub mean: f64,
    pub max: f64,
}

impl DistanceMetrics {
    pub fn from_distances(d: impl IntoIterator<Item = f64>) -> Self {
        let mut m = DistanceMetrics::default();
        let mut sq = 0.0;
        let mut sum = 0.0;
        for v in d {
            m.count += 1;
            sq += v * v;
            sum += v;
            m.max = m.max.max(v);
        }
        if m.count > 0 {
            m.rms = (sq / m.count as f64).sqrt();
            m.mean = sum / m.count as f64;
        }
        m
    }
}

impl fmt::Display for DistanceMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} rms={:.6e} mean={:.6e} max={:.6e}", self.count, self.rms, self.mean, self.max)
    }
}

pub fn surface_distance(points: &[Point3], surface: &SurfaceDescriptor) -> DistanceMetrics {
    DistanceMetrics::from_distances(points.iter().map(|&p| surface.distance(p)))
}

/// Distance from each of `points` to its nearest point in `reference`.
pub fn chamfer_one_sided(points: &[Point3], reference: &[Point3]) -> DistanceMetrics {
    let Ok(bb) = Aabb::from_points(reference) else {
        return DistanceMetrics::default();
    };
    let e = bb.extent();
    let side = e.x.max(e.y).max(e.z);
    // About one reference point per cell for surface-like data.
    let cell = if side > 0.0 {
        side / (reference.len() as f64).sqrt().max(1.0)
    } else {
        1.0
    };
    let grid = PointGrid::new(reference, cell);
    DistanceMetrics::from_distances(points.iter().map(|&p| grid.nearest(reference, p).map_or(f64::INFINITY, |(_, d)| d)))
}

/// How well a removal stage separated surface points from noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemovalMetrics {
    /// Fraction of surface points kept.
    pub surface_recall: f64,
    /// Fraction of white-noise and outlier points removed.
    pub noise_removed: f64,
    /// Fraction of kept points that are surface points.
    pub precision: f64,
}

/// Compares label counts before and after a removal stage. Returns `None`
/// unless both clouds are labeled.
pub fn removal_metrics(before: &PointCloud, after: &PointCloud) -> Option<RemovalMetrics> {
    before.labels()?;
    after.labels()?;
    let noise = |c: &PointCloud| c.count_label(Label::WhiteNoise) + c.count_label(Label::Outlier);
    let ratio = |a: usize, b: usize| if b == 0 { 1.0 } else { a as f64 / b as f64 };
    let (s0, s1) = (before.count_label(Label::Surface), after.count_label(Label::Surface));
    let (n0, n1) = (noise(before), noise(after));
    Some(RemovalMetrics {
        surface_recall: ratio(s1, s0),
        noise_removed: 1.0 - ratio(n1, n0),
        precision: ratio(s1, after.len()),
    })
}
