//! Seeded synthetic contamination with ground-truth labels.
//!
//! Given a clean sample, the generator
//!
//! 1. moves every point by `s * u`, `u` uniform on the unit sphere and
//!    `s ~ N(0, (x * D)^2)`, where `D` is the diagonal of the bounding box;
//! 2. appends white-noise points drawn uniformly in the bounding box;
//! 3. turns each white-noise point with no surface sample within `0.05 * D`
//!    into an outlier cluster with probability `0.05`: `r1` uniform in
//!    `[1, R]` points uniform in the ball of radius `0.001 * r2 * D`, with
//!    `r2` uniform in `[0, 1]`.
//!
//! Every stage draws from its own ChaCha stream of the same seed, so the
//! output is a pure function of the input and the [`NoiseSpec`].

use alloc::vec::Vec;
use core::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};

use crate::geometry::{Aabb, Label, Point3, PointCloud};
use crate::spatial::PointGrid;
use crate::{Error, Result};

/// Number of white-noise points to add.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WhiteNoise {
    Count(usize),
    /// Fraction of the clean input size, rounded to the nearest integer.
    Fraction(f64),
}

impl WhiteNoise {
    pub fn resolve(self, input_len: usize) -> usize {
        match self {
            WhiteNoise::Count(n) => n,
            WhiteNoise::Fraction(f) => libm::round(f * input_len as f64) as usize,
        }
    }
}

/// Which surface samples count when testing a white-noise point for isolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IsolationReference {
    /// Samples after Gaussian perturbation.
    #[default]
    Perturbed,
    /// Samples before perturbation.
    Original,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Standard deviation of the perturbation as a fraction of `D`.
    pub sigma_fraction: f64,
    pub white_noise: WhiteNoise,
    pub cluster_probability: f64,
    /// Isolation ball radius as a fraction of `D`.
    pub isolation_radius_fraction: f64,
    /// `R`: largest number of points in one cluster.
    pub cluster_max_count: u32,
    /// Cluster ball radius is `cluster_radius_scale * r2 * D`.
    pub cluster_radius_scale: f64,
    pub isolation_reference: IsolationReference,
    /// Drop the white-noise point that seeds a cluster.
    pub replace_seed_point: bool,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            sigma_fraction: 0.0,
            white_noise: WhiteNoise::Count(5000),
            cluster_probability: 0.05,
            isolation_radius_fraction: 0.05,
            cluster_max_count: 400,
            cluster_radius_scale: 0.001,
            isolation_reference: IsolationReference::Perturbed,
            replace_seed_point: false,
            seed: 0,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason| Err(Error::InvalidParameter { name, reason });
        if !(self.sigma_fraction >= 0.0) || !self.sigma_fraction.is_finite() {
            return bad("sigma_fraction", "must be finite and >= 0");
        }
        if let WhiteNoise::Fraction(f) = self.white_noise {
            if !(f >= 0.0) || !f.is_finite() {
                return bad("white_noise", "fraction must be finite and >= 0");
            }
        }
        if !(0.0..=1.0).contains(&self.cluster_probability) {
            return bad("cluster_probability", "must lie in [0, 1]");
        }
        if !(self.isolation_radius_fraction >= 0.0) || !(self.cluster_radius_scale >= 0.0) {
            return bad("radius", "fractions must be >= 0");
        }
        if self.cluster_max_count < 1 {
            return bad("cluster_max_count", "must be at least 1");
        }
        Ok(())
    }
}

const STREAM_PERTURB: u64 = 1;
const STREAM_WHITE_NOISE: u64 = 2;
const STREAM_CLUSTERS: u64 = 3;
const STREAM_SAMPLING: u64 = 4;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Moves every point by a normal amount of standard deviation
/// `sigma_fraction * D` along a uniformly random direction, and labels all
/// points as surface samples.
pub fn add_gaussian_perturbation(cloud: &PointCloud, sigma_fraction: f64, seed: u64) -> Result<PointCloud> {
    let diagonal = Aabb::from_points(cloud.points())?.diagonal();
    perturb(cloud, sigma_fraction * diagonal, seed)
}

fn perturb(cloud: &PointCloud, sigma: f64, seed: u64) -> Result<PointCloud> {
    let (mut points, _) = cloud.clone().into_parts();
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).map_err(|_| Error::InvalidParameter {
            name: "sigma_fraction",
            reason: "must be finite and >= 0",
        })?;
        let mut rng = rng_for(seed, STREAM_PERTURB);
        for p in &mut points {
            let u: [f64; 3] = UnitSphere.sample(&mut rng);
            let s = normal.sample(&mut rng);
            *p += Point3::from_array(u) * s;
        }
    }
    let labels = alloc::vec![Label::Surface; points.len()];
    PointCloud::with_labels(points, labels)
}

/// Appends `count` points uniform in the cloud's bounding box, labeled as
/// white noise.
pub fn add_white_noise(cloud: &PointCloud, count: usize, seed: u64) -> Result<PointCloud> {
    let region = Aabb::from_points(cloud.points())?;
    Ok(add_white_noise_in(cloud, &region, count, seed))
}

/// Appends `count` points uniform in `region`, labeled as white noise.
pub fn add_white_noise_in(cloud: &PointCloud, region: &Aabb, count: usize, seed: u64) -> PointCloud {
    let mut out = cloud.clone().labeled_as(Label::Surface);
    let mut rng = rng_for(seed, STREAM_WHITE_NOISE);
    let axis = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
        if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            lo
        }
    };
    for _ in 0..count {
        let p = Point3::new(
            axis(&mut rng, region.min.x, region.max.x),
            axis(&mut rng, region.min.y, region.max.y),
            axis(&mut rng, region.min.z, region.max.z),
        );
        out.push(p, Label::WhiteNoise);
    }
    out
}

/// A generated cluster of outliers.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierCluster {
    /// The white-noise point that seeded the cluster.
    pub center: Point3,
    pub radius: f64,
    /// Positions of the cluster's points in the output cloud.
    pub members: Range<usize>,
}

/// Output of cluster generation.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReport {
    pub cloud: PointCloud,
    pub clusters: Vec<OutlierCluster>,
    /// White-noise points with no surface sample inside the isolation ball.
    pub isolated_white_noise: usize,
}

/// Point uniform in the ball of `radius` around `center`, by rejection from
/// the enclosing cube.
fn sample_ball(rng: &mut ChaCha8Rng, center: Point3, radius: f64) -> Point3 {
    loop {
        let v = Point3::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        );
        if v.norm_squared() <= 1.0 {
            return center + v * radius;
        }
    }
}

/// Turns isolated white-noise points of a labeled cloud into outlier
/// clusters. `diagonal` is `D`; `reference` holds the surface samples used
/// for the isolation test.
pub fn spawn_outlier_clusters(
    cloud: &PointCloud,
    spec: &NoiseSpec,
    diagonal: f64,
    reference: &[Point3],
    seed: u64,
) -> Result<ClusterReport> {
    spec.validate()?;
    let labels = cloud.labels().ok_or(Error::InvalidParameter {
        name: "cloud",
        reason: "cluster generation needs labeled white noise",
    })?;
    let iso = spec.isolation_radius_fraction * diagonal;
    let grid = (iso > 0.0 && !reference.is_empty()).then(|| PointGrid::new(reference, iso));
    let isolated = |p: Point3| match &grid {
        Some(g) => !g.any_within(reference, p, iso),
        None => !reference.iter().any(|r| r.distance(p) <= iso),
    };

    let mut rng = rng_for(seed, STREAM_CLUSTERS);
    let mut keep = alloc::vec![true; cloud.len()];
    let mut centers: Vec<(Point3, f64, usize)> = Vec::new();
    let mut isolated_count = 0;
    for (i, (&p, &label)) in cloud.points().iter().zip(labels).enumerate() {
        if label != Label::WhiteNoise || !isolated(p) {
            continue;
        }
        isolated_count += 1;
        if spec.cluster_probability > 0.0 && rng.random_bool(spec.cluster_probability) {
            let r1 = rng.random_range(1..=spec.cluster_max_count) as usize;
            let r2: f64 = rng.random_range(0.0..=1.0);
            centers.push((p, spec.cluster_radius_scale * r2 * diagonal, r1));
            if spec.replace_seed_point {
                keep[i] = false;
            }
        }
    }

    let mut out = PointCloud::with_labels(Vec::new(), Vec::new())?;
    for (i, &p) in cloud.points().iter().enumerate() {
        if keep[i] {
            out.push(p, labels[i]);
        }
    }
    let mut clusters = Vec::with_capacity(centers.len());
    for (center, radius, count) in centers {
        let start = out.len();
        for _ in 0..count {
            out.push(sample_ball(&mut rng, center, radius), Label::Outlier);
        }
        clusters.push(OutlierCluster {
            center,
            radius,
            members: start..out.len(),
        });
    }
    Ok(ClusterReport {
        cloud: out,
        clusters,
        isolated_white_noise: isolated_count,
    })
}

/// Full contamination of a clean sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Contamination {
    pub cloud: PointCloud,
    pub clusters: Vec<OutlierCluster>,
    pub isolated_white_noise: usize,
    pub white_noise_count: usize,
    /// `D` of the clean input.
    pub diagonal: f64,
}

/// Perturbation, white noise and outlier clusters, in that order. `D` and
/// the white-noise box come from the clean input.
pub fn contaminate(clean: &PointCloud, spec: &NoiseSpec) -> Result<Contamination> {
    spec.validate()?;
    let region = Aabb::from_points(clean.points())?;
    let diagonal = region.diagonal();
    let perturbed = perturb(clean, spec.sigma_fraction * diagonal, spec.seed)?;
    let white_noise_count = spec.white_noise.resolve(clean.len());
    let noisy = add_white_noise_in(&perturbed, &region, white_noise_count, spec.seed);
    let reference = match spec.isolation_reference {
        IsolationReference::Perturbed => perturbed.points(),
        IsolationReference::Original => clean.points(),
    };
    let report = spawn_outlier_clusters(&noisy, spec, diagonal, reference, spec.seed)?;
    Ok(Contamination {
        cloud: report.cloud,
        clusters: report.clusters,
        isolated_white_noise: report.isolated_white_noise,
        white_noise_count,
        diagonal,
    })
}

/// `n` points uniform on the sphere of `radius` around `center`.
pub fn sample_sphere(n: usize, center: Point3, radius: f64, seed: u64) -> PointCloud {
    let mut rng = rng_for(seed, STREAM_SAMPLING);
    let points = (0..n)
        .map(|_| {
            let u: [f64; 3] = UnitSphere.sample(&mut rng);
            center + Point3::from_array(u) * radius
        })
        .collect();
    PointCloud::new(points)
}

/// `n` evenly spread points on a sphere (golden-angle spiral). Neighboring
/// points are about `radius * sqrt(4 * pi / n)` apart everywhere.
pub fn sample_sphere_even(n: usize, center: Point3, radius: f64) -> PointCloud {
    let golden = core::f64::consts::PI * (3.0 - libm::sqrt(5.0));
    let points = (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = libm::sqrt(1.0 - z * z);
            let t = golden * i as f64;
            center + Point3::new(r * libm::cos(t), r * libm::sin(t), z) * radius
        })
        .collect();
    PointCloud::new(points)
}

/// `n` points uniform by area on a torus around the z axis, with tube
/// `minor` and center-line radius `major`.
pub fn sample_torus(n: usize, major: f64, minor: f64, seed: u64) -> PointCloud {
    let mut rng = rng_for(seed, STREAM_SAMPLING);
    let tau = core::f64::consts::TAU;
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let u: f64 = rng.random_range(0.0..tau);
        let v: f64 = rng.random_range(0.0..tau);
        // Area element is proportional to major + minor * cos(v).
        let w: f64 = rng.random_range(0.0..=1.0);
        if w * (major + minor) > major + minor * libm::cos(v) {
            continue;
        }
        let r = major + minor * libm::cos(v);
        points.push(Point3::new(r * libm::cos(u), r * libm::sin(u), minor * libm::sin(v)));
    }
    PointCloud::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn even_sphere_on_surface() {
        let c = sample_sphere_even(500, Point3::new(1.0, 2.0, 3.0), 2.0);
        assert_eq!(c.len(), 500);
        for p in c.points() {
            assert!((p.distance(Point3::new(1.0, 2.0, 3.0)) - 2.0).abs() < 1e-12);
        }
    }

    fn sphere() -> PointCloud {
        sample_sphere(2000, Point3::ORIGIN, 1.0, 7)
    }

    #[test]
    fn zero_sigma_is_identity() {
        let c = sphere();
        let out = add_gaussian_perturbation(&c, 0.0, 1).unwrap();
        assert_eq!(out.points(), c.points());
        assert_eq!(out.count_label(Label::Surface), c.len());
    }

    #[test]
    fn same_seed_same_output() {
        let c = sphere();
        let a = add_gaussian_perturbation(&c, 0.01, 9).unwrap();
        let b = add_gaussian_perturbation(&c, 0.01, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, add_gaussian_perturbation(&c, 0.01, 10).unwrap());
    }

    #[test]
    fn white_noise_counts_and_containment() {
        let c = sphere();
        assert_eq!(add_white_noise(&c, 0, 3).unwrap().len(), c.len());
        let out = add_white_noise(&c, 5000, 3).unwrap();
        assert_eq!(out.len(), c.len() + 5000);
        assert_eq!(out.count_label(Label::WhiteNoise), 5000);
        let bb = Aabb::from_points(c.points()).unwrap();
        assert!(out.points().iter().all(|&p| bb.contains(p)));
    }

    #[test]
    fn zero_probability_adds_no_clusters() {
        let c = add_white_noise(&sphere(), 500, 3).unwrap();
        let spec = NoiseSpec {
            cluster_probability: 0.0,
            ..Default::default()
        };
        let r = spawn_outlier_clusters(&c, &spec, 3.4, &c.points()[..2000], 1).unwrap();
        assert_eq!(r.cloud, c);
        assert!(r.clusters.is_empty());
    }

    #[test]
    fn zero_radius_cluster_copies_center() {
        let c = PointCloud::with_labels(vec![Point3::new(5.0, 5.0, 5.0)], vec![Label::WhiteNoise]).unwrap();
        let spec = NoiseSpec {
            cluster_probability: 1.0,
            cluster_max_count: 1,
            cluster_radius_scale: 0.0,
            ..Default::default()
        };
        let r = spawn_outlier_clusters(&c, &spec, 1.0, &[], 0).unwrap();
        assert_eq!(r.clusters.len(), 1);
        assert_eq!(r.cloud.len(), 2);
        assert_eq!(r.cloud.points()[1], Point3::new(5.0, 5.0, 5.0));
        assert_eq!(r.cloud.label(1), Some(Label::Outlier));
    }

    #[test]
    fn replacing_seed_point_drops_it() {
        let c = PointCloud::with_labels(vec![Point3::new(5.0, 5.0, 5.0)], vec![Label::WhiteNoise]).unwrap();
        let spec = NoiseSpec {
            cluster_probability: 1.0,
            replace_seed_point: true,
            ..Default::default()
        };
        let r = spawn_outlier_clusters(&c, &spec, 1.0, &[], 0).unwrap();
        assert_eq!(r.cloud.count_label(Label::WhiteNoise), 0);
        assert_eq!(r.cloud.len(), r.clusters[0].members.len());
    }

    #[test]
    fn unlabeled_cloud_rejected() {
        let c = sphere();
        assert!(spawn_outlier_clusters(&c, &NoiseSpec::default(), 1.0, &[], 0).is_err());
    }

    #[test]
    fn fraction_counts() {
        assert_eq!(WhiteNoise::Fraction(0.6).resolve(1000), 600);
        assert_eq!(WhiteNoise::Count(12).resolve(1000), 12);
    }

    #[test]
    fn torus_points_lie_on_surface() {
        let t = sample_torus(500, 1.0, 0.25, 2);
        for p in t.points() {
            let ring = libm::sqrt(p.x * p.x + p.y * p.y) - 1.0;
            let d = libm::sqrt(ring * ring + p.z * p.z);
            assert!((d - 0.25).abs() < 1e-12);
        }
    }
}
