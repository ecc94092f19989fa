#![allow(dead_code)]

use pcdenoise_core::contamination::{contaminate, sample_sphere, NoiseSpec, WhiteNoise};
use pcdenoise_core::{Label, Point3, PointCloud};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn direction(rng: &mut ChaCha8Rng) -> Point3 {
    loop {
        let v = Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn uniform_box(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<Point3> {
    (0..n)
        .map(|_| Point3::new(rng.random_range(lo..hi), rng.random_range(lo..hi), rng.random_range(lo..hi)))
        .collect()
}

/// Sphere, torus-like ring, blobs and uniform fill, chosen by `k`.
pub fn mixed_cloud(k: u64, n: usize) -> PointCloud {
    let mut r = rng(7000 + k);
    let sphere = |r: &mut ChaCha8Rng, n: usize, noise: f64| -> Vec<Point3> {
        (0..n).map(|_| direction(r) * (1.0 + noise * r.random_range(-1.0..1.0))).collect()
    };
    let blobs = |r: &mut ChaCha8Rng, n: usize, m: usize, radius: f64| -> Vec<Point3> {
        let centers = uniform_box(r, m, -1.0, 1.0);
        (0..n).map(|i| centers[i % m] + direction(r) * radius * r.random_range(0.0f64..1.0).cbrt()).collect()
    };
    let pts = match k % 4 {
        0 => uniform_box(&mut r, n, -1.0, 1.0),
        1 => sphere(&mut r, n, 0.01),
        2 => blobs(&mut r, n, 3 + (k as usize % 17), 0.02 + 0.01 * (k % 5) as f64),
        _ => {
            let mut v = sphere(&mut r, n / 2, 0.003);
            v.extend(blobs(&mut r, n / 4, 8, 0.01));
            v.extend(uniform_box(&mut r, n - n / 2 - n / 4, -1.3, 1.3));
            v
        }
    };
    PointCloud::new(pts)
}

/// Unit-sphere sample with white noise and outlier clusters.
pub fn contaminated_sphere(n: usize, white_noise: WhiteNoise, sigma: f64, seed: u64) -> PointCloud {
    let clean = sample_sphere(n, Point3::ORIGIN, 1.0, seed);
    let spec = NoiseSpec { sigma_fraction: sigma, white_noise, seed, ..NoiseSpec::default() };
    contaminate(&clean, &spec).unwrap().cloud
}

pub fn count(cloud: &PointCloud, label: Label) -> usize {
    cloud.count_label(label)
}
