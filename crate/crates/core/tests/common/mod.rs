#![allow(dead_code)]

use pcdenoise_core::{Point3, PointCloud};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_box(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<Point3> {
    (0..n)
        .map(|_| Point3::new(rng.random_range(lo..hi), rng.random_range(lo..hi), rng.random_range(lo..hi)))
        .collect()
}

/// Unit vector by normalizing a rejection sample from the cube.
pub fn direction(rng: &mut ChaCha8Rng) -> Point3 {
    loop {
        let v = Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn noisy_sphere(rng: &mut ChaCha8Rng, n: usize, noise: f64) -> Vec<Point3> {
    (0..n)
        .map(|_| {
            let d = direction(rng);
            d * (1.0 + noise * rng.random_range(-1.0..1.0))
        })
        .collect()
}

pub fn blobs(rng: &mut ChaCha8Rng, n: usize, centers: usize, radius: f64) -> Vec<Point3> {
    let cs = uniform_box(rng, centers, -1.0, 1.0);
    (0..n)
        .map(|i| cs[i % centers] + direction(rng) * radius * rng.random_range(0.0f64..1.0).cbrt())
        .collect()
}

/// Mixed corpus member `k`: uniform, surface, clustered or a blend.
pub fn corpus_cloud(k: u64, n: usize) -> PointCloud {
    let mut r = rng(1000 + k);
    let pts = match k % 4 {
        0 => uniform_box(&mut r, n, -1.0, 1.0),
        1 => noisy_sphere(&mut r, n, 0.01),
        2 => blobs(&mut r, n, 12, 0.05),
        _ => {
            let mut v = noisy_sphere(&mut r, n / 2, 0.005);
            v.extend(blobs(&mut r, n / 4, 5, 0.01));
            v.extend(uniform_box(&mut r, n - n / 2 - n / 4, -1.2, 1.2));
            v
        }
    };
    PointCloud::new(pts)
}
