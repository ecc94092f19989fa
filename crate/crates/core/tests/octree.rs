mod common;

use std::collections::HashSet;

use pcdenoise_core::octree::{uniform_level, uniformize, Octree, OctreeConfig};
use pcdenoise_core::{BoundingCube, Error, Point3, PointCloud};
use proptest::prelude::*;

/// Leaf pairs in contact whose sizes differ by more than a factor 2. A
/// larger leaf touching leaf `a` always covers one of the 26 same-level
/// cells around `a`, so looking up coarser leaves over those cells finds
/// every such pair.
fn balance_violations(tree: &Octree) -> usize {
    let keys: HashSet<(u32, [u64; 3])> = tree.leaves().map(|l| (l.level, l.coords)).collect();
    let mut bad = 0;
    for leaf in tree.leaves() {
        let l = leaf.level;
        let n = if l >= 64 { u64::MAX } else { 1u64 << l };
        for dx in -1i64..=1 {
            for dy in -1i64..=1 {
                for dz in -1i64..=1 {
                    if (dx, dy, dz) == (0, 0, 0) {
                        continue;
                    }
                    let c: Option<Vec<u64>> = [dx, dy, dz]
                        .iter()
                        .zip(leaf.coords)
                        .map(|(&d, c)| c.checked_add_signed(d).filter(|&v| v < n))
                        .collect();
                    let Some(c) = c else { continue };
                    for coarse in (0..l).rev() {
                        let shift = l - coarse;
                        let k = [c[0] >> shift, c[1] >> shift, c[2] >> shift];
                        if keys.contains(&(coarse, k)) {
                            if shift > 1 {
                                bad += 1;
                            }
                            break;
                        }
                    }
                }
            }
        }
    }
    bad
}

fn occupied_subcells(cube: &BoundingCube, pts: &[Point3]) -> usize {
    let h = cube.side / 8.0;
    let cells: HashSet<[i64; 3]> = pts
        .iter()
        .map(|p| {
            let d = *p - cube.min_corner;
            [d.x, d.y, d.z].map(|v| ((v / h).floor() as i64).clamp(0, 7))
        })
        .collect();
    cells.len()
}

fn splittable_leaves(tree: &Octree, cloud: &PointCloud) -> usize {
    tree.leaves()
        .filter(|l| {
            let pts: Vec<Point3> = l.points.iter().map(|&i| cloud.points()[i as usize]).collect();
            occupied_subcells(&l.cube, &pts) >= 2
        })
        .count()
}

#[test]
fn corpus_trees_are_balanced_and_final() {
    for k in 0..8 {
        let cloud = common::corpus_cloud(k, 3000);
        let tree = Octree::build(&cloud).unwrap();
        assert_eq!(balance_violations(&tree), 0, "cloud {k}");
        assert_eq!(splittable_leaves(&tree, &cloud), 0, "cloud {k}");
        let total: usize = tree.leaves().map(|l| l.points.len()).sum();
        assert_eq!(total, cloud.len());
    }
}

#[test]
fn leaves_hold_their_points() {
    let cloud = common::corpus_cloud(3, 2000);
    let tree = Octree::build(&cloud).unwrap();
    for leaf in tree.leaves() {
        for &i in leaf.points {
            assert!(leaf.cube.contains(cloud.points()[i as usize]) || leaf.level == 0);
        }
    }
}

#[test]
fn single_point_is_root_only() {
    let cloud = PointCloud::new(vec![Point3::new(1.0, 2.0, 3.0)]);
    let tree = Octree::build(&cloud).unwrap();
    assert_eq!(tree.leaf_count(), 1);
    assert_eq!(tree.mean_leaf_size().unwrap(), tree.root_cube().side);
}

#[test]
fn corner_clusters_balance() {
    let mut pts = Vec::new();
    for c in 0..8 {
        let corner = Point3::new((c & 1) as f64, ((c >> 1) & 1) as f64, ((c >> 2) & 1) as f64);
        for k in 0..10 {
            let t = 0.2 * 2f64.powi(-k);
            pts.push(corner * (1.0 - 2.0 * t) + Point3::new(t, t, t));
        }
    }
    let cloud = PointCloud::new(pts);
    let tree = Octree::build(&cloud).unwrap();
    assert_eq!(balance_violations(&tree), 0);
    assert_eq!(splittable_leaves(&tree, &cloud), 0);
    assert!(tree.depth() >= 4, "depth {}", tree.depth());
}

#[test]
fn near_coincident_pair_terminates() {
    let mut r = common::rng(9);
    let mut pts = common::uniform_box(&mut r, 200, 0.0, 1.0);
    pts.push(Point3::new(0.5, 0.5, 0.5));
    pts.push(Point3::new(0.5 + 1e-7, 0.5, 0.5));
    let cloud = PointCloud::new(pts);
    match Octree::build(&cloud) {
        Ok(tree) => assert_eq!(splittable_leaves(&tree, &cloud), 0),
        Err(e) => assert!(matches!(e, Error::DepthExceeded { .. })),
    }
    let shallow = Octree::build_with(&cloud, &OctreeConfig { max_depth: 4 });
    assert!(matches!(shallow, Err(Error::DepthExceeded { cap: 4 })));
}

#[test]
fn mean_leaf_size_matches_enumeration() {
    let cloud = common::corpus_cloud(1, 10_000);
    let tree = Octree::build(&cloud).unwrap();
    let sizes: Vec<f64> = tree
        .leaves()
        .filter(|l| !l.points.is_empty())
        .map(|l| tree.root_cube().side / 2f64.powi(l.level as i32))
        .collect();
    let mean = sizes.iter().sum::<f64>() / sizes.len() as f64;
    assert!((tree.mean_leaf_size().unwrap() - mean).abs() <= 1e-12 * mean);
}

#[test]
fn uniform_level_examples() {
    assert_eq!(16.0 / 2f64.powi(uniform_level(16.0, 1.0, 2.0) as i32), 2.0);
    assert_eq!(uniform_level(1.0, 1.0, 2.0), 0);
}

fn check_uniformization(cloud: &PointCloud, alpha: f64) {
    let tree = Octree::build(cloud).unwrap();
    let grid = uniformize(&tree, cloud, alpha).unwrap();
    let root = tree.root_cube();
    let l_avg = tree.mean_leaf_size().unwrap();
    let l_p = grid.cell_size();
    assert_eq!(l_p, root.side / 2f64.powi(grid.level() as i32));
    if root.side > alpha * l_avg {
        assert!(l_p > 0.5 * alpha * l_avg && l_p <= alpha * l_avg, "{l_p} vs {l_avg}");
    } else {
        assert_eq!(grid.level(), 0);
    }
    let mut seen = vec![false; cloud.len()];
    let max = (1u64 << grid.level()) - 1;
    for cell in grid.cells() {
        for &i in &cell.points {
            assert!(!seen[i as usize], "point {i} in two cells");
            seen[i as usize] = true;
            let p = cloud.points()[i as usize] - root.min_corner;
            let want = [p.x, p.y, p.z].map(|v| ((v / l_p).floor().max(0.0) as u64).min(max));
            assert_eq!(cell.coords, want);
        }
    }
    assert!(seen.iter().all(|&s| s));
}

#[test]
fn uniformization_contract() {
    for k in 0..10 {
        check_uniformization(&common::corpus_cloud(k, 4000), 2.0);
    }
    check_uniformization(&common::corpus_cloud(2, 4000), 3.5);
    let cloud = common::corpus_cloud(0, 100);
    let tree = Octree::build(&cloud).unwrap();
    assert!(uniformize(&tree, &cloud, 0.5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_clouds_satisfy_tree_invariants(
        pts in prop::collection::vec((-50i32..50, -50i32..50, -50i32..50), 1..300),
        scale in 0.001f64..100.0,
    ) {
        let cloud = PointCloud::new(
            pts.iter().map(|&(x, y, z)| Point3::new(x as f64, y as f64, z as f64) * scale).collect(),
        );
        let tree = Octree::build(&cloud).unwrap();
        prop_assert_eq!(balance_violations(&tree), 0);
        prop_assert_eq!(splittable_leaves(&tree, &cloud), 0);
        check_uniformization(&cloud, 2.0);
    }
}
