mod common;

use std::collections::{BTreeMap, BTreeSet};

use pcdenoise_core::clustering::{build_leaf_graph, connected_components, extract_k_largest, k_largest_cells};
use pcdenoise_core::octree::UniformLeafGrid;
use pcdenoise_core::{BoundingCube, Label, Point3, PointCloud};
use proptest::prelude::*;
use rand::Rng;

const LEVEL: u32 = 4;

/// Points at the centers of the given cells of a 16³ grid on the unit cube.
fn cell_points(cells: &[[u64; 3]], per_cell: usize) -> Vec<Point3> {
    let h = 1.0 / (1u64 << LEVEL) as f64;
    let mut pts = Vec::new();
    for c in cells {
        for k in 0..per_cell {
            let off = 0.25 + 0.5 * k as f64 / per_cell as f64;
            pts.push(Point3::new(
                (c[0] as f64 + off) * h,
                (c[1] as f64 + 0.5) * h,
                (c[2] as f64 + 0.5) * h,
            ));
        }
    }
    pts
}

fn grid_of(cells: &[[u64; 3]]) -> UniformLeafGrid {
    let root = BoundingCube { min_corner: Point3::ORIGIN, side: 1.0 };
    UniformLeafGrid::bucket(&cell_points(cells, 1), &root, LEVEL)
}

fn adjacent(a: [u64; 3], b: [u64; 3]) -> bool {
    a != b && (0..3).all(|k| a[k].abs_diff(b[k]) <= 1)
}

fn random_cells(seed: u64, n: usize, extent: u64) -> Vec<[u64; 3]> {
    let mut r = common::rng(seed);
    let set: BTreeSet<[u64; 3]> = (0..n)
        .map(|_| [r.random_range(0..extent), r.random_range(0..extent), r.random_range(0..extent)])
        .collect();
    set.into_iter().collect()
}

/// Union-find over all adjacent pairs; returns component sizes, descending.
fn oracle_sizes(cells: &[[u64; 3]]) -> (Vec<usize>, Vec<usize>) {
    let mut parent: Vec<usize> = (0..cells.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..cells.len() {
        for j in i + 1..cells.len() {
            if adjacent(cells[i], cells[j]) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let roots: Vec<usize> = (0..cells.len()).map(|i| find(&mut parent, i)).collect();
    let mut count: BTreeMap<usize, usize> = BTreeMap::new();
    for &r in &roots {
        *count.entry(r).or_default() += 1;
    }
    let mut sizes: Vec<usize> = count.values().copied().collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    (sizes, roots)
}

#[test]
fn trivial_graphs() {
    let g = build_leaf_graph(&grid_of(&[[3, 3, 3]]));
    assert_eq!((g.vertices.len(), g.edge_count()), (1, 0));
    assert_eq!(build_leaf_graph(&grid_of(&[[3, 3, 3], [4, 3, 3]])).edge_count(), 1);
    assert_eq!(build_leaf_graph(&grid_of(&[[3, 3, 3], [5, 3, 3]])).edge_count(), 0);
    let empty = grid_of(&[]);
    assert_eq!(connected_components(&build_leaf_graph(&empty)).component_count(), 0);
}

#[test]
fn slab_and_isolated_cell() {
    let mut cells: Vec<[u64; 3]> = (0..3).flat_map(|x| (0..3).map(move |y| [x, y, 0])).collect();
    cells.push([12, 12, 12]);
    let lab = connected_components(&build_leaf_graph(&grid_of(&cells)));
    assert_eq!(lab.sizes, vec![9, 1]);
}

#[test]
fn edges_match_all_pairs() {
    for seed in 0..4 {
        let cells = random_cells(seed, 300, 10);
        let g = build_leaf_graph(&grid_of(&cells));
        assert_eq!(g.vertices, cells);
        for (i, nb) in g.adjacency.iter().enumerate() {
            let want: Vec<u32> =
                (0..cells.len()).filter(|&j| adjacent(cells[i], cells[j])).map(|j| j as u32).collect();
            assert_eq!(nb, &want);
        }
    }
}

#[test]
fn components_match_union_find() {
    for seed in 0..6 {
        let cells = random_cells(seed + 10, 150 + 60 * seed as usize, 10);
        let lab = connected_components(&build_leaf_graph(&grid_of(&cells)));
        let (sizes, roots) = oracle_sizes(&cells);
        assert_eq!(lab.sizes, sizes);
        for i in 0..cells.len() {
            for j in 0..cells.len() {
                assert_eq!(lab.component_of[i] == lab.component_of[j], roots[i] == roots[j]);
            }
        }
        // Ties rank by smallest coordinate.
        for w in 0..lab.component_count().saturating_sub(1) {
            if lab.sizes[w] == lab.sizes[w + 1] {
                let min_of = |c: u32| {
                    (0..cells.len()).filter(|&i| lab.component_of[i] == c).map(|i| cells[i]).min().unwrap()
                };
                assert!(min_of(w as u32) < min_of(w as u32 + 1));
            }
        }
    }
}

#[test]
fn extraction_by_size() {
    let big: Vec<[u64; 3]> = (0..5).flat_map(|x| (0..5).flat_map(move |y| (0..4).map(move |z| [x, y, z]))).collect();
    let mut cells = big.clone();
    cells.extend([[10, 10, 10], [11, 10, 10], [12, 10, 10], [14, 14, 14]]);
    let pts = cell_points(&cells, 2);
    let root = BoundingCube { min_corner: Point3::ORIGIN, side: 1.0 };
    let grid = UniformLeafGrid::bucket(&pts, &root, LEVEL);
    let labels: Vec<Label> = (0..pts.len()).map(|i| if i < 200 { Label::Surface } else { Label::Outlier }).collect();
    let cloud = PointCloud::with_labels(pts.clone(), labels).unwrap();
    let lab = connected_components(&build_leaf_graph(&grid));
    assert_eq!(lab.sizes, vec![100, 3, 1]);

    let one = extract_k_largest(&cloud, &grid, &lab, 1).unwrap();
    assert_eq!(one.points(), &pts[..200]);
    assert_eq!(one.count_label(Label::Surface), 200);
    let all = extract_k_largest(&cloud, &grid, &lab, 3).unwrap();
    assert_eq!(all, cloud);
    assert_eq!(extract_k_largest(&cloud, &grid, &lab, 7).unwrap(), cloud);
    assert!(extract_k_largest(&cloud, &grid, &lab, 0).is_err());
    assert_eq!(k_largest_cells(&lab, 9).len(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn k_is_monotone(seed in 0u64..1000, n in 1usize..200) {
        let cells = random_cells(seed, n, 8);
        let pts = cell_points(&cells, 1);
        let root = BoundingCube { min_corner: Point3::ORIGIN, side: 1.0 };
        let grid = UniformLeafGrid::bucket(&pts, &root, LEVEL);
        let lab = connected_components(&build_leaf_graph(&grid));
        let cloud = PointCloud::new(pts);
        let mut prev = 0;
        for k in 1..=lab.component_count() + 1 {
            let got = extract_k_largest(&cloud, &grid, &lab, k).unwrap().len();
            prop_assert!(got >= prev);
            prev = got;
        }
        prop_assert_eq!(prev, cloud.len());
    }
}
