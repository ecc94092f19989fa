//! Points, clouds and bounding volumes.

use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

use crate::{Error, Result};

/// A point (or vector) in model units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Point3) -> Point3 {
        Point3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.norm_squared())
    }

    pub fn distance(self, other: Point3) -> f64 {
        (self - other).norm()
    }

    pub fn distance_squared(self, other: Point3) -> f64 {
        (self - other).norm_squared()
    }

    pub fn min(self, other: Point3) -> Point3 {
        Point3::new(
            self.x.min(other.x),
            self.y.min(other.y),
            self.z.min(other.z),
        )
    }

    pub fn max(self, other: Point3) -> Point3 {
        Point3::new(
            self.x.max(other.x),
            self.y.max(other.y),
            self.z.max(other.z),
        )
    }
}

impl Index<usize> for Point3 {
    type Output = f64;

    fn index(&self, axis: usize) -> &f64 {
        match axis {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("axis {axis} out of range"),
        }
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Point3 {
    fn add_assign(&mut self, o: Point3) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Point3 {
    type Output = Point3;
    fn div(self, s: f64) -> Point3 {
        Point3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Ground-truth provenance of a point, used only for evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Label {
    Surface = 0,
    WhiteNoise = 1,
    Outlier = 2,
}

impl Label {
    pub fn code(self) -> i64 {
        self as i64
    }

    pub fn from_code(code: i64) -> Option<Label> {
        match code {
            0 => Some(Label::Surface),
            1 => Some(Label::WhiteNoise),
            2 => Some(Label::Outlier),
            _ => None,
        }
    }
}

/// An ordered set of points with optional per-point labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Point3>,
    labels: Option<Vec<Label>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        Self {
            points,
            labels: None,
        }
    }

    pub fn with_labels(points: Vec<Point3>, labels: Vec<Label>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::LabelMismatch {
                points: points.len(),
                labels: labels.len(),
            });
        }
        Ok(Self {
            points,
            labels: Some(labels),
        })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn points_mut(&mut self) -> &mut [Point3] {
        &mut self.points
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn label(&self, index: usize) -> Option<Label> {
        self.labels.as_ref().map(|l| l[index])
    }

    /// Appends a point. When the cloud is labeled, `label` is required and
    /// recorded; an unlabeled cloud ignores it.
    pub fn push(&mut self, point: Point3, label: Label) {
        self.points.push(point);
        if let Some(labels) = &mut self.labels {
            labels.push(label);
        }
    }

    /// Turns an unlabeled cloud into one where every point carries `label`.
    pub fn labeled_as(mut self, label: Label) -> Self {
        if self.labels.is_none() {
            self.labels = Some(alloc::vec![label; self.points.len()]);
        }
        self
    }

    /// Copies the points at `indices`, in the given order, keeping labels.
    pub fn select(&self, indices: &[u32]) -> PointCloud {
        let points = indices.iter().map(|&i| self.points[i as usize]).collect();
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i as usize]).collect());
        PointCloud { points, labels }
    }

    pub fn into_parts(self) -> (Vec<Point3>, Option<Vec<Label>>) {
        (self.points, self.labels)
    }

    /// Fails on an empty cloud or on the first non-finite point.
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::EmptyInput);
        }
        match self.points.iter().position(|p| !p.is_finite()) {
            Some(index) => Err(Error::InvalidPoint { index }),
            None => Ok(()),
        }
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.labels
            .as_ref()
            .map_or(0, |l| l.iter().filter(|&&x| x == label).count())
    }
}

/// Tight axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn from_points(points: &[Point3]) -> Result<Aabb> {
        let (first, rest) = points.split_first().ok_or(Error::EmptyInput)?;
        if !first.is_finite() {
            return Err(Error::InvalidPoint { index: 0 });
        }
        let mut bb = Aabb {
            min: *first,
            max: *first,
        };
        for (i, p) in rest.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidPoint { index: i + 1 });
            }
            bb.min = bb.min.min(*p);
            bb.max = bb.max.max(*p);
        }
        Ok(bb)
    }

    pub fn extent(&self) -> Point3 {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn center(&self) -> Point3 {
        (self.min + self.max) * 0.5
    }

    pub fn contains(&self, p: Point3) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }
}

/// Axis-aligned cube, the root cell of an octree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingCube {
    pub min_corner: Point3,
    pub side: f64,
}

impl BoundingCube {
    pub fn center(&self) -> Point3 {
        self.min_corner + Point3::new(1.0, 1.0, 1.0) * (0.5 * self.side)
    }

    pub fn max_corner(&self) -> Point3 {
        self.min_corner + Point3::new(self.side, self.side, self.side)
    }

    pub fn contains(&self, p: Point3) -> bool {
        let hi = self.max_corner();
        (0..3).all(|a| p[a] >= self.min_corner[a] && p[a] <= hi[a])
    }
}

/// Minimum bounding cube: side is the largest axis extent and the cube is
/// centered on the tight box along every axis.
///
/// A cloud whose points all coincide gets a unit cube around them.
pub fn compute_bounding_cube(cloud: &PointCloud) -> Result<BoundingCube> {
    bounding_cube_of(cloud.points())
}

pub fn bounding_cube_of(points: &[Point3]) -> Result<BoundingCube> {
    let bb = Aabb::from_points(points)?;
    let ext = bb.extent();
    let mut side = ext.x.max(ext.y).max(ext.z);
    if side <= 0.0 {
        side = 1.0;
    }
    let c = bb.center();
    let half = 0.5 * side;
    let min_corner = Point3::new(
        (c.x - half).min(bb.min.x),
        (c.y - half).min(bb.min.y),
        (c.z - half).min(bb.min.z),
    );
    // Rounding in the centering step can leave the far face a few ulps short.
    while (0..3).any(|a| min_corner[a] + side < bb.max[a]) {
        side = side.next_up();
    }
    Ok(BoundingCube { min_corner, side })
}

/// Length of the diagonal of the tight axis-aligned bounding box.
pub fn diagonal_length(cloud: &PointCloud) -> Result<f64> {
    Ok(Aabb::from_points(cloud.points())?.diagonal())
}
