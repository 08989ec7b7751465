//! Planar primitives: points, lines in `(rho, theta)` form, convex polygons,
//! half-plane clipping and line/polygon chords.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

/// Vertices closer than this (km) are merged.
pub const VERTEX_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Self {
            x: r * theta.cos(),
            y: r * theta.sin(),
        }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn rotated(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            x: c * self.x - s * self.y,
            y: s * self.x + c * self.y,
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

/// A line `{p : p . (cos theta, sin theta) = rho}`: the foot of the
/// perpendicular from the origin is `(rho cos theta, rho sin theta)`.
/// `rho >= 0`, `theta` in `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub rho: f64,
    pub theta: f64,
}

impl Line {
    /// Normalizes a signed `rho` and arbitrary `theta` into the canonical
    /// half-space representation.
    pub fn new(rho: f64, theta: f64) -> Self {
        let (rho, theta) = if rho < 0.0 { (-rho, theta + PI) } else { (rho, theta) };
        Self {
            rho,
            theta: theta.rem_euclid(TAU),
        }
    }

    /// Line through `p` with direction angle `dir`.
    pub fn through(p: Point2, dir: f64) -> Self {
        let normal_angle = dir + 0.5 * PI;
        let n = Point2::from_polar(1.0, normal_angle);
        Line::new(p.dot(n), normal_angle)
    }

    pub fn normal(&self) -> Point2 {
        Point2::from_polar(1.0, self.theta)
    }

    pub fn direction(&self) -> Point2 {
        Point2::new(-self.theta.sin(), self.theta.cos())
    }

    pub fn foot(&self) -> Point2 {
        self.normal() * self.rho
    }

    /// Signed distance; negative on the origin's side when `rho > 0`.
    pub fn signed_distance(&self, p: Point2) -> f64 {
        p.dot(self.normal()) - self.rho
    }

    pub fn distance(&self, p: Point2) -> f64 {
        self.signed_distance(p).abs()
    }

    /// Rigid motion: rotate by `angle` about the origin, then translate.
    pub fn transformed(&self, angle: f64, shift: Point2) -> Line {
        let theta = self.theta + angle;
        let n = Point2::from_polar(1.0, theta);
        Line::new(self.rho + shift.dot(n), theta)
    }
}

/// Closed half-plane `{p : p . normal <= offset}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub normal: Point2,
    pub offset: f64,
}

impl HalfPlane {
    /// Points at least as close to `keep` as to `other`.
    pub fn bisector(keep: Point2, other: Point2) -> Self {
        let normal = other - keep;
        let mid = (keep + other) * 0.5;
        Self {
            normal,
            offset: mid.dot(normal),
        }
    }

    pub fn from_line(line: &Line, keep_origin_side: bool) -> Self {
        let n = line.normal();
        if keep_origin_side {
            Self { normal: n, offset: line.rho }
        } else {
            Self {
                normal: n * -1.0,
                offset: -line.rho,
            }
        }
    }

    fn excess(&self, p: Point2) -> f64 {
        p.dot(self.normal) - self.offset
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("polygon needs at least 3 distinct vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon vertices must be finite")]
    NonFinite,
    #[error("polygon is not strictly convex and counter-clockwise")]
    NotConvex,
}

/// Convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let vertices = dedup_ring(vertices);
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if (b - a).cross(c - b) < -1e-12 * (b - a).norm() * (c - b).norm() {
                return Err(GeometryError::NotConvex);
            }
        }
        let poly = Self { vertices };
        if !(poly.area() > 0.0) {
            return Err(GeometryError::NotConvex);
        }
        Ok(poly)
    }

    pub fn rectangle(min: Point2, max: Point2) -> Result<Self, GeometryError> {
        Self::new(vec![
            min,
            Point2::new(max.x, min.y),
            max,
            Point2::new(min.x, max.y),
        ])
    }

    /// Axis-aligned square of half-side `half` centered at `center`.
    pub fn square(center: Point2, half: f64) -> Result<Self, GeometryError> {
        Self::rectangle(
            Point2::new(center.x - half, center.y - half),
            Point2::new(center.x + half, center.y + half),
        )
    }

    /// Regular `n`-gon inscribed in the circle of radius `radius`.
    pub fn regular(n: usize, radius: f64, center: Point2) -> Result<Self, GeometryError> {
        Self::new(
            (0..n)
                .map(|k| center + Point2::from_polar(radius, TAU * k as f64 / n as f64))
                .collect(),
        )
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        0.5 * self.edges().map(|(a, b)| a.cross(b)).sum::<f64>()
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(b)).sum()
    }

    /// Largest vertex distance from `p`.
    pub fn max_distance_from(&self, p: Point2) -> f64 {
        self.vertices.iter().map(|v| v.dist(p)).fold(0.0, f64::max)
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.edges().all(|(a, b)| (b - a).cross(p - a) >= -1e-12)
    }

    pub fn contains_strictly(&self, p: Point2) -> bool {
        self.edges().all(|(a, b)| (b - a).cross(p - a) > 0.0)
    }

    /// Intersection with a closed half-plane; `None` when nothing of
    /// positive area remains.
    pub fn clip(&self, hp: &HalfPlane) -> Option<ConvexPolygon> {
        let n = self.vertices.len();
        let scale = hp.normal.norm() * (1.0 + self.max_distance_from(Point2::ORIGIN));
        let tol = 1e-12 * scale;
        // vertices within rounding distance of the boundary count as on it
        let excess: Vec<f64> = self
            .vertices
            .iter()
            .map(|&v| {
                let e = hp.excess(v);
                if e.abs() <= tol {
                    0.0
                } else {
                    e
                }
            })
            .collect();
        if excess.iter().all(|&e| e <= 0.0) {
            return Some(self.clone());
        }
        if excess.iter().all(|&e| e >= 0.0) {
            return None;
        }
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..n {
            let j = (i + 1) % n;
            let (a, b) = (self.vertices[i], self.vertices[j]);
            let (ea, eb) = (excess[i], excess[j]);
            if ea <= 0.0 {
                out.push(a);
            }
            if (ea < 0.0 && eb > 0.0) || (ea > 0.0 && eb < 0.0) {
                let t = ea / (ea - eb);
                out.push(a + (b - a) * t);
            }
        }
        let out = dedup_ring(out);
        if out.len() < 3 {
            return None;
        }
        let poly = ConvexPolygon { vertices: out };
        if poly.area() > 0.0 {
            Some(poly)
        } else {
            None
        }
    }

    /// Intersection with one side of `boundary`. With `keep_origin_side`
    /// the kept side is `{p : p . n <= rho}`, which contains the origin;
    /// otherwise the opposite closed side.
    pub fn clip_halfplane(&self, boundary: &Line, keep_origin_side: bool) -> Option<ConvexPolygon> {
        self.clip(&HalfPlane::from_line(boundary, keep_origin_side))
    }

    /// Endpoints of `self ∩ line`, ordered along the line's direction.
    pub fn chord_segment(&self, line: &Line) -> Option<(Point2, Point2)> {
        let dir = line.direction();
        let foot = line.foot();
        let mut t_min = f64::INFINITY;
        let mut t_max = f64::NEG_INFINITY;
        let mut record = |p: Point2| {
            let t = (p - foot).dot(dir);
            t_min = t_min.min(t);
            t_max = t_max.max(t);
        };
        for (a, b) in self.edges() {
            let (da, db) = (line.signed_distance(a), line.signed_distance(b));
            if da == 0.0 {
                record(a);
            }
            if (da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0) {
                let t = da / (da - db);
                record(a + (b - a) * t);
            }
        }
        if t_max > t_min {
            Some((foot + dir * t_min, foot + dir * t_max))
        } else {
            None
        }
    }

    /// One-dimensional measure of `self ∩ line` (0 for a miss or tangency).
    pub fn chord_length(&self, line: &Line) -> f64 {
        self.chord_segment(line).map_or(0.0, |(a, b)| a.dist(b))
    }

    /// Applies the same rigid motion as [`Line::transformed`].
    pub fn transformed(&self, angle: f64, shift: Point2) -> ConvexPolygon {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|v| v.rotated(angle) + shift).collect(),
        }
    }
}

fn dedup_ring(mut pts: Vec<Point2>) -> Vec<Point2> {
    pts.dedup_by(|a, b| a.dist(*b) <= VERTEX_TOLERANCE);
    while pts.len() > 1 && pts[0].dist(pts[pts.len() - 1]) <= VERTEX_TOLERANCE {
        pts.pop();
    }
    pts
}

pub fn clip_halfplane(poly: &ConvexPolygon, boundary: &Line, keep_origin_side: bool) -> Option<ConvexPolygon> {
    poly.clip_halfplane(boundary, keep_origin_side)
}

pub fn chord_length(poly: &ConvexPolygon, line: &Line) -> f64 {
    poly.chord_length(line)
}
