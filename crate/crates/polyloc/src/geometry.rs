//! Convex-polygon primitives.
//!
//! Polygons are stored as counter-clockwise vertex lists together with the
//! equivalent halfspace view (`normal · x <= offset`, outward unit normals).
//! All predicates use tolerances relative to the polygon diameter with an
//! absolute floor of [`ABS_TOL`], so scenes from 1 m to 100 m behave the same.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance floor in meters.
pub const ABS_TOL: f64 = 1e-12;

/// Relative tolerance against the polygon diameter.
pub const REL_TOL: f64 = 1e-9;

/// A position in the plane, in meters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Cross product of `a - o` and `b - o`. Positive when `o -> a -> b` turns left.
pub fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    let u = a - o;
    let v = b - o;
    u.x * v.y - u.y * v.x
}

/// Closed halfspace `normal · x <= offset` with outward unit normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Halfspace {
    normal: Point2,
    offset: f64,
}

impl Halfspace {
    /// Normalizes `normal` to unit length; rejects near-zero normals.
    pub fn new(normal: Point2, offset: f64) -> Result<Self> {
        let len = normal.norm();
        if !len.is_finite() || len < ABS_TOL {
            return Err(Error::Geometry(format!(
                "halfspace normal too short: |n| = {len}"
            )));
        }
        Ok(Self {
            normal: normal * (1.0 / len),
            offset: offset / len,
        })
    }

    pub fn normal(&self) -> Point2 {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `normal · p - offset`: negative inside, positive outside.
    pub fn signed_distance(&self, p: Point2) -> f64 {
        self.normal.dot(p) - self.offset
    }

    /// The same halfspace with its boundary moved `distance` along the
    /// outward normal.
    pub fn translated_outward(&self, distance: f64) -> Halfspace {
        Halfspace {
            normal: self.normal,
            offset: self.offset + distance,
        }
    }
}

/// Intersection point of two halfspace boundary lines, `None` when the
/// normals are parallel within tolerance.
fn boundary_intersection(a: &Halfspace, b: &Halfspace) -> Option<Point2> {
    let det = a.normal.x * b.normal.y - a.normal.y * b.normal.x;
    if det.abs() < ABS_TOL {
        return None;
    }
    let x = (a.offset * b.normal.y - b.offset * a.normal.y) / det;
    let y = (a.normal.x * b.offset - b.normal.x * a.offset) / det;
    Some(Point2::new(x, y))
}

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn new(min: Point2, max: Point2) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min.x <= max.x && min.y <= max.y) {
            return Err(Error::InvalidArgument(format!(
                "invalid rectangle corners: min {min:?}, max {max:?}"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn center(&self) -> Point2 {
        Point2::new(
            0.5 * (self.min.x + self.max.x),
            0.5 * (self.min.y + self.max.y),
        )
    }

    /// The rectangle as a counter-clockwise polygon. Errors on zero extent.
    pub fn to_polygon(&self) -> Result<ConvexPolygon> {
        ConvexPolygon::new(vec![
            self.min,
            Point2::new(self.max.x, self.min.y),
            self.max,
            Point2::new(self.min.x, self.max.y),
        ])
    }
}

/// Convex polygon with counter-clockwise vertices and the derived
/// halfspace view.
#[derive(Clone, Debug)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
    halfspaces: Vec<Halfspace>,
    scale: f64,
}

impl ConvexPolygon {
    /// Builds a polygon from counter-clockwise vertices, validating the
    /// convexity and orientation invariants.
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        let scale = vertex_span(&vertices);
        Self::with_scale(vertices, scale)
    }

    fn with_scale(vertices: Vec<Point2>, scale: f64) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon(format!(
                "{} vertices, need at least 3",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite vertex".into()));
        }
        let n = vertices.len();
        let cross_tol = REL_TOL * scale * scale;
        for m in 0..n {
            let c = cross(vertices[m], vertices[(m + 1) % n], vertices[(m + 2) % n]);
            if c < -cross_tol {
                return Err(Error::InvalidPolygon(format!(
                    "reflex corner at vertex {m} (cross = {c:.3e})"
                )));
            }
        }
        if shoelace_area(&vertices) <= 0.0 {
            return Err(Error::InvalidPolygon(
                "vertices not counter-clockwise".into(),
            ));
        }
        let halfspaces = edge_halfspaces(&vertices)?;
        Ok(Self {
            vertices,
            halfspaces,
            scale,
        })
    }

    /// Normalizes raw clipper output: merges near-duplicate and collinear
    /// vertices, then rejects anything below the degeneracy floor.
    fn from_loose_vertices(mut vertices: Vec<Point2>, scale: f64) -> Option<Self> {
        let merge_tol = (REL_TOL * scale).max(ABS_TOL);
        let cross_tol = (REL_TOL * scale * scale).max(ABS_TOL);
        loop {
            let before = vertices.len();
            dedup_cyclic(&mut vertices, merge_tol);
            drop_collinear(&mut vertices, cross_tol);
            if vertices.len() == before || vertices.len() < 3 {
                break;
            }
        }
        if vertices.len() < 3 {
            return None;
        }
        if shoelace_area(&vertices) < (ABS_TOL * scale * scale).max(ABS_TOL) {
            return None;
        }
        Self::with_scale(vertices, scale).ok()
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    /// Diameter proxy (bounding-box diagonal) used for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Shoelace area in square meters.
    pub fn area(&self) -> f64 {
        shoelace_area(&self.vertices)
    }

    /// Boundary-inclusive containment: every halfspace satisfied within a
    /// `REL_TOL * scale` slack.
    pub fn contains(&self, p: Point2) -> bool {
        let tol = (REL_TOL * self.scale).max(ABS_TOL);
        self.halfspaces.iter().all(|h| h.signed_distance(p) <= tol)
    }

    /// Re-runs the construction invariants (orientation, convexity,
    /// view agreement); handy for property tests over derived polygons.
    pub fn validate(&self) -> Result<()> {
        Self::with_scale(self.vertices.clone(), self.scale).map(|_| ())
    }

    /// Tightest axis-aligned rectangle enclosing the polygon.
    pub fn bounding_rect(&self) -> Rect {
        let mut min = self.vertices[0];
        let mut max = self.vertices[0];
        for v in &self.vertices[1..] {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
        Rect { min, max }
    }
}

fn vertex_span(vertices: &[Point2]) -> f64 {
    let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in vertices {
        min.x = min.x.min(v.x);
        min.y = min.y.min(v.y);
        max.x = max.x.max(v.x);
        max.y = max.y.max(v.y);
    }
    let span = (max - min).norm();
    if span.is_finite() && span > 0.0 {
        span
    } else {
        1.0
    }
}

fn shoelace_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    let mut twice = 0.0;
    for m in 0..n {
        let a = vertices[m];
        let b = vertices[(m + 1) % n];
        twice += a.x * b.y - a.y * b.x;
    }
    0.5 * twice
}

/// Outward halfspace per edge: for counter-clockwise vertices the edge
/// direction rotated clockwise points out of the polygon.
fn edge_halfspaces(vertices: &[Point2]) -> Result<Vec<Halfspace>> {
    let n = vertices.len();
    let mut out = Vec::with_capacity(n);
    for m in 0..n {
        let a = vertices[m];
        let b = vertices[(m + 1) % n];
        let edge = b - a;
        let normal = Point2::new(edge.y, -edge.x);
        let hs = Halfspace::new(normal, 0.0)?;
        out.push(Halfspace {
            normal: hs.normal,
            offset: hs.normal.dot(a),
        });
    }
    Ok(out)
}

fn dedup_cyclic(vertices: &mut Vec<Point2>, tol: f64) {
    if vertices.len() < 2 {
        return;
    }
    let mut out: Vec<Point2> = Vec::with_capacity(vertices.len());
    for &v in vertices.iter() {
        if out.last().is_none_or(|&last| last.distance(v) > tol) {
            out.push(v);
        }
    }
    while out.len() >= 2 && out[0].distance(*out.last().unwrap()) <= tol {
        out.pop();
    }
    *vertices = out;
}

fn drop_collinear(vertices: &mut Vec<Point2>, cross_tol: f64) {
    loop {
        let n = vertices.len();
        if n < 4 {
            return;
        }
        let mut removed = false;
        let mut m = 0;
        while m < vertices.len() && vertices.len() > 3 {
            let n = vertices.len();
            let prev = vertices[(m + n - 1) % n];
            let here = vertices[m];
            let next = vertices[(m + 1) % n];
            if cross(prev, here, next).abs() <= cross_tol {
                vertices.remove(m);
                removed = true;
            } else {
                m += 1;
            }
        }
        if !removed {
            return;
        }
    }
}

/// Regular polygon with `n_edges` edges circumscribing the disk of `radius`
/// around `center`: circumradius `radius / cos(pi / n_edges)`, apothem
/// exactly `radius`, vertices at `angle_offset + m * 2pi / n_edges`.
pub fn circumscribed_disk_polygon(
    center: Point2,
    radius: f64,
    n_edges: usize,
    angle_offset: f64,
) -> Result<ConvexPolygon> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "disk radius must be positive, got {radius}"
        )));
    }
    if n_edges < 3 {
        return Err(Error::InvalidArgument(format!(
            "polygon needs at least 3 edges, got {n_edges}"
        )));
    }
    let spacing = std::f64::consts::TAU / n_edges as f64;
    let circumradius = radius / (0.5 * spacing).cos();
    let vertices = (0..n_edges)
        .map(|m| {
            let angle = angle_offset + m as f64 * spacing;
            center + Point2::new(angle.cos(), angle.sin()) * circumradius
        })
        .collect();
    ConvexPolygon::new(vertices)
}

/// Sutherland-Hodgman intersection of two convex polygons. `None` marks an
/// empty (or degenerate, below-tolerance) intersection.
pub fn clip(subject: &ConvexPolygon, clipper: &ConvexPolygon) -> Option<ConvexPolygon> {
    let scale = subject.scale.max(clipper.scale);
    let tol = (REL_TOL * scale).max(ABS_TOL);
    let mut points = subject.vertices.clone();
    for hs in &clipper.halfspaces {
        if points.is_empty() {
            return None;
        }
        let mut output = Vec::with_capacity(points.len() + 1);
        let mut prev = *points.last().unwrap();
        let mut prev_dist = hs.signed_distance(prev);
        for &p in &points {
            let dist = hs.signed_distance(p);
            let inside = dist <= tol;
            let prev_inside = prev_dist <= tol;
            if inside != prev_inside {
                // Interpolate to the boundary crossing.
                let t = prev_dist / (prev_dist - dist);
                output.push(prev + (p - prev) * t);
            }
            if inside {
                output.push(p);
            }
            prev = p;
            prev_dist = dist;
        }
        points = output;
    }
    ConvexPolygon::from_loose_vertices(points, scale)
}

/// Left fold of [`clip`] over a non-empty list. An empty intersection
/// anywhere propagates to `None`.
///
/// Panics if `polys` is empty.
pub fn intersect_all(polys: &[ConvexPolygon]) -> Option<ConvexPolygon> {
    assert!(
        !polys.is_empty(),
        "intersect_all requires at least one polygon"
    );
    let mut acc = polys[0].clone();
    for p in &polys[1..] {
        acc = clip(&acc, p)?;
    }
    Some(acc)
}

/// Moves every halfspace boundary `distance` outward along its normal and
/// rebuilds the vertices as intersections of adjacent shifted hyperplanes.
/// The result contains the Minkowski sum of the polygon and the disk of
/// `distance`.
pub fn offset_outward(poly: &ConvexPolygon, distance: f64) -> Result<ConvexPolygon> {
    if !(distance.is_finite() && distance >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "offset distance must be non-negative, got {distance}"
        )));
    }
    let shifted: Vec<Halfspace> = poly
        .halfspaces
        .iter()
        .map(|h| h.translated_outward(distance))
        .collect();
    let n = shifted.len();
    let mut vertices = Vec::with_capacity(n);
    for m in 0..n {
        // Vertex m sits on edges m-1 and m.
        let prev = &shifted[(m + n - 1) % n];
        let here = &shifted[m];
        let v = boundary_intersection(prev, here).ok_or_else(|| {
            Error::Geometry(format!("adjacent hyperplanes parallel at vertex {m}"))
        })?;
        vertices.push(v);
    }
    ConvexPolygon::new(vertices)
}

/// Draws `n` points i.i.d. uniform over the polygon by acceptance-rejection
/// from the bounding rectangle.
pub fn sample_uniform<R: Rng + ?Sized>(poly: &ConvexPolygon, n: usize, rng: &mut R) -> Vec<Point2> {
    sample_uniform_counted(poly, n, rng).0
}

/// Same as [`sample_uniform`] but also reports the total number of raw
/// draws, so the realized acceptance rate can be checked against the
/// polygon-to-rectangle area ratio.
pub fn sample_uniform_counted<R: Rng + ?Sized>(
    poly: &ConvexPolygon,
    n: usize,
    rng: &mut R,
) -> (Vec<Point2>, u64) {
    let rect = poly.bounding_rect();
    let mut points = Vec::with_capacity(n);
    let mut draws = 0u64;
    while points.len() < n {
        let p = Point2::new(
            rng.random_range(rect.min.x..=rect.max.x),
            rng.random_range(rect.min.y..=rect.max.y),
        );
        draws += 1;
        if poly.contains(p) {
            points.push(p);
        }
    }
    (points, draws)
}
