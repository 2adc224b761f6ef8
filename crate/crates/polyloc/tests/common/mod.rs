//! Shared helpers for the integration tests: an intersection-area oracle
//! that never touches the Sutherland-Hodgman path, random convex polygon
//! generation, and a convex hull for membership checks.

// Each test target compiles its own copy; not all of them use every helper.
#![allow(dead_code)]

use polyloc::geometry::{ConvexPolygon, Point2};
use rand::Rng;

/// Outward halfspaces `(normal, offset)` of a counter-clockwise polygon,
/// derived here independently of the library's representation.
fn own_halfspaces(vertices: &[Point2]) -> Vec<(Point2, f64)> {
    let n = vertices.len();
    (0..n)
        .map(|m| {
            let a = vertices[m];
            let b = vertices[(m + 1) % n];
            let edge = b - a;
            let len = edge.norm();
            let normal = Point2::new(edge.y / len, -edge.x / len);
            (normal, normal.dot(a))
        })
        .collect()
}

fn own_shoelace(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    let mut twice = 0.0;
    for m in 0..n {
        let a = vertices[m];
        let b = vertices[(m + 1) % n];
        twice += a.x * b.y - a.y * b.x;
    }
    0.5 * twice
}

/// Andrew's monotone chain, counter-clockwise, strict turns only.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.distance(*b) < 1e-12);
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: Point2, a: Point2, b: Point2| (a - o).x * (b - o).y - (a - o).y * (b - o).x;
    let mut lower: Vec<Point2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Whether `p` lies in the convex hull `hull` (counter-clockwise), within
/// `tol`.
pub fn hull_contains(hull: &[Point2], p: Point2, tol: f64) -> bool {
    let n = hull.len();
    (0..n).all(|m| {
        let a = hull[m];
        let b = hull[(m + 1) % n];
        (b - a).x * (p - a).y - (b - a).y * (p - a).x >= -tol
    })
}

/// Brute-force intersection area by halfspace enumeration: collect both
/// polygons' halfspaces, intersect every boundary pair, keep the points
/// satisfying all halfspaces, and take the hull's shoelace area.
pub fn oracle_intersection_area(a: &ConvexPolygon, b: &ConvexPolygon) -> f64 {
    let scale = a.scale().max(b.scale());
    let tol = 1e-9 * scale;
    let halfspaces: Vec<(Point2, f64)> = own_halfspaces(a.vertices())
        .into_iter()
        .chain(own_halfspaces(b.vertices()))
        .collect();
    let mut candidates: Vec<Point2> = Vec::new();
    for i in 0..halfspaces.len() {
        for j in (i + 1)..halfspaces.len() {
            let (n1, c1) = halfspaces[i];
            let (n2, c2) = halfspaces[j];
            let det = n1.x * n2.y - n1.y * n2.x;
            if det.abs() < 1e-12 {
                continue;
            }
            let p = Point2::new((c1 * n2.y - c2 * n1.y) / det, (n1.x * c2 - n2.x * c1) / det);
            if halfspaces.iter().all(|(n, c)| n.dot(p) - c <= tol) {
                candidates.push(p);
            }
        }
    }
    let hull = convex_hull(&candidates);
    if hull.len() < 3 {
        return 0.0;
    }
    own_shoelace(&hull)
}

/// Random convex polygon: vertices on a random rotated ellipse, so any
/// vertex count from 3 to `max_edges` is in strictly convex position.
pub fn random_convex_polygon<R: Rng + ?Sized>(rng: &mut R, max_edges: usize) -> ConvexPolygon {
    loop {
        let k = rng.random_range(3..=max_edges);
        let mut angles: Vec<f64> = (0..k)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        angles.sort_by(f64::total_cmp);
        // Keep adjacent vertices apart to avoid micro edges.
        let mut ok = angles.windows(2).all(|w| w[1] - w[0] > 0.05);
        ok &= angles[0] + std::f64::consts::TAU - angles[k - 1] > 0.05;
        if !ok {
            continue;
        }
        let center = Point2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let (sa, sb) = (rng.random_range(0.5..4.0), rng.random_range(0.5..4.0));
        let rot = rng.random_range(0.0..std::f64::consts::TAU);
        let (cr, sr) = (rot.cos(), rot.sin());
        let vertices: Vec<Point2> = angles
            .iter()
            .map(|t| {
                let (ex, ey) = (sa * t.cos(), sb * t.sin());
                center + Point2::new(cr * ex - sr * ey, sr * ex + cr * ey)
            })
            .collect();
        if let Ok(poly) = ConvexPolygon::new(vertices) {
            return poly;
        }
    }
}

/// Upper critical value of the chi-square distribution with `dof` degrees
/// of freedom at significance `alpha`.
pub fn chi_square_critical(dof: f64, alpha: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    ChiSquared::new(dof).unwrap().inverse_cdf(1.0 - alpha)
}

/// Chi-square statistic over a `grid x grid` partition of the bounding
/// rectangle restricted to the polygon (expected counts from clipped-cell
/// areas, sparse cells pooled), with the 1%-level critical value.
pub fn chi_square_grid_statistic(
    poly: &ConvexPolygon,
    samples: &[Point2],
    grid: usize,
) -> (f64, f64) {
    use polyloc::geometry::{clip, Rect};
    let rect = poly.bounding_rect();
    let (w, h) = (rect.width() / grid as f64, rect.height() / grid as f64);
    let n = samples.len() as f64;

    let mut expected = vec![0.0; grid * grid];
    let mut observed = vec![0usize; grid * grid];
    for gy in 0..grid {
        for gx in 0..grid {
            let cell = Rect::new(
                Point2::new(rect.min.x + gx as f64 * w, rect.min.y + gy as f64 * h),
                Point2::new(
                    rect.min.x + (gx + 1) as f64 * w,
                    rect.min.y + (gy + 1) as f64 * h,
                ),
            )
            .unwrap()
            .to_polygon()
            .unwrap();
            let overlap = clip(poly, &cell).map_or(0.0, |p| p.area());
            expected[gy * grid + gx] = n * overlap / poly.area();
        }
    }
    for s in samples {
        let gx = (((s.x - rect.min.x) / w) as usize).min(grid - 1);
        let gy = (((s.y - rect.min.y) / h) as usize).min(grid - 1);
        observed[gy * grid + gx] += 1;
    }

    // Pool sparse cells (expected < 5) into one group.
    let mut stat = 0.0;
    let mut groups = 0usize;
    let (mut pooled_exp, mut pooled_obs) = (0.0, 0.0);
    for (e, o) in expected.iter().zip(&observed) {
        if *e >= 5.0 {
            stat += (*o as f64 - e).powi(2) / e;
            groups += 1;
        } else {
            pooled_exp += e;
            pooled_obs += *o as f64;
        }
    }
    if pooled_exp >= 5.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        groups += 1;
    }
    let dof = (groups.max(2) - 1) as f64;
    (stat, chi_square_critical(dof, 0.01))
}
