//! Acceptance-rejection sampling uniform over a polygon: the realized
//! acceptance rate converges to the polygon-to-bounding-rectangle area
//! ratio, and the samples are uniform on the polygon.
//!
//! ```bash
//! cargo run --example polygon_sampling
//! ```

use polyloc::geometry::{circumscribed_disk_polygon, clip, sample_uniform_counted, Point2};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() {
    // The kind of polygon a POA run produces: an intersection of two
    // anchor polygons.
    let a = circumscribed_disk_polygon(Point2::new(0.0, 0.0), 4.0, 16, 0.2).unwrap();
    let b = circumscribed_disk_polygon(Point2::new(5.0, 0.5), 4.0, 16, 0.9).unwrap();
    let poly = clip(&a, &b).expect("overlap");
    let rect = poly.bounding_rect();
    let ratio = poly.area() / rect.area();
    println!(
        "polygon area {:.3} m^2 inside a {:.1} x {:.1} m rectangle (area ratio {:.4})",
        poly.area(),
        rect.width(),
        rect.height(),
        ratio
    );

    let mut rng = ChaCha12Rng::seed_from_u64(42);
    for n in [1_000usize, 10_000, 100_000] {
        let (samples, draws) = sample_uniform_counted(&poly, n, &mut rng);
        let rate = samples.len() as f64 / draws as f64;
        println!(
            "n = {n:>6}: {draws:>7} raw draws, acceptance rate {rate:.4} (expected {ratio:.4})"
        );
    }

    // Coarse occupancy check: quadrant counts over the bounding rectangle
    // should match the clipped quadrant areas.
    let (samples, _) = sample_uniform_counted(&poly, 100_000, &mut rng);
    let center = rect.center();
    let mut counts = [0usize; 4];
    for p in &samples {
        let q = usize::from(p.x > center.x) + 2 * usize::from(p.y > center.y);
        counts[q] += 1;
    }
    println!("\nquadrant occupancy (observed fraction vs clipped-area fraction):");
    for (q, label) in ["lower-left", "lower-right", "upper-left", "upper-right"]
        .iter()
        .enumerate()
    {
        let quadrant = polyloc::geometry::Rect::new(
            Point2::new(
                if q % 2 == 0 { rect.min.x } else { center.x },
                if q < 2 { rect.min.y } else { center.y },
            ),
            Point2::new(
                if q % 2 == 0 { center.x } else { rect.max.x },
                if q < 2 { center.y } else { rect.max.y },
            ),
        )
        .unwrap()
        .to_polygon()
        .unwrap();
        let expected = clip(&poly, &quadrant).map_or(0.0, |p| p.area()) / poly.area();
        println!(
            "  {label:>11}: {:.4} vs {expected:.4}",
            counts[q] as f64 / samples.len() as f64
        );
    }
}
