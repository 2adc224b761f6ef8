//! Tour of the convex-polygon toolkit: disk-circumscribing polygons,
//! Sutherland-Hodgman clipping, and outward halfspace offsets.
//!
//! ```bash
//! cargo run --example polygon_toolkit
//! ```

use polyloc::geometry::{circumscribed_disk_polygon, clip, offset_outward, Point2};

fn main() {
    // A regular 16-gon circumscribing the disk of radius 5 around an
    // anchor: the disk is fully inside, the apothem equals the radius.
    let a = circumscribed_disk_polygon(Point2::new(0.0, 0.0), 5.0, 16, 0.3).unwrap();
    let b = circumscribed_disk_polygon(Point2::new(6.0, 1.0), 5.0, 16, 1.1).unwrap();
    println!(
        "anchor polygon A: {} vertices, area {:.3} m^2",
        a.vertices().len(),
        a.area()
    );
    println!(
        "anchor polygon B: {} vertices, area {:.3} m^2",
        b.vertices().len(),
        b.area()
    );
    println!(
        "disk area for comparison: {:.3} m^2 (the 16-gon overshoots by {:.2}%)",
        std::f64::consts::PI * 25.0,
        100.0 * (a.area() / (std::f64::consts::PI * 25.0) - 1.0)
    );

    // Intersection: the lens where both range constraints hold.
    let lens = clip(&a, &b).expect("the disks overlap");
    println!(
        "\nA ∩ B: {} vertices, area {:.3} m^2 ({:.1}% of A)",
        lens.vertices().len(),
        lens.area(),
        100.0 * lens.area() / a.area()
    );
    for v in lens.vertices().iter().take(4) {
        println!("  vertex ({:+.3}, {:+.3})", v.x, v.y);
    }
    println!("  ...");

    // Outward offset: every edge moves 1.5 m along its normal; this is how
    // a neighbor's polygon grows by the measured range.
    let grown = offset_outward(&lens, 1.5).unwrap();
    println!(
        "\nlens offset by 1.5 m: area {:.3} -> {:.3} m^2, vertex count preserved ({})",
        lens.area(),
        grown.area(),
        grown.vertices().len()
    );

    // Disjoint polygons clip to the empty marker.
    let far = circumscribed_disk_polygon(Point2::new(100.0, 0.0), 2.0, 8, 0.0).unwrap();
    println!(
        "\nA ∩ far-away octagon is empty: {}",
        clip(&a, &far).is_none()
    );
}
