//! Curved seal-text rectification.
//!
//! A curved text band arrives as a polygon whose first half traces one long
//! edge and whose second half traces the other edge back. The band is
//! resampled into control-point pairs and mapped, piecewise linearly, onto a
//! straight strip.

use image::RgbImage;

use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon, Quad};
use crate::ocr::crop::crop_line;

/// Number of resampled control pairs along the band.
const RESAMPLE_POINTS: usize = 32;

/// Resamples a polyline at `n` positions equally spaced by arc length.
fn resample(polyline: &[Point], n: usize) -> Vec<Point> {
    let mut cumulative = vec![0.0f64];
    for pair in polyline.windows(2) {
        cumulative.push(cumulative.last().unwrap() + pair[0].distance(&pair[1]));
    }
    let total = *cumulative.last().unwrap();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let target = if n == 1 {
            0.0
        } else {
            total * i as f64 / (n - 1) as f64
        };
        // Find the segment containing the target arc length.
        let mut seg = 0usize;
        while seg + 1 < cumulative.len() - 1 && cumulative[seg + 1] < target {
            seg += 1;
        }
        let seg_len = cumulative[seg + 1] - cumulative[seg];
        let u = if seg_len > 0.0 {
            (target - cumulative[seg]) / seg_len
        } else {
            0.0
        };
        let a = polyline[seg];
        let b = polyline[seg + 1];
        out.push(Point::new(a.x + (b.x - a.x) * u, a.y + (b.y - a.y) * u));
    }
    out
}

fn polyline_length(polyline: &[Point]) -> f64 {
    polyline.windows(2).map(|p| p[0].distance(&p[1])).sum()
}

/// Evaluates the piecewise-linear curve through `points` at parameter
/// t in [0, 1].
fn eval_curve(points: &[Point], t: f64) -> Point {
    let segments = points.len() - 1;
    let scaled = t.clamp(0.0, 1.0) * segments as f64;
    let seg = (scaled.floor() as usize).min(segments - 1);
    let u = scaled - seg as f64;
    let a = points[seg];
    let b = points[seg + 1];
    Point::new(a.x + (b.x - a.x) * u, a.y + (b.y - a.y) * u)
}

/// Straightens a curved text band into a line image.
///
/// Four-point polygons are plain quads and route to [`crop_line`]. Larger
/// polygons must have an even point count of at least six: the first half is
/// one band edge, the second half the other edge reversed. The output width
/// is the mean edge arc length, the height the mean edge separation.
pub fn rectify_seal_text(poly: &Polygon, image: &RgbImage) -> Result<RgbImage> {
    let n = poly.len();
    if n == 4 {
        let quad = Quad::new([poly.points[0], poly.points[1], poly.points[2], poly.points[3]]);
        return crop_line(image, &quad);
    }
    if n < 6 || n % 2 != 0 {
        return Err(Error::DegenerateGeometry(format!(
            "seal band polygon needs an even point count >= 6, got {n}"
        )));
    }

    let top: Vec<Point> = poly.points[..n / 2].to_vec();
    let mut bottom: Vec<Point> = poly.points[n / 2..].to_vec();
    bottom.reverse();

    let top_samples = resample(&top, RESAMPLE_POINTS);
    let bottom_samples = resample(&bottom, RESAMPLE_POINTS);

    let mean_arc = (polyline_length(&top) + polyline_length(&bottom)) / 2.0;
    let mean_height = top_samples
        .iter()
        .zip(&bottom_samples)
        .map(|(t, b)| t.distance(b))
        .sum::<f64>()
        / RESAMPLE_POINTS as f64;
    if mean_arc <= 0.0 || mean_height <= 0.0 {
        return Err(Error::DegenerateGeometry(
            "seal band has zero extent".into(),
        ));
    }
    let width = mean_arc.round().max(1.0) as u32;
    let height = mean_height.round().max(1.0) as u32;

    let mut out = RgbImage::new(width, height);
    for y in 0..height {
        let v = (y as f64 + 0.5) / height as f64;
        for x in 0..width {
            let t = (x as f64 + 0.5) / width as f64;
            let a = eval_curve(&top_samples, t);
            let b = eval_curve(&bottom_samples, t);
            let src = Point::new(a.x + (b.x - a.x) * v, a.y + (b.y - a.y) * v);
            out.put_pixel(x, y, crate::ocr::crop::sample_bilinear(image, src.x - 0.5, src.y - 0.5));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: u32, h: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| {
            image::Rgb([(x * 3 % 256) as u8, (y * 5 % 256) as u8, ((x + y) % 256) as u8])
        })
    }

    #[test]
    fn straight_band_equals_plain_crop() {
        let img = gradient(64, 48);
        // Rectangle (8,10)-(40,22) given as a 6-point degenerate "curve".
        let poly = Polygon::new(vec![
            Point::new(8.0, 10.0),
            Point::new(24.0, 10.0),
            Point::new(40.0, 10.0),
            Point::new(40.0, 22.0),
            Point::new(24.0, 22.0),
            Point::new(8.0, 22.0),
        ])
        .unwrap();
        let out = rectify_seal_text(&poly, &img).unwrap();
        assert_eq!((out.width(), out.height()), (32, 12));
        for y in 0..12 {
            for x in 0..32 {
                assert_eq!(out.get_pixel(x, y), img.get_pixel(x + 8, y + 10));
            }
        }
    }

    #[test]
    fn four_point_polygon_routes_to_crop() {
        let img = gradient(32, 32);
        let poly = Polygon::new(vec![
            Point::new(2.0, 2.0),
            Point::new(22.0, 2.0),
            Point::new(22.0, 10.0),
            Point::new(2.0, 10.0),
        ])
        .unwrap();
        let out = rectify_seal_text(&poly, &img).unwrap();
        assert_eq!((out.width(), out.height()), (20, 8));
        assert_eq!(out.get_pixel(0, 0), img.get_pixel(2, 2));
    }

    #[test]
    fn half_annulus_width_close_to_mean_arc() {
        let img = gradient(220, 120);
        // Half annulus centered at (110, 110), radii 60 and 90.
        let (cx, cy) = (110.0f64, 110.0f64);
        let (r_outer, r_inner) = (90.0f64, 60.0f64);
        let steps = 24usize;
        let mut pts = Vec::new();
        for i in 0..=steps {
            let angle = std::f64::consts::PI * (1.0 - i as f64 / steps as f64);
            pts.push(Point::new(cx + r_outer * angle.cos(), cy - r_outer * angle.sin()));
        }
        for i in (0..=steps).rev() {
            let angle = std::f64::consts::PI * (1.0 - i as f64 / steps as f64);
            pts.push(Point::new(cx + r_inner * angle.cos(), cy - r_inner * angle.sin()));
        }
        let poly = Polygon::new(pts).unwrap();
        let out = rectify_seal_text(&poly, &img).unwrap();
        let mean_arc = std::f64::consts::PI * (r_outer + r_inner) / 2.0;
        let rel = (out.width() as f64 - mean_arc).abs() / mean_arc;
        assert!(rel < 0.05, "width {} vs mean arc {mean_arc}", out.width());
        let expected_height = r_outer - r_inner;
        assert!((out.height() as f64 - expected_height).abs() <= 2.0);
    }

    #[test]
    fn odd_point_count_rejected() {
        let poly = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(20.0, 0.0),
            Point::new(20.0, 5.0),
            Point::new(0.0, 5.0),
        ])
        .unwrap();
        assert!(matches!(
            rectify_seal_text(&poly, &gradient(32, 32)),
            Err(Error::DegenerateGeometry(_))
        ));
    }
}
