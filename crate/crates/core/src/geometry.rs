//! Geometric primitives shared by every pipeline stage.
//!
//! Coordinate convention: origin at the top-left corner of the image, x grows
//! right, y grows down, units are pixels. Quads are stored clockwise (in
//! screen orientation) starting from the top-left corner.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// An axis-aligned box with `x0 <= x1` and `y0 <= y1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        debug_assert!(x0 <= x1 && y0 <= y1, "invalid box ({x0},{y0},{x1},{y1})");
        Self { x0, y0, x1, y1 }
    }

    /// Smallest box containing both corners regardless of their order.
    pub fn from_corners(a: Point, b: Point) -> Self {
        Self {
            x0: a.x.min(b.x),
            y0: a.y.min(b.y),
            x1: a.x.max(b.x),
            y1: a.y.max(b.y),
        }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    /// Intersection box, if the two boxes overlap with positive area or touch.
    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let x0 = self.x0.max(other.x0);
        let y0 = self.y0.max(other.y0);
        let x1 = self.x1.min(other.x1);
        let y1 = self.y1.min(other.y1);
        if x0 <= x1 && y0 <= y1 {
            Some(BBox { x0, y0, x1, y1 })
        } else {
            None
        }
    }

    /// Area of the intersection; zero when disjoint.
    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = (self.x1.min(other.x1) - self.x0.max(other.x0)).max(0.0);
        let h = (self.y1.min(other.y1) - self.y0.max(other.y0)).max(0.0);
        w * h
    }

    /// Smallest box covering both.
    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            x0: self.x0.min(other.x0),
            y0: self.y0.min(other.y0),
            x1: self.x1.max(other.x1),
            y1: self.y1.max(other.y1),
        }
    }

    pub fn contains_point(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    /// Vertical gap between the two boxes' edges; zero when their vertical
    /// extents overlap.
    pub fn vertical_gap(&self, other: &BBox) -> f64 {
        (self.y0.max(other.y0) - self.y1.min(other.y1)).max(0.0)
    }
}

/// Intersection over union of two boxes. Returns 0 when the union has zero
/// area.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// A four-corner region, clockwise from the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quad {
    pub points: [Point; 4],
}

impl Quad {
    pub fn new(points: [Point; 4]) -> Self {
        Self { points }
    }

    /// Axis-aligned quad covering the given box.
    pub fn from_bbox(b: &BBox) -> Self {
        Self {
            points: [
                Point::new(b.x0, b.y0),
                Point::new(b.x1, b.y0),
                Point::new(b.x1, b.y1),
                Point::new(b.x0, b.y1),
            ],
        }
    }

    /// Reorders the corners clockwise (screen orientation) starting at the
    /// corner with the smallest x + y sum.
    pub fn normalized(&self) -> Quad {
        let mut pts = self.points;
        // In screen coordinates (y down) a clockwise traversal has positive
        // shoelace sum.
        let signed: f64 = (0..4)
            .map(|i| {
                let j = (i + 1) % 4;
                pts[i].x * pts[j].y - pts[j].x * pts[i].y
            })
            .sum();
        if signed < 0.0 {
            pts.reverse();
        }
        let start = (0..4)
            .min_by(|&a, &b| {
                let ka = pts[a].x + pts[a].y;
                let kb = pts[b].x + pts[b].y;
                ka.partial_cmp(&kb)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(pts[a].y.partial_cmp(&pts[b].y).unwrap_or(std::cmp::Ordering::Equal))
            })
            .unwrap_or(0);
        let points = [
            pts[start],
            pts[(start + 1) % 4],
            pts[(start + 2) % 4],
            pts[(start + 3) % 4],
        ];
        Quad { points }
    }

    pub fn area(&self) -> f64 {
        shoelace_area(&self.points)
    }

    pub fn perimeter(&self) -> f64 {
        (0..4)
            .map(|i| self.points[i].distance(&self.points[(i + 1) % 4]))
            .sum()
    }

    /// Length of the shortest edge.
    pub fn min_side(&self) -> f64 {
        (0..4)
            .map(|i| self.points[i].distance(&self.points[(i + 1) % 4]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Bounding box of the four corners.
    pub fn bbox(&self) -> BBox {
        let xs = self.points.iter().map(|p| p.x);
        let ys = self.points.iter().map(|p| p.y);
        BBox {
            x0: xs.clone().fold(f64::INFINITY, f64::min),
            y0: ys.clone().fold(f64::INFINITY, f64::min),
            x1: xs.fold(f64::NEG_INFINITY, f64::max),
            y1: ys.fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// An ordered point list with at least three vertices; the last vertex
/// implicitly connects back to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub points: Vec<Point>,
}

impl Polygon {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::DegenerateGeometry(format!(
                "polygon needs at least 3 points, got {}",
                points.len()
            )));
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn shoelace_area(points: &[Point]) -> f64 {
    let n = points.len();
    let mut sum = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        sum += points[i].x * points[j].y - points[j].x * points[i].y;
    }
    sum.abs() / 2.0
}

/// Absolute area of a polygon via the shoelace formula. Collinear input
/// yields 0.
pub fn polygon_area(p: &Polygon) -> f64 {
    shoelace_area(&p.points)
}

/// Offsets each edge of the quad outward by `d = area * unclip_ratio /
/// perimeter` and re-intersects adjacent edges.
///
/// A ratio of 0 returns the quad unchanged. Degenerate quads (zero area or
/// zero perimeter) are rejected.
pub fn expand_quad(q: &Quad, unclip_ratio: f64) -> Result<Quad> {
    if unclip_ratio == 0.0 {
        return Ok(*q);
    }
    let area = q.area();
    let perimeter = q.perimeter();
    if area <= 0.0 || perimeter <= 0.0 {
        return Err(Error::DegenerateGeometry(
            "cannot expand a zero-area quad".into(),
        ));
    }
    let d = area * unclip_ratio / perimeter;
    let q = q.normalized();

    // Shift every edge line outward by d along its normal, then re-intersect
    // adjacent edges. For a clockwise quad in screen coordinates (y down) the
    // outward normal of edge direction (dx,dy) is (dy,-dx).
    let mut lines = [(0.0_f64, 0.0_f64, 0.0_f64); 4]; // a*x + b*y = c
    for i in 0..4 {
        let p = q.points[i];
        let r = q.points[(i + 1) % 4];
        let dx = r.x - p.x;
        let dy = r.y - p.y;
        let len = (dx * dx + dy * dy).sqrt();
        if len == 0.0 {
            return Err(Error::DegenerateGeometry(
                "quad has a zero-length edge".into(),
            ));
        }
        let (nx, ny) = (dy / len, -dx / len);
        // Line through p + d*n with direction (dx,dy): normal form.
        let a = -dy;
        let b = dx;
        let c = a * (p.x + nx * d) + b * (p.y + ny * d);
        lines[i] = (a, b, c);
    }

    let mut out = [Point::new(0.0, 0.0); 4];
    for i in 0..4 {
        // Corner i is the intersection of edge (i-1) and edge i.
        let (a1, b1, c1) = lines[(i + 3) % 4];
        let (a2, b2, c2) = lines[i];
        let det = a1 * b2 - a2 * b1;
        if det.abs() < 1e-12 {
            return Err(Error::DegenerateGeometry(
                "adjacent quad edges are parallel".into(),
            ));
        }
        out[i] = Point::new((c1 * b2 - c2 * b1) / det, (a1 * c2 - a2 * c1) / det);
    }
    Ok(Quad::new(out))
}

/// Row-major 3x3 matrix used for perspective transforms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    /// Applies the projective transform to a point.
    pub fn apply(&self, p: Point) -> Point {
        let m = &self.0;
        let w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
        Point::new(
            (m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w,
            (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w,
        )
    }

    pub fn inverse(&self) -> Result<Mat3> {
        let m = &self.0;
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        if det.abs() < 1e-12 {
            return Err(Error::DegenerateGeometry("singular transform".into()));
        }
        let inv = |r1: usize, c1: usize, r2: usize, c2: usize| {
            m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]
        };
        Ok(Mat3([
            [inv(1, 1, 2, 2) / det, -inv(0, 1, 2, 2) / det, inv(0, 1, 1, 2) / det],
            [-inv(1, 0, 2, 2) / det, inv(0, 0, 2, 2) / det, -inv(0, 0, 1, 2) / det],
            [inv(1, 0, 2, 1) / det, -inv(0, 0, 2, 1) / det, inv(0, 0, 1, 1) / det],
        ]))
    }
}

/// Homography mapping four source points onto four destination points.
///
/// Solved with the direct linear transform (h33 fixed at 1) and Gaussian
/// elimination; a singular system reports `DegenerateGeometry`.
pub fn homography_from_points(src: &[Point; 4], dst: &[Point; 4]) -> Result<Mat3> {
    // Unknowns h11..h32; rows: x' = (h11 x + h12 y + h13) - x'(h31 x + h32 y)
    let mut a = [[0.0_f64; 9]; 8];
    for i in 0..4 {
        let (x, y) = (src[i].x, src[i].y);
        let (u, v) = (dst[i].x, dst[i].y);
        a[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, u];
        a[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y, v];
    }

    // Gaussian elimination with partial pivoting on the 8x9 augmented system.
    for col in 0..8 {
        let pivot = (col..8)
            .max_by(|&r1, &r2| {
                a[r1][col]
                    .abs()
                    .partial_cmp(&a[r2][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if a[pivot][col].abs() < 1e-10 {
            return Err(Error::DegenerateGeometry(
                "homography system is singular".into(),
            ));
        }
        a.swap(col, pivot);
        let diag = a[col][col];
        for item in a[col].iter_mut() {
            *item /= diag;
        }
        for row in 0..8 {
            if row != col {
                let factor = a[row][col];
                if factor != 0.0 {
                    for k in 0..9 {
                        a[row][k] -= factor * a[col][k];
                    }
                }
            }
        }
    }

    let h: Vec<f64> = (0..8).map(|i| a[i][8]).collect();
    Ok(Mat3([
        [h[0], h[1], h[2]],
        [h[3], h[4], h[5]],
        [h[6], h[7], 1.0],
    ]))
}

/// Homography mapping the quad corners onto the axis-aligned rectangle
/// (0,0), (w,0), (w,h), (0,h), in corner order.
pub fn perspective_homography(src: &Quad, dst_w: f64, dst_h: f64) -> Result<Mat3> {
    if dst_w <= 0.0 || dst_h <= 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "destination size must be positive, got {dst_w}x{dst_h}"
        )));
    }
    let dst = [
        Point::new(0.0, 0.0),
        Point::new(dst_w, 0.0),
        Point::new(dst_w, dst_h),
        Point::new(0.0, dst_h),
    ];
    homography_from_points(&src.points, &dst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(side: f64) -> Quad {
        Quad::new([
            Point::new(0.0, 0.0),
            Point::new(side, 0.0),
            Point::new(side, side),
            Point::new(0.0, side),
        ])
    }

    #[test]
    fn area_unit_square() {
        let p = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        assert_eq!(polygon_area(&p), 1.0);
    }

    #[test]
    fn area_triangle_by_hand() {
        // Shoelace by hand: |0*0-2*0 + 2*2-0*0 + 0*0-0*2| / 2 = 4/2 = 2.
        let p = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(0.0, 2.0),
        ])
        .unwrap();
        assert_eq!(polygon_area(&p), 2.0);
    }

    #[test]
    fn area_collinear_is_zero() {
        let p = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(2.0, 2.0),
        ])
        .unwrap();
        assert_eq!(polygon_area(&p), 0.0);
    }

    #[test]
    fn polygon_requires_three_points() {
        assert!(Polygon::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn iou_identity() {
        let b = BBox::new(1.0, 2.0, 5.0, 9.0);
        assert_eq!(iou(&b, &b), 1.0);
    }

    #[test]
    fn iou_disjoint() {
        let a = BBox::new(0.0, 0.0, 1.0, 1.0);
        let b = BBox::new(5.0, 5.0, 6.0, 6.0);
        assert_eq!(iou(&a, &b), 0.0);
    }

    #[test]
    fn iou_one_third_by_hand() {
        // Intersection 1x2 = 2, union 4 + 4 - 2 = 6.
        let a = BBox::new(0.0, 0.0, 2.0, 2.0);
        let b = BBox::new(1.0, 0.0, 3.0, 2.0);
        assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn expand_ratio_zero_is_identity() {
        let q = square(2.0);
        assert_eq!(expand_quad(&q, 0.0).unwrap(), q);
    }

    #[test]
    fn expand_square_side_two() {
        // d = area * ratio / perimeter = 4 * 1.5 / 8 = 0.75 -> side 3.5.
        let out = expand_quad(&square(2.0), 1.5).unwrap();
        let b = out.bbox();
        assert!((b.width() - 3.5).abs() < 1e-9);
        assert!((b.height() - 3.5).abs() < 1e-9);
        assert!((b.x0 + 0.75).abs() < 1e-9);
    }

    #[test]
    fn expand_square_side_four() {
        // d = 16 * 2 / 16 = 2 -> side 8.
        let out = expand_quad(&square(4.0), 2.0).unwrap();
        assert!((out.bbox().width() - 8.0).abs() < 1e-9);
    }

    #[test]
    fn expand_degenerate_rejected() {
        let q = Quad::new([
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(3.0, 0.0),
        ]);
        assert!(matches!(
            expand_quad(&q, 1.0),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn homography_axis_aligned_rect() {
        let q = Quad::new([
            Point::new(10.0, 20.0),
            Point::new(50.0, 20.0),
            Point::new(50.0, 40.0),
            Point::new(10.0, 40.0),
        ]);
        let h = perspective_homography(&q, 40.0, 20.0).unwrap();
        let dst = [
            Point::new(0.0, 0.0),
            Point::new(40.0, 0.0),
            Point::new(40.0, 20.0),
            Point::new(0.0, 20.0),
        ];
        for (src, want) in q.points.iter().zip(dst.iter()) {
            let got = h.apply(*src);
            assert!((got.x - want.x).abs() < 1e-6 && (got.y - want.y).abs() < 1e-6);
        }
    }

    #[test]
    fn homography_rotated_rect_residual() {
        // Rectangle rotated 90 degrees: corners listed so that the first
        // source corner maps to the destination origin.
        let q = Quad::new([
            Point::new(30.0, 10.0),
            Point::new(30.0, 50.0),
            Point::new(10.0, 50.0),
            Point::new(10.0, 10.0),
        ]);
        let h = perspective_homography(&q, 40.0, 20.0).unwrap();
        let dst = [
            Point::new(0.0, 0.0),
            Point::new(40.0, 0.0),
            Point::new(40.0, 20.0),
            Point::new(0.0, 20.0),
        ];
        for (src, want) in q.points.iter().zip(dst.iter()) {
            let got = h.apply(*src);
            assert!(got.distance(want) < 1e-6);
        }
    }

    #[test]
    fn homography_collinear_corners_rejected() {
        let q = Quad::new([
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(0.0, 1.0),
        ]);
        assert!(perspective_homography(&q, 10.0, 10.0).is_err());
    }

    #[test]
    fn normalized_orders_clockwise_from_top_left() {
        let q = Quad::new([
            Point::new(0.0, 2.0),
            Point::new(2.0, 2.0),
            Point::new(2.0, 0.0),
            Point::new(0.0, 0.0),
        ]);
        let n = q.normalized();
        assert_eq!(n.points[0], Point::new(0.0, 0.0));
        assert_eq!(n.points[1], Point::new(2.0, 0.0));
        assert_eq!(n.points[2], Point::new(2.0, 2.0));
        assert_eq!(n.points[3], Point::new(0.0, 2.0));
    }
}
