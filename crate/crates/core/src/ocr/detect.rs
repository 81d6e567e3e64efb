//! Text-detection map postprocessing.
//!
//! Turns the probability map emitted by a detection model into text quads:
//! binarize, label 4-connected components, fit a minimum-area rectangle per
//! component, score-filter, unclip, size-filter, and sort into a stable
//! top-to-bottom / left-to-right order.

use serde::{Deserialize, Serialize};

use crate::backends::Tensor;
use crate::error::{Error, Result};
use crate::geometry::{expand_quad, Point, Quad};

/// Per-pixel text probability in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    width: usize,
    height: usize,
    values: Vec<f32>,
}

impl ProbabilityMap {
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "probability map {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::ShapeMismatch(
                "probability map values must lie in [0, 1]".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Builds from an F32 tensor of shape [height, width].
    pub fn from_tensor(tensor: &Tensor) -> Result<Self> {
        let shape = tensor.shape();
        if shape.len() != 2 {
            return Err(Error::ShapeMismatch(format!(
                "probability map tensor must be rank 2, got {shape:?}"
            )));
        }
        Self::new(shape[1], shape[0], tensor.as_f32_vec()?)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }
}

/// Detection postprocessing thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    /// Binarization threshold on the probability map.
    pub bin_thresh: f64,
    /// Minimum mean component score for a box to survive.
    pub box_score_thresh: f64,
    /// Outward expansion ratio applied to each accepted box.
    pub unclip_ratio: f64,
    /// Minimum post-unclip edge length in pixels.
    pub min_box_side: f64,
    /// Upper bound on the number of returned boxes.
    pub max_candidates: usize,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            bin_thresh: 0.3,
            box_score_thresh: 0.6,
            unclip_ratio: 1.5,
            min_box_side: 3.0,
            max_candidates: 1000,
        }
    }
}

/// Extracts text region quads from a probability map.
///
/// Returns an empty list on a blank map. Output order: top-to-bottom then
/// left-to-right by the normalized top-left corner.
pub fn extract_text_regions(map: &ProbabilityMap, params: &DetectionParams) -> Vec<Quad> {
    let (w, h) = (map.width(), map.height());
    if w == 0 || h == 0 {
        return Vec::new();
    }
    let mask: Vec<bool> = (0..w * h)
        .map(|i| map.values[i] as f64 > params.bin_thresh)
        .collect();

    let mut visited = vec![false; w * h];
    let mut quads: Vec<Quad> = Vec::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();

    for start_y in 0..h {
        for start_x in 0..w {
            let idx = start_y * w + start_x;
            if !mask[idx] || visited[idx] {
                continue;
            }
            // Flood-fill one 4-connected component, tracking per-row extremes
            // and the mean score.
            let mut row_min = vec![usize::MAX; h];
            let mut row_max = vec![0usize; h];
            let mut score_sum = 0.0f64;
            let mut pixel_count = 0usize;
            visited[idx] = true;
            stack.push((start_x, start_y));
            while let Some((x, y)) = stack.pop() {
                score_sum += map.get(x, y) as f64;
                pixel_count += 1;
                row_min[y] = row_min[y].min(x);
                row_max[y] = row_max[y].max(x);
                if x > 0 && mask[y * w + x - 1] && !visited[y * w + x - 1] {
                    visited[y * w + x - 1] = true;
                    stack.push((x - 1, y));
                }
                if x + 1 < w && mask[y * w + x + 1] && !visited[y * w + x + 1] {
                    visited[y * w + x + 1] = true;
                    stack.push((x + 1, y));
                }
                if y > 0 && mask[(y - 1) * w + x] && !visited[(y - 1) * w + x] {
                    visited[(y - 1) * w + x] = true;
                    stack.push((x, y - 1));
                }
                if y + 1 < h && mask[(y + 1) * w + x] && !visited[(y + 1) * w + x] {
                    visited[(y + 1) * w + x] = true;
                    stack.push((x, y + 1));
                }
            }

            if score_sum / pixel_count as f64 + 1e-12 < params.box_score_thresh {
                continue;
            }

            // Pixel-corner points of the per-row extremes span the same
            // convex hull as the full component corner set.
            let mut corners: Vec<Point> = Vec::new();
            for y in 0..h {
                if row_min[y] == usize::MAX {
                    continue;
                }
                let (lx, rx) = (row_min[y] as f64, row_max[y] as f64 + 1.0);
                let (top, bottom) = (y as f64, y as f64 + 1.0);
                corners.push(Point::new(lx, top));
                corners.push(Point::new(lx, bottom));
                corners.push(Point::new(rx, top));
                corners.push(Point::new(rx, bottom));
            }
            let rect = min_area_rect(&corners);
            let expanded = match expand_quad(&rect, params.unclip_ratio) {
                Ok(q) => q,
                Err(_) => continue,
            };
            if expanded.min_side() < params.min_box_side {
                continue;
            }
            quads.push(expanded.normalized());
        }
    }

    quads.sort_by(|a, b| {
        let ka = (a.points[0].y, a.points[0].x);
        let kb = (b.points[0].y, b.points[0].x);
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    });
    quads.truncate(params.max_candidates);
    quads
}

/// Convex hull via the monotone chain.
fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| {
        (a.x, a.y)
            .partial_cmp(&(b.x, b.y))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: &Point, a: &Point, b: &Point| -> f64 {
        (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
    };
    let mut lower: Vec<Point> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Minimum-area enclosing rectangle of a point set (rotating calipers over
/// the convex hull edges).
pub(crate) fn min_area_rect(points: &[Point]) -> Quad {
    let hull = convex_hull(points);
    if hull.len() < 3 {
        // Degenerate set: fall back to the axis-aligned bounds.
        let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
        let (x0, x1) = (
            xs.iter().cloned().fold(f64::INFINITY, f64::min),
            xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );
        let (y0, y1) = (
            ys.iter().cloned().fold(f64::INFINITY, f64::min),
            ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );
        return Quad::new([
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ]);
    }

    let mut best_area = f64::INFINITY;
    let mut best: Option<Quad> = None;
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        let len = a.distance(&b);
        if len == 0.0 {
            continue;
        }
        let (ux, uy) = ((b.x - a.x) / len, (b.y - a.y) / len);
        // Project every hull point onto the edge direction and its normal.
        let (mut min_u, mut max_u) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut min_v, mut max_v) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &hull {
            let u = (p.x - a.x) * ux + (p.y - a.y) * uy;
            let v = -(p.x - a.x) * uy + (p.y - a.y) * ux;
            min_u = min_u.min(u);
            max_u = max_u.max(u);
            min_v = min_v.min(v);
            max_v = max_v.max(v);
        }
        let area = (max_u - min_u) * (max_v - min_v);
        if area < best_area {
            best_area = area;
            let corner = |u: f64, v: f64| {
                Point::new(a.x + u * ux - v * uy, a.y + u * uy + v * ux)
            };
            best = Some(Quad::new([
                corner(min_u, min_v),
                corner(max_u, min_v),
                corner(max_u, max_v),
                corner(min_u, max_v),
            ]));
        }
    }
    best.expect("hull with >=3 points yields a rectangle").normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{iou, BBox};

    fn map_with_rect(w: usize, h: usize, rect: (usize, usize, usize, usize)) -> ProbabilityMap {
        let mut values = vec![0.0f32; w * h];
        let (x0, y0, x1, y1) = rect;
        for y in y0..y1 {
            for x in x0..x1 {
                values[y * w + x] = 1.0;
            }
        }
        ProbabilityMap::new(w, h, values).unwrap()
    }

    fn no_unclip() -> DetectionParams {
        DetectionParams {
            unclip_ratio: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn blank_map_yields_nothing() {
        let map = ProbabilityMap::new(32, 32, vec![0.0; 32 * 32]).unwrap();
        assert!(extract_text_regions(&map, &DetectionParams::default()).is_empty());
    }

    #[test]
    fn solid_rectangle_recovered() {
        let map = map_with_rect(100, 60, (20, 10, 60, 22));
        let quads = extract_text_regions(&map, &no_unclip());
        assert_eq!(quads.len(), 1);
        let truth = BBox::new(20.0, 10.0, 60.0, 22.0);
        assert!(iou(&quads[0].bbox(), &truth) >= 0.95);
    }

    #[test]
    fn two_blobs_top_down_order() {
        let mut values = vec![0.0f32; 100 * 100];
        for (x0, y0, x1, y1) in [(10, 60, 50, 75), (10, 10, 50, 25)] {
            for y in y0..y1 {
                for x in x0..x1 {
                    values[y * 100 + x] = 1.0;
                }
            }
        }
        let map = ProbabilityMap::new(100, 100, values).unwrap();
        let quads = extract_text_regions(&map, &no_unclip());
        assert_eq!(quads.len(), 2);
        assert!(quads[0].points[0].y < quads[1].points[0].y);
    }

    #[test]
    fn low_score_component_dropped() {
        let mut values = vec![0.0f32; 40 * 40];
        for y in 5..15 {
            for x in 5..35 {
                values[y * 40 + x] = 0.4; // above bin_thresh, below box_score_thresh
            }
        }
        let map = ProbabilityMap::new(40, 40, values).unwrap();
        assert!(extract_text_regions(&map, &DetectionParams::default()).is_empty());
    }

    #[test]
    fn tiny_boxes_filtered_by_min_side() {
        let map = map_with_rect(40, 40, (5, 5, 7, 7));
        let params = DetectionParams {
            unclip_ratio: 0.0,
            min_box_side: 3.0,
            ..Default::default()
        };
        assert!(extract_text_regions(&map, &params).is_empty());
    }

    #[test]
    fn max_candidates_respected() {
        let mut values = vec![0.0f32; 200 * 20];
        for i in 0..10 {
            let x0 = i * 20 + 2;
            for y in 5..15 {
                for x in x0..x0 + 10 {
                    values[y * 200 + x] = 1.0;
                }
            }
        }
        let map = ProbabilityMap::new(200, 20, values).unwrap();
        let params = DetectionParams {
            unclip_ratio: 0.0,
            max_candidates: 4,
            ..Default::default()
        };
        assert_eq!(extract_text_regions(&map, &params).len(), 4);
    }

    #[test]
    fn min_area_rect_of_rotated_points() {
        // True rotated rectangle: sides sqrt(8) and sqrt(18), area 12.
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(5.0, -1.0),
            Point::new(3.0, -3.0),
        ];
        let rect = min_area_rect(&pts);
        assert!((rect.area() - 12.0).abs() < 1e-9);
        let mut sides: Vec<f64> = (0..2)
            .map(|i| rect.points[i].distance(&rect.points[i + 1]))
            .collect();
        sides.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((sides[0] - 8.0f64.sqrt()).abs() < 1e-9);
        assert!((sides[1] - 18.0f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn values_outside_unit_interval_rejected() {
        assert!(ProbabilityMap::new(2, 1, vec![0.5, 1.5]).is_err());
    }
}
