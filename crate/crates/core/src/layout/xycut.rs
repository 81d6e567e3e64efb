//! Reading-order recovery via a recursive projection cut.
//!
//! The page is split recursively at whitespace gaps in the x/y projections
//! of the block boxes. Boxes are shrunk before projecting so slightly
//! overlapping detections still separate. At each step the widest admissible
//! gap wins; ties prefer the mode's cut axis, then the smaller coordinate.
//! Horizontal mode orders columns left-to-right, Vertical mode (vertically
//! typeset documents) right-to-left. Article regions are ordered first, then
//! blocks within each region; Header blocks pin to the front of the page and
//! Footer blocks to the back.

use serde::{Deserialize, Serialize};

use crate::document::{LayoutBlock, LayoutCategory};
use crate::geometry::BBox;

/// Reading direction of the page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderMode {
    /// Left-to-right scripts: columns read left to right.
    Horizontal,
    /// Vertically typeset documents: columns read right to left.
    Vertical,
}

/// Cut tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutParams {
    /// Minimum whitespace width (after shrinking) for an admissible cut.
    pub min_gap: f64,
    /// Amount each box is shrunk per side before projecting.
    pub shrink: f64,
}

impl Default for CutParams {
    fn default() -> Self {
        Self {
            min_gap: 5.0,
            shrink: 2.0,
        }
    }
}

/// Axis of the dividing line. A horizontal line splits top/bottom (a gap in
/// the y projection); a vertical line splits left/right.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum CutAxis {
    HorizontalLine,
    VerticalLine,
}

/// An admissible cut candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct CutCandidate {
    pub width: f64,
    pub axis: CutAxis,
    /// Gap start coordinate along the cut axis.
    pub start: f64,
}

impl CutCandidate {
    /// Preference: wider gap first, then the mode's preferred axis, then the
    /// smaller start coordinate.
    pub fn better_than(&self, other: &CutCandidate, mode: OrderMode) -> bool {
        if self.width != other.width {
            return self.width > other.width;
        }
        let rank = |axis: CutAxis| match (mode, axis) {
            (OrderMode::Horizontal, CutAxis::HorizontalLine) => 0,
            (OrderMode::Horizontal, CutAxis::VerticalLine) => 1,
            (OrderMode::Vertical, CutAxis::VerticalLine) => 0,
            (OrderMode::Vertical, CutAxis::HorizontalLine) => 1,
        };
        if rank(self.axis) != rank(other.axis) {
            return rank(self.axis) < rank(other.axis);
        }
        self.start < other.start
    }
}

fn shrink_box(b: &BBox, amount: f64) -> BBox {
    let dx = amount.min(b.width() / 2.0);
    let dy = amount.min(b.height() / 2.0);
    BBox {
        x0: b.x0 + dx,
        y0: b.y0 + dy,
        x1: b.x1 - dx,
        y1: b.y1 - dy,
    }
}

/// Maximal whitespace gaps strictly between the coverage of the intervals.
fn projection_gaps(mut intervals: Vec<(f64, f64)>, min_gap: f64) -> Vec<(f64, f64)> {
    intervals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut gaps = Vec::new();
    let mut coverage_end = match intervals.first() {
        Some(&(_, end)) => end,
        None => return gaps,
    };
    for &(start, end) in intervals.iter().skip(1) {
        if start - coverage_end >= min_gap {
            gaps.push((coverage_end, start - coverage_end));
        }
        coverage_end = coverage_end.max(end);
    }
    gaps
}

/// All admissible cuts for the given (already shrunk) boxes.
pub(crate) fn cut_candidates(shrunk: &[BBox], params: &CutParams) -> Vec<CutCandidate> {
    let mut out = Vec::new();
    let y_intervals: Vec<(f64, f64)> = shrunk.iter().map(|b| (b.y0, b.y1)).collect();
    for (start, width) in projection_gaps(y_intervals, params.min_gap) {
        out.push(CutCandidate {
            width,
            axis: CutAxis::HorizontalLine,
            start,
        });
    }
    let x_intervals: Vec<(f64, f64)> = shrunk.iter().map(|b| (b.x0, b.x1)).collect();
    for (start, width) in projection_gaps(x_intervals, params.min_gap) {
        out.push(CutCandidate {
            width,
            axis: CutAxis::VerticalLine,
            start,
        });
    }
    out
}

/// Remainder sort key when no cut applies.
fn leaf_sort(indices: &mut [usize], boxes: &[BBox], mode: OrderMode) {
    indices.sort_by(|&a, &b| {
        let ka = match mode {
            OrderMode::Horizontal => (boxes[a].y0, boxes[a].x0, a as f64),
            OrderMode::Vertical => (-boxes[a].x1, boxes[a].y0, a as f64),
        };
        let kb = match mode {
            OrderMode::Horizontal => (boxes[b].y0, boxes[b].x0, b as f64),
            OrderMode::Vertical => (-boxes[b].x1, boxes[b].y0, b as f64),
        };
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    });
}

fn cut_recursive(
    indices: Vec<usize>,
    boxes: &[BBox],
    shrunk: &[BBox],
    mode: OrderMode,
    params: &CutParams,
    out: &mut Vec<usize>,
) {
    if indices.len() <= 1 {
        out.extend(indices);
        return;
    }
    let local: Vec<BBox> = indices.iter().map(|&i| shrunk[i]).collect();
    let candidates = cut_candidates(&local, params);
    let best = candidates
        .iter()
        .copied()
        .reduce(|acc, c| if c.better_than(&acc, mode) { c } else { acc });

    let Some(cut) = best else {
        let mut leaf = indices;
        leaf_sort(&mut leaf, boxes, mode);
        out.extend(leaf);
        return;
    };

    // Every shrunk interval lies entirely on one side of the gap.
    let (mut first, mut second): (Vec<usize>, Vec<usize>) = (Vec::new(), Vec::new());
    for &i in &indices {
        let before = match cut.axis {
            CutAxis::HorizontalLine => shrunk[i].y1 <= cut.start + 1e-9,
            CutAxis::VerticalLine => shrunk[i].x1 <= cut.start + 1e-9,
        };
        if before {
            first.push(i);
        } else {
            second.push(i);
        }
    }
    // Column order: horizontal cuts always read top first; vertical cuts
    // read left-to-right in Horizontal mode, right-to-left in Vertical mode.
    let reversed = cut.axis == CutAxis::VerticalLine && mode == OrderMode::Vertical;
    let (a, b) = if reversed { (second, first) } else { (first, second) };
    cut_recursive(a, boxes, shrunk, mode, params, out);
    cut_recursive(b, boxes, shrunk, mode, params, out);
}

/// Orders plain boxes with the recursive cut; returns a permutation of the
/// input indices.
pub fn order_boxes(boxes: &[BBox], mode: OrderMode, params: &CutParams) -> Vec<usize> {
    let shrunk: Vec<BBox> = boxes.iter().map(|b| shrink_box(b, params.shrink)).collect();
    let mut out = Vec::with_capacity(boxes.len());
    cut_recursive((0..boxes.len()).collect(), boxes, &shrunk, mode, params, &mut out);
    out
}

/// Recovers the reading order of layout blocks.
///
/// Header blocks come first and Footer blocks last (each group ordered by
/// the leaf sort); the remaining blocks are grouped by `region_id`, regions
/// are ordered by the cut over their bounding boxes, and blocks are ordered
/// by the cut within each region. The result is a permutation of the input
/// indices.
pub fn recover_reading_order(
    blocks: &[LayoutBlock],
    mode: OrderMode,
    params: &CutParams,
) -> Vec<usize> {
    let boxes: Vec<BBox> = blocks.iter().map(|b| b.bbox).collect();

    let mut headers: Vec<usize> = Vec::new();
    let mut footers: Vec<usize> = Vec::new();
    let mut body: Vec<usize> = Vec::new();
    for (i, block) in blocks.iter().enumerate() {
        match block.category {
            LayoutCategory::Header => headers.push(i),
            LayoutCategory::Footer => footers.push(i),
            _ => body.push(i),
        }
    }
    leaf_sort(&mut headers, &boxes, mode);
    leaf_sort(&mut footers, &boxes, mode);

    // Group the body by region; blocks without a region id become
    // singletons.
    let mut groups: Vec<(Option<usize>, Vec<usize>)> = Vec::new();
    for &i in &body {
        match blocks[i].region_id {
            Some(rid) => {
                if let Some(group) = groups.iter_mut().find(|(g, _)| *g == Some(rid)) {
                    group.1.push(i);
                } else {
                    groups.push((Some(rid), vec![i]));
                }
            }
            None => groups.push((None, vec![i])),
        }
    }

    // Order regions by their bounding boxes, then blocks within regions.
    let region_boxes: Vec<BBox> = groups
        .iter()
        .map(|(_, members)| {
            members
                .iter()
                .map(|&i| boxes[i])
                .reduce(|a, b| a.union(&b))
                .expect("regions are non-empty")
        })
        .collect();
    let region_order = order_boxes(&region_boxes, mode, params);

    let mut out = headers;
    for &g in &region_order {
        let members = &groups[g].1;
        let member_boxes: Vec<BBox> = members.iter().map(|&i| boxes[i]).collect();
        for local in order_boxes(&member_boxes, mode, params) {
            out.push(members[local]);
        }
    }
    out.extend(footers);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(x0: f64, y0: f64, x1: f64, y1: f64) -> LayoutBlock {
        let mut b = LayoutBlock::new(BBox::new(x0, y0, x1, y1), LayoutCategory::Text, 0.9);
        b.region_id = Some(0);
        b
    }

    #[test]
    fn single_block() {
        let blocks = vec![block(0.0, 0.0, 10.0, 10.0)];
        assert_eq!(
            recover_reading_order(&blocks, OrderMode::Horizontal, &CutParams::default()),
            vec![0]
        );
    }

    #[test]
    fn stacked_blocks_top_first() {
        let blocks = vec![block(0.0, 50.0, 100.0, 80.0), block(0.0, 0.0, 100.0, 30.0)];
        assert_eq!(
            recover_reading_order(&blocks, OrderMode::Horizontal, &CutParams::default()),
            vec![1, 0]
        );
    }

    #[test]
    fn two_column_grid_column_major() {
        // Column gutter (20px) wider than the row gap (10px): the vertical
        // cut wins and columns read left to right.
        let blocks = vec![
            block(10.0, 10.0, 90.0, 40.0),   // L1
            block(10.0, 50.0, 90.0, 80.0),   // L2
            block(110.0, 10.0, 190.0, 40.0), // R1
            block(110.0, 50.0, 190.0, 80.0), // R2
        ];
        assert_eq!(
            recover_reading_order(&blocks, OrderMode::Horizontal, &CutParams::default()),
            vec![0, 1, 2, 3]
        );
    }

    #[test]
    fn two_column_grid_vertical_mode_right_first() {
        let blocks = vec![
            block(10.0, 10.0, 90.0, 40.0),   // L1
            block(10.0, 50.0, 90.0, 80.0),   // L2
            block(110.0, 10.0, 190.0, 40.0), // R1
            block(110.0, 50.0, 190.0, 80.0), // R2
        ];
        assert_eq!(
            recover_reading_order(&blocks, OrderMode::Vertical, &CutParams::default()),
            vec![2, 3, 0, 1]
        );
    }

    #[test]
    fn header_first_footer_last() {
        let mut header = block(0.0, 95.0, 100.0, 99.0);
        header.category = LayoutCategory::Header;
        let mut footer = block(0.0, 0.0, 100.0, 4.0);
        footer.category = LayoutCategory::Footer;
        let blocks = vec![block(0.0, 30.0, 100.0, 60.0), header, footer];
        assert_eq!(
            recover_reading_order(&blocks, OrderMode::Horizontal, &CutParams::default()),
            vec![1, 0, 2]
        );
    }

    #[test]
    fn regions_order_before_blocks() {
        // Two articles side by side; within each, blocks stack. Blocks are
        // interleaved in the input.
        let mut blocks = vec![
            block(110.0, 10.0, 190.0, 40.0), // region 1 top
            block(10.0, 10.0, 90.0, 40.0),   // region 0 top
            block(110.0, 50.0, 190.0, 80.0), // region 1 bottom
            block(10.0, 50.0, 90.0, 80.0),   // region 0 bottom
        ];
        blocks[0].region_id = Some(1);
        blocks[1].region_id = Some(0);
        blocks[2].region_id = Some(1);
        blocks[3].region_id = Some(0);
        assert_eq!(
            recover_reading_order(&blocks, OrderMode::Horizontal, &CutParams::default()),
            vec![1, 3, 0, 2]
        );
    }

    #[test]
    fn result_is_permutation_even_with_overlap() {
        let blocks = vec![
            block(0.0, 0.0, 50.0, 50.0),
            block(25.0, 25.0, 75.0, 75.0),
            block(40.0, 0.0, 90.0, 30.0),
        ];
        let mut order = recover_reading_order(&blocks, OrderMode::Horizontal, &CutParams::default());
        order.sort_unstable();
        assert_eq!(order, vec![0, 1, 2]);
    }

    #[test]
    fn translation_invariant() {
        let blocks = vec![
            block(10.0, 10.0, 90.0, 40.0),
            block(110.0, 10.0, 190.0, 40.0),
            block(10.0, 50.0, 90.0, 80.0),
        ];
        let shifted: Vec<LayoutBlock> = blocks
            .iter()
            .map(|b| {
                let mut s = b.clone();
                s.bbox = BBox::new(b.bbox.x0 + 37.0, b.bbox.y0 + 91.0, b.bbox.x1 + 37.0, b.bbox.y1 + 91.0);
                s
            })
            .collect();
        let params = CutParams::default();
        assert_eq!(
            recover_reading_order(&blocks, OrderMode::Horizontal, &params),
            recover_reading_order(&shifted, OrderMode::Horizontal, &params)
        );
    }

    #[test]
    fn scale_invariant_with_scaled_params() {
        let blocks = vec![
            block(10.0, 10.0, 90.0, 40.0),
            block(110.0, 10.0, 190.0, 40.0),
            block(10.0, 50.0, 90.0, 80.0),
            block(110.0, 50.0, 190.0, 80.0),
        ];
        let k = 3.5;
        let scaled: Vec<LayoutBlock> = blocks
            .iter()
            .map(|b| {
                let mut s = b.clone();
                s.bbox = BBox::new(b.bbox.x0 * k, b.bbox.y0 * k, b.bbox.x1 * k, b.bbox.y1 * k);
                s
            })
            .collect();
        let params = CutParams::default();
        let scaled_params = CutParams {
            min_gap: params.min_gap * k,
            shrink: params.shrink * k,
        };
        assert_eq!(
            recover_reading_order(&blocks, OrderMode::Horizontal, &params),
            recover_reading_order(&scaled, OrderMode::Horizontal, &scaled_params)
        );
    }
}
