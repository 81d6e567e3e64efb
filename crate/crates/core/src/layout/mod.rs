//! Layout analysis: detection postprocessing, article-region assignment and
//! reading-order recovery.

pub mod xycut;

pub use xycut::{recover_reading_order, CutParams, OrderMode};

use serde::{Deserialize, Serialize};

use crate::document::{LayoutBlock, LayoutCategory};
use crate::geometry::{iou, BBox};

/// One raw box from a layout or region detection model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDetection {
    pub bbox: BBox,
    pub category: LayoutCategory,
    pub score: f64,
}

impl RawDetection {
    pub fn new(bbox: BBox, category: LayoutCategory, score: f64) -> Self {
        Self {
            bbox,
            category,
            score,
        }
    }
}

/// Layout postprocessing thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutParams {
    /// Detections below this score are dropped.
    pub score_thresh: f64,
    /// Class-aware NMS threshold.
    pub nms_iou: f64,
    /// A block contained in a same-category block at this fraction of its
    /// own area is dropped.
    pub containment_ratio: f64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            score_thresh: 0.5,
            nms_iou: 0.5,
            containment_ratio: 0.9,
        }
    }
}

/// Filters raw detections into layout blocks: score filter, class-aware NMS
/// (higher score wins, ties to larger area), then same-category containment
/// suppression.
pub fn postprocess_layout(dets: &[RawDetection], params: &LayoutParams) -> Vec<LayoutBlock> {
    let mut candidates: Vec<&RawDetection> = dets
        .iter()
        .filter(|d| d.score >= params.score_thresh)
        .collect();
    // Score descending, ties by larger area, then stable by input order.
    candidates.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(
                b.bbox
                    .area()
                    .partial_cmp(&a.bbox.area())
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
    });

    let mut kept: Vec<&RawDetection> = Vec::new();
    for det in candidates {
        let suppressed = kept.iter().any(|k| {
            k.category == det.category && iou(&k.bbox, &det.bbox) >= params.nms_iou
        });
        if !suppressed {
            kept.push(det);
        }
    }

    // Containment: drop a block mostly inside a same-category block.
    let mut dropped = vec![false; kept.len()];
    for i in 0..kept.len() {
        if dropped[i] {
            continue;
        }
        for j in 0..kept.len() {
            if i == j || dropped[j] || kept[i].category != kept[j].category {
                continue;
            }
            let area = kept[i].bbox.area();
            if area <= 0.0 {
                continue;
            }
            let overlap = kept[i].bbox.intersection_area(&kept[j].bbox) / area;
            // The higher-scored block (earlier in `kept`) survives when both
            // contain each other.
            if overlap >= params.containment_ratio && j < i {
                dropped[i] = true;
                break;
            }
            if overlap >= params.containment_ratio && kept[j].bbox.area() > area {
                dropped[i] = true;
                break;
            }
        }
    }

    kept.iter()
        .zip(dropped.iter())
        .filter(|(_, &d)| !d)
        .map(|(det, _)| LayoutBlock::new(det.bbox, det.category, det.score))
        .collect()
}

/// Minimum fraction of a block's area that must overlap a region for the
/// block to join it; below this the block becomes its own singleton region.
const REGION_OVERLAP_THRESH: f64 = 0.5;

/// Assigns each block to the article region maximizing overlap over the
/// block's own area. Blocks without a qualifying region get fresh singleton
/// regions. Region ids follow the reading order of the region boxes.
pub fn assign_regions(
    blocks: &[LayoutBlock],
    regions: &[RawDetection],
    mode: OrderMode,
    cut: &CutParams,
) -> Vec<LayoutBlock> {
    // Raw assignment: index into `regions` or a fresh singleton.
    let mut effective_boxes: Vec<BBox> = regions.iter().map(|r| r.bbox).collect();
    let mut assignment: Vec<usize> = Vec::with_capacity(blocks.len());
    for block in blocks {
        let area = block.bbox.area();
        let mut best: Option<(usize, f64)> = None;
        for (ri, region) in regions.iter().enumerate() {
            let overlap = if area > 0.0 {
                block.bbox.intersection_area(&region.bbox) / area
            } else {
                0.0
            };
            let better = match best {
                Some((_, b)) => overlap > b,
                None => overlap > 0.0,
            };
            if better {
                best = Some((ri, overlap));
            }
        }
        match best {
            Some((ri, overlap)) if overlap >= REGION_OVERLAP_THRESH => assignment.push(ri),
            _ => {
                effective_boxes.push(block.bbox);
                assignment.push(effective_boxes.len() - 1);
            }
        }
    }

    // Order the effective region boxes with the same cut used for blocks,
    // then renumber region ids by that order.
    let order = xycut::order_boxes(&effective_boxes, mode, cut);
    let mut rank = vec![0usize; effective_boxes.len()];
    for (position, &box_index) in order.iter().enumerate() {
        rank[box_index] = position;
    }

    blocks
        .iter()
        .zip(assignment)
        .map(|(block, raw_id)| {
            let mut out = block.clone();
            out.region_id = Some(rank[raw_id]);
            out
        })
        .collect()
}
