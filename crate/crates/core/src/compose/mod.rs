//! Post-processing and output emission: caption linking, Markdown and
//! canonical JSON serialization.

pub mod json;
pub mod markdown;

pub use json::{emit_json, parse_json};
pub use markdown::{emit_markdown, MarkdownOptions};

use crate::document::{DocumentItem, LayoutCategory};

/// A caption-to-target link within one page.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptionLink {
    pub caption_index: usize,
    pub target_index: usize,
    /// Edge-to-edge vertical distance in pixels.
    pub distance: f64,
}

fn linkable_target(category: LayoutCategory) -> bool {
    matches!(
        category,
        LayoutCategory::Table | LayoutCategory::Image | LayoutCategory::Chart
    )
}

/// Links each caption to the nearest Table/Image/Chart in the same page and
/// region by edge-to-edge vertical distance.
///
/// A target directly above the caption wins over one below at equal
/// distance; each target takes at most one caption (greedy by ascending
/// distance). Unlinked captions stay plain text items.
pub fn link_captions(items: &[DocumentItem]) -> Vec<CaptionLink> {
    struct Candidate {
        caption: usize,
        target: usize,
        distance: f64,
        above: bool,
    }

    let mut candidates: Vec<Candidate> = Vec::new();
    for (ci, caption) in items.iter().enumerate() {
        if caption.category() != LayoutCategory::Caption {
            continue;
        }
        for (ti, target) in items.iter().enumerate() {
            if !linkable_target(target.category()) {
                continue;
            }
            if target.page_index != caption.page_index || target.region_id != caption.region_id {
                continue;
            }
            candidates.push(Candidate {
                caption: ci,
                target: ti,
                distance: caption.bbox.vertical_gap(&target.bbox),
                above: target.bbox.y1 <= caption.bbox.y0 + 1e-9,
            });
        }
    }

    candidates.sort_by(|a, b| {
        let ka = (a.distance, !a.above as u8, a.caption, a.target);
        let kb = (b.distance, !b.above as u8, b.caption, b.target);
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut caption_used = vec![false; items.len()];
    let mut target_used = vec![false; items.len()];
    let mut links = Vec::new();
    for c in candidates {
        if caption_used[c.caption] || target_used[c.target] {
            continue;
        }
        caption_used[c.caption] = true;
        target_used[c.target] = true;
        links.push(CaptionLink {
            caption_index: c.caption,
            target_index: c.target,
            distance: c.distance,
        });
    }
    links
}

/// Stores the symmetric link indices on the items themselves.
pub fn apply_caption_links(items: &mut [DocumentItem], links: &[CaptionLink]) {
    for link in links {
        items[link.target_index].caption_link = Some(link.caption_index);
        items[link.caption_index].target_link = Some(link.target_index);
    }
}
