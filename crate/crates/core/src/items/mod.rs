//! Document-item recognition adapters: table routing and HTML assembly,
//! formula and chart pass-throughs with validation, and seal text
//! rectification.

pub mod chart;
pub mod formula;
pub mod seal;
pub mod table;

pub use chart::{chart_to_table, validate_markdown_table};
pub use formula::{recognize_formula, validate_latex, MAX_FORMULA_TOKENS};
pub use seal::rectify_seal_text;
pub use table::{assemble_table_html, StructureTokens, TableCell};

use crate::ocr::preprocess::{argmax, Rotation};

/// Framing style of a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFrame {
    Wired,
    Wireless,
}

/// Routing decision for a table crop: orientation plus framing style.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableRoute {
    pub orientation: Rotation,
    pub frame: TableFrame,
}

/// Picks the table route from the classifier score vectors. Ties resolve to
/// 0 degrees and Wired. A non-zero orientation means the crop must be
/// rotated upright before the cell and structure models run.
pub fn route_table(orientation_scores: &[f32], frame_scores: &[f32]) -> TableRoute {
    let orientation = match argmax(orientation_scores) {
        0 => Rotation::R0,
        1 => Rotation::R90,
        2 => Rotation::R180,
        _ => Rotation::R270,
    };
    let frame = if argmax(frame_scores) == 1 {
        TableFrame::Wireless
    } else {
        TableFrame::Wired
    };
    TableRoute { orientation, frame }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_routing() {
        let route = route_table(&[0.9, 0.05, 0.03, 0.02], &[0.8, 0.2]);
        assert_eq!(route.orientation, Rotation::R0);
        assert_eq!(route.frame, TableFrame::Wired);
    }

    #[test]
    fn rotated_table_detected() {
        let route = route_table(&[0.1, 0.7, 0.1, 0.1], &[0.3, 0.7]);
        assert_eq!(route.orientation, Rotation::R90);
        assert_eq!(route.frame, TableFrame::Wireless);
        assert_eq!(route.orientation.correction_degrees(), 270);
    }

    #[test]
    fn ties_resolve_to_zero_and_wired() {
        let route = route_table(&[0.25, 0.25, 0.25, 0.25], &[0.5, 0.5]);
        assert_eq!(route.orientation, Rotation::R0);
        assert_eq!(route.frame, TableFrame::Wired);
    }
}
