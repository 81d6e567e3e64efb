//! Table structure tokens and HTML assembly.

use crate::document::TextLine;
use crate::error::{Error, Result};
use crate::geometry::BBox;

/// A detected table cell; `text` is filled by OCR-line matching.
#[derive(Debug, Clone, PartialEq)]
pub struct TableCell {
    pub bbox: BBox,
    pub text: String,
}

impl TableCell {
    pub fn new(bbox: BBox) -> Self {
        Self {
            bbox,
            text: String::new(),
        }
    }
}

/// The accepted structure-token alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureToken {
    TableOpen,
    TableClose,
    RowOpen,
    RowClose,
    CellOpen { colspan: u32, rowspan: u32 },
    CellClose,
}

impl StructureToken {
    fn emit(&self, out: &mut String) {
        match self {
            StructureToken::TableOpen => out.push_str("<table>"),
            StructureToken::TableClose => out.push_str("</table>"),
            StructureToken::RowOpen => out.push_str("<tr>"),
            StructureToken::RowClose => out.push_str("</tr>"),
            StructureToken::CellOpen { colspan, rowspan } => {
                if *colspan > 1 {
                    out.push_str(&format!("<td colspan={colspan}>"));
                } else if *rowspan > 1 {
                    out.push_str(&format!("<td rowspan={rowspan}>"));
                } else {
                    out.push_str("<td>");
                }
            }
            StructureToken::CellClose => out.push_str("</td>"),
        }
    }
}

/// A validated token sequence: balanced tags, rows inside the table, cells
/// inside rows.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTokens {
    tokens: Vec<StructureToken>,
}

impl StructureTokens {
    /// Parses a concatenated tag string; only the fixed alphabet is
    /// accepted.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = Vec::new();
        let mut rest = text.trim();
        while !rest.is_empty() {
            let close = rest.find('>').ok_or_else(|| invalid("unterminated tag"))?;
            let tag = &rest[..=close];
            let token = match tag {
                "<table>" => StructureToken::TableOpen,
                "</table>" => StructureToken::TableClose,
                "<tr>" => StructureToken::RowOpen,
                "</tr>" => StructureToken::RowClose,
                "<td>" => StructureToken::CellOpen {
                    colspan: 1,
                    rowspan: 1,
                },
                "</td>" => StructureToken::CellClose,
                _ => {
                    if let Some(v) = tag.strip_prefix("<td colspan=").and_then(span_value) {
                        StructureToken::CellOpen {
                            colspan: v,
                            rowspan: 1,
                        }
                    } else if let Some(v) = tag.strip_prefix("<td rowspan=").and_then(span_value) {
                        StructureToken::CellOpen {
                            colspan: 1,
                            rowspan: v,
                        }
                    } else {
                        return Err(invalid(&format!("unknown tag {tag}")));
                    }
                }
            };
            tokens.push(token);
            rest = rest[close + 1..].trim_start();
        }
        let parsed = Self { tokens };
        parsed.validate()?;
        Ok(parsed)
    }

    fn validate(&self) -> Result<()> {
        // Depth 0 table, 1 row, 2 cell.
        let mut depth = 0i32;
        let mut table_seen = false;
        for token in &self.tokens {
            match token {
                StructureToken::TableOpen => {
                    if depth != 0 || table_seen {
                        return Err(invalid("misplaced <table>"));
                    }
                    table_seen = true;
                    depth = 1;
                }
                StructureToken::TableClose => {
                    if depth != 1 {
                        return Err(invalid("misplaced </table>"));
                    }
                    depth = 0;
                }
                StructureToken::RowOpen => {
                    if depth != 1 {
                        return Err(invalid("misplaced <tr>"));
                    }
                    depth = 2;
                }
                StructureToken::RowClose => {
                    if depth != 2 {
                        return Err(invalid("misplaced </tr>"));
                    }
                    depth = 1;
                }
                StructureToken::CellOpen { .. } => {
                    if depth != 2 {
                        return Err(invalid("misplaced <td>"));
                    }
                    depth = 3;
                }
                StructureToken::CellClose => {
                    if depth != 3 {
                        return Err(invalid("misplaced </td>"));
                    }
                    depth = 2;
                }
            }
        }
        if depth != 0 || !table_seen {
            return Err(invalid("unbalanced structure tokens"));
        }
        Ok(())
    }

    /// Number of `<td>` slots.
    pub fn td_count(&self) -> usize {
        self.tokens
            .iter()
            .filter(|t| matches!(t, StructureToken::CellOpen { .. }))
            .count()
    }
}

fn span_value(rest: &str) -> Option<u32> {
    rest.strip_suffix('>')?.parse().ok()
}

fn invalid(message: &str) -> Error {
    Error::ConfigError {
        location: "structure tokens".into(),
        message: message.into(),
    }
}

fn escape_html(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Minimum overlap fraction (line area) for an OCR line to join a cell.
const LINE_ASSIGN_THRESH: f64 = 0.5;

/// Fills table cells with OCR line text and emits the HTML.
///
/// Each OCR line goes to the cell with maximal overlap over the line's own
/// area (threshold 0.5); unassigned lines are dropped with a warning. Cell
/// lines join in reading order (y, then x) separated by a space; text is
/// HTML-escaped.
pub fn assemble_table_html(
    tokens: &StructureTokens,
    cells: &[BBox],
    ocr_lines: &[TextLine],
) -> Result<String> {
    let td_count = tokens.td_count();
    if td_count != cells.len() {
        return Err(Error::StructureMismatch {
            td_count,
            cell_count: cells.len(),
        });
    }

    // Collect (cell index, line) assignments.
    let mut per_cell: Vec<Vec<&TextLine>> = vec![Vec::new(); cells.len()];
    for line in ocr_lines {
        let line_box = line.geometry.bbox();
        let area = line_box.area();
        if area <= 0.0 {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (ci, cell) in cells.iter().enumerate() {
            let overlap = line_box.intersection_area(cell) / area;
            if overlap > best.map(|(_, b)| b).unwrap_or(0.0) {
                best = Some((ci, overlap));
            }
        }
        match best {
            Some((ci, overlap)) if overlap >= LINE_ASSIGN_THRESH => per_cell[ci].push(line),
            _ => {
                tracing::warn!(text = %line.text, "OCR line matched no table cell; dropped");
            }
        }
    }

    let mut cell_texts: Vec<String> = Vec::with_capacity(cells.len());
    for lines in per_cell.iter_mut() {
        lines.sort_by(|a, b| {
            let ka = (a.geometry.bbox().y0, a.geometry.bbox().x0);
            let kb = (b.geometry.bbox().y0, b.geometry.bbox().x0);
            ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
        });
        let joined = lines
            .iter()
            .map(|l| l.text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        cell_texts.push(escape_html(&joined));
    }

    let mut out = String::new();
    let mut cell_index = 0usize;
    for token in &tokens.tokens {
        token.emit(&mut out);
        if matches!(token, StructureToken::CellOpen { .. }) {
            out.push_str(&cell_texts[cell_index]);
            cell_index += 1;
        }
    }
    Ok(out)
}

/// Extracts the unescaped cell texts of a table HTML string, in document
/// order. Lenient: used for chunking, not validation.
pub fn cell_texts(html: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = html;
    while let Some(open) = rest.find("<td") {
        let Some(tag_end) = rest[open..].find('>') else {
            break;
        };
        let content_start = open + tag_end + 1;
        let Some(close) = rest[content_start..].find("</td>") else {
            break;
        };
        let raw = &rest[content_start..content_start + close];
        out.push(
            raw.replace("&lt;", "<")
                .replace("&gt;", ">")
                .replace("&amp;", "&"),
        );
        rest = &rest[content_start + close + 5..];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::LineOrientation;
    use crate::geometry::Quad;

    fn line(text: &str, x0: f64, y0: f64, x1: f64, y1: f64) -> TextLine {
        TextLine {
            geometry: Quad::from_bbox(&BBox::new(x0, y0, x1, y1)),
            text: text.into(),
            score: 0.99,
            orientation: LineOrientation::Deg0,
        }
    }

    #[test]
    fn empty_table_round_trips() {
        let tokens = StructureTokens::parse("<table></table>").unwrap();
        assert_eq!(assemble_table_html(&tokens, &[], &[]).unwrap(), "<table></table>");
    }

    #[test]
    fn one_by_two_assignment() {
        let tokens = StructureTokens::parse("<table><tr><td></td><td></td></tr></table>").unwrap();
        let cells = [BBox::new(0.0, 0.0, 50.0, 20.0), BBox::new(60.0, 0.0, 110.0, 20.0)];
        let lines = [line("a", 5.0, 5.0, 15.0, 15.0), line("b", 65.0, 5.0, 75.0, 15.0)];
        assert_eq!(
            assemble_table_html(&tokens, &cells, &lines).unwrap(),
            "<table><tr><td>a</td><td>b</td></tr></table>"
        );
    }

    #[test]
    fn cell_count_mismatch_is_error() {
        let tokens =
            StructureTokens::parse("<table><tr><td></td><td></td><td></td></tr></table>").unwrap();
        let cells = [BBox::new(0.0, 0.0, 10.0, 10.0), BBox::new(20.0, 0.0, 30.0, 10.0)];
        assert!(matches!(
            assemble_table_html(&tokens, &cells, &[]),
            Err(Error::StructureMismatch {
                td_count: 3,
                cell_count: 2
            })
        ));
    }

    #[test]
    fn lines_join_in_reading_order_and_escape() {
        let tokens = StructureTokens::parse("<table><tr><td></td></tr></table>").unwrap();
        let cells = [BBox::new(0.0, 0.0, 100.0, 100.0)];
        let lines = [
            line("b<&>", 0.0, 50.0, 90.0, 60.0),
            line("a", 0.0, 5.0, 90.0, 15.0),
        ];
        assert_eq!(
            assemble_table_html(&tokens, &cells, &lines).unwrap(),
            "<table><tr><td>a b&lt;&amp;&gt;</td></tr></table>"
        );
    }

    #[test]
    fn unmatched_line_dropped() {
        let tokens = StructureTokens::parse("<table><tr><td></td></tr></table>").unwrap();
        let cells = [BBox::new(0.0, 0.0, 10.0, 10.0)];
        let lines = [line("far", 500.0, 500.0, 520.0, 510.0)];
        assert_eq!(
            assemble_table_html(&tokens, &cells, &lines).unwrap(),
            "<table><tr><td></td></tr></table>"
        );
    }

    #[test]
    fn spans_emit_verbatim() {
        let html = "<table><tr><td colspan=2></td></tr><tr><td></td><td rowspan=3></td></tr></table>";
        let tokens = StructureTokens::parse(html).unwrap();
        assert_eq!(tokens.td_count(), 3);
        let cells = [
            BBox::new(0.0, 0.0, 20.0, 10.0),
            BBox::new(0.0, 10.0, 10.0, 20.0),
            BBox::new(10.0, 10.0, 20.0, 20.0),
        ];
        assert_eq!(assemble_table_html(&tokens, &cells, &[]).unwrap(), html);
    }

    #[test]
    fn malformed_tokens_rejected() {
        for bad in [
            "<table><tr></table></tr>",
            "<td></td>",
            "<table><div></div></table>",
            "<table><tr><td></tr></td></table>",
        ] {
            assert!(StructureTokens::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn cell_text_extraction() {
        let html = "<table><tr><td>a</td><td colspan=2>b &amp; c</td></tr></table>";
        assert_eq!(cell_texts(html), vec!["a".to_string(), "b & c".to_string()]);
    }
}
