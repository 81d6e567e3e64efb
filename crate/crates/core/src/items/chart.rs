//! Chart-to-table output validation.

use image::RgbImage;

use crate::backends::{Tensor, TensorMap};
use crate::error::{Error, Result};
use crate::runtime::InferenceContext;

fn chart_invalid(reason: &str, raw: &str) -> Error {
    Error::ChartInvalid {
        reason: reason.into(),
        raw: raw.to_string(),
    }
}

fn split_row(line: &str) -> Vec<String> {
    let trimmed = line.trim();
    let inner = trimmed
        .strip_prefix('|')
        .unwrap_or(trimmed)
        .strip_suffix('|')
        .unwrap_or_else(|| trimmed.strip_prefix('|').unwrap_or(trimmed));
    inner.split('|').map(|c| c.trim().to_string()).collect()
}

fn is_separator_cell(cell: &str) -> bool {
    let body = cell
        .strip_prefix(':')
        .unwrap_or(cell)
        .strip_suffix(':')
        .unwrap_or_else(|| cell.strip_prefix(':').unwrap_or(cell));
    !body.is_empty() && body.chars().all(|c| c == '-')
}

/// Validates a markdown pipe table: a header row, a dash separator row, and
/// consistent column counts throughout.
pub fn validate_markdown_table(raw: &str) -> Result<String> {
    let lines: Vec<&str> = raw.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() < 2 {
        return Err(chart_invalid("table needs a header and separator row", raw));
    }
    if !lines.iter().all(|l| l.contains('|')) {
        return Err(chart_invalid("rows must be pipe-delimited", raw));
    }
    let header = split_row(lines[0]);
    let separator = split_row(lines[1]);
    if header.len() != separator.len() {
        return Err(chart_invalid("separator width differs from header", raw));
    }
    if !separator.iter().all(|c| is_separator_cell(c)) {
        return Err(chart_invalid("second row must be a dash separator", raw));
    }
    for line in &lines[2..] {
        if split_row(line).len() != header.len() {
            return Err(chart_invalid("ragged row", raw));
        }
    }
    Ok(raw.to_string())
}

/// Runs the chart model on a crop and validates its markdown output.
pub fn chart_to_table(ctx: &InferenceContext, model: &str, crop: &RgbImage) -> Result<String> {
    let inputs = TensorMap::from([("image".to_string(), Tensor::from_image(crop))]);
    let outputs = ctx.run_model(model, &inputs)?;
    let raw = outputs
        .get("markdown")
        .ok_or_else(|| Error::ShapeMismatch("chart model must output 'markdown'".into()))?
        .as_text()?;
    validate_markdown_table(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_two_column_table() {
        let table = "| year | sales |\n| --- | --- |\n| 2023 | 10 |\n| 2024 | 20 |";
        assert_eq!(validate_markdown_table(table).unwrap(), table);
    }

    #[test]
    fn ragged_rows_rejected() {
        let table = "| a | b |\n| --- | --- |\n| 1 | 2 | 3 |";
        assert!(matches!(
            validate_markdown_table(table),
            Err(Error::ChartInvalid { .. })
        ));
    }

    #[test]
    fn empty_output_rejected() {
        assert!(validate_markdown_table("").is_err());
    }

    #[test]
    fn missing_separator_rejected() {
        assert!(validate_markdown_table("| a | b |\n| 1 | 2 |").is_err());
    }

    #[test]
    fn aligned_separators_accepted() {
        let table = "| a | b |\n| :--- | ---: |\n| 1 | 2 |";
        assert!(validate_markdown_table(table).is_ok());
    }
}
