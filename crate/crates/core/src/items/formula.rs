//! Formula recognition output validation.

use image::RgbImage;

use crate::backends::{Tensor, TensorMap};
use crate::error::{Error, Result};
use crate::runtime::InferenceContext;

/// Maximum whitespace-separated token count accepted from the formula model.
pub const MAX_FORMULA_TOKENS: usize = 2560;

/// Validates raw LaTeX from the formula backend: at most
/// [`MAX_FORMULA_TOKENS`] tokens and balanced (unescaped) braces.
pub fn validate_latex(raw: &str) -> Result<String> {
    let token_count = raw.split_whitespace().count();
    if token_count > MAX_FORMULA_TOKENS {
        return Err(Error::FormulaInvalid {
            reason: format!("{token_count} tokens exceed the {MAX_FORMULA_TOKENS} cap"),
            raw: raw.to_string(),
        });
    }
    let mut depth = 0i64;
    let mut escaped = false;
    for ch in raw.chars() {
        if escaped {
            escaped = false;
            continue;
        }
        match ch {
            '\\' => escaped = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth < 0 {
                    break;
                }
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::FormulaInvalid {
            reason: "unbalanced braces".into(),
            raw: raw.to_string(),
        });
    }
    Ok(raw.to_string())
}

/// Runs the formula model on a crop and validates its LaTeX output.
pub fn recognize_formula(ctx: &InferenceContext, model: &str, crop: &RgbImage) -> Result<String> {
    let inputs = TensorMap::from([("image".to_string(), Tensor::from_image(crop))]);
    let outputs = ctx.run_model(model, &inputs)?;
    let raw = outputs
        .get("latex")
        .ok_or_else(|| Error::ShapeMismatch("formula model must output 'latex'".into()))?
        .as_text()?;
    validate_latex(&raw)
}
