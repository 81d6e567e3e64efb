//! Greedy CTC decoding.

use crate::backends::Tensor;
use crate::error::{Error, Result};

use super::charset::Charset;

/// T time steps by C classes of recognition scores. Scores may be raw or
/// softmax-normalized; decoding only takes per-step argmaxes, but the
/// reported confidence is the mean kept-step score, so normalized inputs
/// keep it in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct LogitsSequence {
    time_steps: usize,
    classes: usize,
    values: Vec<f32>,
}

impl LogitsSequence {
    pub fn new(time_steps: usize, classes: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != time_steps * classes {
            return Err(Error::ShapeMismatch(format!(
                "logits {time_steps}x{classes} needs {} values, got {}",
                time_steps * classes,
                values.len()
            )));
        }
        Ok(Self {
            time_steps,
            classes,
            values,
        })
    }

    /// Builds from an F32 tensor of shape [T, C].
    pub fn from_tensor(tensor: &Tensor) -> Result<Self> {
        let shape = tensor.shape();
        if shape.len() != 2 {
            return Err(Error::ShapeMismatch(format!(
                "logits tensor must be rank 2, got {shape:?}"
            )));
        }
        Self::new(shape[0], shape[1], tensor.as_f32_vec()?)
    }

    pub fn time_steps(&self) -> usize {
        self.time_steps
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    fn row(&self, t: usize) -> &[f32] {
        &self.values[t * self.classes..(t + 1) * self.classes]
    }
}

/// Greedy CTC decode: per-step argmax, merge consecutive repeats, drop
/// blanks. The score is the mean argmax score over kept steps, 1.0 when the
/// decode is empty. Ties in a step resolve to the lowest class index.
pub fn ctc_greedy_decode(logits: &LogitsSequence, charset: &Charset) -> Result<(String, f64)> {
    if logits.classes() != charset.class_count() {
        return Err(Error::ShapeMismatch(format!(
            "logits have {} classes but charset defines {}",
            logits.classes(),
            charset.class_count()
        )));
    }
    let mut text = String::new();
    let mut kept_sum = 0.0f64;
    let mut kept_count = 0usize;
    let mut prev = usize::MAX;
    for t in 0..logits.time_steps() {
        let row = logits.row(t);
        let mut arg = 0usize;
        let mut best = f32::NEG_INFINITY;
        for (c, &v) in row.iter().enumerate() {
            if v > best {
                best = v;
                arg = c;
            }
        }
        if arg != Charset::BLANK && arg != prev {
            // Charset indices are dense, so a valid class always resolves.
            let g = charset.grapheme(arg).ok_or_else(|| {
                Error::ShapeMismatch(format!("class {arg} outside charset"))
            })?;
            text.push_str(g);
            kept_sum += best as f64;
            kept_count += 1;
        }
        prev = arg;
    }
    let score = if kept_count == 0 {
        1.0
    } else {
        kept_sum / kept_count as f64
    };
    Ok((text, score))
}
