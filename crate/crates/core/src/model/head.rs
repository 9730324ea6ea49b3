//! Aspect masking, retrieval attention, fusion, and the classifier.

use crate::autodiff::{Tape, Var};
use crate::error::ModelError;

/// Zero every row outside the 1-based aspect span, keeping aspect rows
/// untouched; gradients only flow through the kept rows.
pub fn aspect_mask(
    tape: &mut Tape,
    h: Var,
    aspect_start: usize,
    aspect_len: usize,
) -> Result<Var, ModelError> {
    let n = tape.value(h).shape()[0];
    if aspect_start < 1 || aspect_len < 1 || aspect_start + aspect_len - 1 > n {
        return Err(ModelError::BadSpan { start: aspect_start, len: aspect_len, tokens: n });
    }
    let keep: Vec<bool> = (0..n)
        .map(|i| i + 1 >= aspect_start && i + 1 <= aspect_start + aspect_len - 1)
        .collect();
    Ok(tape.mask_rows(h, &keep)?)
}

/// Score every context position by its inner product with the summed masked
/// rows, softmax-normalized: a `[1, n]` attention row.
pub fn retrieval_attention(tape: &mut Tape, h_ctx: Var, h_mask: Var) -> Result<Var, ModelError> {
    let pooled = tape.sum_axis(h_mask, 0)?;
    let pooled_t = tape.transpose(pooled)?;
    let scores = tape.matmul(h_ctx, pooled_t)?;
    let scores_row = tape.transpose(scores)?;
    Ok(tape.softmax_last(scores_row)?)
}

/// Attention-weighted sum of the context rows plus the projected mean of the
/// transformer output: the final `[1, 2*d_h]` sentence representation.
pub fn fuse_representations(
    tape: &mut Tape,
    h_ctx: Var,
    alpha: Var,
    z_out: Var,
    projection: Var,
) -> Result<Var, ModelError> {
    let weighted = tape.matmul(alpha, h_ctx)?;
    let pooled = tape.mean_axis(z_out, 0)?;
    let projected = tape.matmul(pooled, projection)?;
    Ok(tape.add(weighted, projected)?)
}

/// Linear map to the three classes followed by softmax. Returns both the
/// logits (for the stable loss path) and the probabilities.
pub fn classify(tape: &mut Tape, res: Var, w: Var, b: Var) -> Result<(Var, Var), ModelError> {
    let scores = tape.matmul(res, w)?;
    let logits = tape.add(scores, b)?;
    let prob = tape.softmax_last(logits)?;
    Ok((logits, prob))
}
