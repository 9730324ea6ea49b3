//! Transformer encoder: sinusoidal positions, multi-head self-attention,
//! residual connections with two normalization layers per block.

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::ModelError;

use super::config::ModelConfig;
use super::params::TapeParams;

pub const LN_EPS: f64 = 1e-5;

/// Sinusoidal positional encodings: even columns are sines, odd columns are
/// cosines, positions counted from zero.
pub fn positional_encoding(n: usize, d_model: usize) -> Result<Tensor, ModelError> {
    if d_model % 2 != 0 {
        return Err(ModelError::OddWidth(d_model));
    }
    let mut data = vec![0.0; n * d_model];
    for pos in 0..n {
        for i in 0..d_model / 2 {
            let rate = 10000f64.powf(2.0 * i as f64 / d_model as f64);
            let angle = pos as f64 / rate;
            data[pos * d_model + 2 * i] = angle.sin();
            data[pos * d_model + 2 * i + 1] = angle.cos();
        }
    }
    Ok(Tensor::new(vec![n, d_model], data).expect("positional encoding shape"))
}

/// softmax(Q K^T / sqrt(d_k)) V with row-wise softmax.
pub fn scaled_dot_attention(tape: &mut Tape, q: Var, k: Var, v: Var) -> Result<Var, ModelError> {
    let d_k = tape.value(q).cols();
    let k_t = tape.transpose(k)?;
    let scores = tape.matmul(q, k_t)?;
    let scaled = tape.scale(scores, 1.0 / (d_k as f64).sqrt())?;
    let weights = tape.softmax_last(scaled)?;
    Ok(tape.matmul(weights, v)?)
}

/// Per-head projection triple.
#[derive(Debug, Clone, Copy)]
pub struct AttentionHead {
    pub wq: Var,
    pub wk: Var,
    pub wv: Var,
}

/// One encoder block's parameters.
#[derive(Debug, Clone)]
pub struct EncoderBlock {
    pub heads: Vec<AttentionHead>,
    pub wo: Var,
    pub ln1_gain: Var,
    pub ln1_shift: Var,
    pub ff_w1: Var,
    pub ff_b1: Var,
    pub ff_w2: Var,
    pub ff_b2: Var,
    pub ln2_gain: Var,
    pub ln2_shift: Var,
}

impl EncoderBlock {
    pub fn from_params(binding: &TapeParams, block: usize, heads: usize) -> EncoderBlock {
        let prefix = format!("transformer.{block}");
        EncoderBlock {
            heads: (0..heads)
                .map(|h| AttentionHead {
                    wq: binding.var(&format!("{prefix}.head.{h}.wq")),
                    wk: binding.var(&format!("{prefix}.head.{h}.wk")),
                    wv: binding.var(&format!("{prefix}.head.{h}.wv")),
                })
                .collect(),
            wo: binding.var(&format!("{prefix}.wo")),
            ln1_gain: binding.var(&format!("{prefix}.ln1.gain")),
            ln1_shift: binding.var(&format!("{prefix}.ln1.shift")),
            ff_w1: binding.var(&format!("{prefix}.ff.w1")),
            ff_b1: binding.var(&format!("{prefix}.ff.b1")),
            ff_w2: binding.var(&format!("{prefix}.ff.w2")),
            ff_b2: binding.var(&format!("{prefix}.ff.b2")),
            ln2_gain: binding.var(&format!("{prefix}.ln2.gain")),
            ln2_shift: binding.var(&format!("{prefix}.ln2.shift")),
        }
    }
}

/// Project into every head, attend, concatenate, and mix back to model width.
pub fn multi_head_attention(tape: &mut Tape, x: Var, block: &EncoderBlock) -> Result<Var, ModelError> {
    let d_model = tape.value(x).cols();
    if d_model % block.heads.len() != 0 {
        return Err(ModelError::HeadSplit { heads: block.heads.len(), d_model });
    }
    let mut outputs = Vec::with_capacity(block.heads.len());
    for head in &block.heads {
        let q = tape.matmul(x, head.wq)?;
        let k = tape.matmul(x, head.wk)?;
        let v = tape.matmul(x, head.wv)?;
        outputs.push(scaled_dot_attention(tape, q, k, v)?);
    }
    let merged = tape.concat_cols(&outputs)?;
    Ok(tape.matmul(merged, block.wo)?)
}

fn feed_forward(tape: &mut Tape, x: Var, block: &EncoderBlock) -> Result<Var, ModelError> {
    let h = tape.matmul(x, block.ff_w1)?;
    let h = tape.add(h, block.ff_b1)?;
    let h = tape.relu(h)?;
    let out = tape.matmul(h, block.ff_w2)?;
    Ok(tape.add(out, block.ff_b2)?)
}

/// Full encoder: add positions, then per block run attention and the
/// position-wise feed-forward, each followed by a residual connection and
/// layer normalization.
pub fn transformer_encode(
    tape: &mut Tape,
    embeddings: Var,
    binding: &TapeParams,
    config: &ModelConfig,
) -> Result<Var, ModelError> {
    let n = tape.value(embeddings).shape()[0];
    let positions = tape.leaf(positional_encoding(n, config.d_model())?);
    let mut x = tape.add(embeddings, positions)?;
    for b in 0..config.transformer_blocks {
        let block = EncoderBlock::from_params(binding, b, config.heads);
        let attended = multi_head_attention(tape, x, &block)?;
        let res1 = tape.add(x, attended)?;
        let norm1 = tape.layer_norm(res1, block.ln1_gain, block.ln1_shift, LN_EPS)?;
        let ff = feed_forward(tape, norm1, &block)?;
        let res2 = tape.add(norm1, ff)?;
        x = tape.layer_norm(res2, block.ln2_gain, block.ln2_shift, LN_EPS)?;
    }
    Ok(x)
}
