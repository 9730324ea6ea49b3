//! Bidirectional LSTM encoder over the token embeddings.

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::ModelError;

use super::params::TapeParams;

/// Fused gate weights for one direction: input projection, recurrent
/// projection, and bias, each four gates wide (input, forget, cell, output).
#[derive(Debug, Clone, Copy)]
pub struct LstmDirection {
    pub w_ih: Var,
    pub w_hh: Var,
    pub b: Var,
}

impl LstmDirection {
    pub fn from_params(binding: &TapeParams, dir: &str) -> LstmDirection {
        LstmDirection {
            w_ih: binding.var(&format!("lstm.{dir}.w_ih")),
            w_hh: binding.var(&format!("lstm.{dir}.w_hh")),
            b: binding.var(&format!("lstm.{dir}.b")),
        }
    }
}

fn lstm_cell(
    tape: &mut Tape,
    x_t: Var,
    h_prev: Var,
    c_prev: Var,
    dir: &LstmDirection,
    d_h: usize,
) -> Result<(Var, Var), ModelError> {
    let xw = tape.matmul(x_t, dir.w_ih)?;
    let hw = tape.matmul(h_prev, dir.w_hh)?;
    let pre = tape.add(xw, hw)?;
    let z = tape.add(pre, dir.b)?;
    let i_gate = {
        let s = tape.slice_cols(z, 0, d_h)?;
        tape.sigmoid(s)?
    };
    let f_gate = {
        let s = tape.slice_cols(z, d_h, 2 * d_h)?;
        tape.sigmoid(s)?
    };
    let g_gate = {
        let s = tape.slice_cols(z, 2 * d_h, 3 * d_h)?;
        tape.tanh(s)?
    };
    let o_gate = {
        let s = tape.slice_cols(z, 3 * d_h, 4 * d_h)?;
        tape.sigmoid(s)?
    };
    let keep = tape.mul(f_gate, c_prev)?;
    let write = tape.mul(i_gate, g_gate)?;
    let c = tape.add(keep, write)?;
    let c_act = tape.tanh(c)?;
    let h = tape.mul(o_gate, c_act)?;
    Ok((h, c))
}

/// One direction over the whole sentence; hidden states returned in original
/// token order regardless of scan direction. Initial hidden and cell states
/// are zero.
fn run_direction(
    tape: &mut Tape,
    embeddings: Var,
    dir: &LstmDirection,
    d_h: usize,
    reverse: bool,
) -> Result<Vec<Var>, ModelError> {
    let n = tape.value(embeddings).shape()[0];
    let mut h = tape.leaf(Tensor::zeros(&[1, d_h]));
    let mut c = tape.leaf(Tensor::zeros(&[1, d_h]));
    let mut states = vec![h; n];
    let order: Vec<usize> = if reverse { (0..n).rev().collect() } else { (0..n).collect() };
    for t in order {
        let x_t = tape.row(embeddings, t)?;
        let (h_next, c_next) = lstm_cell(tape, x_t, h, c, dir, d_h)?;
        h = h_next;
        c = c_next;
        states[t] = h;
    }
    Ok(states)
}

/// Encode the sentence in both directions and concatenate the hidden states
/// per position, giving an n-by-2*d_h context matrix.
pub fn bilstm_encode(
    tape: &mut Tape,
    embeddings: Var,
    fwd: &LstmDirection,
    bwd: &LstmDirection,
    d_h: usize,
) -> Result<Var, ModelError> {
    let fwd_states = run_direction(tape, embeddings, fwd, d_h, false)?;
    let bwd_states = run_direction(tape, embeddings, bwd, d_h, true)?;
    let h_fwd = tape.concat_rows(&fwd_states)?;
    let h_bwd = tape.concat_rows(&bwd_states)?;
    Ok(tape.concat_cols(&[h_fwd, h_bwd])?)
}
