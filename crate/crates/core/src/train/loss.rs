//! Cross-entropy with L2 regularization, built on the tape through the
//! stable log-softmax path.

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::TrainError;

/// Negative log-likelihood of one example from its `[1, 3]` logits.
pub fn example_nll(tape: &mut Tape, logits: Var, label: usize) -> Result<Var, TrainError> {
    let classes = tape.value(logits).numel();
    if label >= classes {
        return Err(TrainError::LabelRange(label));
    }
    let logp = tape.log_softmax_last(logits)?;
    let mut pick = vec![0.0; classes];
    pick[label] = -1.0;
    let shape = tape.value(logits).shape().to_vec();
    let selector = tape.leaf(Tensor::new(shape, pick).expect("selector shape"));
    let chosen = tape.mul(logp, selector)?;
    Ok(tape.sum_all(chosen)?)
}

/// Sum of squared entries over the given weight tensors, as a tape scalar.
pub fn l2_penalty(tape: &mut Tape, weights: &[Var]) -> Result<Var, TrainError> {
    let mut total: Option<Var> = None;
    for &w in weights {
        let sq = tape.mul(w, w)?;
        let s = tape.sum_all(sq)?;
        total = Some(match total {
            Some(acc) => tape.add(acc, s)?,
            None => s,
        });
    }
    Ok(match total {
        Some(v) => v,
        None => tape.leaf(Tensor::scalar(0.0)),
    })
}

/// Mean cross-entropy over the batch plus `lambda` times the squared L2 norm
/// of the weight matrices.
pub fn batch_loss(
    tape: &mut Tape,
    items: &[(Var, usize)],
    weights: &[Var],
    lambda: f64,
) -> Result<Var, TrainError> {
    assert!(!items.is_empty(), "batch loss needs at least one example");
    let mut total: Option<Var> = None;
    for &(logits, label) in items {
        let nll = example_nll(tape, logits, label)?;
        total = Some(match total {
            Some(acc) => tape.add(acc, nll)?,
            None => nll,
        });
    }
    let mean = tape.scale(total.expect("nonempty batch"), 1.0 / items.len() as f64)?;
    if lambda == 0.0 {
        return Ok(mean);
    }
    let penalty = l2_penalty(tape, weights)?;
    let scaled = tape.scale(penalty, lambda)?;
    Ok(tape.add(mean, scaled)?)
}
