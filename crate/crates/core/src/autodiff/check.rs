//! Central finite-difference verification of analytic gradients.

use crate::error::AutodiffError;

use super::tape::{Tape, Var};
use super::tensor::Tensor;

/// Builds a scalar loss on a tape from the given parameter leaves. The
/// builder must be deterministic: it is re-invoked for every probe.
pub trait LossBuilder {
    fn build(&self, tape: &mut Tape, params: &[Var]) -> Result<Var, AutodiffError>;
}

impl<F> LossBuilder for F
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, AutodiffError>,
{
    fn build(&self, tape: &mut Tape, params: &[Var]) -> Result<Var, AutodiffError> {
        self(tape, params)
    }
}

fn evaluate(f: &impl LossBuilder, point: &[Tensor]) -> Result<f64, AutodiffError> {
    let mut tape = Tape::new();
    let vars: Vec<Var> = point.iter().map(|t| tape.param(t.clone())).collect();
    let loss = f.build(&mut tape, &vars)?;
    if tape.value(loss).numel() != 1 {
        return Err(AutodiffError::NonScalarLoss(tape.value(loss).shape().to_vec()));
    }
    let v = tape.value(loss).data()[0];
    if !v.is_finite() {
        return Err(AutodiffError::NonFinite("while probing the loss".to_string()));
    }
    Ok(v)
}

/// Max relative disagreement |analytic - central difference| / max(1, |analytic|)
/// per parameter tensor, in input order.
pub fn finite_diff_check_per_tensor(
    f: impl LossBuilder,
    point: &[Tensor],
    step: f64,
) -> Result<Vec<f64>, AutodiffError> {
    assert!(step > 0.0, "finite-difference step must be positive");

    let mut tape = Tape::new();
    let vars: Vec<Var> = point.iter().map(|t| tape.param(t.clone())).collect();
    let loss = f.build(&mut tape, &vars)?;
    if !tape.value(loss).data()[0].is_finite() {
        return Err(AutodiffError::NonFinite("in the loss value".to_string()));
    }
    tape.backward(loss)?;
    let analytic: Vec<Tensor> = vars
        .iter()
        .map(|&v| tape.grad(v).expect("parameter gradient populated by backward"))
        .collect();

    let mut probe = point.to_vec();
    let mut per_tensor = vec![0.0f64; point.len()];
    for (pi, tensor) in point.iter().enumerate() {
        for ci in 0..tensor.numel() {
            let orig = tensor.data()[ci];
            probe[pi].data_mut()[ci] = orig + step;
            let up = evaluate(&f, &probe)?;
            probe[pi].data_mut()[ci] = orig - step;
            let down = evaluate(&f, &probe)?;
            probe[pi].data_mut()[ci] = orig;
            let fd = (up - down) / (2.0 * step);
            let a = analytic[pi].data()[ci];
            let err = (a - fd).abs() / f64::max(1.0, a.abs());
            if !err.is_finite() {
                return Err(AutodiffError::NonFinite(format!(
                    "in gradient comparison at tensor {pi}, coordinate {ci}"
                )));
            }
            per_tensor[pi] = per_tensor[pi].max(err);
        }
    }
    Ok(per_tensor)
}

/// Max relative disagreement across all coordinates of all parameters.
pub fn finite_diff_check(
    f: impl LossBuilder,
    point: &[Tensor],
    step: f64,
) -> Result<f64, AutodiffError> {
    let per_tensor = finite_diff_check_per_tensor(f, point, step)?;
    Ok(per_tensor.into_iter().fold(0.0, f64::max))
}
