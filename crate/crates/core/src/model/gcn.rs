//! Graph convolution over the dependency adjacency, run in both edge
//! directions with the halves concatenated before the shared linear map.

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{AutodiffError, ModelError};
use crate::graph::Adjacency;

use super::params::TapeParams;

#[derive(Debug, Clone, Copy)]
pub struct GcnLayer {
    pub w: Var,
    pub b: Var,
}

impl GcnLayer {
    pub fn from_params(binding: &TapeParams, layer: usize) -> GcnLayer {
        GcnLayer { w: binding.var(&format!("gcn.{layer}.w")), b: binding.var(&format!("gcn.{layer}.b")) }
    }
}

/// Core of one layer, with the two propagation operands supplied separately
/// so tests can perturb the transposed side on its own. `a_bwd` must already
/// be the transpose of the forward matrix in ordinary use, and is ignored
/// entirely when `bidirectional` is false.
pub(crate) fn bigcn_layer_parts(
    tape: &mut Tape,
    h: Var,
    a_fwd: Tensor,
    a_bwd: Option<Tensor>,
    degrees: &[usize],
    layer: &GcnLayer,
    bidirectional: bool,
) -> Result<Var, ModelError> {
    let n = tape.value(h).shape()[0];
    let d = tape.value(h).cols();
    if a_fwd.shape() != [n, n] {
        return Err(ModelError::Autodiff(AutodiffError::ShapeMismatch {
            kernel: "bigcn-layer",
            detail: format!("adjacency {:?} for {n} tokens", a_fwd.shape()),
        }));
    }
    let fwd_leaf = tape.leaf(a_fwd);
    let fwd_msg = tape.matmul(fwd_leaf, h)?;
    let merged = if bidirectional {
        let bwd = a_bwd.expect("bidirectional layer needs the transposed adjacency");
        let bwd_leaf = tape.leaf(bwd);
        let bwd_msg = tape.matmul(bwd_leaf, h)?;
        tape.concat_cols(&[fwd_msg, bwd_msg])?
    } else {
        fwd_msg
    };
    // per-token normalization by degree + 1, as a constant row scale
    let width = if bidirectional { 2 * d } else { d };
    let mut scale = vec![0.0; n * width];
    for (i, &deg) in degrees.iter().enumerate() {
        let s = 1.0 / (deg as f64 + 1.0);
        scale[i * width..(i + 1) * width].iter_mut().for_each(|v| *v = s);
    }
    let scale_leaf = tape.leaf(Tensor::new(vec![n, width], scale).expect("scale shape"));
    let normalized = tape.mul(merged, scale_leaf)?;
    let projected = tape.matmul(normalized, layer.w)?;
    let shifted = tape.add(projected, layer.b)?;
    Ok(tape.relu(shifted)?)
}

/// One width-preserving layer: propagate along edges and against them, join
/// the two messages, normalize each token by its degree + 1, then apply the
/// learned map and ReLU.
pub fn bigcn_layer(
    tape: &mut Tape,
    h: Var,
    adjacency: &Adjacency,
    layer: &GcnLayer,
    bidirectional: bool,
) -> Result<Var, ModelError> {
    let a_bwd = bidirectional.then(|| adjacency.transposed_tensor());
    bigcn_layer_parts(tape, h, adjacency.to_tensor(), a_bwd, &adjacency.degrees(), layer, bidirectional)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DependencyGraph;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_node_with_averaging_weights_recovers_relu() {
        // single self-loop node: both halves equal h, degree 0, and
        // W = [I; I]/2 collapses the concatenation back to h
        let d = 3;
        let mut w_rows = Vec::new();
        for half in 0..2 {
            let _ = half;
            for r in 0..d {
                let mut row = vec![0.0; d];
                row[r] = 0.5;
                w_rows.push(row);
            }
        }
        let mut tape = Tape::new();
        let h = tape.leaf(Tensor::matrix(&[vec![0.7, 0.0, 2.5]]).unwrap());
        let layer = GcnLayer {
            w: tape.leaf(Tensor::matrix(&w_rows).unwrap()),
            b: tape.leaf(Tensor::zeros(&[d])),
        };
        let adj = Adjacency::identity(1);
        let out = bigcn_layer(&mut tape, h, &adj, &layer, true).unwrap();
        assert_eq!(tape.value(out).data(), &[0.7, 0.0, 2.5]);
    }

    #[test]
    fn identity_adjacency_makes_both_halves_equal() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (n, d) = (4, 3);
        let mut tape = Tape::new();
        let h = tape.leaf(Tensor::uniform(&[n, d], -1.0, 1.0, &mut rng));
        let adj = Adjacency::identity(n);
        let fwd_leaf = tape.leaf(adj.to_tensor());
        let bwd_leaf = tape.leaf(adj.transposed_tensor());
        let fwd_msg = tape.matmul(fwd_leaf, h).unwrap();
        let bwd_msg = tape.matmul(bwd_leaf, h).unwrap();
        assert_eq!(tape.value(fwd_msg).data(), tape.value(bwd_msg).data());
    }

    #[test]
    fn unidirectional_mode_ignores_transposed_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let (n, d) = (4, 6);
        let g = DependencyGraph::from_heads(&[2, 0, 2, 1], &["det", "root", "obj", "nmod"]).unwrap();
        let adj = Adjacency::binary(&g);

        let h_value = Tensor::uniform(&[n, d], -1.0, 1.0, &mut rng);
        let w_value = Tensor::uniform(&[d, d], -1.0, 1.0, &mut rng);
        let b_value = Tensor::uniform(&[d], -1.0, 1.0, &mut rng);

        let run = |perturbed_bwd: Tensor| {
            let mut tape = Tape::new();
            let h = tape.leaf(h_value.clone());
            let layer =
                GcnLayer { w: tape.leaf(w_value.clone()), b: tape.leaf(b_value.clone()) };
            let out = bigcn_layer_parts(
                &mut tape,
                h,
                adj.to_tensor(),
                Some(perturbed_bwd),
                &adj.degrees(),
                &layer,
                false,
            )
            .unwrap();
            tape.value(out).clone()
        };

        let baseline = run(adj.transposed_tensor());
        let mut scrambled = adj.transposed_tensor();
        scrambled.data_mut().iter_mut().for_each(|v| *v += 7.0);
        let perturbed = run(scrambled);
        assert_eq!(baseline.data(), perturbed.data());
    }
}
