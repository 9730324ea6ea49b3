//! Named parameter store and the Adam optimizer.

use std::collections::HashMap;

use crate::error::AutodiffError;

use super::tensor::Tensor;

/// One trainable tensor with its accumulated gradient.
#[derive(Debug, Clone)]
pub struct ParamEntry {
    pub name: String,
    pub value: Tensor,
    pub grad: Option<Vec<f64>>,
    /// Whether the tensor counts toward the L2 regularization term
    /// (weight matrices yes, biases and normalization vectors no).
    pub weight_decay: bool,
}

/// Ordered collection of named parameters. Insertion order is the canonical
/// order used by the optimizer, checkpoints, and tape registration.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    entries: Vec<ParamEntry>,
    index: HashMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore::default()
    }

    pub fn insert(&mut self, name: &str, value: Tensor, weight_decay: bool) {
        assert!(
            !self.index.contains_key(name),
            "duplicate parameter name `{name}`"
        );
        self.index.insert(name.to_string(), self.entries.len());
        self.entries.push(ParamEntry { name: name.to_string(), value, grad: None, weight_decay });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ParamEntry> {
        self.entries.iter()
    }

    pub fn get(&self, name: &str) -> Result<&Tensor, AutodiffError> {
        self.index
            .get(name)
            .map(|&i| &self.entries[i].value)
            .ok_or_else(|| AutodiffError::UnknownParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor, AutodiffError> {
        match self.index.get(name) {
            Some(&i) => Ok(&mut self.entries[i].value),
            None => Err(AutodiffError::UnknownParam(name.to_string())),
        }
    }

    /// Add a gradient contribution for `name`, accumulating over batches.
    pub fn accumulate_grad(&mut self, name: &str, grad: &[f64]) -> Result<(), AutodiffError> {
        let i = *self
            .index
            .get(name)
            .ok_or_else(|| AutodiffError::UnknownParam(name.to_string()))?;
        let entry = &mut self.entries[i];
        if grad.len() != entry.value.numel() {
            return Err(AutodiffError::StateShape {
                name: name.to_string(),
                detail: format!("gradient length {} vs {}", grad.len(), entry.value.numel()),
            });
        }
        let buf = entry.grad.get_or_insert_with(|| vec![0.0; grad.len()]);
        for (b, &g) in buf.iter_mut().zip(grad) {
            *b += g;
        }
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        for entry in &mut self.entries {
            entry.grad = None;
        }
    }

    /// Sum of squared entries over the weight-decay tensors.
    pub fn weight_squared_norm(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.weight_decay)
            .map(|e| e.value.squared_norm())
            .sum()
    }

    /// Largest absolute parameter value per tensor, for diagnostics.
    pub fn norm_summary(&self) -> String {
        let mut worst: Vec<(&str, f64)> = self
            .entries
            .iter()
            .map(|e| {
                let m = e.value.data().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
                (e.name.as_str(), m)
            })
            .collect();
        worst.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        worst
            .iter()
            .take(5)
            .map(|(n, m)| format!("{n}={m:.3e}"))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Adam hyperparameters. Only the learning rate is commonly changed; the
/// moment decays and epsilon keep their usual defaults.
#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 0.001, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First and second moment buffers, one pair per parameter, plus the shared
/// step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    step: u64,
    moments: Vec<(Vec<f64>, Vec<f64>)>,
}

impl AdamState {
    pub fn new(params: &ParamStore) -> Self {
        let moments = params
            .iter()
            .map(|e| (vec![0.0; e.value.numel()], vec![0.0; e.value.numel()]))
            .collect();
        AdamState { step: 0, moments }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update with bias correction. Gradients are consumed and zeroed;
/// a parameter with no gradient is treated as zero-gradient.
pub fn adam_step(
    params: &mut ParamStore,
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<(), AutodiffError> {
    if state.moments.len() != params.entries.len() {
        return Err(AutodiffError::StateShape {
            name: "<store>".to_string(),
            detail: format!("{} moment pairs vs {} parameters", state.moments.len(), params.entries.len()),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);

    for (entry, (m, v)) in params.entries.iter_mut().zip(&mut state.moments) {
        if m.len() != entry.value.numel() {
            return Err(AutodiffError::StateShape {
                name: entry.name.clone(),
                detail: format!("moment length {} vs {}", m.len(), entry.value.numel()),
            });
        }
        let zero = vec![0.0; entry.value.numel()];
        let grad = entry.grad.as_deref().unwrap_or(&zero);
        let data = entry.value.data_mut();
        for i in 0..data.len() {
            let g = grad[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            data[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
        entry.grad = None;
    }
    Ok(())
}
