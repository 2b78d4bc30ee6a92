//! Plain MLP with rectified-linear hidden layers and a final linear layer
//! holding two heads of `n_actions` outputs each: Q-values first, predicted
//! immediate rewards second.

use super::DqnError;
use rand::Rng;

/// Dense layer; weights row-major `[out_dim][in_dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    fn new(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Linear {
        // Kaiming-uniform fan-in init.
        let lim = (6.0 / in_dim as f64).sqrt();
        let w = (0..in_dim * out_dim).map(|_| rng.gen_range(-lim..lim)).collect();
        Linear { w, b: vec![0.0; out_dim], in_dim, out_dim }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(x.len(), self.in_dim);
        out.clear();
        for o in 0..self.out_dim {
            let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = self.b[o];
            for (wi, xi) in row.iter().zip(x.iter()) {
                acc += wi * xi;
            }
            out.push(acc);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    pub layers: Vec<Linear>,
    pub n_actions: usize,
}

impl QNetwork {
    /// Builds input -> hidden... -> 2*n_actions with ReLU hidden activations.
    pub fn new(input_dim: usize, hidden: &[usize], n_actions: usize, rng: &mut impl Rng) -> QNetwork {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);
        dims.push(2 * n_actions);
        let layers = dims.windows(2).map(|w| Linear::new(w[0], w[1], rng)).collect();
        QNetwork { layers, n_actions }
    }

    /// The agent architecture: 154 -> 128 -> 128 -> (8 + 8).
    pub fn traffic_default(rng: &mut impl Rng) -> QNetwork {
        QNetwork::new(crate::features::STATE_DIM, &[128, 128], 8, rng)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    /// Layer widths including input and output.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim()];
        d.extend(self.layers.iter().map(|l| l.out_dim));
        d
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Activations of every layer, index 0 holding the input. Hidden
    /// entries are post-ReLU; the last entry is the raw head output.
    pub(crate) fn forward_full(&self, x: &[f64]) -> Vec<Vec<f64>> {
        debug_assert_eq!(x.len(), self.input_dim());
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.out_dim);
            layer.apply(acts.last().unwrap(), &mut out);
            if li != last {
                for v in &mut out {
                    *v = v.max(0.0);
                }
            }
            acts.push(out);
        }
        acts
    }

    /// Deterministic forward pass returning the two heads (q, r_hat).
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>), DqnError> {
        if x.len() != self.input_dim() {
            return Err(DqnError::DimMismatch { expected: self.input_dim(), got: x.len() });
        }
        let acts = self.forward_full(x);
        let out = acts.last().unwrap();
        Ok((out[..self.n_actions].to_vec(), out[self.n_actions..].to_vec()))
    }

    /// Q-head only.
    pub fn q_values(&self, x: &[f64]) -> Result<Vec<f64>, DqnError> {
        Ok(self.forward(x)?.0)
    }

    /// Backpropagates `dout` (gradient w.r.t. the raw head output) through
    /// the cached activations, accumulating into `grads`.
    pub(crate) fn backward_into(&self, acts: &[Vec<f64>], dout: &[f64], grads: &mut Gradients) {
        let mut delta = dout.to_vec();
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let input = &acts[li];
            let (dw, db) = &mut grads.layers[li];
            for o in 0..layer.out_dim {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                db[o] += d;
                let row = &mut dw[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (g, xi) in row.iter_mut().zip(input.iter()) {
                    *g += d * xi;
                }
            }
            if li == 0 {
                break;
            }
            // Gradient w.r.t. this layer's input, gated by the ReLU that
            // produced it (post-activation > 0 iff the unit was active).
            let mut dx = vec![0.0; layer.in_dim];
            for o in 0..layer.out_dim {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (g, wi) in dx.iter_mut().zip(row.iter()) {
                    *g += d * wi;
                }
            }
            for (g, a) in dx.iter_mut().zip(input.iter()) {
                if *a <= 0.0 {
                    *g = 0.0;
                }
            }
            delta = dx;
        }
    }

    /// All parameters flattened (layer order, weights then biases).
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.num_params());
        let mut at = 0;
        for l in &mut self.layers {
            let wn = l.w.len();
            l.w.copy_from_slice(&params[at..at + wn]);
            at += wn;
            let bn = l.b.len();
            l.b.copy_from_slice(&params[at..at + bn]);
            at += bn;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().all(|v| v.is_finite()) && l.b.iter().all(|v| v.is_finite()))
    }
}

/// Parameter gradients matching a network's shape.
#[derive(Debug, Clone)]
pub struct Gradients {
    /// (dw, db) per layer.
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradients {
    pub fn zeros_like(net: &QNetwork) -> Gradients {
        Gradients {
            layers: net.layers.iter().map(|l| (vec![0.0; l.w.len()], vec![0.0; l.b.len()])).collect(),
        }
    }

    pub fn reset(&mut self) {
        for (dw, db) in &mut self.layers {
            dw.iter_mut().for_each(|v| *v = 0.0);
            db.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for (dw, db) in &mut self.layers {
            dw.iter_mut().for_each(|v| *v *= s);
            db.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (dw, db) in &self.layers {
            out.extend_from_slice(dw);
            out.extend_from_slice(db);
        }
        out
    }
}
