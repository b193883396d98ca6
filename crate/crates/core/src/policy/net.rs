//! Small multi-head MLP with manual forward/backward passes, plus the Adam
//! optimizer. No autograd framework; parameters live in one flat buffer so
//! optimization, checkpointing, and finite-difference checks stay simple.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub heads: Vec<usize>,
}

impl NetSpec {
    pub fn new(input_dim: usize, hidden: Vec<usize>, heads: Vec<usize>) -> Self {
        NetSpec {
            input_dim,
            hidden,
            heads,
        }
    }

    fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::new();
        let mut prev = self.input_dim;
        for &h in &self.hidden {
            dims.push((prev, h));
            prev = h;
        }
        dims
    }

    pub fn param_count(&self) -> usize {
        let mut n = 0;
        for (i, o) in self.layer_dims() {
            n += i * o + o;
        }
        let last = *self.hidden.last().unwrap_or(&self.input_dim);
        for &h in &self.heads {
            n += last * h + h;
        }
        n
    }
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    w: usize,
    b: usize,
    fan_in: usize,
    fan_out: usize,
}

/// Tanh MLP backbone with one linear projection per head.
#[derive(Debug, Clone)]
pub struct MultiHeadNet {
    pub spec: NetSpec,
    pub params: Vec<f64>,
    hidden_slots: Vec<Slot>,
    head_slots: Vec<Slot>,
}

/// Saved forward activations for the backward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Input followed by each hidden layer's post-tanh activation.
    pub activations: Vec<Vec<f64>>,
    pub logits: Vec<Vec<f64>>,
}

impl MultiHeadNet {
    /// Builds the net with orthogonal-style initialization: hidden layers at
    /// gain sqrt(2), each head at the gain given in `head_gains`.
    pub fn new(spec: NetSpec, head_gains: &[f64], rng: &mut ChaCha8Rng) -> Self {
        assert_eq!(spec.heads.len(), head_gains.len());
        let mut params = vec![0.0; spec.param_count()];
        let mut hidden_slots = Vec::new();
        let mut head_slots = Vec::new();
        let mut off = 0;
        for (fan_in, fan_out) in spec.layer_dims() {
            let slot = Slot {
                w: off,
                b: off + fan_in * fan_out,
                fan_in,
                fan_out,
            };
            off = slot.b + fan_out;
            orthogonal_init(
                &mut params[slot.w..slot.w + fan_in * fan_out],
                fan_out,
                fan_in,
                std::f64::consts::SQRT_2,
                rng,
            );
            hidden_slots.push(slot);
        }
        let last = *spec.hidden.last().unwrap_or(&spec.input_dim);
        for (h, &dim) in spec.heads.iter().enumerate() {
            let slot = Slot {
                w: off,
                b: off + last * dim,
                fan_in: last,
                fan_out: dim,
            };
            off = slot.b + dim;
            orthogonal_init(
                &mut params[slot.w..slot.w + last * dim],
                dim,
                last,
                head_gains[h],
                rng,
            );
            head_slots.push(slot);
        }
        debug_assert_eq!(off, params.len());
        MultiHeadNet {
            spec,
            params,
            hidden_slots,
            head_slots,
        }
    }

    /// Rebuilds layout metadata for parameters loaded from a checkpoint.
    pub fn from_params(spec: NetSpec, params: Vec<f64>) -> Option<Self> {
        if params.len() != spec.param_count() {
            return None;
        }
        let mut hidden_slots = Vec::new();
        let mut head_slots = Vec::new();
        let mut off = 0;
        for (fan_in, fan_out) in spec.layer_dims() {
            let slot = Slot {
                w: off,
                b: off + fan_in * fan_out,
                fan_in,
                fan_out,
            };
            off = slot.b + fan_out;
            hidden_slots.push(slot);
        }
        let last = *spec.hidden.last().unwrap_or(&spec.input_dim);
        for &dim in &spec.heads {
            let slot = Slot {
                w: off,
                b: off + last * dim,
                fan_in: last,
                fan_out: dim,
            };
            off = slot.b + dim;
            head_slots.push(slot);
        }
        Some(MultiHeadNet {
            spec,
            params,
            hidden_slots,
            head_slots,
        })
    }

    /// Mutable bias slice of head `h`.
    pub fn head_bias_mut(&mut self, h: usize) -> &mut [f64] {
        let slot = self.head_slots[h];
        &mut self.params[slot.b..slot.b + slot.fan_out]
    }

    pub fn forward(&self, x: &[f64]) -> Trace {
        debug_assert_eq!(x.len(), self.spec.input_dim);
        let mut activations = Vec::with_capacity(self.hidden_slots.len() + 1);
        activations.push(x.to_vec());
        for slot in &self.hidden_slots {
            let prev = activations.last().unwrap();
            let mut z = self.affine(slot, prev);
            for v in &mut z {
                *v = v.tanh();
            }
            activations.push(z);
        }
        let last = activations.last().unwrap();
        let logits = self
            .head_slots
            .iter()
            .map(|slot| self.affine(slot, last))
            .collect();
        Trace {
            activations,
            logits,
        }
    }

    fn affine(&self, slot: &Slot, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; slot.fan_out];
        let weights = &self.params[slot.w..slot.w + slot.fan_in * slot.fan_out];
        let biases = &self.params[slot.b..slot.b + slot.fan_out];
        for ((o, row), b) in out
            .iter_mut()
            .zip(weights.chunks_exact(slot.fan_in))
            .zip(biases)
        {
            let dot: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum();
            *o = b + dot;
        }
        out
    }

    /// Accumulates parameter gradients for one sample given per-head logit
    /// gradients. `grads` must have `param_count` length.
    pub fn backward(&self, trace: &Trace, d_logits: &[Vec<f64>], grads: &mut [f64]) {
        debug_assert_eq!(grads.len(), self.params.len());
        let last_act = trace.activations.last().unwrap();
        let mut d_hidden = vec![0.0; last_act.len()];
        for (slot, dl) in self.head_slots.iter().zip(d_logits) {
            if dl.is_empty() {
                continue;
            }
            debug_assert_eq!(dl.len(), slot.fan_out);
            for (j, &g) in dl.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let row = slot.w + j * slot.fan_in;
                grads[slot.b + j] += g;
                let w_row = &self.params[row..row + slot.fan_in];
                let g_row = &mut grads[row..row + slot.fan_in];
                for ((gr, dh), (&a, &w)) in g_row
                    .iter_mut()
                    .zip(d_hidden.iter_mut())
                    .zip(last_act.iter().zip(w_row))
                {
                    *gr += g * a;
                    *dh += g * w;
                }
            }
        }
        // Hidden layers, newest first.
        for (idx, slot) in self.hidden_slots.iter().enumerate().rev() {
            let act = &trace.activations[idx + 1];
            let prev = &trace.activations[idx];
            let mut d_prev = vec![0.0; prev.len()];
            for (j, (&a, &dh)) in act.iter().zip(&d_hidden).enumerate() {
                let dz = dh * (1.0 - a * a);
                if dz == 0.0 {
                    continue;
                }
                let row = slot.w + j * slot.fan_in;
                grads[slot.b + j] += dz;
                let w_row = &self.params[row..row + slot.fan_in];
                let g_row = &mut grads[row..row + slot.fan_in];
                for ((gr, dp), (&pv, &w)) in g_row
                    .iter_mut()
                    .zip(d_prev.iter_mut())
                    .zip(prev.iter().zip(w_row))
                {
                    *gr += dz * pv;
                    *dp += dz * w;
                }
            }
            d_hidden = d_prev;
        }
    }
}

/// Orthogonal initialization of a fan_out x fan_in weight block (row-major)
/// via Gram-Schmidt on Gaussian rows, scaled by `gain`.
fn orthogonal_init(w: &mut [f64], rows: usize, cols: usize, gain: f64, rng: &mut ChaCha8Rng) {
    debug_assert_eq!(w.len(), rows * cols);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(rows);
    for r in 0..rows {
        let mut v: Vec<f64> = (0..cols)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(a, b)| a * b).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= dot * bi;
            }
        }
        let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for vi in &mut v {
                *vi /= norm;
            }
        } else {
            // Degenerate draw (or rows > cols): fall back to a fresh unit row.
            let j = r % cols;
            v = (0..cols).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
        }
        for (c, &vi) in v.iter().enumerate() {
            w[r * cols + c] = gain * vi;
        }
        if basis.len() < cols {
            basis.push(v);
        }
    }
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln() + max;
    logits.iter().map(|l| l - log_sum).collect()
}

pub fn sample_from_logps(logps: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, lp) in logps.iter().enumerate() {
        acc += lp.exp();
        if u < acc {
            return i;
        }
    }
    logps.len() - 1
}

pub fn entropy(logps: &[f64]) -> f64 {
    -logps.iter().map(|lp| lp.exp() * lp).sum::<f64>()
}

/// `d logp(chosen) / d logits = onehot(chosen) - softmax(logits)`.
pub fn d_logp_d_logits(logps: &[f64], chosen: usize, coef: f64, out: &mut [f64]) {
    for (j, lp) in logps.iter().enumerate() {
        let p = lp.exp();
        let indicator = if j == chosen { 1.0 } else { 0.0 };
        out[j] += coef * (indicator - p);
    }
}

/// dH/d(logits)_j = -p_j (logp_j + H).
pub fn d_entropy_d_logits(logps: &[f64], coef: f64, out: &mut [f64]) {
    let h = entropy(logps);
    for (j, lp) in logps.iter().enumerate() {
        out[j] += coef * (-lp.exp() * (lp + h));
    }
}

/// Adam over a set of parameter buffers with a shared step counter.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl Adam {
    pub fn new(sizes: &[usize]) -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-5,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

/// Scales gradient buffers in place so their joint L2 norm is at most
/// `max_norm`; returns the pre-clip norm.
pub fn clip_grad_norm(grads: &mut [&mut [f64]], max_norm: f64) -> f64 {
    let sq: f64 = grads
        .iter()
        .map(|g| g.iter().map(|x| x * x).sum::<f64>())
        .sum();
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            for x in g.iter_mut() {
                *x *= scale;
            }
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn tiny_net(seed: u64) -> MultiHeadNet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        MultiHeadNet::new(NetSpec::new(3, vec![4], vec![2, 3]), &[0.01, 0.01], &mut rng)
    }

    #[test]
    fn forward_shapes_match_spec() {
        let net = tiny_net(1);
        let tr = net.forward(&[0.1, -0.2, 0.3]);
        assert_eq!(tr.logits.len(), 2);
        assert_eq!(tr.logits[0].len(), 2);
        assert_eq!(tr.logits[1].len(), 3);
        assert_eq!(tr.activations.len(), 2);
    }

    #[test]
    fn log_softmax_normalizes() {
        let lps = log_softmax(&[1.0, 2.0, 3.0]);
        let total: f64 = lps.iter().map(|l| l.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_inputs_give_identical_outputs() {
        let net = tiny_net(2);
        let a = net.forward(&[0.5, 0.5, -1.0]);
        let b = net.forward(&[0.5, 0.5, -1.0]);
        assert_eq!(a.logits, b.logits);
    }

    #[test]
    fn orthogonal_rows_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut w = vec![0.0; 4 * 8];
        orthogonal_init(&mut w, 4, 8, 1.0, &mut rng);
        for r1 in 0..4 {
            for r2 in 0..4 {
                let dot: f64 = (0..8).map(|c| w[r1 * 8 + c] * w[r2 * 8 + c]).sum();
                let expect = if r1 == r2 { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-9, "rows {r1},{r2}: {dot}");
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences_on_logit_sum() {
        // Loss = weighted sum of all logits; analytic grads vs central FD.
        let mut net = tiny_net(7);
        let x = [0.3, -0.7, 0.9];
        let weights = [vec![0.7, -0.3], vec![0.2, 0.5, -0.9]];
        let loss = |net: &MultiHeadNet| -> f64 {
            let tr = net.forward(&x);
            tr.logits
                .iter()
                .zip(&weights)
                .map(|(l, w)| l.iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
                .sum()
        };
        let tr = net.forward(&x);
        let mut grads = vec![0.0; net.params.len()];
        net.backward(&tr, &weights, &mut grads);
        let h = 1e-6;
        for i in 0..net.params.len() {
            let orig = net.params[i];
            net.params[i] = orig + h;
            let up = loss(&net);
            net.params[i] = orig - h;
            let down = loss(&net);
            net.params[i] = orig;
            let fd = (up - down) / (2.0 * h);
            assert!(
                (fd - grads[i]).abs() <= 1e-6 * fd.abs().max(grads[i].abs()).max(1.0),
                "param {i}: fd={fd} analytic={}",
                grads[i]
            );
        }
    }
}
