//! A small multilayer perceptron with hand-written reverse mode and AdamW.
//!
//! Parameters live in one flat buffer. For each layer, in order, the buffer
//! holds the `out×in` weight matrix row-major followed by the `out` biases;
//! this is also the on-disk layout of the weights file. Hidden layers use
//! SiLU, the output layer is linear.

use rand::Rng;

use crate::rng;
use crate::{Error, Result};

/// Hidden width used when none is configured.
pub const DEFAULT_HIDDEN: usize = 512;

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

#[inline]
fn silu_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    dims: Vec<usize>,
    values: Vec<f64>,
}

/// Gradients of a scalar with respect to the parameters and the input.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub params: Vec<f64>,
    pub input: Vec<f64>,
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

/// Uniform Glorot initialization with zero biases, deterministic in `seed`.
pub fn mlp_init(seed: u64, in_dim: usize, hidden_dims: &[usize], out_dim: usize) -> Result<MlpParams> {
    let mut dims = Vec::with_capacity(hidden_dims.len() + 2);
    dims.push(in_dim);
    dims.extend_from_slice(hidden_dims);
    dims.push(out_dim);
    if dims.contains(&0) {
        return Err(Error::invalid("layer dimensions must be positive"));
    }
    let mut rng = rng::stream(seed, rng::STREAM_INIT);
    let mut params = MlpParams::zeros(&dims)?;
    for layer in 0..params.num_layers() {
        let (fan_in, fan_out) = (dims[layer], dims[layer + 1]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let (w, _) = params.layer_range(layer);
        for v in &mut params.values[w] {
            *v = rng.gen_range(-limit..limit);
        }
    }
    Ok(params)
}

impl MlpParams {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::invalid("an MLP needs at least two positive layer sizes"));
        }
        Ok(MlpParams {
            dims: dims.to_vec(),
            values: vec![0.0; param_count(dims)],
        })
    }

    /// Rebuilds parameters from the flat layout.
    pub fn from_values(dims: &[usize], values: Vec<f64>) -> Result<Self> {
        let mut p = MlpParams::zeros(dims)?;
        if values.len() != p.values.len() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                p.values.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite parameter"));
        }
        p.values = values;
        Ok(p)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn in_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn out_dim(&self) -> usize {
        *self.dims.last().expect("at least two layers")
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn layer_offset(&self, layer: usize) -> usize {
        param_count(&self.dims[..=layer])
    }

    /// Ranges of the weight block and the bias block of `layer` in the flat buffer.
    pub fn layer_range(&self, layer: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let start = self.layer_offset(layer);
        let (fan_in, fan_out) = (self.dims[layer], self.dims[layer + 1]);
        let w_end = start + fan_in * fan_out;
        (start..w_end, w_end..w_end + fan_out)
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn from_le_bytes(dims: &[usize], bytes: &[u8]) -> Result<Self> {
        if !bytes.len().is_multiple_of(8) {
            return Err(Error::FormatError("weight payload is not a multiple of 8 bytes".into()));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        MlpParams::from_values(dims, values).map_err(|e| Error::FormatError(e.to_string()))
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.in_dim() {
            return Err(Error::invalid(format!(
                "network expects {} inputs, got {}",
                self.in_dim(),
                input.len()
            )));
        }
        Ok(())
    }

    fn affine(&self, layer: usize, x: &[f64], out: &mut Vec<f64>) {
        let (w, b) = self.layer_range(layer);
        let fan_in = self.dims[layer];
        let weights = &self.values[w];
        out.clear();
        out.extend(self.values[b].iter().enumerate().map(|(o, &bias)| {
            let row = &weights[o * fan_in..(o + 1) * fan_in];
            bias + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
        }));
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut x = input.to_vec();
        let mut next = Vec::new();
        for layer in 0..self.num_layers() {
            self.affine(layer, &x, &mut next);
            if layer + 1 < self.num_layers() {
                next.iter_mut().for_each(|v| *v = silu(*v));
            }
            std::mem::swap(&mut x, &mut next);
        }
        Ok(x)
    }

    /// Forward pass keeping per-layer inputs and pre-activations.
    fn forward_cached(&self, input: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut inputs = Vec::with_capacity(self.num_layers());
        let mut pre = Vec::with_capacity(self.num_layers());
        let mut x = input.to_vec();
        for layer in 0..self.num_layers() {
            let mut z = Vec::new();
            self.affine(layer, &x, &mut z);
            let next = if layer + 1 < self.num_layers() {
                z.iter().map(|&v| silu(v)).collect()
            } else {
                z.clone()
            };
            inputs.push(std::mem::replace(&mut x, next));
            pre.push(z);
        }
        inputs.push(x);
        (inputs, pre)
    }

    /// Runs forward then backward, adding parameter gradients into `param_grad`.
    ///
    /// `cotangent` maps the network output to the output cotangent; it sees the
    /// forward output so callers can fuse loss evaluation. Returns the input
    /// gradient and whatever the closure returned.
    pub fn forward_backward<T>(
        &self,
        input: &[f64],
        param_grad: &mut [f64],
        cotangent: impl FnOnce(&[f64]) -> (Vec<f64>, T),
    ) -> Result<(Vec<f64>, T)> {
        self.check_input(input)?;
        if param_grad.len() != self.values.len() {
            return Err(Error::invalid("gradient buffer has the wrong size"));
        }
        let (inputs, pre) = self.forward_cached(input);
        let (mut delta, extra) = cotangent(&inputs[self.num_layers()]);
        if delta.len() != self.out_dim() {
            return Err(Error::invalid("output cotangent has the wrong size"));
        }
        for layer in (0..self.num_layers()).rev() {
            if layer + 1 < self.num_layers() {
                for (d, &z) in delta.iter_mut().zip(&pre[layer]) {
                    *d *= silu_grad(z);
                }
            }
            let (w, b) = self.layer_range(layer);
            let fan_in = self.dims[layer];
            let x = &inputs[layer];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                param_grad[b.start + o] += d;
                let row = &mut param_grad[w.start + o * fan_in..w.start + (o + 1) * fan_in];
                for (g, &xi) in row.iter_mut().zip(x) {
                    *g += d * xi;
                }
            }
            let weights = &self.values[w];
            let mut prev = vec![0.0; fan_in];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &weights[o * fan_in..(o + 1) * fan_in];
                for (p, &wv) in prev.iter_mut().zip(row) {
                    *p += d * wv;
                }
            }
            delta = prev;
        }
        Ok((delta, extra))
    }
}

pub fn mlp_forward(p: &MlpParams, input: &[f64]) -> Result<Vec<f64>> {
    p.forward(input)
}

/// Reverse-mode gradients of `⟨output_grad, f(input)⟩`.
pub fn mlp_backward(p: &MlpParams, input: &[f64], output_grad: &[f64]) -> Result<MlpGrads> {
    if output_grad.len() != p.out_dim() {
        return Err(Error::invalid("output gradient has the wrong size"));
    }
    let mut params = vec![0.0; p.num_params()];
    let (input_grad, ()) = p.forward_backward(input, &mut params, |_| (output_grad.to_vec(), ()))?;
    Ok(MlpGrads {
        params,
        input: input_grad,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState {
    pub config: AdamWConfig,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step: u64,
}

impl AdamWState {
    pub fn new(params: &MlpParams, config: AdamWConfig) -> Self {
        AdamWState {
            config,
            first_moment: vec![0.0; params.num_params()],
            second_moment: vec![0.0; params.num_params()],
            step: 0,
        }
    }
}

/// One AdamW update: decoupled decay `p ← p − lr·wd·p`, then the bias-corrected Adam step.
pub fn adamw_step(params: &mut MlpParams, grads: &[f64], state: &mut AdamWState) -> Result<()> {
    if grads.len() != params.num_params() || state.first_moment.len() != params.num_params() {
        return Err(Error::invalid(
            "gradient and optimizer shapes do not match the parameters",
        ));
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient);
    }
    let AdamWConfig {
        lr,
        beta1,
        beta2,
        eps,
        weight_decay,
    } = state.config;
    state.step += 1;
    let bc1 = 1.0 - beta1.powi(state.step as i32);
    let bc2 = 1.0 - beta2.powi(state.step as i32);
    let decay = 1.0 - lr * weight_decay;
    for (((p, &g), m), v) in params
        .values
        .iter_mut()
        .zip(grads)
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
    {
        *p *= decay;
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_input(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn init_is_deterministic() {
        let a = mlp_init(3, 5, &[7], 2).unwrap();
        let b = mlp_init(3, 5, &[7], 2).unwrap();
        assert_eq!(a.to_le_bytes(), b.to_le_bytes());
        assert_ne!(a, mlp_init(4, 5, &[7], 2).unwrap());
    }

    #[test]
    fn init_layout_and_bounds() {
        let p = mlp_init(0, 13, &[DEFAULT_HIDDEN], 10).unwrap();
        assert_eq!(p.dims(), &[13, 512, 10]);
        assert_eq!(p.num_layers(), 2);
        assert_eq!(p.num_params(), 13 * 512 + 512 + 512 * 10 + 10);
        let (w, b) = p.layer_range(0);
        let limit = (6.0f64 / (13.0 + 512.0)).sqrt();
        assert!(p.values()[w].iter().all(|v| v.abs() <= limit));
        assert!(p.values()[b].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn init_mean_is_centered() {
        let p = mlp_init(9, 512, &[], 512).unwrap();
        let (w, _) = p.layer_range(0);
        let ws = &p.values()[w];
        let n = ws.len() as f64;
        let mean = ws.iter().sum::<f64>() / n;
        // Uniform(−a, a) has standard deviation a/√3.
        let limit = (6.0f64 / 1024.0).sqrt();
        let std_err = limit / 3f64.sqrt() / n.sqrt();
        assert!(mean.abs() < 3.0 * std_err, "mean {mean} vs se {std_err}");
    }

    #[test]
    fn init_rejects_zero_dims() {
        assert!(mlp_init(0, 0, &[4], 2).is_err());
        assert!(mlp_init(0, 3, &[0], 2).is_err());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let p = MlpParams::zeros(&[4, 8, 3]).unwrap();
        assert_eq!(p.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn identity_single_layer() {
        let mut p = MlpParams::zeros(&[3, 3]).unwrap();
        let (w, _) = p.layer_range(0);
        for i in 0..3 {
            p.values_mut()[w.start + i * 3 + i] = 1.0;
        }
        let x = [0.3, -1.2, 7.0];
        assert_eq!(p.forward(&x).unwrap(), x.to_vec());
    }

    #[test]
    fn hand_evaluated_1_2_1() {
        // Layout: W1 (2×1), b1 (2), W2 (1×2), b2 (1).
        let p = MlpParams::from_values(&[1, 2, 1], vec![0.5, -1.5, 0.1, 0.2, 2.0, -0.7, 0.3]).unwrap();
        let x: f64 = 0.8;
        let h1 = 0.5 * x + 0.1;
        let h2 = -1.5 * x + 0.2;
        let expected = 2.0 * (h1 / (1.0 + (-h1).exp())) - 0.7 * (h2 / (1.0 + (-h2).exp())) + 0.3;
        let out = p.forward(&[x]).unwrap();
        assert!((out[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn forward_rejects_bad_length() {
        let p = MlpParams::zeros(&[2, 3]).unwrap();
        assert!(matches!(p.forward(&[1.0]), Err(Error::InvalidInput(_))));
        assert!(mlp_backward(&p, &[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn zero_cotangent_gives_zero_gradients() {
        let p = mlp_init(1, 3, &[5], 2).unwrap();
        let g = mlp_backward(&p, &[0.1, 0.2, 0.3], &[0.0, 0.0]).unwrap();
        assert!(g.params.iter().all(|&v| v == 0.0));
        assert!(g.input.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_gradient_is_input() {
        let p = mlp_init(2, 4, &[], 1).unwrap();
        let x = [1.0, -2.0, 0.5, 3.0];
        let g = mlp_backward(&p, &x, &[1.0]).unwrap();
        let (w, b) = p.layer_range(0);
        assert_eq!(&g.params[w], &x);
        assert_eq!(g.params[b.start], 1.0);
        assert_eq!(g.input, p.values()[0..4].to_vec());
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..10 {
            let in_dim = rng.gen_range(1..=8);
            let hidden = rng.gen_range(1..=8);
            let out_dim = rng.gen_range(1..=8);
            let p = mlp_init(trial, in_dim, &[hidden], out_dim).unwrap();
            let x = random_input(&mut rng, in_dim);
            let cot = random_input(&mut rng, out_dim);
            let g = mlp_backward(&p, &x, &cot).unwrap();
            let f =
                |q: &MlpParams, x: &[f64]| -> f64 { q.forward(x).unwrap().iter().zip(&cot).map(|(a, b)| a * b).sum() };
            let h = 1e-5;
            for k in 0..p.num_params() {
                let mut plus = p.clone();
                plus.values_mut()[k] += h;
                let mut minus = p.clone();
                minus.values_mut()[k] -= h;
                let fd = (f(&plus, &x) - f(&minus, &x)) / (2.0 * h);
                let err = (fd - g.params[k]).abs() / (1e-8 + fd.abs().max(g.params[k].abs()));
                assert!(
                    err <= 1e-4 || (fd - g.params[k]).abs() < 1e-9,
                    "param {k}: fd {fd} vs {}",
                    g.params[k]
                );
            }
        }
    }

    #[test]
    fn adamw_zero_gradient_no_decay_is_noop() {
        let mut p = mlp_init(5, 3, &[4], 2).unwrap();
        let before = p.clone();
        let mut st = AdamWState::new(
            &p,
            AdamWConfig {
                weight_decay: 0.0,
                ..Default::default()
            },
        );
        let zeros = vec![0.0; p.num_params()];
        adamw_step(&mut p, &zeros, &mut st).unwrap();
        assert_eq!(p, before);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn adamw_pure_decay() {
        let mut p = mlp_init(5, 3, &[4], 2).unwrap();
        let before = p.clone();
        let mut st = AdamWState::new(
            &p,
            AdamWConfig {
                lr: 1e-3,
                weight_decay: 0.01,
                ..Default::default()
            },
        );
        let zeros = vec![0.0; p.num_params()];
        adamw_step(&mut p, &zeros, &mut st).unwrap();
        for (a, b) in p.values().iter().zip(before.values()) {
            assert_eq!(*a, b * (1.0 - 1e-5));
        }
    }

    #[test]
    fn adamw_scalar_reference() {
        let cfg = AdamWConfig {
            lr: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        };
        let mut p = MlpParams::from_values(&[1, 1], vec![2.0, 0.0]).unwrap();
        let mut st = AdamWState::new(&p, cfg);

        // Hand-rolled scalar AdamW with constant gradient 1.
        let (mut w, mut m, mut v) = (2.0f64, 0.0f64, 0.0f64);
        for t in 1..=3 {
            adamw_step(&mut p, &[1.0, 0.0], &mut st).unwrap();
            w -= cfg.lr * cfg.weight_decay * w;
            m = 0.9 * m + 0.1;
            v = 0.999 * v + 0.001;
            let mh = m / (1.0 - 0.9f64.powi(t));
            let vh = v / (1.0 - 0.999f64.powi(t));
            w -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
            assert!((p.values()[0] - w).abs() < 1e-12);
        }
    }

    #[test]
    fn adamw_rejects_non_finite() {
        let mut p = MlpParams::zeros(&[1, 1]).unwrap();
        let mut st = AdamWState::new(&p, AdamWConfig::default());
        assert!(matches!(
            adamw_step(&mut p, &[f64::NAN, 0.0], &mut st),
            Err(Error::NonFiniteGradient)
        ));
        assert_eq!(st.step, 0);
    }

    #[test]
    fn weights_bytes_round_trip() {
        let p = mlp_init(8, 3, &[4], 2).unwrap();
        let q = MlpParams::from_le_bytes(p.dims(), &p.to_le_bytes()).unwrap();
        assert_eq!(p, q);
        assert!(MlpParams::from_le_bytes(p.dims(), &p.to_le_bytes()[..16]).is_err());
    }

    #[test]
    fn bounded_inputs_stay_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = mlp_init(1, 6, &[64], 4).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1e3..1e3)).collect();
            assert!(p.forward(&x).unwrap().iter().all(|v| v.is_finite()));
        }
    }
}
