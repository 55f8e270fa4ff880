//! Fully connected networks with hand-written backpropagation.
//!
//! Parameters of a network live in one flat `Vec<f64>`: for each layer the
//! weight matrix (row-major, `out x in`) followed by the bias vector. Keeping
//! them flat makes the optimizer, soft target updates, checkpointing and
//! finite-difference checks simple loops over a slice.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("network shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch(Vec<usize>, Vec<usize>),
    #[error("network needs at least an input and an output layer, got {0:?}")]
    TooFewLayers(Vec<usize>),
    #[error("layer {layer}: expected {expected} values, found {found}")]
    BadLayer { layer: usize, expected: usize, found: usize },
}

/// Dense row-major matrix, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// `c (m x n) = a (m x k) * b (k x n)` with explicit strides.
#[allow(clippy::too_many_arguments)]
#[inline]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], rsa: usize, csa: usize, b: &[f64], rsb: usize, csb: usize, c: &mut [f64]) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c[..m * n].iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    // SAFETY: every operand is a live slice whose extent covers the highest
    // index implied by the dimensions and strides; `c` is dense m x n.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OutputActivation {
    Linear,
    /// `scale * tanh(z)`.
    Tanh { scale: f64 },
}

/// Multilayer perceptron with ReLU hidden layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    output: OutputActivation,
    params: Vec<f64>,
}

/// Intermediate values of a batched forward pass, kept for backprop.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `inputs[l]` is the input to layer `l` (post-ReLU for `l > 0`).
    inputs: Vec<Matrix>,
    /// Output after the output activation.
    pub output: Matrix,
}

impl Mlp {
    pub fn zeros(sizes: &[usize], output: OutputActivation) -> Result<Self, NnError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(NnError::TooFewLayers(sizes.to_vec()));
        }
        let n = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(Mlp { sizes: sizes.to_vec(), output, params: vec![0.0; n] })
    }

    /// Uniform fan-in initialization `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`;
    /// the last layer uses `U(-3e-3, 3e-3)` so initial outputs stay near zero.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], output: OutputActivation, rng: &mut R) -> Result<Self, NnError> {
        let mut net = Mlp::zeros(sizes, output)?;
        let last = net.num_layers() - 1;
        let mut offset = 0;
        for l in 0..net.num_layers() {
            let (fan_in, fan_out) = (net.sizes[l], net.sizes[l + 1]);
            let bound = if l == last { 3e-3 } else { 1.0 / (fan_in as f64).sqrt() };
            let count = fan_in * fan_out + fan_out;
            for p in &mut net.params[offset..offset + count] {
                *p = rng.gen_range(-bound..bound);
            }
            offset += count;
        }
        Ok(net)
    }

    /// Builds a network from per-layer `(weights, biases)` arrays.
    pub fn from_layers(sizes: &[usize], output: OutputActivation, layers: &[(Vec<f64>, Vec<f64>)]) -> Result<Self, NnError> {
        let mut net = Mlp::zeros(sizes, output)?;
        if layers.len() != net.num_layers() {
            return Err(NnError::BadLayer { layer: layers.len(), expected: net.num_layers(), found: layers.len() });
        }
        let mut params = Vec::with_capacity(net.params.len());
        for (l, (w, b)) in layers.iter().enumerate() {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            if w.len() != fan_in * fan_out {
                return Err(NnError::BadLayer { layer: l, expected: fan_in * fan_out, found: w.len() });
            }
            if b.len() != fan_out {
                return Err(NnError::BadLayer { layer: l, expected: fan_out, found: b.len() });
            }
            params.extend_from_slice(w);
            params.extend_from_slice(b);
        }
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        self.sizes[self.sizes.len() - 1]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn layer_offset(&self, layer: usize) -> usize {
        self.sizes[..layer + 1].windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// `(weights, biases)` of layer `l`; weights are row-major `out x in`.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let off = self.layer_offset(l);
        let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
        let w = &self.params[off..off + fan_in * fan_out];
        let b = &self.params[off + fan_in * fan_out..off + fan_in * fan_out + fan_out];
        (w, b)
    }

    pub fn layers(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        (0..self.num_layers())
            .map(|l| {
                let (w, b) = self.layer(l);
                (w.to_vec(), b.to_vec())
            })
            .collect()
    }

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.sizes == other.sizes
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    fn apply_layer(&self, l: usize, input: &Matrix) -> Matrix {
        let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
        debug_assert_eq!(input.cols, fan_in);
        let (w, b) = self.layer(l);
        let mut z = Matrix::zeros(input.rows, fan_out);
        // Z = X W^T: element (i, o) of W^T is w[o * fan_in + i].
        gemm(input.rows, fan_in, fan_out, &input.data, fan_in, 1, w, 1, fan_in, &mut z.data);
        for r in 0..z.rows {
            for (v, bias) in z.row_mut(r).iter_mut().zip(b) {
                *v += bias;
            }
        }
        z
    }

    fn activate_output(&self, z: &mut Matrix) {
        if let OutputActivation::Tanh { scale } = self.output {
            z.data.iter_mut().for_each(|v| *v = scale * v.tanh());
        }
    }

    pub fn forward(&self, input: &Matrix) -> Matrix {
        let mut x = self.apply_layer(0, input);
        for l in 1..self.num_layers() {
            x.data.iter_mut().for_each(|v| *v = v.max(0.0));
            x = self.apply_layer(l, &x);
        }
        self.activate_output(&mut x);
        x
    }

    pub fn forward_one(&self, input: &[f64]) -> Vec<f64> {
        self.forward(&Matrix::from_vec(1, input.len(), input.to_vec())).data
    }

    pub fn forward_trace(&self, input: &Matrix) -> Trace {
        let mut inputs = Vec::with_capacity(self.num_layers());
        inputs.push(input.clone());
        let mut x = self.apply_layer(0, input);
        for l in 1..self.num_layers() {
            x.data.iter_mut().for_each(|v| *v = v.max(0.0));
            inputs.push(x.clone());
            x = self.apply_layer(l, &x);
        }
        self.activate_output(&mut x);
        Trace { inputs, output: x }
    }

    /// Backpropagates `d_output` (gradient of the loss with respect to the
    /// activated output). Parameter gradients are accumulated into `grads`
    /// when given; the gradient with respect to the input is returned when
    /// `want_input_grad` is set.
    pub fn backward(&self, trace: &Trace, d_output: &Matrix, mut grads: Option<&mut [f64]>, want_input_grad: bool) -> Option<Matrix> {
        let batch = d_output.rows;
        let mut delta = d_output.clone();
        if let OutputActivation::Tanh { scale } = self.output {
            for (d, y) in delta.data.iter_mut().zip(&trace.output.data) {
                let t = y / scale;
                *d *= scale * (1.0 - t * t);
            }
        }
        let mut scratch = Vec::new();
        for l in (0..self.num_layers()).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let x = &trace.inputs[l];
            if let Some(g) = grads.as_deref_mut() {
                let off = self.layer_offset(l);
                // dW = delta^T X: element (o, b) of delta^T is delta[b * fan_out + o].
                scratch.resize(fan_in * fan_out, 0.0);
                gemm(fan_out, batch, fan_in, &delta.data, 1, fan_out, &x.data, fan_in, 1, &mut scratch);
                for (gw, s) in g[off..off + fan_in * fan_out].iter_mut().zip(&scratch) {
                    *gw += s;
                }
                let gb = &mut g[off + fan_in * fan_out..off + fan_in * fan_out + fan_out];
                for r in 0..batch {
                    for (gbv, d) in gb.iter_mut().zip(delta.row(r)) {
                        *gbv += d;
                    }
                }
            }
            if l == 0 && !want_input_grad {
                return None;
            }
            let (w, _) = self.layer(l);
            let mut dx = Matrix::zeros(batch, fan_in);
            gemm(batch, fan_out, fan_in, &delta.data, fan_out, 1, w, fan_in, 1, &mut dx.data);
            if l == 0 {
                return Some(dx);
            }
            for (d, a) in dx.data.iter_mut().zip(&x.data) {
                if *a <= 0.0 {
                    *d = 0.0;
                }
            }
            delta = dx;
        }
        None
    }

    /// `self = tau * online + (1 - tau) * self`, parameter by parameter.
    pub fn soft_update_from(&mut self, online: &Mlp, tau: f64) -> Result<(), NnError> {
        if !self.same_shape(online) {
            return Err(NnError::ShapeMismatch(online.sizes.clone(), self.sizes.clone()));
        }
        for (t, o) in self.params.iter_mut().zip(&online.params) {
            *t = tau * o + (1.0 - tau) * *t;
        }
        Ok(())
    }
}

/// Returns the soft-updated copy of `target`.
pub fn soft_update(online: &Mlp, target: &Mlp, tau: f64) -> Result<Mlp, NnError> {
    let mut out = target.clone();
    out.soft_update_from(online, tau)?;
    Ok(out)
}

/// Adam optimizer state for one flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(num_params: usize) -> Self {
        Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: vec![0.0; num_params], v: vec![0.0; num_params] }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        debug_assert_eq!(params.len(), grads.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let step = lr / bc1;
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= step * *m / ((*v / bc2).sqrt() + self.eps);
        }
    }
}
