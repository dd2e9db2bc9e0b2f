//! Dense rectifier network mapping an observation to one value per action.
//!
//! Weights are stored input-major: `weights[i * outputs + o]` connects input
//! `i` to output `o`. Hidden layers use ReLU, the output layer is affine.
//! Every pre-activation is accumulated as `b[o] + x[0] w[0][o] + x[1] w[1][o]
//! + ...` in input order, skipping inputs that are exactly zero. Training only
//! needs the value of the action that was taken, so backpropagation enters the
//! output layer through a single output unit per sample.

use rand::Rng;

use crate::error::{Result, SimError};

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    /// Weights leaving input `i`, one per output.
    fn fan_out(&self, i: usize) -> &[f64] {
        &self.weights[i * self.outputs..(i + 1) * self.outputs]
    }

    #[inline(always)]
    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.biases);
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                axpy(out, xi, self.fan_out(i));
            }
        }
    }

    /// Pre-activation of a single output, identical to `affine(x)[o]`.
    #[inline(always)]
    fn unit(&self, x: &[f64], o: usize) -> f64 {
        let mut s = self.biases[o];
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                s += xi * self.weights[i * self.outputs + o];
            }
        }
        s
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

#[inline(always)]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Four interleaved partial sums, combined in a fixed order.
#[inline(always)]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        let x: &[f64; 4] = x.try_into().unwrap();
        let y: &[f64; 4] = y.try_into().unwrap();
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Run a kernel-heavy method through an AVX2 build of itself when the CPU
/// supports it. Only vector width changes: every sum keeps its order and no
/// multiply-add is fused, so results are bit-identical to the portable path.
macro_rules! dispatch {
    ($self:ident . $method:ident ( $($arg:expr),* )) => {{
        #[cfg(target_arch = "x86_64")]
        {
            #[target_feature(enable = "avx2")]
            unsafe fn wide<T>(f: impl FnOnce() -> T) -> T {
                f()
            }
            if std::arch::is_x86_feature_detected!("avx2") {
                // SAFETY: the feature was detected at run time.
                return unsafe { wide(|| $self.$method($($arg),*)) };
            }
        }
        $self.$method($($arg),*)
    }};
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    layers: Vec<Dense>,
}

impl QNetwork {
    /// He-uniform initialisation for every layer, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        for layer in &mut net.layers {
            let bound = (6.0 / layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.random_range(-bound..bound);
            }
        }
        net
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "a network needs input and output sizes");
        Self {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(SimError::BadCheckpoint("no layers".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(SimError::DimensionMismatch {
                    expected: pair[0].outputs,
                    got: pair[1].inputs,
                });
            }
        }
        for l in &layers {
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(SimError::BadCheckpoint("layer buffer sizes inconsistent".into()));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.input_width() {
            Ok(())
        } else {
            Err(SimError::DimensionMismatch {
                expected: self.input_width(),
                got: x.len(),
            })
        }
    }

    /// Post-activation outputs of every hidden layer (input not included).
    #[inline(always)]
    fn hidden_activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let hidden = &self.layers[..self.layers.len() - 1];
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(hidden.len());
        for layer in hidden {
            let input = acts.last().map_or(x, Vec::as_slice);
            let mut z = Vec::with_capacity(layer.outputs);
            layer.affine(input, &mut z);
            z.iter_mut().for_each(|v| *v = v.max(0.0));
            acts.push(z);
        }
        acts
    }

    fn output_layer(&self) -> &Dense {
        self.layers.last().unwrap()
    }

    /// Action values for one observation.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        dispatch!(self.forward_impl(x))
    }

    #[inline(always)]
    fn forward_impl(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let acts = self.hidden_activations(x);
        let last = acts.last().map_or(x, Vec::as_slice);
        let mut out = Vec::new();
        self.output_layer().affine(last, &mut out);
        Ok(out)
    }

    /// `max_a Q(x, a)` for several inputs. Bit-identical to taking the
    /// maximum of [`forward`](Self::forward) for each input; the output layer
    /// is streamed once per group of inputs.
    pub fn max_outputs(&self, xs: &[&[f64]]) -> Result<Vec<f64>> {
        dispatch!(self.max_outputs_impl(xs))
    }

    #[inline(always)]
    fn max_outputs_impl(&self, xs: &[&[f64]]) -> Result<Vec<f64>> {
        const GROUP: usize = 8;
        for x in xs {
            self.check_input(x)?;
        }
        let out = self.output_layer();
        let acts: Vec<Vec<Vec<f64>>> = xs.iter().map(|x| self.hidden_activations(x)).collect();
        let lasts: Vec<&[f64]> = acts
            .iter()
            .zip(xs)
            .map(|(a, x)| a.last().map_or(*x, Vec::as_slice))
            .collect();
        let mut best = Vec::with_capacity(xs.len());
        let mut zs = vec![Vec::new(); GROUP.min(xs.len())];
        for group in lasts.chunks(GROUP) {
            for z in zs.iter_mut() {
                z.clear();
                z.extend_from_slice(&out.biases);
            }
            for i in 0..out.inputs {
                let w = out.fan_out(i);
                for (z, h) in zs.iter_mut().zip(group) {
                    if h[i] != 0.0 {
                        axpy(z, h[i], w);
                    }
                }
            }
            best.extend(
                zs.iter()
                    .take(group.len())
                    .map(|z| z.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
            );
        }
        Ok(best)
    }

    /// Value of a single action.
    pub fn q_value(&self, x: &[f64], action: usize) -> Result<f64> {
        self.check_input(x)?;
        let acts = self.hidden_activations(x);
        let last = acts.last().map_or(x, Vec::as_slice);
        Ok(self.output_layer().unit(last, action))
    }

    /// Mean squared error between `Q(s_i, a_i)` and `targets[i]` and its
    /// gradient with respect to every parameter, accumulated into `grad`
    /// (which is cleared first).
    pub fn loss_and_gradient(
        &self,
        inputs: &[&[f64]],
        actions: &[usize],
        targets: &[f64],
        grad: &mut Gradient,
    ) -> Result<f64> {
        dispatch!(self.loss_and_gradient_impl(inputs, actions, targets, grad))
    }

    #[inline(always)]
    fn loss_and_gradient_impl(
        &self,
        inputs: &[&[f64]],
        actions: &[usize],
        targets: &[f64],
        grad: &mut Gradient,
    ) -> Result<f64> {
        debug_assert_eq!(inputs.len(), actions.len());
        debug_assert_eq!(inputs.len(), targets.len());
        grad.clear();
        let batch = inputs.len() as f64;
        let n_layers = self.layers.len();
        let out = self.output_layer();
        let mut loss = 0.0;
        for ((x, &a), &y) in inputs.iter().zip(actions).zip(targets) {
            self.check_input(x)?;
            let acts = self.hidden_activations(x);
            let last = acts.last().map_or(*x, Vec::as_slice);
            let err = out.unit(last, a) - y;
            loss += err * err;
            let dq = 2.0 * err / batch;

            // output layer: only unit `a` receives gradient
            grad.touch_output(a);
            let gout = &mut grad.layers[n_layers - 1];
            let mut delta = vec![0.0; last.len()];
            for (i, &h) in last.iter().enumerate() {
                gout.weights[i * out.outputs + a] += dq * h;
                if h > 0.0 {
                    delta[i] = dq * out.weights[i * out.outputs + a];
                }
            }
            gout.biases[a] += dq;

            for l in (0..n_layers - 1).rev() {
                let layer = &self.layers[l];
                let input = if l == 0 { *x } else { acts[l - 1].as_slice() };
                let gl = &mut grad.layers[l];
                axpy(&mut gl.biases, 1.0, &delta);
                for (i, &xi) in input.iter().enumerate() {
                    if xi != 0.0 {
                        axpy(&mut gl.weights[i * layer.outputs..(i + 1) * layer.outputs], xi, &delta);
                    }
                }
                if l == 0 {
                    break;
                }
                delta = acts[l - 1]
                    .iter()
                    .enumerate()
                    .map(|(i, &h)| if h > 0.0 { dot(layer.fan_out(i), &delta) } else { 0.0 })
                    .collect();
            }
        }
        Ok(loss / batch)
    }

    /// Overwrite every parameter with `other`'s.
    pub fn copy_from(&mut self, other: &QNetwork) {
        debug_assert_eq!(self.sizes(), other.sizes());
        for (mine, theirs) in self.layers.iter_mut().zip(&other.layers) {
            mine.weights.copy_from_slice(&theirs.weights);
            mine.biases.copy_from_slice(&theirs.biases);
        }
    }
}

/// Gradient buffers shaped like a [`QNetwork`]. Output units that received
/// gradient since the last clear are tracked so that clearing and sparse
/// updates skip the rest of the output layer.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub layers: Vec<Dense>,
    touched: Vec<usize>,
    touched_mask: Vec<bool>,
}

impl Gradient {
    pub fn for_network(net: &QNetwork) -> Self {
        let layers: Vec<Dense> = net
            .layers
            .iter()
            .map(|l| Dense::zeros(l.inputs, l.outputs))
            .collect();
        let outputs = net.output_width();
        Self {
            layers,
            touched: Vec::new(),
            touched_mask: vec![false; outputs],
        }
    }

    fn touch_output(&mut self, unit: usize) {
        if !self.touched_mask[unit] {
            self.touched_mask[unit] = true;
            self.touched.push(unit);
        }
    }

    /// Output units holding nonzero gradient.
    pub fn touched_outputs(&self) -> &[usize] {
        &self.touched
    }

    pub fn clear(&mut self) {
        let n = self.layers.len();
        for l in &mut self.layers[..n - 1] {
            l.weights.iter_mut().for_each(|v| *v = 0.0);
            l.biases.iter_mut().for_each(|v| *v = 0.0);
        }
        let out = &mut self.layers[n - 1];
        for &a in &self.touched {
            for i in 0..out.inputs {
                out.weights[i * out.outputs + a] = 0.0;
            }
            out.biases[a] = 0.0;
            self.touched_mask[a] = false;
        }
        self.touched.clear();
    }

    fn for_each_live_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        let n = self.layers.len();
        for l in &mut self.layers[..n - 1] {
            l.weights.iter_mut().chain(l.biases.iter_mut()).for_each(&mut f);
        }
        let out = &mut self.layers[n - 1];
        for &a in &self.touched {
            for i in 0..out.inputs {
                f(&mut out.weights[i * out.outputs + a]);
            }
            f(&mut out.biases[a]);
        }
    }

    pub fn norm(&mut self) -> f64 {
        let mut sq = 0.0;
        self.for_each_live_mut(|v| sq += *v * *v);
        sq.sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        self.for_each_live_mut(|v| *v *= s);
    }
}
