//! Small fully connected networks with exact reverse-mode gradients.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use crate::config::OptimizerKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
            Activation::Identity => {}
        }
    }

    /// Multiply `grad` by the derivative, given the activation's output.
    fn backprop(self, grad: &mut Array2<f64>, out: &Array2<f64>) {
        match self {
            Activation::Relu => Zip::from(grad).and(out).for_each(|g, &a| {
                if a <= 0.0 {
                    *g = 0.0;
                }
            }),
            Activation::Tanh => Zip::from(grad).and(out).for_each(|g, &a| *g *= 1.0 - a * a),
            Activation::Identity => {}
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }
}

/// One affine layer; `weight` is `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            weight: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Dense>,
    hidden: Activation,
    output: Activation,
}

/// Activations recorded by [`DenseNet::forward_batch`]; `acts[0]` is the input.
#[derive(Debug, Clone)]
pub struct Tape {
    acts: Vec<Array2<f64>>,
}

impl Tape {
    pub fn output(&self) -> &Array2<f64> {
        self.acts.last().expect("tape holds the input at least")
    }
}

impl DenseNet {
    /// Uniform init in `+-1/sqrt(fan_in)` for weights and biases.
    pub fn new(sizes: &[usize], hidden: Activation, output: Activation, rng: &mut impl Rng) -> Self {
        let mut net = Self::zeros(sizes, hidden, output);
        for layer in &mut net.layers {
            let bound = 1.0 / (layer.inputs() as f64).sqrt();
            layer.weight.mapv_inplace(|_| rng.random_range(-bound..=bound));
            layer.bias.mapv_inplace(|_| rng.random_range(-bound..=bound));
        }
        net
    }

    pub fn zeros(sizes: &[usize], hidden: Activation, output: Activation) -> Self {
        assert!(sizes.len() >= 2, "a network needs input and output sizes");
        DenseNet {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
            hidden,
            output,
        }
    }

    pub fn from_layers(layers: Vec<Dense>, hidden: Activation, output: Activation) -> Option<Self> {
        let chained = layers.windows(2).all(|w| w[0].outputs() == w[1].inputs());
        let biased = layers.iter().all(|l| l.bias.len() == l.outputs());
        (!layers.is_empty() && chained && biased).then_some(DenseNet { layers, hidden, output })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_size())
            .chain(self.layers.iter().map(Dense::outputs))
            .collect()
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().map_or(0, Dense::outputs)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    fn activation_for(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output
        } else {
            self.hidden
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.input_size(), "input size mismatch");
        let row = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        self.forward_batch(row).output().row(0).to_vec()
    }

    /// Forward pass over a `batch x input` matrix, keeping what backward needs.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Tape {
        assert_eq!(x.ncols(), self.input_size(), "input size mismatch");
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_owned());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = acts[l].dot(&layer.weight.t());
            z += &layer.bias;
            self.activation_for(l).apply(&mut z);
            acts.push(z);
        }
        Tape { acts }
    }

    /// Reverse pass for a loss whose gradient w.r.t. the outputs is
    /// `grad_out`. Returns parameter gradients and the input gradient.
    pub fn backward(&self, tape: &Tape, grad_out: ArrayView2<f64>) -> (Gradients, Array2<f64>) {
        assert_eq!(tape.acts.len(), self.layers.len() + 1, "tape does not belong to this network");
        assert_eq!(grad_out.dim(), tape.output().dim(), "output gradient shape mismatch");
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = grad_out.to_owned();
        for l in (0..self.layers.len()).rev() {
            self.activation_for(l).backprop(&mut delta, &tape.acts[l + 1]);
            let gw = delta.t().dot(&tape.acts[l]);
            let gb = delta.sum_axis(Axis(0));
            let next = delta.dot(&self.layers[l].weight);
            grads.push(Dense { weight: gw, bias: gb });
            delta = next;
        }
        grads.reverse();
        (Gradients(grads), delta)
    }

    /// All parameters, layer by layer, weights (row-major) before biases.
    pub fn to_flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        unflatten(&mut self.layers, values);
    }

    pub fn same_shape(&self, other: &DenseNet) -> bool {
        self.sizes() == other.sizes()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }
}

fn flatten(layers: &[Dense]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied())
        .collect()
}

fn unflatten(layers: &mut [Dense], values: &[f64]) {
    let total: usize = layers.iter().map(|l| l.weight.len() + l.bias.len()).sum();
    assert_eq!(values.len(), total, "parameter count mismatch");
    let mut it = values.iter().copied();
    for l in layers {
        for w in l.weight.iter_mut().chain(l.bias.iter_mut()) {
            *w = it.next().expect("length checked");
        }
    }
}

/// Parameter gradients with the same layout as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Dense>);

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Gradients(net.layers.iter().map(|l| Dense::zeros(l.inputs(), l.outputs())).collect())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        flatten(&self.0)
    }

    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()))
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.0 {
            l.weight *= factor;
            l.bias *= factor;
        }
    }

    pub fn clip_norm(&mut self, max_norm: f64) {
        let norm = self.norm();
        if max_norm > 0.0 && norm > max_norm {
            self.scale(max_norm / norm);
        }
    }
}

/// `target <- tau * online + (1 - tau) * target`, parameter-wise.
pub fn polyak_update(target: &mut DenseNet, online: &DenseNet, tau: f64) {
    assert!(target.same_shape(online), "polyak update between differently shaped networks");
    for (t, o) in target.layers.iter_mut().zip(&online.layers) {
        Zip::from(&mut t.weight).and(&o.weight).for_each(|t, &o| *t = tau * o + (1.0 - tau) * *t);
        Zip::from(&mut t.bias).and(&o.bias).for_each(|t, &o| *t = tau * o + (1.0 - tau) * *t);
    }
}

#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
        t: i32,
        m: Gradients,
        v: Gradients,
    },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, net: &DenseNet) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd { lr },
            OptimizerKind::Adam => Optimizer::Adam {
                lr,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
                t: 0,
                m: Gradients::zeros_like(net),
                v: Gradients::zeros_like(net),
            },
        }
    }

    /// One descent step along `grads`.
    pub fn step(&mut self, net: &mut DenseNet, grads: &Gradients) {
        match self {
            Optimizer::Sgd { lr } => {
                for (p, g) in net.layers.iter_mut().zip(&grads.0) {
                    p.weight.scaled_add(-*lr, &g.weight);
                    p.bias.scaled_add(-*lr, &g.bias);
                }
            }
            Optimizer::Adam {
                lr,
                beta1,
                beta2,
                eps,
                t,
                m,
                v,
            } => {
                *t += 1;
                let (b1, b2) = (*beta1, *beta2);
                let c1 = 1.0 - b1.powi(*t);
                let c2 = 1.0 - b2.powi(*t);
                let step = *lr;
                let e = *eps;
                let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= step * (*m / c1) / ((*v / c2).sqrt() + e);
                };
                for (((p, g), m), v) in net.layers.iter_mut().zip(&grads.0).zip(&mut m.0).zip(&mut v.0) {
                    Zip::from(&mut p.weight)
                        .and(&g.weight)
                        .and(&mut m.weight)
                        .and(&mut v.weight)
                        .for_each(|p, &g, m, v| update(p, g, m, v));
                    Zip::from(&mut p.bias)
                        .and(&g.bias)
                        .and(&mut m.bias)
                        .and(&mut v.bias)
                        .for_each(|p, &g, m, v| update(p, g, m, v));
                }
            }
        }
    }
}
