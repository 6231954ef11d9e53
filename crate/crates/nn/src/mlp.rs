use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{gemm, Matrix};
use crate::tape::{Gradients, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sin,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Sin => z.sin(),
            Activation::Identity => z,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Sin => "sin",
            Activation::Identity => "identity",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "sin" => Ok(Activation::Sin),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub fan_in: usize,
    pub fan_out: usize,
    pub activation: Activation,
}

impl LayerShape {
    pub fn new(fan_in: usize, fan_out: usize, activation: Activation) -> Self {
        Self {
            fan_in,
            fan_out,
            activation,
        }
    }

    /// Standard stack: `input → width` followed by `depth − 1` hidden
    /// `width → width` maps (all with `hidden`), then an identity `width → output`.
    pub fn stack(
        input: usize,
        width: usize,
        depth: usize,
        output: usize,
        hidden: Activation,
    ) -> Vec<LayerShape> {
        let mut shapes = Vec::with_capacity(depth + 1);
        let mut fan_in = input;
        for _ in 0..depth {
            shapes.push(LayerShape::new(fan_in, width, hidden));
            fan_in = width;
        }
        shapes.push(LayerShape::new(fan_in, output, Activation::Identity));
        shapes
    }
}

/// One affine layer: weights are `fan_out × fan_in`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub shape: LayerShape,
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetParams {
    pub layers: Vec<Layer>,
}

/// Tape handles for the parameters of one network.
#[derive(Debug, Clone)]
pub struct NetVars {
    pub weights: Vec<Var>,
    pub biases: Vec<Var>,
}

fn check_shapes(shapes: &[LayerShape]) -> Result<()> {
    if shapes.is_empty() {
        return Err(Error::Config("network needs at least one layer".into()));
    }
    for (l, s) in shapes.iter().enumerate() {
        if s.fan_in == 0 || s.fan_out == 0 {
            return Err(Error::Config(format!("layer {l}: zero-sized layer")));
        }
    }
    for (l, pair) in shapes.windows(2).enumerate() {
        if pair[0].fan_out != pair[1].fan_in {
            return Err(Error::Config(format!(
                "layer {l} emits {} values but layer {} expects {}",
                pair[0].fan_out,
                l + 1,
                pair[1].fan_in
            )));
        }
    }
    if shapes.last().unwrap().activation != Activation::Identity {
        return Err(Error::Config(
            "last layer must use the identity activation".into(),
        ));
    }
    Ok(())
}

impl NetParams {
    /// Xavier-uniform weights, zero biases.
    pub fn init(shapes: &[LayerShape], seed: u64) -> Result<Self> {
        check_shapes(shapes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = shapes
            .iter()
            .map(|&shape| {
                let limit = (6.0 / (shape.fan_in + shape.fan_out) as f64).sqrt();
                let dist = Uniform::new_inclusive(-limit, limit);
                let data = (0..shape.fan_in * shape.fan_out)
                    .map(|_| dist.sample(&mut rng))
                    .collect();
                Layer {
                    shape,
                    weights: Matrix::from_vec(shape.fan_out, shape.fan_in, data),
                    biases: vec![0.0; shape.fan_out],
                }
            })
            .collect();
        Ok(Self { layers })
    }

    /// Builds a network from explicit weights and biases.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        let net = Self { layers };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        let shapes = self.shapes();
        check_shapes(&shapes)?;
        for (l, layer) in self.layers.iter().enumerate() {
            let s = layer.shape;
            if layer.weights.shape() != (s.fan_out, s.fan_in) || layer.biases.len() != s.fan_out {
                return Err(Error::Config(format!(
                    "layer {l}: parameter arrays do not match {}x{}",
                    s.fan_out, s.fan_in
                )));
            }
            if !layer.weights.all_finite() || layer.biases.iter().any(|b| !b.is_finite()) {
                return Err(Error::Numerical(format!("layer {l}: non-finite parameters")));
            }
        }
        Ok(())
    }

    pub fn shapes(&self) -> Vec<LayerShape> {
        self.layers.iter().map(|l| l.shape).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].shape.fan_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().shape.fan_out
    }

    pub fn total_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Parameters flattened layer by layer: weights row-major, then biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_count());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.total_count(), "flat parameter length");
        let mut k = 0;
        for l in &mut self.layers {
            let n = l.weights.len();
            l.weights.as_mut_slice().copy_from_slice(&flat[k..k + n]);
            k += n;
            let m = l.biases.len();
            l.biases.copy_from_slice(&flat[k..k + m]);
            k += m;
        }
    }

    /// Offsets into the flat vector at which each layer starts.
    pub fn layer_offsets(&self) -> Vec<usize> {
        let mut offs = Vec::with_capacity(self.layers.len() + 1);
        let mut k = 0;
        for l in &self.layers {
            offs.push(k);
            k += l.weights.len() + l.biases.len();
        }
        offs.push(k);
        offs
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::Config(format!(
                "input has {} entries, network expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        let mut y = input.to_vec();
        for layer in &self.layers {
            let w = &layer.weights;
            y = (0..w.rows())
                .map(|r| {
                    let z: f64 = w.row(r).iter().zip(&y).map(|(a, b)| a * b).sum::<f64>()
                        + layer.biases[r];
                    layer.shape.activation.apply(z)
                })
                .collect();
        }
        Ok(y)
    }

    /// Row-wise forward pass: `input` is `n × fan_in`, result `n × fan_out`.
    pub fn forward_batch(&self, input: &Matrix) -> Result<Matrix> {
        if input.cols() != self.input_dim() {
            return Err(Error::Config(format!(
                "input has {} columns, network expects {}",
                input.cols(),
                self.input_dim()
            )));
        }
        let mut y = input.clone();
        for layer in &self.layers {
            let mut z = Matrix::zeros(y.rows(), layer.shape.fan_out);
            for r in 0..z.rows() {
                z.row_mut(r).copy_from_slice(&layer.biases);
            }
            gemm(1.0, &y, false, &layer.weights, true, 1.0, &mut z);
            if layer.shape.activation != Activation::Identity {
                let act = layer.shape.activation;
                for v in z.as_mut_slice() {
                    *v = act.apply(*v);
                }
            }
            y = z;
        }
        Ok(y)
    }

    /// Registers the parameters as tape leaves.
    pub fn register(&self, tape: &mut Tape) -> NetVars {
        let mut weights = Vec::with_capacity(self.layers.len());
        let mut biases = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            weights.push(tape.param(l.weights.clone()));
            biases.push(tape.param(Matrix::from_vec(1, l.biases.len(), l.biases.clone())));
        }
        NetVars { weights, biases }
    }

    /// Registers the parameters as constants (frozen network).
    pub fn register_frozen(&self, tape: &mut Tape) -> NetVars {
        let mut weights = Vec::with_capacity(self.layers.len());
        let mut biases = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            weights.push(tape.constant(l.weights.clone()));
            biases.push(tape.constant(Matrix::from_vec(1, l.biases.len(), l.biases.clone())));
        }
        NetVars { weights, biases }
    }

    /// Forward pass recorded on the tape. `x` is `n × fan_in`.
    pub fn forward_tape(&self, tape: &mut Tape, vars: &NetVars, x: Var) -> Var {
        let mut y = x;
        for (l, layer) in self.layers.iter().enumerate() {
            let z = tape.linear(y, vars.weights[l], Some(vars.biases[l]));
            y = activate(tape, layer.shape.activation, z);
        }
        y
    }

    /// Forward pass that also carries directional derivatives with respect
    /// to the input. Each entry of `tangents` is an `n × fan_in` matrix of
    /// input directions; the matching output is `n × fan_out`.
    pub fn forward_tape_with_tangents(
        &self,
        tape: &mut Tape,
        vars: &NetVars,
        x: Var,
        tangents: &[Matrix],
    ) -> (Var, Vec<Var>) {
        let mut y = x;
        let mut dys: Vec<Var> = tangents.iter().map(|t| tape.constant(t.clone())).collect();
        for (l, layer) in self.layers.iter().enumerate() {
            let w = vars.weights[l];
            let z = tape.linear(y, w, Some(vars.biases[l]));
            let dzs: Vec<Var> = dys.iter().map(|&dy| tape.matmul_nt(dy, w)).collect();
            match layer.shape.activation {
                Activation::Identity => {
                    y = z;
                    dys = dzs;
                }
                Activation::Tanh => {
                    y = tape.tanh(z);
                    let y2 = tape.square(y);
                    dys = dzs
                        .into_iter()
                        .map(|dz| {
                            let t = tape.mul(y2, dz);
                            tape.sub(dz, t)
                        })
                        .collect();
                }
                Activation::Sin => {
                    y = tape.sin(z);
                    let c = tape.cos(z);
                    dys = dzs.into_iter().map(|dz| tape.mul(c, dz)).collect();
                }
            }
        }
        (y, dys)
    }

    /// Collects this network's gradient in flat layout.
    pub fn flat_grad(&self, vars: &NetVars, grads: &Gradients) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_count());
        for (l, layer) in self.layers.iter().enumerate() {
            let s = layer.shape;
            out.extend_from_slice(
                grads
                    .get_or_zeros(vars.weights[l], s.fan_out, s.fan_in)
                    .as_slice(),
            );
            out.extend_from_slice(grads.get_or_zeros(vars.biases[l], 1, s.fan_out).as_slice());
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let net: NetParams =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        net.validate()?;
        Ok(net)
    }
}

fn activate(tape: &mut Tape, act: Activation, z: Var) -> Var {
    match act {
        Activation::Identity => z,
        Activation::Tanh => tape.tanh(z),
        Activation::Sin => tape.sin(z),
    }
}

/// Value and flat per-network gradients of a scalar loss built on a fresh tape.
///
/// `build` receives the tape and the registered parameter handles (one
/// [`NetVars`] per entry of `nets`, same order) and returns the loss node.
pub fn loss_gradient<F>(nets: &[&NetParams], build: F) -> Result<(f64, Vec<Vec<f64>>)>
where
    F: FnOnce(&mut Tape, &[NetVars]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<NetVars> = nets.iter().map(|n| n.register(&mut tape)).collect();
    let root = build(&mut tape, &vars)?;
    let grads = tape.backward(root)?;
    let loss = tape.scalar(root);
    let flat = nets
        .iter()
        .zip(&vars)
        .map(|(n, v)| n.flat_grad(v, &grads))
        .collect();
    Ok((loss, flat))
}
