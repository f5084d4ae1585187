use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dropout::{apply_dropout, MaskStream};
use super::{log_sum_exp, predict_class, softmax};
use crate::{Error, Result, Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            _ => None,
        }
    }

    #[inline]
    fn apply<T: Scalar>(self, v: T) -> T {
        match self {
            Activation::Identity => v,
            Activation::Relu => v.max(T::zero()),
        }
    }

    #[inline]
    fn derivative<T: Scalar>(self, pre: T) -> T {
        match self {
            Activation::Identity => T::one(),
            Activation::Relu => {
                if pre > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }
}

/// One dense layer. `weights` has shape `[inputs, outputs]`, `bias` has `[outputs]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T = f64> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
    pub activation: Activation,
    /// Inference dropout applied after this layer's activation. Ignored on the output layer.
    pub dropout_rate: f64,
}

impl<T: Scalar> Layer<T> {
    pub fn inputs(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn outputs(&self) -> usize {
        self.weights.shape()[1]
    }

    /// `bias + input . weights`, skipping zero inputs (sparse images, dropped units).
    fn affine(&self, input: &[T]) -> Vec<T> {
        let cols = self.outputs();
        let w = self.weights.values();
        let mut out = self.bias.values().to_vec();
        for (i, &x) in input.iter().enumerate() {
            if x == T::zero() {
                continue;
            }
            let row = &w[i * cols..(i + 1) * cols];
            for (o, &wv) in out.iter_mut().zip(row) {
                *o += x * wv;
            }
        }
        out
    }
}

/// Layer sizes plus activation and dropout choices, e.g. `784-256-10`.
#[derive(Clone, Debug, PartialEq)]
pub struct Architecture {
    pub sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub dropout_rate: f64,
}

impl Architecture {
    pub fn new(sizes: Vec<usize>) -> Self {
        Self {
            sizes,
            hidden_activation: Activation::Relu,
            dropout_rate: 0.0,
        }
    }

    pub fn with_dropout(mut self, rate: f64) -> Self {
        self.dropout_rate = rate;
        self
    }

    pub fn with_hidden_activation(mut self, activation: Activation) -> Self {
        self.hidden_activation = activation;
        self
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let sizes = s
            .split(['-', ',', 'x'])
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad layer size {p:?} in architecture {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(sizes))
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        f.write_str(&parts.join("-"))
    }
}

/// Glorot-uniform weights, zero biases, deterministic in `seed`.
pub fn init_model<T: Scalar>(arch: &Architecture, class_count: usize, seed: u64) -> Result<Model<T>> {
    let sizes = &arch.sizes;
    if sizes.len() < 2 {
        return Err(Error::Config(format!(
            "architecture needs at least an input and an output size, got {sizes:?}"
        )));
    }
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::Config(format!("zero-width layer in {sizes:?}")));
    }
    if *sizes.last().unwrap() != class_count {
        return Err(Error::Config(format!(
            "architecture {arch} ends in {} outputs but the model declares {class_count} classes",
            sizes.last().unwrap()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = sizes.len() - 2;
    let layers = sizes
        .windows(2)
        .enumerate()
        .map(|(i, pair)| {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights = (0..fan_in * fan_out)
                .map(|_| T::lit(rng.gen_range(-limit..limit)))
                .collect();
            let (activation, dropout_rate) = if i == last {
                (Activation::Identity, 0.0)
            } else {
                (arch.hidden_activation, arch.dropout_rate)
            };
            Ok(Layer {
                weights: Tensor::new(vec![fan_in, fan_out], weights)?,
                bias: Tensor::zeros(vec![fan_out])?,
                activation,
                dropout_rate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Model::from_layers(layers, class_count)
}

/// Per-parameter gradients, laid out like the model's layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T = f64> {
    pub layers: Vec<(Vec<T>, Vec<T>)>,
}

impl<T: Scalar> Gradients<T> {
    fn zeros_like(model: &Model<T>) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| (vec![T::zero(); l.weights.len()], vec![T::zero(); l.bias.len()]))
                .collect(),
        }
    }

    /// Gradient of flat parameter `index` (same order as [`Model::param`]).
    pub fn get(&self, mut index: usize) -> T {
        for (w, b) in &self.layers {
            if index < w.len() {
                return w[index];
            }
            index -= w.len();
            if index < b.len() {
                return b[index];
            }
            index -= b.len();
        }
        panic!("gradient index out of range")
    }

    fn scale(&mut self, factor: T) {
        for (w, b) in &mut self.layers {
            w.iter_mut().chain(b.iter_mut()).for_each(|g| *g *= factor);
        }
    }
}

struct LayerTrace<T> {
    input: Vec<T>,
    pre: Vec<T>,
    scale: Option<Vec<T>>,
}

/// Layered dense classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<T = f64> {
    layers: Vec<Layer<T>>,
    class_count: usize,
}

impl<T: Scalar> Model<T> {
    pub fn from_layers(layers: Vec<Layer<T>>, class_count: usize) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("model has no layers".into()));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.weights.rank() != 2 {
                return Err(Error::Config(format!("layer {i}: weights must be rank 2")));
            }
            if layer.bias.shape() != [layer.outputs()] {
                return Err(Error::Config(format!(
                    "layer {i}: bias shape {:?} does not match {} outputs",
                    layer.bias.shape(),
                    layer.outputs()
                )));
            }
            if !(0.0..1.0).contains(&layer.dropout_rate) {
                return Err(Error::Config(format!(
                    "layer {i}: dropout rate {} outside [0, 1)",
                    layer.dropout_rate
                )));
            }
            if i > 0 && layers[i - 1].outputs() != layer.inputs() {
                return Err(Error::Config(format!(
                    "layer {i} takes {} inputs but layer {} produces {}",
                    layer.inputs(),
                    i - 1,
                    layers[i - 1].outputs()
                )));
            }
        }
        let outputs = layers.last().unwrap().outputs();
        if outputs != class_count {
            return Err(Error::Config(format!(
                "final layer produces {outputs} outputs but class_count is {class_count}"
            )));
        }
        Ok(Self { layers, class_count })
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].inputs()
    }

    /// Copy of the model with `rate` on every hidden layer.
    pub fn with_dropout(&self, rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
        }
        let mut out = self.clone();
        let last = out.layers.len() - 1;
        for layer in &mut out.layers[..last] {
            layer.dropout_rate = rate;
        }
        Ok(out)
    }

    /// Rate on the first hidden layer, or 0 for a single-layer model.
    pub fn dropout_rate(&self) -> f64 {
        if self.layers.len() > 1 {
            self.layers[0].dropout_rate
        } else {
            0.0
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn param(&self, index: usize) -> T {
        *self.locate(index)
    }

    pub fn set_param(&mut self, index: usize, value: T) {
        *self.locate_mut(index) = value;
    }

    fn locate(&self, mut index: usize) -> &T {
        for l in &self.layers {
            if index < l.weights.len() {
                return &l.weights.values()[index];
            }
            index -= l.weights.len();
            if index < l.bias.len() {
                return &l.bias.values()[index];
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range")
    }

    fn locate_mut(&mut self, mut index: usize) -> &mut T {
        for l in &mut self.layers {
            if index < l.weights.len() {
                return &mut l.weights.values_mut()[index];
            }
            index -= l.weights.len();
            if index < l.bias.len() {
                return &mut l.bias.values_mut()[index];
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range")
    }

    fn check_input(&self, input: &[T]) -> Result<()> {
        if input.len() != self.input_len() {
            return Err(Error::Input(format!(
                "model expects {} input values, got {}",
                self.input_len(),
                input.len()
            )));
        }
        Ok(())
    }

    /// Logits for one input. With `masks`, dropout runs at each hidden layer's
    /// own rate; without, the pass is deterministic.
    pub fn forward(&self, input: &Tensor<T>, masks: Option<&mut MaskStream>) -> Result<Tensor<T>> {
        let dropout = masks.map(|m| (None, m));
        let logits = self.run(input.values(), dropout, None)?;
        Tensor::from_vec(logits)
    }

    /// Dropout pass at `rate` on every hidden layer, regardless of the stored rates.
    pub fn forward_with_rate(&self, input: &Tensor<T>, rate: f64, masks: &mut MaskStream) -> Result<Tensor<T>> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
        }
        let logits = self.run(input.values(), Some((Some(rate), masks)), None)?;
        Tensor::from_vec(logits)
    }

    /// Softmax of the deterministic pass.
    pub fn probabilities(&self, input: &Tensor<T>) -> Result<Vec<T>> {
        softmax(self.forward(input, None)?.values())
    }

    /// Deterministic class prediction.
    pub fn predict(&self, input: &Tensor<T>) -> Result<usize> {
        predict_class(&self.probabilities(input)?)
    }

    fn run(
        &self,
        input: &[T],
        mut dropout: Option<(Option<f64>, &mut MaskStream)>,
        mut trace: Option<&mut Vec<LayerTrace<T>>>,
    ) -> Result<Vec<T>> {
        self.check_input(input)?;
        let last = self.layers.len() - 1;
        let mut current = input.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let pre = layer.affine(&current);
            let mut post: Vec<T> = pre.iter().map(|&z| layer.activation.apply(z)).collect();
            let mut scale = None;
            if i < last {
                if let Some((rate, masks)) = dropout.as_mut() {
                    let rate = rate.unwrap_or(layer.dropout_rate);
                    if rate > 0.0 {
                        scale = Some(apply_dropout(&mut post, rate, masks));
                    }
                }
            }
            if let Some(t) = trace.as_deref_mut() {
                t.push(LayerTrace {
                    input: std::mem::take(&mut current),
                    pre,
                    scale,
                });
            }
            current = post;
        }
        if current.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("forward pass produced a non-finite logit".into()));
        }
        Ok(current)
    }

    /// Mean softmax cross-entropy over a batch and its gradient.
    ///
    /// `dropout` is `(rate, seed, first_counter)`; sample `k` of the batch uses
    /// mask stream `(seed, first_counter + k)`.
    pub fn loss_and_gradient(
        &self,
        inputs: &[&[T]],
        labels: &[usize],
        dropout: Option<(f64, u64, u64)>,
    ) -> Result<(T, Gradients<T>)> {
        if inputs.is_empty() || inputs.len() != labels.len() {
            return Err(Error::Input(format!(
                "batch has {} inputs and {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut loss = T::zero();
        let mut traces = Vec::with_capacity(self.layers.len());
        for (k, (&input, &label)) in inputs.iter().zip(labels).enumerate() {
            if label >= self.class_count {
                return Err(Error::Input(format!(
                    "label {label} outside 0..{}",
                    self.class_count
                )));
            }
            traces.clear();
            let mut masks = dropout.map(|(rate, seed, base)| (rate, MaskStream::new(seed, base + k as u64)));
            let logits = self.run(
                input,
                masks.as_mut().map(|(rate, m)| (Some(*rate), m)),
                Some(&mut traces),
            )?;
            loss += log_sum_exp(&logits) - logits[label];
            let mut delta = softmax(&logits)?;
            delta[label] -= T::one();
            self.backward(&traces, delta, &mut grads);
        }
        let inv = T::one() / T::lit(inputs.len() as f64);
        grads.scale(inv);
        Ok((loss * inv, grads))
    }

    /// Mean loss only; used by gradient checks and evaluation.
    pub fn loss(&self, inputs: &[&[T]], labels: &[usize]) -> Result<T> {
        let mut total = T::zero();
        for (&input, &label) in inputs.iter().zip(labels) {
            let logits = self.run(input, None, None)?;
            total += log_sum_exp(&logits) - logits[label];
        }
        Ok(total / T::lit(inputs.len() as f64))
    }

    /// `delta` is d(loss)/d(output of the last layer).
    fn backward(&self, traces: &[LayerTrace<T>], mut delta: Vec<T>, grads: &mut Gradients<T>) {
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let trace = &traces[i];
            if let Some(scale) = &trace.scale {
                delta.iter_mut().zip(scale).for_each(|(d, &s)| *d *= s);
            }
            for (d, &z) in delta.iter_mut().zip(&trace.pre) {
                *d *= layer.activation.derivative(z);
            }
            let cols = layer.outputs();
            let (gw, gb) = &mut grads.layers[i];
            gb.iter_mut().zip(&delta).for_each(|(g, &d)| *g += d);
            for (r, &x) in trace.input.iter().enumerate() {
                if x == T::zero() {
                    continue;
                }
                let row = &mut gw[r * cols..(r + 1) * cols];
                row.iter_mut().zip(&delta).for_each(|(g, &d)| *g += x * d);
            }
            if i > 0 {
                let w = layer.weights.values();
                delta = (0..layer.inputs())
                    .map(|r| {
                        w[r * cols..(r + 1) * cols]
                            .iter()
                            .zip(&delta)
                            .map(|(&wv, &d)| wv * d)
                            .sum()
                    })
                    .collect();
            }
        }
    }

    /// Plain SGD step: `param -= learning_rate * grad`.
    pub(crate) fn apply_gradients(&mut self, grads: &Gradients<T>, learning_rate: T) {
        for (layer, (gw, gb)) in self.layers.iter_mut().zip(&grads.layers) {
            layer
                .weights
                .values_mut()
                .iter_mut()
                .zip(gw)
                .for_each(|(p, &g)| *p -= learning_rate * g);
            layer
                .bias
                .values_mut()
                .iter_mut()
                .zip(gb)
                .for_each(|(p, &g)| *p -= learning_rate * g);
        }
    }

    /// Converts every parameter to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Model<U> {
        Model {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    weights: l.weights.cast(),
                    bias: l.bias.cast(),
                    activation: l.activation,
                    dropout_rate: l.dropout_rate,
                })
                .collect(),
            class_count: self.class_count,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_model() -> Model<f64> {
        let layer = Layer {
            weights: Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            bias: Tensor::zeros(vec![2]).unwrap(),
            activation: Activation::Identity,
            dropout_rate: 0.0,
        };
        Model::from_layers(vec![layer], 2).unwrap()
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let model = identity_model();
        let x = Tensor::from_vec(vec![3.0, 5.0]).unwrap();
        assert_eq!(model.forward(&x, None).unwrap().values(), &[3.0, 5.0]);
    }

    #[test]
    fn init_is_deterministic() {
        let arch = Architecture::new(vec![4, 3]);
        let a: Model = init_model(&arch, 3, 1).unwrap();
        let b: Model = init_model(&arch, 3, 1).unwrap();
        assert_eq!(a, b);
        let c: Model = init_model(&arch, 3, 2).unwrap();
        assert_ne!(a, c);

        let big: Model = init_model(&"784-256-10".parse().unwrap(), 10, 7).unwrap();
        assert_eq!(big.layers().len(), 2);
        assert_eq!(big, init_model(&"784-256-10".parse().unwrap(), 10, 7).unwrap());
    }

    #[test]
    fn init_weights_within_glorot_limit() {
        let model: Model = init_model(&Architecture::new(vec![30, 20, 5]), 5, 9).unwrap();
        for layer in model.layers() {
            let limit = (6.0 / (layer.inputs() + layer.outputs()) as f64).sqrt();
            assert!(layer.weights.values().iter().all(|w| w.abs() <= limit));
            assert!(layer.bias.values().iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn class_count_mismatch_is_a_config_error() {
        let arch: Architecture = "784-10-9".parse().unwrap();
        assert!(matches!(init_model::<f64>(&arch, 10, 0), Err(Error::Config(_))));
        assert!(matches!(
            init_model::<f64>(&Architecture::new(vec![5]), 5, 0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            init_model::<f64>(&Architecture::new(vec![5, 0, 2]), 2, 0),
            Err(Error::Config(_))
        ));
        assert!("784-abc".parse::<Architecture>().is_err());
    }

    #[test]
    fn non_composing_layers_rejected() {
        let l1 = Layer {
            weights: Tensor::<f64>::zeros(vec![4, 3]).unwrap(),
            bias: Tensor::zeros(vec![3]).unwrap(),
            activation: Activation::Relu,
            dropout_rate: 0.0,
        };
        let l2 = Layer {
            weights: Tensor::zeros(vec![5, 2]).unwrap(),
            bias: Tensor::zeros(vec![2]).unwrap(),
            activation: Activation::Identity,
            dropout_rate: 0.0,
        };
        assert!(matches!(Model::from_layers(vec![l1, l2], 2), Err(Error::Config(_))));
    }

    #[test]
    fn wrong_input_length_is_an_input_error() {
        let model = identity_model();
        let x = Tensor::from_vec(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(model.forward(&x, None), Err(Error::Input(_))));
    }

    #[test]
    fn dropout_passes() {
        let model: Model = init_model(&Architecture::new(vec![6, 16, 3]), 3, 4).unwrap();
        let x = Tensor::from_vec(vec![0.1, -0.2, 0.3, 0.4, 0.5, -0.6]).unwrap();
        let off1 = model.forward(&x, None).unwrap();
        let off2 = model.forward(&x, None).unwrap();
        assert_eq!(off1, off2);

        // rate 0 with dropout enabled is identical to the deterministic pass
        let zero = model.forward(&x, Some(&mut MaskStream::new(5, 0))).unwrap();
        assert_eq!(zero, off1);

        let dropped = model.with_dropout(0.5).unwrap();
        let a = dropped.forward(&x, Some(&mut MaskStream::new(5, 0))).unwrap();
        let b = dropped.forward(&x, Some(&mut MaskStream::new(5, 0))).unwrap();
        assert_eq!(a, b);
        let c = model.forward_with_rate(&x, 0.5, &mut MaskStream::new(5, 0)).unwrap();
        assert_eq!(a, c);
        let differs = (1..20).any(|k| {
            dropped.forward(&x, Some(&mut MaskStream::new(5, k))).unwrap() != a
        });
        assert!(differs);
    }

    #[test]
    fn gradient_matches_finite_differences_small() {
        let model: Model = init_model(&Architecture::new(vec![3, 4, 2]), 2, 11).unwrap();
        let x = [0.3, -0.7, 1.1];
        let (_, grads) = model.loss_and_gradient(&[&x], &[1], None).unwrap();
        let h = 1e-6;
        for p in 0..model.param_count() {
            let mut plus = model.clone();
            plus.set_param(p, model.param(p) + h);
            let mut minus = model.clone();
            minus.set_param(p, model.param(p) - h);
            let fd = (plus.loss(&[&x], &[1]).unwrap() - minus.loss(&[&x], &[1]).unwrap()) / (2.0 * h);
            assert!((fd - grads.get(p)).abs() < 1e-6, "param {p}: {fd} vs {}", grads.get(p));
        }
    }
}
