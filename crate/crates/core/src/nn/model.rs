//! Model topology, parameter storage and the forward/backward passes.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::nn::activation::{sigmoid, Activation};
use crate::nn::layers::{
    conv_backward, conv_forward_into, conv_out_len, dense_backward, dense_forward,
    ConvLayerParams,
};
use crate::nn::loss::bce_logit_grad;
use crate::nn::tensor::Tensor;
use crate::nn::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv { filters: usize, width: usize, stride: usize, activation: Activation },
    Flatten,
    Dense { units: usize },
}

/// Intermediate shape between layers, per batch element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Seq { len: usize, channels: usize },
    Flat { len: usize },
}

/// The network topology. The head is always a sigmoid over the final dense
/// output, so a valid spec ends in `Dense { units: 1 }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_len: usize,
    pub layers: Vec<LayerSpec>,
}

impl ModelSpec {
    /// The wave-aligned reference architecture: a width-1 conv to mix each
    /// cell into 8 channels, a width-5 stride-5 conv that reads one 5-wave
    /// feature block per step into 16 channels, then flatten and a single
    /// sigmoid unit.
    pub fn wave_cnn(input_len: usize, activation: Activation) -> Self {
        Self {
            input_len,
            layers: vec![
                LayerSpec::Conv { filters: 8, width: 1, stride: 1, activation },
                LayerSpec::Conv { filters: 16, width: 5, stride: 5, activation },
                LayerSpec::Flatten,
                LayerSpec::Dense { units: 1 },
            ],
        }
    }

    /// Shape after each layer, validating the whole chain. The input is a
    /// single-channel sequence of `input_len` cells.
    pub fn shapes(&self) -> Result<Vec<Shape>, NnError> {
        if self.input_len == 0 {
            return Err(NnError::BadModel("input length must be >= 1".into()));
        }
        if self.layers.is_empty() {
            return Err(NnError::BadModel("model has no layers".into()));
        }
        let mut shapes = Vec::with_capacity(self.layers.len());
        let mut current = Shape::Seq { len: self.input_len, channels: 1 };
        for (idx, layer) in self.layers.iter().enumerate() {
            current = match (*layer, current) {
                (LayerSpec::Conv { filters, width, stride, .. }, Shape::Seq { len, .. }) => {
                    if filters == 0 {
                        return Err(NnError::BadModel(format!("layer {idx}: zero filters")));
                    }
                    let out = conv_out_len(&format!("conv layer {idx}"), len, width, stride)?;
                    Shape::Seq { len: out, channels: filters }
                }
                (LayerSpec::Flatten, Shape::Seq { len, channels }) => {
                    Shape::Flat { len: len * channels }
                }
                (LayerSpec::Dense { units }, Shape::Flat { len }) => {
                    if units == 0 {
                        return Err(NnError::BadModel(format!("layer {idx}: zero units")));
                    }
                    let _ = len;
                    Shape::Flat { len: units }
                }
                (layer, shape) => {
                    return Err(NnError::BadModel(format!(
                        "layer {idx} ({layer:?}) cannot follow shape {shape:?}"
                    )));
                }
            };
            shapes.push(current);
        }
        if shapes.last() != Some(&Shape::Flat { len: 1 }) {
            return Err(NnError::BadModel(
                "the sigmoid head needs the final layer to be Dense { units: 1 }".into(),
            ));
        }
        Ok(shapes)
    }

    pub fn validate(&self) -> Result<(), NnError> {
        self.shapes().map(|_| ())
    }

    /// Flat parameter layout: per layer, where its kernels/weights and bias
    /// live inside the packed parameter vector.
    fn layout(&self) -> Result<Vec<LayerLayout>, NnError> {
        let shapes = self.shapes()?;
        let mut out = Vec::with_capacity(self.layers.len());
        let mut offset = 0;
        let mut prev = Shape::Seq { len: self.input_len, channels: 1 };
        for (layer, &shape) in self.layers.iter().zip(&shapes) {
            let layout = match (layer, prev) {
                (&LayerSpec::Conv { filters, width, .. }, Shape::Seq { channels, .. }) => {
                    let kernels = offset..offset + filters * width * channels;
                    let bias = kernels.end..kernels.end + filters;
                    offset = bias.end;
                    LayerLayout { kernels, bias, in_channels: channels }
                }
                (&LayerSpec::Dense { units }, Shape::Flat { len }) => {
                    let kernels = offset..offset + len * units;
                    let bias = kernels.end..kernels.end + units;
                    offset = bias.end;
                    LayerLayout { kernels, bias, in_channels: 0 }
                }
                _ => LayerLayout { kernels: offset..offset, bias: offset..offset, in_channels: 0 },
            };
            out.push(layout);
            prev = shape;
        }
        Ok(out)
    }

    pub fn n_params(&self) -> Result<usize, NnError> {
        Ok(self.layout()?.last().map_or(0, |l| l.bias.end))
    }
}

#[derive(Debug, Clone)]
struct LayerLayout {
    kernels: Range<usize>,
    bias: Range<usize>,
    in_channels: usize,
}

/// All learnable parameters of a model, packed into one flat vector in layer
/// order (kernels then bias per layer). The flat form keeps Adam, gradient
/// checking and checkpointing trivial.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    values: Vec<f64>,
}

impl ParamSet {
    pub fn zeros(spec: &ModelSpec) -> Result<Self, NnError> {
        Ok(Self { values: vec![0.0; spec.n_params()?] })
    }

    /// Glorot-uniform kernels and weights, zero biases.
    pub fn init_glorot(spec: &ModelSpec, seed: u64) -> Result<Self, NnError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_glorot_with(spec, &mut rng)
    }

    pub fn init_glorot_with(spec: &ModelSpec, rng: &mut impl Rng) -> Result<Self, NnError> {
        let layout = spec.layout()?;
        let mut values = vec![0.0; spec.n_params()?];
        let shapes = spec.shapes()?;
        let mut prev = Shape::Seq { len: spec.input_len, channels: 1 };
        for ((layer, lay), &shape) in spec.layers.iter().zip(&layout).zip(&shapes) {
            let (fan_in, fan_out) = match (layer, prev) {
                (&LayerSpec::Conv { filters, width, .. }, Shape::Seq { channels, .. }) => {
                    (width * channels, width * filters)
                }
                (&LayerSpec::Dense { units }, Shape::Flat { len }) => (len, units),
                _ => {
                    prev = shape;
                    continue;
                }
            };
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in &mut values[lay.kernels.clone()] {
                *v = rng.random_range(-limit..limit);
            }
            prev = shape;
        }
        Ok(Self { values })
    }

    pub fn from_flat(spec: &ModelSpec, values: Vec<f64>) -> Result<Self, NnError> {
        let expected = spec.n_params()?;
        if values.len() != expected {
            return Err(NnError::LengthMismatch { left: values.len(), right: expected });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(NnError::NonFinite { context: "parameter vector".into() });
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// An owned view of one conv layer, mostly for inspection and tests.
    pub fn conv_layer(&self, spec: &ModelSpec, index: usize) -> Result<ConvLayerParams, NnError> {
        let layout = spec.layout()?;
        match spec.layers.get(index) {
            Some(&LayerSpec::Conv { filters, width, stride, .. }) => ConvLayerParams::new(
                filters,
                width,
                stride,
                layout[index].in_channels,
                self.values[layout[index].kernels.clone()].to_vec(),
                self.values[layout[index].bias.clone()].to_vec(),
            ),
            other => Err(NnError::BadModel(format!("layer {index} is {other:?}, not conv"))),
        }
    }
}

/// Everything backward needs from a forward pass.
pub struct ForwardCache {
    batch: usize,
    layers: Vec<LayerCache>,
    probs: Vec<f64>,
}

enum LayerCache {
    Conv { input: Tensor, deriv: Vec<f64> },
    Flatten,
    Dense { input: Vec<f64> },
}

impl ForwardCache {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Full forward pass: returns per-sample probabilities and the cache.
pub fn forward(
    spec: &ModelSpec,
    params: &ParamSet,
    input: &Tensor,
) -> Result<(Vec<f64>, ForwardCache), NnError> {
    run_forward(spec, params, input, true).map(|(probs, cache)| (probs, cache.expect("cached")))
}

/// Forward pass without keeping the cache.
pub fn predict_proba(
    spec: &ModelSpec,
    params: &ParamSet,
    input: &Tensor,
) -> Result<Vec<f64>, NnError> {
    run_forward(spec, params, input, false).map(|(probs, _)| probs)
}

enum Feed {
    Seq(Tensor),
    Flat { rows: usize, dim: usize, data: Vec<f64> },
}

fn run_forward(
    spec: &ModelSpec,
    params: &ParamSet,
    input: &Tensor,
    want_cache: bool,
) -> Result<(Vec<f64>, Option<ForwardCache>), NnError> {
    let shapes = spec.shapes()?;
    let layout = spec.layout()?;
    if params.len() != spec.n_params()? {
        return Err(NnError::LengthMismatch { left: params.len(), right: spec.n_params()? });
    }
    if input.len() != spec.input_len || input.channels() != 1 {
        return Err(NnError::Shape {
            layer: "model input".into(),
            details: format!(
                "expected ({}, 1) sequences, got ({}, {})",
                spec.input_len,
                input.len(),
                input.channels()
            ),
        });
    }
    let n = input.batch();
    let mut caches: Vec<LayerCache> = Vec::with_capacity(spec.layers.len());
    let mut feed = Feed::Seq(input.clone());
    for ((layer, lay), &shape) in spec.layers.iter().zip(&layout).zip(&shapes) {
        feed = match (layer, feed) {
            (&LayerSpec::Conv { filters, width, stride, activation }, Feed::Seq(seq)) => {
                let conv = ConvLayerParams {
                    filters,
                    width,
                    stride,
                    in_channels: lay.in_channels,
                    kernels: params.values[lay.kernels.clone()].to_vec(),
                    bias: params.values[lay.bias.clone()].to_vec(),
                };
                let Shape::Seq { len: out_len, .. } = shape else { unreachable!() };
                let mut out = Tensor::zeros(n, out_len, filters);
                conv_forward_into(&seq, &conv, &mut out);
                // Activation in place, capturing the derivative alongside.
                let mut deriv = if want_cache { vec![0.0; out.data().len()] } else { Vec::new() };
                for (i, v) in out.data_mut().iter_mut().enumerate() {
                    let (value, d) = activation.eval(*v);
                    *v = value;
                    if want_cache {
                        deriv[i] = d;
                    }
                }
                if want_cache {
                    caches.push(LayerCache::Conv { input: seq, deriv });
                }
                Feed::Seq(out)
            }
            (&LayerSpec::Flatten, Feed::Seq(seq)) => {
                let dim = seq.len() * seq.channels();
                if want_cache {
                    caches.push(LayerCache::Flatten);
                }
                Feed::Flat { rows: n, dim, data: seq.into_data() }
            }
            (&LayerSpec::Dense { units }, Feed::Flat { rows, dim, data }) => {
                let out = dense_forward(
                    &data,
                    rows,
                    dim,
                    units,
                    &params.values[lay.kernels.clone()],
                    &params.values[lay.bias.clone()],
                );
                if want_cache {
                    caches.push(LayerCache::Dense { input: data });
                }
                Feed::Flat { rows, dim: units, data: out }
            }
            _ => unreachable!("shapes() already validated the chain"),
        };
    }
    let Feed::Flat { data: logits, .. } = feed else { unreachable!() };
    let probs: Vec<f64> = logits.iter().map(|&z| sigmoid(z)).collect();
    let cache = want_cache.then_some(ForwardCache { batch: n, layers: caches, probs: probs.clone() });
    Ok((probs, cache))
}

/// Analytic gradient of mean BCE over the batch with respect to every
/// parameter, flat and aligned with [`ParamSet::values`].
pub fn backward(
    spec: &ModelSpec,
    params: &ParamSet,
    cache: &ForwardCache,
    y: &[u8],
) -> Result<Vec<f64>, NnError> {
    let shapes = spec.shapes()?;
    let layout = spec.layout()?;
    if cache.layers.len() != spec.layers.len() {
        return Err(NnError::BadModel(format!(
            "cache has {} layer records, model has {} layers",
            cache.layers.len(),
            spec.layers.len()
        )));
    }
    if y.len() != cache.batch {
        return Err(NnError::LengthMismatch { left: y.len(), right: cache.batch });
    }

    let mut grads = vec![0.0; params.len()];
    // d loss / d logit, the sigmoid and clamp already folded in.
    let mut flat_grad = bce_logit_grad(&cache.probs, y);
    let mut seq_grad: Option<Tensor> = None;

    for idx in (0..spec.layers.len()).rev() {
        let lay = &layout[idx];
        match (&spec.layers[idx], &cache.layers[idx]) {
            (&LayerSpec::Dense { units }, LayerCache::Dense { input }) => {
                let in_dim = input.len() / cache.batch;
                let d = dense_backward(
                    input,
                    cache.batch,
                    in_dim,
                    units,
                    &params.values[lay.kernels.clone()],
                    &flat_grad,
                );
                grads[lay.kernels.clone()].copy_from_slice(&d.weights);
                grads[lay.bias.clone()].copy_from_slice(&d.bias);
                flat_grad = d.input;
            }
            (&LayerSpec::Flatten, LayerCache::Flatten) => {
                // The flat gradient is bitwise the (len, channels) gradient.
                let Shape::Seq { len, channels } = shapes[idx - 1] else {
                    return Err(NnError::BadModel("flatten without a sequence input".into()));
                };
                seq_grad =
                    Some(Tensor::from_raw(cache.batch, len, channels, std::mem::take(&mut flat_grad)));
            }
            (&LayerSpec::Conv { filters, width, stride, .. }, LayerCache::Conv { input, deriv }) => {
                let mut g = seq_grad.take().ok_or_else(|| {
                    NnError::BadModel("conv gradient requested before flatten".into())
                })?;
                for (gv, dv) in g.data_mut().iter_mut().zip(deriv) {
                    *gv *= dv;
                }
                let conv = ConvLayerParams {
                    filters,
                    width,
                    stride,
                    in_channels: lay.in_channels,
                    kernels: params.values[lay.kernels.clone()].to_vec(),
                    bias: params.values[lay.bias.clone()].to_vec(),
                };
                let need_input = idx > 0;
                let d = conv_backward(input, &conv, &g, need_input);
                grads[lay.kernels.clone()].copy_from_slice(&d.kernels);
                grads[lay.bias.clone()].copy_from_slice(&d.bias);
                seq_grad = d.input;
            }
            (layer, _) => {
                return Err(NnError::BadModel(format!(
                    "cache record at layer {idx} does not match {layer:?}"
                )));
            }
        }
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::loss::bce_loss;

    fn tiny_spec() -> ModelSpec {
        ModelSpec {
            input_len: 10,
            layers: vec![
                LayerSpec::Conv { filters: 2, width: 1, stride: 1, activation: Activation::Swish },
                LayerSpec::Conv { filters: 3, width: 5, stride: 5, activation: Activation::Selu },
                LayerSpec::Flatten,
                LayerSpec::Dense { units: 1 },
            ],
        }
    }

    #[test]
    fn reference_shape_chain() {
        let spec = ModelSpec::wave_cnn(260, Activation::Swish);
        let shapes = spec.shapes().unwrap();
        assert_eq!(
            shapes,
            vec![
                Shape::Seq { len: 260, channels: 8 },
                Shape::Seq { len: 52, channels: 16 },
                Shape::Flat { len: 832 },
                Shape::Flat { len: 1 },
            ]
        );
        // 8 kernels + 8 biases, 16x5x8 + 16, 832 + 1.
        assert_eq!(spec.n_params().unwrap(), 16 + 656 + 833);
    }

    #[test]
    fn rejects_non_tiling_and_headless_models() {
        let bad = ModelSpec::wave_cnn(262, Activation::Relu);
        assert!(bad.validate().is_err());
        let headless = ModelSpec {
            input_len: 10,
            layers: vec![LayerSpec::Conv {
                filters: 2,
                width: 1,
                stride: 1,
                activation: Activation::Relu,
            }],
        };
        assert!(headless.validate().is_err());
    }

    #[test]
    fn zero_params_give_one_half() {
        let spec = tiny_spec();
        let params = ParamSet::zeros(&spec).unwrap();
        let x = Tensor::new(2, 10, 1, (0..20).map(f64::from).collect()).unwrap();
        let probs = predict_proba(&spec, &params, &x).unwrap();
        assert_eq!(probs, vec![0.5, 0.5]);
    }

    #[test]
    fn duplicated_rows_get_identical_probs() {
        let spec = tiny_spec();
        let params = ParamSet::init_glorot(&spec, 3).unwrap();
        let row: Vec<f64> = (0..10).map(|i| f64::from(i) * 0.3 - 1.0).collect();
        let mut data = row.clone();
        data.extend_from_slice(&row);
        let x = Tensor::new(2, 10, 1, data).unwrap();
        let probs = predict_proba(&spec, &params, &x).unwrap();
        assert_eq!(probs[0], probs[1]);
    }

    #[test]
    fn forward_and_predict_agree() {
        let spec = tiny_spec();
        let params = ParamSet::init_glorot(&spec, 11).unwrap();
        let x = Tensor::new(3, 10, 1, (0..30).map(|i| f64::from(i) * 0.1).collect()).unwrap();
        let (probs, cache) = forward(&spec, &params, &x).unwrap();
        assert_eq!(probs, predict_proba(&spec, &params, &x).unwrap());
        assert_eq!(cache.probs(), probs.as_slice());
    }

    #[test]
    fn raising_dense_bias_raises_every_prob() {
        let spec = tiny_spec();
        let mut params = ParamSet::init_glorot(&spec, 5).unwrap();
        let x = Tensor::new(2, 10, 1, (0..20).map(|i| f64::from(i) * 0.2).collect()).unwrap();
        let before = predict_proba(&spec, &params, &x).unwrap();
        let last = params.len() - 1;
        params.values_mut()[last] += 1.0;
        let after = predict_proba(&spec, &params, &x).unwrap();
        for (b, a) in before.iter().zip(&after) {
            assert!(a > b);
        }
    }

    #[test]
    fn gradients_match_central_finite_differences() {
        let spec = tiny_spec();
        let params = ParamSet::init_glorot(&spec, 42).unwrap();
        let x = Tensor::new(
            4,
            10,
            1,
            (0..40).map(|i| (f64::from(i) * 0.37).sin()).collect(),
        )
        .unwrap();
        let y = [1u8, 0, 1, 0];
        let (_, cache) = forward(&spec, &params, &x).unwrap();
        let analytic = backward(&spec, &params, &cache, &y).unwrap();

        let h = 1e-5;
        for i in 0..params.len() {
            let mut plus = params.clone();
            plus.values_mut()[i] += h;
            let mut minus = params.clone();
            minus.values_mut()[i] -= h;
            let lp = bce_loss(&predict_proba(&spec, &plus, &x).unwrap(), &y).unwrap();
            let lm = bce_loss(&predict_proba(&spec, &minus, &x).unwrap(), &y).unwrap();
            let numeric = (lp - lm) / (2.0 * h);
            let denom = numeric.abs().max(analytic[i].abs()).max(1e-6);
            assert!(
                (analytic[i] - numeric).abs() / denom < 1e-4,
                "param {i}: analytic {} vs numeric {numeric}",
                analytic[i]
            );
        }
    }

    #[test]
    fn zero_input_kills_kernel_gradients_but_not_bias() {
        let spec = ModelSpec {
            input_len: 10,
            layers: vec![
                LayerSpec::Conv { filters: 2, width: 5, stride: 5, activation: Activation::Elu },
                LayerSpec::Flatten,
                LayerSpec::Dense { units: 1 },
            ],
        };
        let params = ParamSet::init_glorot(&spec, 9).unwrap();
        let x = Tensor::new(2, 10, 1, vec![0.0; 20]).unwrap();
        let (_, cache) = forward(&spec, &params, &x).unwrap();
        // Both labels 1, otherwise the two identical samples cancel exactly.
        let grads = backward(&spec, &params, &cache, &[1, 1]).unwrap();
        // Layer 0 kernels occupy the first 2*5 slots, biases the next 2.
        assert!(grads[..10].iter().all(|&g| g == 0.0));
        assert!(grads[10..12].iter().any(|&g| g != 0.0));
    }

    #[test]
    fn duplicating_the_batch_preserves_mean_gradients() {
        let spec = tiny_spec();
        let params = ParamSet::init_glorot(&spec, 8).unwrap();
        let rows: Vec<f64> = (0..20).map(|i| (f64::from(i) * 0.61).cos()).collect();
        let x1 = Tensor::new(2, 10, 1, rows.clone()).unwrap();
        let mut doubled = rows.clone();
        doubled.extend_from_slice(&rows);
        let x2 = Tensor::new(4, 10, 1, doubled).unwrap();
        let (_, c1) = forward(&spec, &params, &x1).unwrap();
        let (_, c2) = forward(&spec, &params, &x2).unwrap();
        let g1 = backward(&spec, &params, &c1, &[1, 0]).unwrap();
        let g2 = backward(&spec, &params, &c2, &[1, 0, 1, 0]).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_cache_is_rejected() {
        let spec = tiny_spec();
        let params = ParamSet::init_glorot(&spec, 1).unwrap();
        let x = Tensor::new(2, 10, 1, vec![0.1; 20]).unwrap();
        let (_, cache) = forward(&spec, &params, &x).unwrap();
        assert!(backward(&spec, &params, &cache, &[1]).is_err());
        let other = ModelSpec {
            input_len: 10,
            layers: vec![
                LayerSpec::Conv { filters: 2, width: 5, stride: 5, activation: Activation::Relu },
                LayerSpec::Flatten,
                LayerSpec::Dense { units: 1 },
            ],
        };
        assert!(backward(&other, &ParamSet::init_glorot(&other, 1).unwrap(), &cache, &[1, 0])
            .is_err());
    }

    #[test]
    fn glorot_init_is_seeded_and_bounded() {
        let spec = tiny_spec();
        let a = ParamSet::init_glorot(&spec, 7).unwrap();
        let b = ParamSet::init_glorot(&spec, 7).unwrap();
        let c = ParamSet::init_glorot(&spec, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let layout_check = a.conv_layer(&spec, 0).unwrap();
        assert_eq!(layout_check.bias, vec![0.0, 0.0]);
        // Dense limit: sqrt(6 / (6 + 1)).
        let limit = (6.0f64 / 7.0).sqrt();
        let dense_weights = &a.values()[a.len() - 7..a.len() - 1];
        assert!(dense_weights.iter().all(|w| w.abs() <= limit));
    }
}
