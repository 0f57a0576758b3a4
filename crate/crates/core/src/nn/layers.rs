//! Layer primitives: 1D convolution and the dense head.
//!
//! With kernel width equal to stride (the wave-aligned case) the convolution
//! windows tile the input without overlap, so each output position is the
//! dot product of one input segment with the kernel.

use crate::nn::tensor::Tensor;
use crate::nn::NnError;

/// Parameters of one 1D convolution layer. Kernels are stored row-major as
/// (filters, width, in_channels).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayerParams {
    pub filters: usize,
    pub width: usize,
    pub stride: usize,
    pub in_channels: usize,
    pub kernels: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayerParams {
    pub fn new(
        filters: usize,
        width: usize,
        stride: usize,
        in_channels: usize,
        kernels: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self, NnError> {
        if filters == 0 || width == 0 || stride == 0 || in_channels == 0 {
            return Err(NnError::Shape {
                layer: "conv1d".into(),
                details: "filters, width, stride and in_channels must all be >= 1".into(),
            });
        }
        if kernels.len() != filters * width * in_channels || bias.len() != filters {
            return Err(NnError::Shape {
                layer: "conv1d".into(),
                details: format!(
                    "kernel/bias lengths {}/{} do not match {filters} filters x {width} width x {in_channels} channels",
                    kernels.len(),
                    bias.len()
                ),
            });
        }
        Ok(Self { filters, width, stride, in_channels, kernels, bias })
    }
}

/// Output sequence length of a conv layer, or an error if the windows do not
/// tile the input exactly.
pub(super) fn conv_out_len(
    layer: &str,
    input_len: usize,
    width: usize,
    stride: usize,
) -> Result<usize, NnError> {
    if input_len < width || (input_len - width) % stride != 0 {
        return Err(NnError::Shape {
            layer: layer.into(),
            details: format!(
                "input length {input_len} is incompatible with width {width}, stride {stride}: \
                 (L - S) / stride + 1 must be a positive integer"
            ),
        });
    }
    Ok((input_len - width) / stride + 1)
}

/// out[n, p, k] = bias_k + sum over (s, c) of in[n, p*stride + s, c] * kernel[k, s, c]
pub fn conv1d_forward(input: &Tensor, params: &ConvLayerParams) -> Result<Tensor, NnError> {
    if input.channels() != params.in_channels {
        return Err(NnError::Shape {
            layer: "conv1d".into(),
            details: format!(
                "input has {} channels, layer expects {}",
                input.channels(),
                params.in_channels
            ),
        });
    }
    let out_len = conv_out_len("conv1d", input.len(), params.width, params.stride)?;
    let mut out = Tensor::zeros(input.batch(), out_len, params.filters);
    conv_forward_into(input, params, &mut out);
    Ok(out)
}

pub(super) fn conv_forward_into(input: &Tensor, params: &ConvLayerParams, out: &mut Tensor) {
    let window = params.width * params.in_channels;
    let filters = params.filters;
    let out_len = out.len();
    for n in 0..input.batch() {
        let sample = input.sample(n);
        let out_base = n * out_len * filters;
        for p in 0..out_len {
            // Contiguous (width x channels) window thanks to row-major order.
            let start = p * params.stride * params.in_channels;
            let win = &sample[start..start + window];
            for k in 0..filters {
                let kernel = &params.kernels[k * window..(k + 1) * window];
                let mut acc = params.bias[k];
                for (x, w) in win.iter().zip(kernel) {
                    acc += x * w;
                }
                out.data_mut()[out_base + p * filters + k] = acc;
            }
        }
    }
}

/// Backward pass for one conv layer. `grad_out` has the forward output's
/// shape. Gradients are accumulated as plain sums; the mean-over-batch
/// factor is already inside the loss gradient.
pub(super) struct ConvGrads {
    pub kernels: Vec<f64>,
    pub bias: Vec<f64>,
    pub input: Option<Tensor>,
}

pub(super) fn conv_backward(
    input: &Tensor,
    params: &ConvLayerParams,
    grad_out: &Tensor,
    need_input_grad: bool,
) -> ConvGrads {
    let window = params.width * params.in_channels;
    let filters = params.filters;
    let out_len = grad_out.len();
    let mut gk = vec![0.0; params.kernels.len()];
    let mut gb = vec![0.0; filters];
    let mut gi = if need_input_grad {
        Some(Tensor::zeros(input.batch(), input.len(), input.channels()))
    } else {
        None
    };
    for n in 0..input.batch() {
        let sample = input.sample(n);
        let g_base = n * out_len * filters;
        for p in 0..out_len {
            let start = p * params.stride * params.in_channels;
            let win = &sample[start..start + window];
            for k in 0..filters {
                let g = grad_out.data()[g_base + p * filters + k];
                if g == 0.0 {
                    continue;
                }
                gb[k] += g;
                let kernel_grad = &mut gk[k * window..(k + 1) * window];
                for (kg, x) in kernel_grad.iter_mut().zip(win) {
                    *kg += g * x;
                }
                if let Some(gi) = gi.as_mut() {
                    let in_base = n * input.len() * input.channels() + start;
                    let kernel = &params.kernels[k * window..(k + 1) * window];
                    let slot = &mut gi.data_mut()[in_base..in_base + window];
                    for (s, w) in slot.iter_mut().zip(kernel) {
                        *s += g * w;
                    }
                }
            }
        }
    }
    ConvGrads { kernels: gk, bias: gb, input: gi }
}

/// out[n, o] = bias_o + sum over i of in[n, i] * weights[i, o]
pub(super) fn dense_forward(
    input: &[f64],
    n: usize,
    in_dim: usize,
    out_dim: usize,
    weights: &[f64],
    bias: &[f64],
) -> Vec<f64> {
    debug_assert_eq!(input.len(), n * in_dim);
    debug_assert_eq!(weights.len(), in_dim * out_dim);
    let mut out = vec![0.0; n * out_dim];
    for row in 0..n {
        let x = &input[row * in_dim..(row + 1) * in_dim];
        let y = &mut out[row * out_dim..(row + 1) * out_dim];
        y.copy_from_slice(bias);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let wrow = &weights[i * out_dim..(i + 1) * out_dim];
            for (o, &w) in wrow.iter().enumerate() {
                y[o] += xi * w;
            }
        }
    }
    out
}

pub(super) struct DenseGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub input: Vec<f64>,
}

pub(super) fn dense_backward(
    input: &[f64],
    n: usize,
    in_dim: usize,
    out_dim: usize,
    weights: &[f64],
    grad_out: &[f64],
) -> DenseGrads {
    let mut gw = vec![0.0; in_dim * out_dim];
    let mut gb = vec![0.0; out_dim];
    let mut gi = vec![0.0; n * in_dim];
    for row in 0..n {
        let x = &input[row * in_dim..(row + 1) * in_dim];
        let g = &grad_out[row * out_dim..(row + 1) * out_dim];
        for (o, &go) in g.iter().enumerate() {
            gb[o] += go;
        }
        let gx = &mut gi[row * in_dim..(row + 1) * in_dim];
        for i in 0..in_dim {
            let wrow = &weights[i * out_dim..(i + 1) * out_dim];
            let gwrow = &mut gw[i * out_dim..(i + 1) * out_dim];
            let xi = x[i];
            let mut acc = 0.0;
            for o in 0..out_dim {
                gwrow[o] += xi * g[o];
                acc += g[o] * wrow[o];
            }
            gx[i] = acc;
        }
    }
    DenseGrads { weights: gw, bias: gb, input: gi }
}
