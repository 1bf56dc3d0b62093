//! Layers with hand-written backward passes over `ndarray`.
//!
//! Parameters live in flat row-major buffers so the optimizer, soft target
//! updates and checkpoints can treat every layer alike.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, Array4, ArrayView2, ArrayView4, ArrayViewMut2, Axis};
use rand::Rng;

/// A named tensor with its gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
}

impl Param {
    pub fn zeros(name: impl Into<String>, shape: Vec<usize>) -> Param {
        let n = shape.iter().product();
        Param {
            name: name.into(),
            shape,
            value: vec![0.0; n],
            grad: vec![0.0; n],
        }
    }

    pub fn uniform<R: Rng + ?Sized>(name: impl Into<String>, shape: Vec<usize>, bound: f64, rng: &mut R) -> Param {
        let mut p = Param::zeros(name, shape);
        if bound > 0.0 {
            for v in &mut p.value {
                *v = rng.random_range(-bound..bound);
            }
        }
        p
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }

    /// Value viewed as `rows × (len / rows)`.
    fn matrix(&self, rows: usize) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((rows, self.len() / rows), &self.value).expect("parameter length divisible by rows")
    }

    fn grad_matrix(&mut self, rows: usize) -> ArrayViewMut2<'_, f64> {
        let cols = self.len() / rows;
        ArrayViewMut2::from_shape((rows, cols), &mut self.grad).expect("parameter length divisible by rows")
    }
}

/// 2D convolution without padding, computed as im2col followed by a GEMM.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: [usize; 2],
    pub stride: [usize; 2],
    pub weight: Param,
    pub bias: Param,
}

#[derive(Debug, Clone)]
pub struct ConvCache {
    cols: Array2<f64>,
    input_shape: [usize; 4],
    out_hw: [usize; 2],
}

pub fn conv_output_size(input: usize, kernel: usize, stride: usize) -> Option<usize> {
    (input >= kernel && stride > 0).then(|| (input - kernel) / stride + 1)
}

impl Conv2d {
    pub fn new<R: Rng + ?Sized>(
        prefix: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: [usize; 2],
        stride: [usize; 2],
        rng: &mut R,
    ) -> Conv2d {
        let fan_in = in_channels * kernel[0] * kernel[1];
        let bound = 1.0 / (fan_in as f64).sqrt();
        Conv2d {
            in_channels,
            out_channels,
            kernel,
            stride,
            weight: Param::uniform(
                format!("{prefix}.weight"),
                vec![out_channels, in_channels, kernel[0], kernel[1]],
                bound,
                rng,
            ),
            bias: Param::uniform(format!("{prefix}.bias"), vec![out_channels], bound, rng),
        }
    }

    pub fn output_hw(&self, h: usize, w: usize) -> Option<[usize; 2]> {
        Some([
            conv_output_size(h, self.kernel[0], self.stride[0])?,
            conv_output_size(w, self.kernel[1], self.stride[1])?,
        ])
    }

    fn im2col(&self, x: ArrayView4<'_, f64>, oh: usize, ow: usize) -> Array2<f64> {
        let (n, c, h, w) = x.dim();
        let [kh, kw] = self.kernel;
        let [sh, sw] = self.stride;
        let p = oh * ow;
        let x = x.as_standard_layout();
        let xs = x.as_slice().expect("standard layout");
        let mut cols = Array2::<f64>::zeros((c * kh * kw, n * p));
        let cs = cols.as_slice_mut().expect("fresh array");
        let np = n * p;
        for ci in 0..c {
            for i in 0..kh {
                for j in 0..kw {
                    let row = (ci * kh + i) * kw + j;
                    let dst = &mut cs[row * np..(row + 1) * np];
                    for b in 0..n {
                        let plane = &xs[(b * c + ci) * h * w..(b * c + ci + 1) * h * w];
                        for oy in 0..oh {
                            let src_row = &plane[(oy * sh + i) * w..];
                            let d = &mut dst[b * p + oy * ow..b * p + (oy + 1) * ow];
                            for (ox, v) in d.iter_mut().enumerate() {
                                *v = src_row[ox * sw + j];
                            }
                        }
                    }
                }
            }
        }
        cols
    }

    fn col2im(&self, cols: &Array2<f64>, shape: [usize; 4], oh: usize, ow: usize) -> Array4<f64> {
        let [n, c, h, w] = shape;
        let [kh, kw] = self.kernel;
        let [sh, sw] = self.stride;
        let p = oh * ow;
        let np = n * p;
        let mut dx = Array4::<f64>::zeros((n, c, h, w));
        let ds = dx.as_slice_mut().expect("fresh array");
        let cs = cols.as_slice().expect("standard layout");
        for ci in 0..c {
            for i in 0..kh {
                for j in 0..kw {
                    let row = (ci * kh + i) * kw + j;
                    let src = &cs[row * np..(row + 1) * np];
                    for b in 0..n {
                        let base = (b * c + ci) * h * w;
                        for oy in 0..oh {
                            let off = base + (oy * sh + i) * w + j;
                            for ox in 0..ow {
                                ds[off + ox * sw] += src[b * p + oy * ow + ox];
                            }
                        }
                    }
                }
            }
        }
        dx
    }

    pub fn forward(&self, x: ArrayView4<'_, f64>) -> (Array4<f64>, ConvCache) {
        let (n, c, h, w) = x.dim();
        assert_eq!(c, self.in_channels, "conv input channels");
        let [oh, ow] = self.output_hw(h, w).expect("conv input smaller than kernel");
        let cols = self.im2col(x, oh, ow);
        let p = oh * ow;
        let mut out = Array2::<f64>::zeros((self.out_channels, n * p));
        general_mat_mul(1.0, &self.weight.matrix(self.out_channels), &cols, 0.0, &mut out);
        let mut y = Array4::<f64>::zeros((n, self.out_channels, oh, ow));
        {
            let ys = y.as_slice_mut().expect("fresh array");
            let os = out.as_slice().expect("fresh array");
            for oc in 0..self.out_channels {
                let b_oc = self.bias.value[oc];
                for b in 0..n {
                    let src = &os[oc * n * p + b * p..oc * n * p + (b + 1) * p];
                    let dst = &mut ys[(b * self.out_channels + oc) * p..(b * self.out_channels + oc + 1) * p];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d = s + b_oc;
                    }
                }
            }
        }
        (
            y,
            ConvCache {
                cols,
                input_shape: [n, c, h, w],
                out_hw: [oh, ow],
            },
        )
    }

    /// Accumulates parameter gradients when `param_grads` is set; returns
    /// the input gradient when `input_grad` is set.
    pub fn backward(
        &mut self,
        cache: &ConvCache,
        grad_out: &Array4<f64>,
        param_grads: bool,
        input_grad: bool,
    ) -> Option<Array4<f64>> {
        let [n, _, _, _] = cache.input_shape;
        let [oh, ow] = cache.out_hw;
        let p = oh * ow;
        let oc_n = self.out_channels;
        let mut g = Array2::<f64>::zeros((oc_n, n * p));
        {
            let gs = g.as_slice_mut().expect("fresh array");
            let go = grad_out.as_standard_layout();
            let src = go.as_slice().expect("standard layout");
            for b in 0..n {
                for oc in 0..oc_n {
                    let s = &src[(b * oc_n + oc) * p..(b * oc_n + oc + 1) * p];
                    gs[oc * n * p + b * p..oc * n * p + (b + 1) * p].copy_from_slice(s);
                }
            }
        }
        if param_grads {
            general_mat_mul(1.0, &g, &cache.cols.t(), 1.0, &mut self.weight.grad_matrix(oc_n));
            for (gb, row) in self.bias.grad.iter_mut().zip(g.rows()) {
                *gb += row.sum();
            }
        }
        if !input_grad {
            return None;
        }
        let w = self.weight.matrix(oc_n);
        let mut dcols = Array2::<f64>::zeros(cache.cols.raw_dim());
        general_mat_mul(1.0, &w.t(), &g, 0.0, &mut dcols);
        Some(self.col2im(&dcols, cache.input_shape, oh, ow))
    }
}

/// Non-overlapping max pooling (stride equals the window); trailing rows
/// and columns that do not fill a window are dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxPool2d {
    pub window: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct PoolCache {
    argmax: Vec<usize>,
    input_shape: [usize; 4],
}

impl MaxPool2d {
    pub fn output_hw(&self, h: usize, w: usize) -> Option<[usize; 2]> {
        let [ph, pw] = self.window;
        (ph > 0 && pw > 0 && h >= ph && w >= pw).then(|| [h / ph, w / pw])
    }

    pub fn forward(&self, x: ArrayView4<'_, f64>) -> (Array4<f64>, PoolCache) {
        let (n, c, h, w) = x.dim();
        let [ph, pw] = self.window;
        let [oh, ow] = self.output_hw(h, w).expect("pool input smaller than window");
        let x = x.as_standard_layout();
        let xs = x.as_slice().expect("standard layout");
        let mut y = Array4::<f64>::zeros((n, c, oh, ow));
        let mut argmax = vec![0usize; n * c * oh * ow];
        let ys = y.as_slice_mut().expect("fresh array");
        for plane in 0..n * c {
            let base = plane * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = base + oy * ph * w + ox * pw;
                    for i in 0..ph {
                        for j in 0..pw {
                            let k = base + (oy * ph + i) * w + ox * pw + j;
                            if xs[k] > xs[best] {
                                best = k;
                            }
                        }
                    }
                    let o = (plane * oh + oy) * ow + ox;
                    ys[o] = xs[best];
                    argmax[o] = best;
                }
            }
        }
        (
            y,
            PoolCache {
                argmax,
                input_shape: [n, c, h, w],
            },
        )
    }

    pub fn backward(&self, cache: &PoolCache, grad_out: &Array4<f64>) -> Array4<f64> {
        let [n, c, h, w] = cache.input_shape;
        let mut dx = Array4::<f64>::zeros((n, c, h, w));
        let ds = dx.as_slice_mut().expect("fresh array");
        let go = grad_out.as_standard_layout();
        for (g, &k) in go.as_slice().expect("standard layout").iter().zip(&cache.argmax) {
            ds[k] += g;
        }
        dx
    }
}

/// Fully connected layer `y = x Wᵀ + b` with `W` of shape `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Param,
    pub bias: Param,
}

impl Dense {
    pub fn new<R: Rng + ?Sized>(prefix: &str, inputs: usize, outputs: usize, bound: Option<f64>, rng: &mut R) -> Dense {
        let bound = bound.unwrap_or(1.0 / (inputs as f64).sqrt());
        Dense {
            inputs,
            outputs,
            weight: Param::uniform(format!("{prefix}.weight"), vec![outputs, inputs], bound, rng),
            bias: Param::uniform(format!("{prefix}.bias"), vec![outputs], bound, rng),
        }
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(x.ncols(), self.inputs, "dense input width");
        let mut y = Array2::<f64>::zeros((x.nrows(), self.outputs));
        general_mat_mul(1.0, &x, &self.weight.matrix(self.outputs).t(), 0.0, &mut y);
        y += &ArrayView2::from_shape((1, self.outputs), &self.bias.value).expect("bias length");
        y
    }

    pub fn backward(&mut self, x: ArrayView2<'_, f64>, grad_out: &Array2<f64>, param_grads: bool) -> Array2<f64> {
        if param_grads {
            general_mat_mul(1.0, &grad_out.t(), &x, 1.0, &mut self.weight.grad_matrix(self.outputs));
            for (gb, col) in self.bias.grad.iter_mut().zip(grad_out.columns()) {
                *gb += col.sum();
            }
        }
        let mut dx = Array2::<f64>::zeros((x.nrows(), self.inputs));
        general_mat_mul(1.0, grad_out, &self.weight.matrix(self.outputs), 0.0, &mut dx);
        dx
    }
}

pub fn relu_in_place<D: ndarray::Dimension>(x: &mut ndarray::Array<f64, D>) {
    x.mapv_inplace(|v| v.max(0.0));
}

/// Zeroes `grad` wherever the ReLU output was not positive.
pub fn relu_backward<D: ndarray::Dimension>(output: &ndarray::Array<f64, D>, grad: &mut ndarray::Array<f64, D>) {
    ndarray::Zip::from(grad).and(output).for_each(|g, &y| {
        if y <= 0.0 {
            *g = 0.0;
        }
    });
}

/// Flattens `[N, C, H, W]` into `[N, C·H·W]` and appends `extra` columns.
pub fn flatten_concat(x: &Array4<f64>, extra: &[ArrayView2<'_, f64>]) -> Array2<f64> {
    let n = x.len_of(Axis(0));
    let flat = x.len() / n.max(1);
    let extra_cols: usize = extra.iter().map(|e| e.ncols()).sum();
    let mut out = Array2::<f64>::zeros((n, flat + extra_cols));
    let xs = x.as_standard_layout();
    out.slice_mut(s![.., ..flat])
        .assign(&xs.view().into_shape_with_order((n, flat)).expect("standard layout"));
    let mut col = flat;
    for e in extra {
        out.slice_mut(s![.., col..col + e.ncols()]).assign(e);
        col += e.ncols();
    }
    out
}

pub fn mean_rows(x: &Array2<f64>) -> Array1<f64> {
    x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(x.ncols()))
}
