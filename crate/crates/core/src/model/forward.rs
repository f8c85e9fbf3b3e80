use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::batch::affine_forward;
use crate::numerics::Scalar;

/// Per-head outputs for a batch. Entry `j` belongs to the `j`-th head, which
/// sits on hidden layer `levels()[j]`.
///
/// For accumulating architectures `t[j]` is the increment actually realised
/// in `y[j]`, so `y[j] - y[j-1] == t[j]` holds exactly in floating point; it
/// differs from the raw head value by at most one rounding of the sum.
#[derive(Clone, Debug, PartialEq)]
pub struct TailOutputs<T> {
    levels: Vec<usize>,
    batch_size: usize,
    output_dim: usize,
    t: Vec<Vec<T>>,
    y: Vec<Vec<T>>,
}

impl<T: Scalar> TailOutputs<T> {
    /// Empty outputs shaped for `config`, ready for [`forward_into`].
    pub fn new(config: &crate::model::ModelConfig) -> Self {
        Self::empty(config.head_levels(), config.output_dim)
    }

    fn empty(levels: Vec<usize>, output_dim: usize) -> Self {
        let heads = levels.len();
        TailOutputs {
            levels,
            batch_size: 0,
            output_dim,
            t: vec![Vec::new(); heads],
            y: vec![Vec::new(); heads],
        }
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn t(&self, head: usize) -> &[T] {
        &self.t[head]
    }

    pub fn y(&self, head: usize) -> &[T] {
        &self.y[head]
    }

    /// Output `y` of the head on hidden layer `level`, if there is one.
    pub fn at_level(&self, level: usize) -> Option<&[T]> {
        self.levels
            .iter()
            .position(|&l| l == level)
            .map(|j| self.y[j].as_slice())
    }

    /// Output of the deepest head.
    pub fn last(&self) -> &[T] {
        self.y.last().expect("at least one head")
    }

    fn append(&mut self, other: &TailOutputs<T>) {
        self.batch_size += other.batch_size;
        for (dst, src) in self.t.iter_mut().zip(&other.t) {
            dst.extend_from_slice(src);
        }
        for (dst, src) in self.y.iter_mut().zip(&other.y) {
            dst.extend_from_slice(src);
        }
    }
}

/// Activations of one hidden layer kept for the reverse pass.
#[derive(Clone, Debug, Default)]
pub struct LayerTrace<T> {
    /// `d h_i / d z_i = omega0 cos(omega0 z_i)` where `z_i = W_i h_{i-1} + b_i`.
    pub act_grad: Vec<T>,
    pub hidden: Vec<T>,
    /// Head factor outputs (`t_{i0}`, `t_{i1}` or the single affine output).
    pub factors: Vec<Vec<T>>,
}

/// Everything the reverse pass needs from a forward pass.
///
/// A trace can be reused across steps through [`forward_into`], which keeps
/// its buffers allocated so repeated training steps do not fault in fresh
/// pages for every activation.
#[derive(Clone, Debug, Default)]
pub struct ForwardTrace<T> {
    pub batch_size: usize,
    pub input: Vec<T>,
    pub layers: Vec<LayerTrace<T>>,
    scratch: Vec<T>,
}

impl<T: Scalar> ForwardTrace<T> {
    pub fn new() -> Self {
        ForwardTrace {
            batch_size: 0,
            input: Vec::new(),
            layers: Vec::new(),
            scratch: Vec::new(),
        }
    }
}

fn batch_size_of<T: Scalar>(params: &ModelParams<T>, x: &[T]) -> Result<usize> {
    let d = params.config().input_dim;
    if x.len() % d != 0 {
        return Err(Error::shape(
            "forward",
            format!("input_dim {d}"),
            format!("coordinate buffer of {} values", x.len()),
        ));
    }
    Ok(x.len() / d)
}

fn resize<T: Scalar>(buf: &mut Vec<T>, len: usize) {
    buf.resize(len, T::zero());
}

/// Full forward pass over a batch of row-major coordinates.
pub fn forward<T: Scalar>(
    params: &ModelParams<T>,
    x: &[T],
) -> Result<(TailOutputs<T>, ForwardTrace<T>)> {
    let mut outputs = TailOutputs::empty(params.config().head_levels(), params.config().output_dim);
    let mut trace = ForwardTrace::new();
    forward_into(params, x, &mut outputs, &mut trace)?;
    Ok((outputs, trace))
}

/// Forward pass writing into caller-owned buffers.
///
/// `outputs` and `trace` may come from an earlier call with any model or
/// batch size; they are reshaped as needed.
pub fn forward_into<T: Scalar>(
    params: &ModelParams<T>,
    x: &[T],
    outputs: &mut TailOutputs<T>,
    trace: &mut ForwardTrace<T>,
) -> Result<()> {
    let n = batch_size_of(params, x)?;
    let config = params.config();
    let arch = config.architecture;
    let width = config.hidden_width;
    let out_dim = config.output_dim;
    let omega = T::from_f64(config.omega0);

    let levels = config.head_levels();
    if outputs.levels != levels || outputs.output_dim != out_dim {
        *outputs = TailOutputs::empty(levels, out_dim);
    }
    outputs.batch_size = n;
    trace.batch_size = n;
    trace.input.clear();
    trace.input.extend_from_slice(x);
    trace
        .layers
        .resize_with(params.num_layers(), LayerTrace::default);
    resize(&mut trace.scratch, n * width);

    let mut head = 0;
    for layer in 1..=params.num_layers() {
        let affine = params.hidden(layer);
        let (done, rest) = trace.layers.split_at_mut(layer - 1);
        let lt = &mut rest[0];
        let prev: &[T] = match done.last() {
            Some(l) => &l.hidden,
            None => x,
        };
        let pre = &mut trace.scratch;
        affine_forward(prev, n, affine.cols, affine.weight, affine.bias, pre);
        resize(&mut lt.hidden, n * width);
        resize(&mut lt.act_grad, n * width);
        T::sine_layer(pre, omega, &mut lt.hidden, &mut lt.act_grad);
        if arch.has_skips() && layer > 1 {
            for (h, &p) in lt.hidden.iter_mut().zip(prev) {
                *h = *h + p;
            }
        }

        let tails = params.tail(layer);
        lt.factors.resize_with(tails.len(), Vec::new);
        for (tail, f) in tails.iter().zip(lt.factors.iter_mut()) {
            resize(f, n * out_dim);
            affine_forward(&lt.hidden, n, tail.cols, tail.weight, tail.bias, f);
        }
        if tails.is_empty() {
            continue;
        }
        let (before, after) = outputs.y.split_at_mut(head);
        let y = &mut after[0];
        let t = &mut outputs.t[head];
        resize(y, n * out_dim);
        resize(t, n * out_dim);
        match lt.factors.as_slice() {
            [single] => y.copy_from_slice(single),
            [a, b] => {
                for ((v, &p), &q) in y.iter_mut().zip(a).zip(b) {
                    *v = p * q;
                }
            }
            _ => unreachable!("heads have one or two factors"),
        }
        match before.last() {
            Some(prev_y) if arch.accumulates() => {
                for ((v, d), &p) in y.iter_mut().zip(t.iter_mut()).zip(prev_y) {
                    let sum = p + *v;
                    *d = sum - p;
                    *v = sum;
                }
            }
            _ => t.copy_from_slice(y),
        }
        head += 1;
    }

    if outputs.y.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("forward"));
    }
    Ok(())
}

/// Inference-only evaluation, processed in fixed-size chunks of samples so
/// large grids do not hold a full trace in memory.
pub fn evaluate<T: Scalar>(params: &ModelParams<T>, x: &[T]) -> Result<TailOutputs<T>> {
    const CHUNK: usize = 4096;
    batch_size_of(params, x)?;
    let d = params.config().input_dim;
    let mut all = TailOutputs::empty(params.config().head_levels(), params.config().output_dim);
    let mut out = TailOutputs::empty(params.config().head_levels(), params.config().output_dim);
    let mut trace = ForwardTrace::new();
    for chunk in x.chunks(CHUNK * d) {
        forward_into(params, chunk, &mut out, &mut trace)?;
        all.append(&out);
    }
    Ok(all)
}
