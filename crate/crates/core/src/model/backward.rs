use crate::error::{Error, Result};
use crate::model::{AffineSlots, ForwardTrace, ModelParams};
use crate::numerics::batch::affine_backward;
use crate::numerics::Scalar;

fn affine_grads<'g, T>(grads: &'g mut [T], slots: &AffineSlots) -> (&'g mut [T], &'g mut [T]) {
    debug_assert_eq!(slots.weight.end, slots.bias.start);
    grads[slots.weight.start..slots.bias.end].split_at_mut(slots.weight.len())
}

/// Scratch buffers for [`backward_into`], kept between training steps.
#[derive(Clone, Debug, Default)]
pub struct BackwardWorkspace<T> {
    head_grads: Vec<Vec<T>>,
    dh: Vec<T>,
    dprev: Vec<T>,
    dz: Vec<T>,
    d0: Vec<T>,
    d1: Vec<T>,
}

impl<T: Scalar> BackwardWorkspace<T> {
    pub fn new() -> Self {
        BackwardWorkspace {
            head_grads: Vec::new(),
            dh: Vec::new(),
            dprev: Vec::new(),
            dz: Vec::new(),
            d0: Vec::new(),
            d1: Vec::new(),
        }
    }
}

fn zeroed<T: Scalar>(buf: &mut Vec<T>, len: usize) {
    buf.clear();
    buf.resize(len, T::zero());
}

/// Reverse pass.
///
/// `output_grads[j]` is `dL/dy_j` for the `j`-th head (zero-filled where the
/// head is unsupervised). Returns `dL/dθ` in the flat layout of `params`,
/// where `L = Σ_j <output_grads[j], y_j>`.
pub fn backward<T: Scalar>(
    params: &ModelParams<T>,
    trace: &ForwardTrace<T>,
    output_grads: &[Vec<T>],
) -> Result<Vec<T>> {
    let mut grads = Vec::new();
    backward_into(
        params,
        trace,
        output_grads,
        &mut BackwardWorkspace::new(),
        &mut grads,
    )?;
    Ok(grads)
}

/// Reverse pass writing `dL/dθ` into `grads`, which is resized and
/// overwritten.
pub fn backward_into<T: Scalar>(
    params: &ModelParams<T>,
    trace: &ForwardTrace<T>,
    output_grads: &[Vec<T>],
    ws: &mut BackwardWorkspace<T>,
    grads: &mut Vec<T>,
) -> Result<()> {
    let config = params.config();
    let arch = config.architecture;
    let n = trace.batch_size;
    let width = config.hidden_width;
    let out_dim = config.output_dim;
    let levels = config.head_levels();

    if trace.layers.len() != params.num_layers() {
        return Err(Error::Consistency(format!(
            "trace has {} layers, model has {}",
            trace.layers.len(),
            params.num_layers()
        )));
    }
    if trace.input.len() != n * config.input_dim
        || trace.layers.iter().any(|l| l.hidden.len() != n * width)
    {
        return Err(Error::Consistency(
            "trace buffers do not match model dims".into(),
        ));
    }
    if output_grads.len() != levels.len() {
        return Err(Error::Consistency(format!(
            "{} output gradients for {} heads",
            output_grads.len(),
            levels.len()
        )));
    }
    if let Some(g) = output_grads.iter().find(|g| g.len() != n * out_dim) {
        return Err(Error::Consistency(format!(
            "output gradient of {} values, expected {}",
            g.len(),
            n * out_dim
        )));
    }

    // dL/d(raw head value). With accumulation, y_j depends on heads 1..=j.
    let head_grads = &mut ws.head_grads;
    head_grads.resize_with(output_grads.len(), Vec::new);
    for (dst, src) in head_grads.iter_mut().zip(output_grads) {
        dst.clear();
        dst.extend_from_slice(src);
    }
    if arch.accumulates() {
        for j in (0..head_grads.len().saturating_sub(1)).rev() {
            let (lo, hi) = head_grads.split_at_mut(j + 1);
            for (a, &b) in lo[j].iter_mut().zip(&hi[0]) {
                *a = *a + b;
            }
        }
    }

    zeroed(grads, params.values().len());
    zeroed(&mut ws.dh, n * width);
    let mut head = head_grads.len();

    for layer in (1..=params.num_layers()).rev() {
        let slots = &params.layout().layer(layer);
        let lt = &trace.layers[layer - 1];
        let dh = &mut ws.dh;

        if !slots.tail.is_empty() {
            head -= 1;
            let dt = &head_grads[head];
            let tails = params.tail(layer);
            match (slots.tail.as_slice(), lt.factors.as_slice()) {
                ([s], [_]) => {
                    let (dw, db) = affine_grads(grads, s);
                    affine_backward(
                        dt,
                        n,
                        out_dim,
                        &lt.hidden,
                        width,
                        tails[0].weight,
                        dw,
                        db,
                        Some(dh),
                    );
                }
                ([s0, s1], [f0, f1]) => {
                    zeroed(&mut ws.d0, n * out_dim);
                    zeroed(&mut ws.d1, n * out_dim);
                    for (((a, b), &g), (&p, &q)) in ws
                        .d0
                        .iter_mut()
                        .zip(ws.d1.iter_mut())
                        .zip(dt)
                        .zip(f0.iter().zip(f1))
                    {
                        *a = g * q;
                        *b = g * p;
                    }
                    let (dw, db) = affine_grads(grads, s0);
                    affine_backward(
                        &ws.d0,
                        n,
                        out_dim,
                        &lt.hidden,
                        width,
                        tails[0].weight,
                        dw,
                        db,
                        Some(dh),
                    );
                    let (dw, db) = affine_grads(grads, s1);
                    affine_backward(
                        &ws.d1,
                        n,
                        out_dim,
                        &lt.hidden,
                        width,
                        tails[1].weight,
                        dw,
                        db,
                        Some(dh),
                    );
                }
                _ => {
                    return Err(Error::Consistency(format!(
                        "layer {layer}: trace has {} head factors, model has {}",
                        lt.factors.len(),
                        slots.tail.len()
                    )))
                }
            }
        }

        zeroed(&mut ws.dz, n * width);
        for ((z, &g), &a) in ws.dz.iter_mut().zip(dh.iter()).zip(&lt.act_grad) {
            *z = g * a;
        }
        let (prev, prev_dim) = if layer == 1 {
            (trace.input.as_slice(), config.input_dim)
        } else {
            (trace.layers[layer - 2].hidden.as_slice(), width)
        };
        let weight = params.hidden(layer).weight;
        let (dw, db) = affine_grads(grads, &slots.hidden);
        if layer == 1 {
            affine_backward(&ws.dz, n, width, prev, prev_dim, weight, dw, db, None);
        } else {
            // The skip connection passes dL/dh_i straight through to h_{i-1}.
            if arch.has_skips() {
                std::mem::swap(&mut ws.dprev, &mut ws.dh);
            } else {
                zeroed(&mut ws.dprev, n * width);
            }
            affine_backward(
                &ws.dz,
                n,
                width,
                prev,
                prev_dim,
                weight,
                dw,
                db,
                Some(&mut ws.dprev),
            );
            std::mem::swap(&mut ws.dprev, &mut ws.dh);
        }
    }

    Ok(())
}
