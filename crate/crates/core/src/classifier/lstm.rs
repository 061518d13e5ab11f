//! Batched stacked-LSTM forward pass and backpropagation through time.
//!
//! Activations are laid out time-major: row `t * batch + b` of every buffer
//! belongs to sample `b` at step `t`. Gate blocks are ordered input, forget,
//! cell, output.

use super::{Logits, Model};
use crate::linalg::{gemm, sigmoid};
use crate::seqcore::{FixedSequence, NUM_CLASSES};

struct LayerTape {
    /// layer input, `steps * batch * in_dim`
    input: Vec<f64>,
    /// activated gates, `steps * batch * 4h`
    gates: Vec<f64>,
    cell: Vec<f64>,
    tanh_cell: Vec<f64>,
    hidden: Vec<f64>,
}

/// Everything a forward pass produced, kept for the backward pass.
pub struct Tape {
    batch: usize,
    steps: usize,
    layers: Vec<LayerTape>,
    /// concatenated final hidden states, `batch * layers * h`
    encoded: Vec<f64>,
    /// decoder layer 1 pre-activation, `batch * ff`
    pre_features: Vec<f64>,
    /// decoder layer 1 after ReLU, `batch * ff`
    features: Vec<f64>,
    logits: Vec<f64>,
}

impl Tape {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Decoder hidden activations, one `ff_hidden` row per sample.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn logits_rows(&self) -> Vec<Logits> {
        self.logits
            .chunks_exact(NUM_CLASSES)
            .map(|r| std::array::from_fn(|k| r[k]))
            .collect()
    }
}

pub(super) fn forward(model: &Model, batch: &[&FixedSequence]) -> Tape {
    let h = &model.hparams;
    let lay = model.layout();
    let p = model.params();
    let bsz = batch.len();
    let steps = h.resample_points;
    let hd = lay.hidden;
    let g4 = 4 * hd;
    let c_in = h.input_channels;

    let mut input = vec![0.0; steps * bsz * c_in];
    for (b, fs) in batch.iter().enumerate() {
        for c in 0..c_in {
            let (shift, scale) = (model.norm.shift[c], model.norm.scale[c]);
            for (t, v) in fs.channel(c).iter().enumerate() {
                input[(t * bsz + b) * c_in + c] = (v - shift) * scale;
            }
        }
    }

    let mut layers = Vec::with_capacity(lay.layers.len());
    for slots in &lay.layers {
        let d = slots.in_dim;
        let w_ih = &p[slots.w_ih..slots.w_ih + g4 * d];
        let w_hh = &p[slots.w_hh..slots.w_hh + g4 * hd];
        let bias = &p[slots.bias..slots.bias + g4];

        let rows = steps * bsz;
        let mut gates = vec![0.0; rows * g4];
        for row in gates.chunks_exact_mut(g4) {
            row.copy_from_slice(bias);
        }
        gemm(rows, d, g4, &input, false, w_ih, true, 1.0, &mut gates);

        let mut cell = vec![0.0; rows * hd];
        let mut tanh_cell = vec![0.0; rows * hd];
        let mut hidden = vec![0.0; rows * hd];
        for t in 0..steps {
            let cur = t * bsz;
            if t > 0 {
                let prev = (t - 1) * bsz;
                let (h_prev, g_cur) = (&hidden[prev * hd..cur * hd], &mut gates[cur * g4..(cur + bsz) * g4]);
                gemm(bsz, hd, g4, h_prev, false, w_hh, true, 1.0, g_cur);
            }
            for b in 0..bsz {
                let r = cur + b;
                let g = &mut gates[r * g4..(r + 1) * g4];
                for j in 0..hd {
                    g[j] = sigmoid(g[j]);
                    g[hd + j] = sigmoid(g[hd + j]);
                    g[2 * hd + j] = g[2 * hd + j].tanh();
                    g[3 * hd + j] = sigmoid(g[3 * hd + j]);
                }
                for j in 0..hd {
                    let c_prev = if t > 0 { cell[(r - bsz) * hd + j] } else { 0.0 };
                    let c = g[hd + j] * c_prev + g[j] * g[2 * hd + j];
                    let tc = c.tanh();
                    cell[r * hd + j] = c;
                    tanh_cell[r * hd + j] = tc;
                    hidden[r * hd + j] = g[3 * hd + j] * tc;
                }
            }
        }
        let next_input = hidden.clone();
        layers.push(LayerTape {
            input,
            gates,
            cell,
            tanh_cell,
            hidden,
        });
        input = next_input;
    }

    let n_layers = lay.layers.len();
    let enc = n_layers * hd;
    let mut encoded = vec![0.0; bsz * enc];
    let last = (steps - 1) * bsz;
    for (l, lt) in layers.iter().enumerate() {
        for b in 0..bsz {
            let src = &lt.hidden[(last + b) * hd..(last + b + 1) * hd];
            encoded[b * enc + l * hd..b * enc + (l + 1) * hd].copy_from_slice(src);
        }
    }

    let ff = lay.ff;
    let mut pre_features = vec![0.0; bsz * ff];
    for row in pre_features.chunks_exact_mut(ff) {
        row.copy_from_slice(&p[lay.b1..lay.b1 + ff]);
    }
    gemm(bsz, enc, ff, &encoded, false, &p[lay.w1..lay.b1], true, 1.0, &mut pre_features);
    let features: Vec<f64> = pre_features.iter().map(|&v| v.max(0.0)).collect();

    let mut logits = vec![0.0; bsz * NUM_CLASSES];
    for row in logits.chunks_exact_mut(NUM_CLASSES) {
        row.copy_from_slice(&p[lay.b2..lay.b2 + NUM_CLASSES]);
    }
    gemm(bsz, ff, NUM_CLASSES, &features, false, &p[lay.w2..lay.b2], true, 1.0, &mut logits);

    Tape {
        batch: bsz,
        steps,
        layers,
        encoded,
        pre_features,
        features,
        logits,
    }
}

fn add_column_sums(rows: &[f64], width: usize, out: &mut [f64]) {
    for row in rows.chunks_exact(width) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
}

pub(super) fn backward(
    model: &Model,
    tape: &Tape,
    d_logits: &[f64],
    d_features: Option<&[f64]>,
    grads: &mut [f64],
) {
    let lay = model.layout();
    let p = model.params();
    let bsz = tape.batch;
    let steps = tape.steps;
    let hd = lay.hidden;
    let g4 = 4 * hd;
    let ff = lay.ff;
    let n_layers = lay.layers.len();
    let enc = n_layers * hd;
    assert_eq!(d_logits.len(), bsz * NUM_CLASSES, "d_logits shape");
    assert_eq!(grads.len(), p.len(), "gradient buffer shape");

    // decoder layer 2
    gemm(NUM_CLASSES, bsz, ff, d_logits, true, &tape.features, false, 1.0, &mut grads[lay.w2..lay.b2]);
    add_column_sums(d_logits, NUM_CLASSES, &mut grads[lay.b2..lay.b2 + NUM_CLASSES]);
    let mut d_act = match d_features {
        Some(extra) => {
            assert_eq!(extra.len(), bsz * ff, "d_features shape");
            extra.to_vec()
        }
        None => vec![0.0; bsz * ff],
    };
    gemm(bsz, NUM_CLASSES, ff, d_logits, false, &p[lay.w2..lay.b2], false, 1.0, &mut d_act);

    // decoder layer 1 through the ReLU
    for (d, z) in d_act.iter_mut().zip(&tape.pre_features) {
        if *z <= 0.0 {
            *d = 0.0;
        }
    }
    gemm(ff, bsz, enc, &d_act, true, &tape.encoded, false, 1.0, &mut grads[lay.w1..lay.b1]);
    add_column_sums(&d_act, ff, &mut grads[lay.b1..lay.b1 + ff]);
    let mut d_encoded = vec![0.0; bsz * enc];
    gemm(bsz, ff, enc, &d_act, false, &p[lay.w1..lay.b1], false, 0.0, &mut d_encoded);

    // gradient arriving at each layer's hidden outputs
    let rows = steps * bsz;
    let mut d_hidden = vec![0.0; rows * hd];
    let mut d_gates = vec![0.0; rows * g4];
    let mut dh_next = vec![0.0; bsz * hd];
    let mut dc_next = vec![0.0; bsz * hd];

    for l in (0..n_layers).rev() {
        let slots = lay.layers[l];
        let lt = &tape.layers[l];
        let d = slots.in_dim;
        let last = (steps - 1) * bsz;
        for b in 0..bsz {
            for j in 0..hd {
                d_hidden[(last + b) * hd + j] += d_encoded[b * enc + l * hd + j];
            }
        }

        dh_next.fill(0.0);
        dc_next.fill(0.0);
        let w_hh = &p[slots.w_hh..slots.w_hh + g4 * hd];
        for t in (0..steps).rev() {
            let cur = t * bsz;
            for b in 0..bsz {
                let r = cur + b;
                let g = &lt.gates[r * g4..(r + 1) * g4];
                let dg = &mut d_gates[r * g4..(r + 1) * g4];
                for j in 0..hd {
                    let (gi, gf, gg, go) = (g[j], g[hd + j], g[2 * hd + j], g[3 * hd + j]);
                    let tc = lt.tanh_cell[r * hd + j];
                    let dh = d_hidden[r * hd + j] + dh_next[b * hd + j];
                    let dc = dh * go * (1.0 - tc * tc) + dc_next[b * hd + j];
                    let c_prev = if t > 0 { lt.cell[(r - bsz) * hd + j] } else { 0.0 };
                    dg[j] = dc * gg * gi * (1.0 - gi);
                    dg[hd + j] = dc * c_prev * gf * (1.0 - gf);
                    dg[2 * hd + j] = dc * gi * (1.0 - gg * gg);
                    dg[3 * hd + j] = dh * tc * go * (1.0 - go);
                    dc_next[b * hd + j] = dc * gf;
                }
            }
            if t > 0 {
                gemm(bsz, g4, hd, &d_gates[cur * g4..(cur + bsz) * g4], false, w_hh, false, 0.0, &mut dh_next);
            }
        }

        // weight gradients over all steps at once
        if steps > 1 {
            gemm(
                g4,
                (steps - 1) * bsz,
                hd,
                &d_gates[bsz * g4..],
                true,
                &lt.hidden[..(steps - 1) * bsz * hd],
                false,
                1.0,
                &mut grads[slots.w_hh..slots.w_hh + g4 * hd],
            );
        }
        gemm(g4, rows, d, &d_gates, true, &lt.input, false, 1.0, &mut grads[slots.w_ih..slots.w_ih + g4 * d]);
        add_column_sums(&d_gates, g4, &mut grads[slots.bias..slots.bias + g4]);

        if l > 0 {
            // becomes the hidden-output gradient of the layer below
            let w_ih = &p[slots.w_ih..slots.w_ih + g4 * d];
            gemm(rows, g4, d, &d_gates, false, w_ih, false, 0.0, &mut d_hidden);
        }
    }
}
