//! Greedy / sampled tour decoding.
//!
//! All activations run in `f32`; attention logits, softmax, and the recorded
//! distributions use `f64`. Transcendentals go through `libm` so a decode is
//! bit-identical on every platform.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use super::layout::{BlockRanges, ParamLayout};
use super::{DecodeMode, NetworkConfig, ParamVector, PtrNetError};
use crate::rng::{self, domain};
use crate::tsp::{Instance, Tour};

/// Everything one decode produced: the tour, the per-step distributions over
/// nodes, and the per-step masked (already visited) node sets.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeTrace {
    pub tour: Tour,
    pub step_distributions: Vec<Vec<f64>>,
    pub masked: Vec<Vec<usize>>,
}

#[inline]
fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + libm::expf(-x))
}

#[inline]
fn dot(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = 0.0f32;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// One LSTM cell update. `weights` blocks are row-major with gate rows
/// ordered input, forget, cell, output; `gates` is 4d scratch.
pub(crate) fn lstm_step(
    input_weights: &[f32],
    recurrent_weights: &[f32],
    bias: &[f32],
    input: &[f32],
    h: &mut [f32],
    c: &mut [f32],
    gates: &mut [f32],
) {
    let d = h.len();
    let in_width = input.len();
    for r in 0..4 * d {
        let wx = &input_weights[r * in_width..(r + 1) * in_width];
        let wh = &recurrent_weights[r * d..(r + 1) * d];
        gates[r] = bias[r] + dot(wx, input) + dot(wh, h);
    }
    for k in 0..d {
        let i = sigmoid(gates[k]);
        let f = sigmoid(gates[d + k]);
        let g = libm::tanhf(gates[2 * d + k]);
        let o = sigmoid(gates[3 * d + k]);
        c[k] = f * c[k] + i * g;
        h[k] = o * libm::tanhf(c[k]);
    }
}

/// Per-layer hidden and cell state of one stack.
struct StackState {
    h: Vec<Vec<f32>>,
    c: Vec<Vec<f32>>,
}

impl StackState {
    fn zeros(num_layers: usize, d: usize) -> Self {
        StackState { h: vec![vec![0.0; d]; num_layers], c: vec![vec![0.0; d]; num_layers] }
    }
}

/// Runs the whole stack for one time step; afterwards the top-layer hidden
/// state is `state.h[last]`. `carry` is scratch for passing each layer's
/// output down the stack.
fn stack_step(
    weights: &[f32],
    layers: &[&BlockRanges],
    input: &[f32],
    state: &mut StackState,
    gates: &mut [f32],
    carry: &mut Vec<f32>,
) {
    for (l, blocks) in layers.iter().enumerate() {
        let layer_input: &[f32] = if l == 0 { input } else { carry };
        lstm_step(
            &weights[blocks.input_weights.clone()],
            &weights[blocks.recurrent_weights.clone()],
            &weights[blocks.bias.clone()],
            layer_input,
            &mut state.h[l],
            &mut state.c[l],
            gates,
        );
        if l + 1 < layers.len() {
            carry.clear();
            carry.extend_from_slice(&state.h[l]);
        }
    }
}

/// Decodes one instance into a tour plus its full trace.
///
/// The encoder consumes the embedded node sequence; its final states seed the
/// decoder, whose first input is the trained start token and whose later
/// inputs are the embeddings of the nodes it chose. At each step the additive
/// attention head scores every node, visited nodes are masked to probability
/// exactly zero, and the next node is the argmax (greedy, ties to the lowest
/// index) or a draw from the distribution (sample mode, seeded).
pub fn forward_decode(
    instance: &Instance,
    params: &ParamVector,
    config: &NetworkConfig,
    seed: u64,
) -> Result<DecodeTrace, PtrNetError> {
    config.validate()?;
    let layout = ParamLayout::new(config);
    if params.len() != layout.total() {
        return Err(PtrNetError::LayoutMismatch { expected: layout.total(), actual: params.len() });
    }
    decode_with_layout(instance, params, config, &layout, seed)
}

pub(crate) fn decode_with_layout(
    instance: &Instance,
    params: &ParamVector,
    config: &NetworkConfig,
    layout: &ParamLayout,
    seed: u64,
) -> Result<DecodeTrace, PtrNetError> {
    let n = instance.len();
    let d = config.hidden_size;
    let e = config.embedding_size;
    let w = params.as_slice();

    // node embeddings
    let emb = &w[layout.embedding()];
    let mut embedded = vec![0.0f32; n * e];
    for (i, p) in instance.nodes().iter().enumerate() {
        let (x, y) = (p.x as f32, p.y as f32);
        for r in 0..e {
            embedded[i * e + r] = emb[r * 2] * x + emb[r * 2 + 1] * y;
        }
    }

    let enc_layers: Vec<&BlockRanges> = (0..config.num_layers).map(|l| layout.encoder_layer(l)).collect();
    let dec_layers: Vec<&BlockRanges> = (0..config.num_layers).map(|l| layout.decoder_layer(l)).collect();
    let mut gates = vec![0.0f32; 4 * d];
    let mut carry: Vec<f32> = Vec::with_capacity(d);

    // encode: collect top-layer reference states
    let mut enc_state = StackState::zeros(config.num_layers, d);
    let mut refs = vec![0.0f32; n * d];
    for i in 0..n {
        stack_step(w, &enc_layers, &embedded[i * e..(i + 1) * e], &mut enc_state, &mut gates, &mut carry);
        refs[i * d..(i + 1) * d].copy_from_slice(&enc_state.h[config.num_layers - 1]);
    }

    // precompute W_ref . r_i for every node
    let w_ref = &w[layout.attention_ref()];
    let mut ref_proj = vec![0.0f32; n * d];
    for i in 0..n {
        let r = &refs[i * d..(i + 1) * d];
        for row in 0..d {
            ref_proj[i * d + row] = dot(&w_ref[row * d..(row + 1) * d], r);
        }
    }

    let w_query = &w[layout.attention_query()];
    let score = &w[layout.attention_score()];

    // decode from the encoder's final state
    let mut dec_state = enc_state;
    let mut input: Vec<f32> = w[layout.start_token()].to_vec();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut step_distributions = Vec::with_capacity(n);
    let mut masked = Vec::with_capacity(n);
    let mut q_proj = vec![0.0f32; d];
    let mut sampler = match config.decode_mode {
        DecodeMode::Sample => Some(rng::stream(&[domain::SAMPLE_DECODE, seed])),
        DecodeMode::Greedy => None,
    };

    for step in 0..n {
        stack_step(w, &dec_layers, &input, &mut dec_state, &mut gates, &mut carry);
        let q = &dec_state.h[config.num_layers - 1];
        for row in 0..d {
            q_proj[row] = dot(&w_query[row * d..(row + 1) * d], q);
        }

        let mut logits = vec![f64::NEG_INFINITY; n];
        for i in 0..n {
            if visited[i] {
                continue;
            }
            let mut u = 0.0f64;
            for k in 0..d {
                u += score[k] as f64 * libm::tanhf(ref_proj[i * d + k] + q_proj[k]) as f64;
            }
            logits[i] = u;
        }

        let probs = masked_softmax(&logits, &visited).ok_or(PtrNetError::NonFiniteActivation { step })?;
        masked.push((0..n).filter(|&i| visited[i]).collect::<Vec<_>>());

        let chosen = match sampler.as_mut() {
            None => greedy_argmax(&probs, &visited),
            Some(rng) => sample_index(&probs, &visited, rng),
        };

        step_distributions.push(probs);
        visited[chosen] = true;
        order.push(chosen);
        input.copy_from_slice(&embedded[chosen * e..(chosen + 1) * e]);
    }

    Ok(DecodeTrace { tour: Tour::from_order(order), step_distributions, masked })
}

/// Max-shifted softmax over unmasked entries; masked entries come out as
/// exactly zero. `None` if anything non-finite survives.
fn masked_softmax(logits: &[f64], visited: &[bool]) -> Option<Vec<f64>> {
    let mut max = f64::NEG_INFINITY;
    for (i, &l) in logits.iter().enumerate() {
        if !visited[i] {
            if !l.is_finite() {
                return None;
            }
            if l > max {
                max = l;
            }
        }
    }
    let mut probs = vec![0.0f64; logits.len()];
    let mut z = 0.0f64;
    for i in 0..logits.len() {
        if !visited[i] {
            let p = libm::exp(logits[i] - max);
            probs[i] = p;
            z += p;
        }
    }
    if !(z.is_finite() && z > 0.0) {
        return None;
    }
    for (i, p) in probs.iter_mut().enumerate() {
        if !visited[i] {
            *p /= z;
        }
    }
    Some(probs)
}

fn greedy_argmax(probs: &[f64], visited: &[bool]) -> usize {
    let mut best = usize::MAX;
    let mut best_p = f64::NEG_INFINITY;
    for (i, &p) in probs.iter().enumerate() {
        if !visited[i] && p > best_p {
            best = i;
            best_p = p;
        }
    }
    best
}

fn sample_index(probs: &[f64], visited: &[bool], rng: &mut ChaCha8Rng) -> usize {
    let u = rng::uniform01(rng);
    let mut cum = 0.0f64;
    let mut last_unmasked = 0;
    for (i, &p) in probs.iter().enumerate() {
        if visited[i] {
            continue;
        }
        last_unmasked = i;
        cum += p;
        if u < cum {
            return i;
        }
    }
    last_unmasked
}

/// Greedy-decodes every instance; element `i` equals a greedy
/// [`forward_decode`] of `instances[i]`.
pub fn batch_decode(
    instances: &[Instance],
    params: &ParamVector,
    config: &NetworkConfig,
) -> Result<Vec<Tour>, PtrNetError> {
    if instances.is_empty() {
        return Err(PtrNetError::EmptyBatch);
    }
    config.validate()?;
    let n = instances[0].len();
    for inst in instances {
        if inst.len() != n {
            return Err(PtrNetError::MixedDimensions { expected: n, found: inst.len() });
        }
    }
    let layout = ParamLayout::new(config);
    if params.len() != layout.total() {
        return Err(PtrNetError::LayoutMismatch { expected: layout.total(), actual: params.len() });
    }
    let greedy = NetworkConfig { decode_mode: DecodeMode::Greedy, ..*config };
    instances
        .iter()
        .map(|inst| decode_with_layout(inst, params, &greedy, &layout, 0).map(|t| t.tour))
        .collect()
}
