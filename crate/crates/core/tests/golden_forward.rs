//! Straight-line reference evaluation of the tiny network, kept independent
//! of the library's decode path: plain nested loops, std float math, one
//! hard-coded layer. The library must reproduce it step for step.

use ptrnet_ea_core::ptrnet::{
    forward_decode, init_params, DecodeMode, NetworkConfig, ParamLayout,
};
use ptrnet_ea_core::tsp::{Instance, Point};

const E: usize = 2;
const D: usize = 4;

fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

struct Blocks<'a> {
    emb: &'a [f32],
    start: &'a [f32],
    enc_wx: &'a [f32],
    enc_wh: &'a [f32],
    enc_b: &'a [f32],
    dec_wx: &'a [f32],
    dec_wh: &'a [f32],
    dec_b: &'a [f32],
    w_ref: &'a [f32],
    w_q: &'a [f32],
    v: &'a [f32],
}

fn blocks<'a>(w: &'a [f32], layout: &ParamLayout) -> Blocks<'a> {
    Blocks {
        emb: &w[layout.embedding()],
        start: &w[layout.start_token()],
        enc_wx: &w[layout.encoder_layer(0).input_weights.clone()],
        enc_wh: &w[layout.encoder_layer(0).recurrent_weights.clone()],
        enc_b: &w[layout.encoder_layer(0).bias.clone()],
        dec_wx: &w[layout.decoder_layer(0).input_weights.clone()],
        dec_wh: &w[layout.decoder_layer(0).recurrent_weights.clone()],
        dec_b: &w[layout.decoder_layer(0).bias.clone()],
        w_ref: &w[layout.attention_ref()],
        w_q: &w[layout.attention_query()],
        v: &w[layout.attention_score()],
    }
}

fn cell(
    wx: &[f32],
    wh: &[f32],
    b: &[f32],
    input: &[f32],
    h: &mut [f32; D],
    c: &mut [f32; D],
) {
    let mut pre = [0.0f32; 4 * D];
    for r in 0..4 * D {
        let mut acc = b[r];
        for (col, x) in input.iter().enumerate() {
            acc += wx[r * input.len() + col] * x;
        }
        for col in 0..D {
            acc += wh[r * D + col] * h[col];
        }
        pre[r] = acc;
    }
    for k in 0..D {
        let i = sigmoid(pre[k]);
        let f = sigmoid(pre[D + k]);
        let g = pre[2 * D + k].tanh();
        let o = sigmoid(pre[3 * D + k]);
        c[k] = f * c[k] + i * g;
        h[k] = o * c[k].tanh();
    }
}

fn reference_decode(nodes: &[(f64, f64)], w: &[f32], layout: &ParamLayout) -> (Vec<usize>, Vec<Vec<f64>>) {
    let n = nodes.len();
    let bl = blocks(w, layout);

    let mut emb = vec![[0.0f32; E]; n];
    for (i, (x, y)) in nodes.iter().enumerate() {
        for r in 0..E {
            emb[i][r] = bl.emb[r * 2] * (*x as f32) + bl.emb[r * 2 + 1] * (*y as f32);
        }
    }

    let mut h = [0.0f32; D];
    let mut c = [0.0f32; D];
    let mut refs = vec![[0.0f32; D]; n];
    for i in 0..n {
        cell(bl.enc_wx, bl.enc_wh, bl.enc_b, &emb[i], &mut h, &mut c);
        refs[i] = h;
    }

    let mut ref_proj = vec![[0.0f32; D]; n];
    for i in 0..n {
        for row in 0..D {
            let mut acc = 0.0f32;
            for k in 0..D {
                acc += bl.w_ref[row * D + k] * refs[i][k];
            }
            ref_proj[i][row] = acc;
        }
    }

    // decoder starts from the encoder's final state
    let mut input = [0.0f32; E];
    input.copy_from_slice(bl.start);
    let mut visited = vec![false; n];
    let mut order = Vec::new();
    let mut dists = Vec::new();
    for _ in 0..n {
        cell(bl.dec_wx, bl.dec_wh, bl.dec_b, &input, &mut h, &mut c);
        let mut q_proj = [0.0f32; D];
        for row in 0..D {
            let mut acc = 0.0f32;
            for k in 0..D {
                acc += bl.w_q[row * D + k] * h[k];
            }
            q_proj[row] = acc;
        }
        let mut logits = vec![f64::NEG_INFINITY; n];
        for i in 0..n {
            if visited[i] {
                continue;
            }
            let mut u = 0.0f64;
            for k in 0..D {
                u += bl.v[k] as f64 * ((ref_proj[i][k] + q_proj[k]).tanh() as f64);
            }
            logits[i] = u;
        }
        let max = logits.iter().cloned().filter(|l| l.is_finite()).fold(f64::MIN, f64::max);
        let mut probs = vec![0.0f64; n];
        let mut z = 0.0f64;
        for i in 0..n {
            if !visited[i] {
                probs[i] = (logits[i] - max).exp();
                z += probs[i];
            }
        }
        for p in probs.iter_mut() {
            *p /= z;
        }
        for (i, p) in probs.iter_mut().enumerate() {
            if visited[i] {
                *p = 0.0;
            }
        }
        let mut chosen = usize::MAX;
        let mut best = f64::NEG_INFINITY;
        for i in 0..n {
            if !visited[i] && probs[i] > best {
                chosen = i;
                best = probs[i];
            }
        }
        dists.push(probs);
        visited[chosen] = true;
        order.push(chosen);
        input.copy_from_slice(&emb[chosen]);
    }
    (order, dists)
}

const NODES: [(f64, f64); 5] = [(0.1, 0.3), (0.85, 0.2), (0.5, 0.95), (0.05, 0.7), (0.6, 0.45)];

#[test]
fn decode_matches_the_straight_line_reference() {
    let cfg = NetworkConfig::new(E, D, 1, DecodeMode::Greedy).unwrap();
    let layout = ParamLayout::new(&cfg);
    let nodes: Vec<Point> = NODES.iter().map(|&(x, y)| Point { x, y }).collect();
    let inst = Instance::new("golden".into(), nodes).unwrap();

    for seed in [13u64, 255, 900] {
        let params = init_params(&cfg, seed);
        let (ref_order, ref_dists) = reference_decode(&NODES, params.as_slice(), &layout);
        let trace = forward_decode(&inst, &params, &cfg, 0).unwrap();
        assert_eq!(trace.tour.order(), &ref_order[..], "seed {seed} tour diverged");
        for (step, (got, want)) in trace.step_distributions.iter().zip(&ref_dists).enumerate() {
            for i in 0..5 {
                assert!(
                    (got[i] - want[i]).abs() < 1e-6,
                    "seed {seed} step {step} node {i}: {} vs {}",
                    got[i],
                    want[i]
                );
            }
        }
    }
}

#[test]
fn golden_trace_is_frozen() {
    // values produced by the straight-line reference above for seed 13 and
    // pinned here; any change to embedding order, gate order, masking, or
    // attention arithmetic will break this
    let cfg = NetworkConfig::new(E, D, 1, DecodeMode::Greedy).unwrap();
    let nodes: Vec<Point> = NODES.iter().map(|&(x, y)| Point { x, y }).collect();
    let inst = Instance::new("golden".into(), nodes).unwrap();
    let params = init_params(&cfg, 13);
    let trace = forward_decode(&inst, &params, &cfg, 0).unwrap();

    let (expected_order, expected_step0) = frozen_expectation();
    assert_eq!(trace.tour.order(), &expected_order[..]);
    for (i, want) in expected_step0.iter().enumerate() {
        assert!((trace.step_distributions[0][i] - want).abs() < 1e-9);
    }
}

fn frozen_expectation() -> (Vec<usize>, [f64; 5]) {
    // computed by reference_decode for seed 13; regenerate with
    // `cargo test -p ptrnet-ea-core --test golden_forward -- --ignored --nocapture`
    (
        vec![0, 1, 2, 4, 3],
        [
            0.20000736568706792,
            0.20000206433042392,
            0.1999977167344803,
            0.1999963726194058,
            0.19999648062862202,
        ],
    )
}

#[test]
#[ignore]
fn print_golden() {
    let cfg = NetworkConfig::new(E, D, 1, DecodeMode::Greedy).unwrap();
    let layout = ParamLayout::new(&cfg);
    let params = init_params(&cfg, 13);
    let (order, dists) = reference_decode(&NODES, params.as_slice(), &layout);
    println!("order: {order:?}");
    println!("step0: {:?}", dists[0]);
}
