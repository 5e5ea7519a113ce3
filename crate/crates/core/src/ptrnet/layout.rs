//! Flat-vector weight layout.
//!
//! Blocks appear in a fixed order so that a parameter vector, the layout, and
//! nothing else fully determine the network:
//!
//! 1. embedding matrix, `embedding_size x 2`, row-major
//! 2. decoder start token, `embedding_size`
//! 3. encoder layers 1..L, each: input weights `4d x in`, recurrent weights
//!    `4d x d`, bias `4d` (gate rows ordered input, forget, cell, output;
//!    layer 1 consumes embeddings, deeper layers consume the previous hidden
//!    state, so `in` is `embedding_size` for layer 1 and `d` afterwards)
//! 4. decoder layers 1..L, same shapes as the encoder
//! 5. attention: reference projection `d x d`, query projection `d x d`,
//!    score vector `d`

use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use super::NetworkConfig;

/// The three weight blocks of one LSTM layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockRanges {
    pub input_weights: Range<usize>,
    pub recurrent_weights: Range<usize>,
    pub bias: Range<usize>,
}

/// Segment table mapping every named weight block to its slice of the flat
/// vector. Ranges are contiguous, disjoint, and cover `0..total()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    embedding_size: usize,
    hidden_size: usize,
    embedding: Range<usize>,
    start_token: Range<usize>,
    encoder: Vec<BlockRanges>,
    decoder: Vec<BlockRanges>,
    attention_ref: Range<usize>,
    attention_query: Range<usize>,
    attention_score: Range<usize>,
    total: usize,
}

impl ParamLayout {
    pub fn new(config: &NetworkConfig) -> Self {
        let e = config.embedding_size;
        let d = config.hidden_size;
        let mut cursor = 0usize;
        let mut take = |len: usize| {
            let range = cursor..cursor + len;
            cursor += len;
            range
        };

        let embedding = take(e * 2);
        let start_token = take(e);
        let stack = |take: &mut dyn FnMut(usize) -> Range<usize>| -> Vec<BlockRanges> {
            (0..config.num_layers)
                .map(|layer| {
                    let input_width = if layer == 0 { e } else { d };
                    BlockRanges {
                        input_weights: take(4 * d * input_width),
                        recurrent_weights: take(4 * d * d),
                        bias: take(4 * d),
                    }
                })
                .collect()
        };
        let encoder = stack(&mut take);
        let decoder = stack(&mut take);
        let attention_ref = take(d * d);
        let attention_query = take(d * d);
        let attention_score = take(d);

        ParamLayout {
            embedding_size: e,
            hidden_size: d,
            embedding,
            start_token,
            encoder,
            decoder,
            attention_ref,
            attention_query,
            attention_score,
            total: cursor,
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn embedding_size(&self) -> usize {
        self.embedding_size
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    pub fn num_layers(&self) -> usize {
        self.encoder.len()
    }

    pub fn embedding(&self) -> Range<usize> {
        self.embedding.clone()
    }

    pub fn start_token(&self) -> Range<usize> {
        self.start_token.clone()
    }

    pub fn encoder_layer(&self, layer: usize) -> &BlockRanges {
        &self.encoder[layer]
    }

    pub fn decoder_layer(&self, layer: usize) -> &BlockRanges {
        &self.decoder[layer]
    }

    pub fn attention_ref(&self) -> Range<usize> {
        self.attention_ref.clone()
    }

    pub fn attention_query(&self) -> Range<usize> {
        self.attention_query.clone()
    }

    pub fn attention_score(&self) -> Range<usize> {
        self.attention_score.clone()
    }

    /// Every block with its name, in vector order.
    pub fn segments(&self) -> Vec<(String, Range<usize>)> {
        use alloc::format;
        let mut out = Vec::new();
        out.push((String::from("embedding"), self.embedding()));
        out.push((String::from("start_token"), self.start_token()));
        for (side, stack) in [("encoder", &self.encoder), ("decoder", &self.decoder)] {
            for (l, blocks) in stack.iter().enumerate() {
                out.push((format!("{side}.{l}.input_weights"), blocks.input_weights.clone()));
                out.push((format!("{side}.{l}.recurrent_weights"), blocks.recurrent_weights.clone()));
                out.push((format!("{side}.{l}.bias"), blocks.bias.clone()));
            }
        }
        out.push((String::from("attention.ref"), self.attention_ref()));
        out.push((String::from("attention.query"), self.attention_query()));
        out.push((String::from("attention.score"), self.attention_score()));
        out
    }
}
