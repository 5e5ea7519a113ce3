//! Framework-free pointer network.
//!
//! A stack of LSTM layers encodes the node sequence, a second stack decodes
//! it, and an additive attention head turns each decoder state into a
//! distribution over input positions. Already-visited positions are masked,
//! so a full decode always yields a permutation. Every trainable weight lives
//! in one flat `f32` vector whose block structure is described by
//! [`ParamLayout`]; the network itself holds no state.

mod forward;
mod layout;

pub use forward::{batch_decode, forward_decode, DecodeTrace};
pub use layout::{BlockRanges, ParamLayout};

use alloc::vec::Vec;
use core::fmt;

use crate::rng::{self, domain};

/// Weight initialization half-width, the original pointer-network convention.
pub const INIT_RANGE: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeMode {
    Greedy,
    Sample,
}

impl DecodeMode {
    pub fn name(self) -> &'static str {
        match self {
            DecodeMode::Greedy => "greedy",
            DecodeMode::Sample => "sample",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "greedy" => Some(DecodeMode::Greedy),
            "sample" => Some(DecodeMode::Sample),
            _ => None,
        }
    }
}

/// Network shape. `param_count` is a pure function of these fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkConfig {
    pub embedding_size: usize,
    pub hidden_size: usize,
    pub num_layers: usize,
    pub decode_mode: DecodeMode,
}

impl NetworkConfig {
    pub fn new(
        embedding_size: usize,
        hidden_size: usize,
        num_layers: usize,
        decode_mode: DecodeMode,
    ) -> Result<Self, PtrNetError> {
        let cfg = NetworkConfig { embedding_size, hidden_size, num_layers, decode_mode };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PtrNetError> {
        if self.embedding_size == 0 {
            return Err(PtrNetError::InvalidConfig { field: "embedding_size" });
        }
        if self.hidden_size == 0 {
            return Err(PtrNetError::InvalidConfig { field: "hidden_size" });
        }
        if self.num_layers == 0 {
            return Err(PtrNetError::InvalidConfig { field: "num_layers" });
        }
        Ok(())
    }

    /// The published reference shape: embedding 32, hidden 256, 5 layers.
    pub fn reference() -> Self {
        NetworkConfig {
            embedding_size: 32,
            hidden_size: 256,
            num_layers: 5,
            decode_mode: DecodeMode::Greedy,
        }
    }
}

/// Total trainable weights for a config.
pub fn param_count(config: &NetworkConfig) -> usize {
    ParamLayout::new(config).total()
}

/// One individual's flat weight vector, stored in single precision.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f32>,
}

impl ParamVector {
    pub fn from_values(values: Vec<f32>) -> Self {
        ParamVector { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.values
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Fresh weights, i.i.d. uniform on `[-INIT_RANGE, INIT_RANGE)`. Pure in
/// `(config, seed)`.
pub fn init_params(config: &NetworkConfig, seed: u64) -> ParamVector {
    let total = param_count(config);
    let mut rng = rng::stream(&[domain::INIT, seed]);
    let values = (0..total).map(|_| rng::uniform_sym(&mut rng, INIT_RANGE) as f32).collect();
    ParamVector { values }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PtrNetError {
    InvalidConfig { field: &'static str },
    /// Parameter vector length does not match the config's layout.
    LayoutMismatch { expected: usize, actual: usize },
    /// An activation or probability became non-finite at this decode step.
    NonFiniteActivation { step: usize },
    MixedDimensions { expected: usize, found: usize },
    EmptyBatch,
}

impl fmt::Display for PtrNetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PtrNetError::InvalidConfig { field } => write!(f, "network config field {field} must be >= 1"),
            PtrNetError::LayoutMismatch { expected, actual } => {
                write!(f, "parameter vector has {actual} values, layout needs {expected}")
            }
            PtrNetError::NonFiniteActivation { step } => {
                write!(f, "non-finite activation at decode step {step}")
            }
            PtrNetError::MixedDimensions { expected, found } => {
                write!(f, "batch mixes instance sizes {expected} and {found}")
            }
            PtrNetError::EmptyBatch => write!(f, "batch contains no instances"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PtrNetError {}
