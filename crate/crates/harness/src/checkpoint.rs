//! Versioned binary checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    b"PTEACKPT"
//! version  u32 (currently 1)
//! digest   32 bytes, sha256 of the canonical settings text
//! train_n  u32
//! net      embedding u32, hidden u32, layers u32, decode_mode u8
//! ncs      population u32, max_iterations u64, epoch_length u64,
//!          sigma_init f64, batch_size u32, normalize u8, sigma_rule u8,
//!          has_budget u8, budget f64
//! run_seed u64
//! t        u64
//! params   u64 (per-individual vector length)
//! pop      population entries: params f32*len, sigma f64, success u32,
//!          fitness f64
//! best     params f32*len, fitness f64
//! trailer  sha256 of every preceding byte
//! ```
//!
//! Because every random stream in a run derives from `(run_seed, t, i)`,
//! the seed and iteration in the header are the complete RNG state: resuming
//! replays exactly the continuation the uninterrupted run would have taken.
//! Writes go to a temp file and rename into place.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use ptrnet_ea_core::evolution::{BestEver, NcsConfig, SearchState, SigmaRule};
use ptrnet_ea_core::ptrnet::{DecodeMode, NetworkConfig, ParamVector};
use sha2::{Digest, Sha256};
use thiserror::Error;

const MAGIC: &[u8; 8] = b"PTEACKPT";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("checkpoint integrity check failed: {0}")]
    Integrity(&'static str),
    #[error("checkpoint was produced by different settings")]
    ConfigMismatch,
}

/// A complete training snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub net: NetworkConfig,
    pub ncs: NcsConfig,
    pub train_n: u32,
    pub run_seed: u64,
    pub iteration: u64,
    pub population: Vec<SearchState>,
    pub best: BestEver,
    pub settings_digest: [u8; 32],
}

impl Checkpoint {
    pub fn digest_of(canonical_settings: &str) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(canonical_settings.as_bytes());
        hasher.finalize().into()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.settings_digest);
        out.extend_from_slice(&self.train_n.to_le_bytes());
        out.extend_from_slice(&(self.net.embedding_size as u32).to_le_bytes());
        out.extend_from_slice(&(self.net.hidden_size as u32).to_le_bytes());
        out.extend_from_slice(&(self.net.num_layers as u32).to_le_bytes());
        out.push(match self.net.decode_mode {
            DecodeMode::Greedy => 0,
            DecodeMode::Sample => 1,
        });
        out.extend_from_slice(&(self.ncs.population_size as u32).to_le_bytes());
        out.extend_from_slice(&self.ncs.max_iterations.to_le_bytes());
        out.extend_from_slice(&self.ncs.epoch_length.to_le_bytes());
        out.extend_from_slice(&self.ncs.sigma_init.to_le_bytes());
        out.extend_from_slice(&(self.ncs.batch_size as u32).to_le_bytes());
        out.push(self.ncs.normalize_acceptance as u8);
        out.push(match self.ncs.sigma_rule {
            SigmaRule::PaperLiteral => 0,
            SigmaRule::OneFifthStandard => 1,
        });
        match self.ncs.time_budget_secs {
            Some(budget) => {
                out.push(1);
                out.extend_from_slice(&budget.to_le_bytes());
            }
            None => {
                out.push(0);
                out.extend_from_slice(&0f64.to_le_bytes());
            }
        }
        out.extend_from_slice(&self.run_seed.to_le_bytes());
        out.extend_from_slice(&self.iteration.to_le_bytes());
        let len = self.best.params.len();
        out.extend_from_slice(&(len as u64).to_le_bytes());
        for state in &self.population {
            write_params(&mut out, &state.params);
            out.extend_from_slice(&state.sigma.to_le_bytes());
            out.extend_from_slice(&state.success_count.to_le_bytes());
            out.extend_from_slice(&state.fitness.to_le_bytes());
        }
        write_params(&mut out, &self.best.params);
        out.extend_from_slice(&self.best.fitness.to_le_bytes());
        let mut hasher = Sha256::new();
        hasher.update(&out);
        let trailer: [u8; 32] = hasher.finalize().into();
        out.extend_from_slice(&trailer);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < MAGIC.len() + 4 + 32 {
            return Err(CheckpointError::Integrity("file too short"));
        }
        if &bytes[..8] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let (payload, trailer) = bytes.split_at(bytes.len() - 32);
        let mut hasher = Sha256::new();
        hasher.update(payload);
        if trailer != hasher.finalize().as_slice() {
            return Err(CheckpointError::Integrity("trailer hash mismatch"));
        }

        let mut r = Reader { bytes: payload, pos: 8 };
        let version = r.u32()?;
        if version != VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let mut settings_digest = [0u8; 32];
        settings_digest.copy_from_slice(r.take(32)?);
        let train_n = r.u32()?;
        let net = NetworkConfig {
            embedding_size: r.u32()? as usize,
            hidden_size: r.u32()? as usize,
            num_layers: r.u32()? as usize,
            decode_mode: match r.u8()? {
                0 => DecodeMode::Greedy,
                1 => DecodeMode::Sample,
                _ => return Err(CheckpointError::Integrity("bad decode mode")),
            },
        };
        let population_size = r.u32()? as usize;
        let max_iterations = r.u64()?;
        let epoch_length = r.u64()?;
        let sigma_init = r.f64()?;
        let batch_size = r.u32()? as usize;
        let normalize_acceptance = r.u8()? != 0;
        let sigma_rule = match r.u8()? {
            0 => SigmaRule::PaperLiteral,
            1 => SigmaRule::OneFifthStandard,
            _ => return Err(CheckpointError::Integrity("bad sigma rule")),
        };
        let has_budget = r.u8()? != 0;
        let budget = r.f64()?;
        let ncs = NcsConfig {
            population_size,
            max_iterations,
            epoch_length,
            sigma_init,
            batch_size,
            normalize_acceptance,
            sigma_rule,
            time_budget_secs: has_budget.then_some(budget),
        };
        let run_seed = r.u64()?;
        let iteration = r.u64()?;
        let param_len = r.u64()? as usize;
        let mut population = Vec::with_capacity(population_size);
        for _ in 0..population_size {
            let params = r.params(param_len)?;
            let sigma = r.f64()?;
            let success_count = r.u32()?;
            let fitness = r.f64()?;
            population.push(SearchState { params, sigma, success_count, fitness });
        }
        let best_params = r.params(param_len)?;
        let best_fitness = r.f64()?;
        if r.pos != payload.len() {
            return Err(CheckpointError::Integrity("trailing bytes"));
        }
        Ok(Checkpoint {
            net,
            ncs,
            train_n,
            run_seed,
            iteration,
            population,
            best: BestEver { params: best_params, fitness: best_fitness },
            settings_digest,
        })
    }

    /// Atomic save: write a temp file in the same directory, then rename.
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let bytes = self.to_bytes();
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
        if let Some(dir) = dir {
            fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("tmp");
        {
            let mut file = fs::File::create(&tmp)?;
            file.write_all(&bytes)?;
            file.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// Rejects a checkpoint whose settings differ from the digest the caller
    /// expects (e.g. the run config used for a resume).
    pub fn verify_settings(&self, expected_digest: &[u8; 32]) -> Result<(), CheckpointError> {
        if &self.settings_digest != expected_digest {
            return Err(CheckpointError::ConfigMismatch);
        }
        Ok(())
    }
}

fn write_params(out: &mut Vec<u8>, params: &ParamVector) {
    for v in params.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], CheckpointError> {
        if self.pos + len > self.bytes.len() {
            return Err(CheckpointError::Integrity("truncated"));
        }
        let slice = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn params(&mut self, len: usize) -> Result<ParamVector, CheckpointError> {
        let raw = self.take(len * 4)?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(ParamVector::from_values(values))
    }
}
