//! Per-region low-rank adapters over the frozen backbone's output
//! projection, and their binary checkpoints.
//!
//! An adapter perturbs W_out by ΔW = scale·B·A with A: r×d and B: d×r.
//! B starts at zero so a fresh adapter is an exact no-op; training moves
//! only A and B, never the backbone.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{ModelError, SnapshotError};
use crate::model::mat::{fingerprint_params, Mat};
use crate::region::RegionId;
use crate::wire::{Reader, Writer};

pub const MAGIC: &[u8; 4] = b"RALO";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct LowRankAdapter {
    rank: usize,
    dim: usize,
    /// Multiplier on B·A, conventionally α/r.
    scale: f64,
    /// Probability of dropping an adapter-input coordinate during
    /// training. Not persisted in checkpoints; evaluation never drops.
    dropout_rate: f64,
    pub a: Mat,
    pub b: Mat,
}

impl LowRankAdapter {
    /// Fresh adapter: A uniform on [−1/√d, 1/√d], B zero, so the initial
    /// perturbation is exactly zero.
    pub fn init(
        dim: usize,
        rank: usize,
        lora_alpha: f64,
        dropout_rate: f64,
        seed: u64,
    ) -> Result<Self, ModelError> {
        if dim == 0 || rank == 0 {
            return Err(ModelError::DimensionMismatch(
                "adapter dim and rank must be positive".to_string(),
            ));
        }
        if !(lora_alpha > 0.0) || !(0.0..1.0).contains(&dropout_rate) {
            return Err(ModelError::InvalidConfig(
                "lora_alpha must be > 0 and dropout in [0, 1)".to_string(),
            ));
        }
        let bound = 1.0 / (dim as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Mat::from_fn(rank, dim, |_, _| rng.random_range(-bound..bound));
        let b = Mat::zeros(dim, rank);
        Ok(Self {
            rank,
            dim,
            scale: lora_alpha / rank as f64,
            dropout_rate,
            a,
            b,
        })
    }

    pub fn from_parts(a: Mat, b: Mat, scale: f64, dropout_rate: f64) -> Result<Self, ModelError> {
        if a.rows() != b.cols() || a.cols() != b.rows() {
            return Err(ModelError::DimensionMismatch(format!(
                "A is {}x{} but B is {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            )));
        }
        if a.rows() == 0 || a.cols() == 0 {
            return Err(ModelError::DimensionMismatch(
                "adapter factors must be non-empty".to_string(),
            ));
        }
        if !scale.is_finite() || !a.all_finite() || !b.all_finite() {
            return Err(ModelError::DimensionMismatch(
                "adapter parameters must be finite".to_string(),
            ));
        }
        Ok(Self {
            rank: a.rows(),
            dim: a.cols(),
            scale,
            dropout_rate,
            a,
            b,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    /// The dense perturbation scale·B·A (d×d); rank ≤ r by construction.
    pub fn effective_delta(&self) -> Mat {
        self.b.matmul(&self.a).scaled(self.scale)
    }

    pub fn fingerprint(&self) -> u64 {
        fingerprint_params([self.a.as_slice(), self.b.as_slice(), &[self.scale]])
    }

    /// Serializes the adapter tagged with its region.
    pub fn to_bytes(&self, region: RegionId) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(MAGIC);
        w.u32(VERSION);
        w.u64(region.0);
        w.u32(self.rank as u32);
        w.u32(self.dim as u32);
        w.f64(self.scale);
        for &x in self.a.as_slice() {
            w.f64(x);
        }
        for &x in self.b.as_slice() {
            w.f64(x);
        }
        w.finish()
    }

    /// Inverse of [`LowRankAdapter::to_bytes`]. The dropout rate is a
    /// training-time knob and is not stored; it restores as 0.
    pub fn from_bytes(bytes: &[u8]) -> Result<(RegionId, Self), SnapshotError> {
        let mut r = Reader::new_checked(bytes)?;
        r.magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(SnapshotError::UnsupportedVersion(version));
        }
        let region = RegionId(r.u64()?);
        let rank = r.u32()? as usize;
        let dim = r.u32()? as usize;
        if rank == 0 || dim == 0 {
            return Err(SnapshotError::Corrupt("zero adapter shape"));
        }
        let scale = r.f64()?;
        let a = Mat::from_vec(rank, dim, r.f64_vec(rank * dim)?);
        let b = Mat::from_vec(dim, rank, r.f64_vec(dim * rank)?);
        r.expect_end()?;
        let adapter = Self::from_parts(a, b, scale, 0.0)
            .map_err(|_| SnapshotError::Corrupt("non-finite adapter parameters"))?;
        Ok((region, adapter))
    }
}

/// One adapter per live region, keyed by region id. Iteration order is
/// id order, which keeps fingerprints and reports deterministic.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdapterRegistry {
    map: BTreeMap<u64, LowRankAdapter>,
}

impl AdapterRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, region: RegionId, adapter: LowRankAdapter) {
        self.map.insert(region.0, adapter);
    }

    pub fn get(&self, region: RegionId) -> Option<&LowRankAdapter> {
        self.map.get(&region.0)
    }

    pub fn get_mut(&mut self, region: RegionId) -> Option<&mut LowRankAdapter> {
        self.map.get_mut(&region.0)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (RegionId, &LowRankAdapter)> {
        self.map.iter().map(|(&id, ad)| (RegionId(id), ad))
    }

    pub fn ids(&self) -> Vec<RegionId> {
        self.map.keys().map(|&id| RegionId(id)).collect()
    }

    pub fn fingerprint(&self) -> u64 {
        fingerprint_params(
            self.map
                .values()
                .flat_map(|ad| [ad.a.as_slice(), ad.b.as_slice()]),
        )
    }

    /// Fingerprint of every adapter except `region`; the isolation checks
    /// assert this is unchanged by training that one region.
    pub fn fingerprint_except(&self, region: RegionId) -> u64 {
        fingerprint_params(
            self.map
                .iter()
                .filter(|(&id, _)| id != region.0)
                .flat_map(|(_, ad)| [ad.a.as_slice(), ad.b.as_slice()]),
        )
    }
}
