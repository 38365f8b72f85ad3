//! The desk-scale sequence-scoring backbone.
//!
//! A window of item indices is pooled with recency weights, projected to
//! a hidden state, and scored against every item embedding:
//!
//! ```text
//! s = Σ_j ρ^{L−j} E[v_j]        (recency-weighted pooling, last item weight 1)
//! h = W_enc · s                  (hidden state; ẽ = h/‖h‖ is the routing key)
//! f(v | x) = E[v]ᵀ (W_out + scale·B·A) · h   (logits, adapter optional)
//! ```
//!
//! After `freeze()` the parameters are immutable; adapter training can
//! only read them. Larger pretrained backbones can replace this one by
//! implementing the same encode/score surface.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::derive_seed;
use crate::error::{ModelError, SnapshotError};
use crate::model::adapter::LowRankAdapter;
use crate::model::mat::{fingerprint_params, Mat};
use crate::vector::{norm, softmax, UnitVector};
use crate::wire::{Reader, Writer};

pub const MAGIC: &[u8; 4] = b"RABB";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Backbone {
    vocab_size: usize,
    dim: usize,
    /// Recency decay ρ ∈ (0, 1]: weight of the item j positions before
    /// the window end is ρ^j.
    rho: f64,
    /// |V|×d item embeddings; row 0 is the padding item.
    e: Mat,
    /// d×d encoder projection.
    w_enc: Mat,
    /// d×d output projection (the adapter's injection site).
    w_out: Mat,
    frozen: bool,
}

impl Backbone {
    /// Random unfrozen backbone, uniform init on [−1/√d, 1/√d].
    pub fn new(vocab_size: usize, dim: usize, rho: f64, seed: u64) -> Result<Self, ModelError> {
        if vocab_size < 2 || dim == 0 {
            return Err(ModelError::DimensionMismatch(
                "need at least one real item and a positive dimension".to_string(),
            ));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(ModelError::InvalidConfig(
                "recency decay must lie in (0, 1]".to_string(),
            ));
        }
        let bound = 1.0 / (dim as f64).sqrt();
        let init = |tag: &str, rows: usize, cols: usize| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, tag, 0));
            Mat::from_fn(rows, cols, |_, _| rng.random_range(-bound..bound))
        };
        Ok(Self {
            vocab_size,
            dim,
            rho,
            e: init("backbone-e", vocab_size, dim),
            w_enc: init("backbone-enc", dim, dim),
            w_out: init("backbone-out", dim, dim),
            frozen: false,
        })
    }

    /// Assembles a backbone from explicit parameters (tests, restore).
    pub fn from_parts(
        e: Mat,
        w_enc: Mat,
        w_out: Mat,
        rho: f64,
        frozen: bool,
    ) -> Result<Self, ModelError> {
        let dim = e.cols();
        if e.rows() < 2 || dim == 0 {
            return Err(ModelError::DimensionMismatch(
                "embedding table needs >= 2 rows and a positive dimension".to_string(),
            ));
        }
        for (name, m) in [("w_enc", &w_enc), ("w_out", &w_out)] {
            if m.rows() != dim || m.cols() != dim {
                return Err(ModelError::DimensionMismatch(format!(
                    "{name} must be {dim}x{dim}, got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        if !(rho > 0.0 && rho <= 1.0) || !e.all_finite() || !w_enc.all_finite() || !w_out.all_finite()
        {
            return Err(ModelError::DimensionMismatch(
                "parameters must be finite with rho in (0, 1]".to_string(),
            ));
        }
        Ok(Self {
            vocab_size: e.rows(),
            dim,
            rho,
            e,
            w_enc,
            w_out,
            frozen,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn e(&self) -> &Mat {
        &self.e
    }

    pub fn w_enc(&self) -> &Mat {
        &self.w_enc
    }

    pub fn w_out(&self) -> &Mat {
        &self.w_out
    }

    pub fn freeze(&mut self) -> Result<(), ModelError> {
        if self.frozen {
            return Err(ModelError::AlreadyFrozen);
        }
        self.frozen = true;
        Ok(())
    }

    /// Mutable access to (E, W_enc, W_out) for the setup trainer. The
    /// borrow is the enforcement point of the frozen invariant.
    pub(crate) fn params_mut(&mut self) -> Result<(&mut Mat, &mut Mat, &mut Mat), ModelError> {
        if self.frozen {
            return Err(ModelError::AlreadyFrozen);
        }
        Ok((&mut self.e, &mut self.w_enc, &mut self.w_out))
    }

    /// FNV fingerprint of all base parameters (bit-level).
    pub fn fingerprint(&self) -> u64 {
        fingerprint_params([
            self.e.as_slice(),
            self.w_enc.as_slice(),
            self.w_out.as_slice(),
            &[self.rho],
        ])
    }

    /// Recency-weighted pooled embedding `s` and hidden state `h`.
    pub(crate) fn forward_parts(
        &self,
        window: &[usize],
    ) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
        if window.is_empty() {
            return Err(ModelError::EmptyWindow);
        }
        let len = window.len();
        let mut s = vec![0.0; self.dim];
        for (j, &v) in window.iter().enumerate() {
            if v >= self.vocab_size {
                return Err(ModelError::ItemOutOfRange {
                    index: v,
                    vocab: self.vocab_size,
                });
            }
            let w = self.rho.powi((len - 1 - j) as i32);
            for (acc, &x) in s.iter_mut().zip(self.e.row(v)) {
                *acc += w * x;
            }
        }
        let h = self.w_enc.matvec(&s);
        Ok((s, h))
    }

    /// The routing representation ẽ = h/‖h‖.
    pub fn encode_subsequence(&self, window: &[usize]) -> Result<UnitVector, ModelError> {
        let (_, h) = self.forward_parts(window)?;
        if norm(&h) < 1e-12 {
            return Err(ModelError::ZeroHidden);
        }
        UnitVector::normalize(h).map_err(|_| ModelError::ZeroHidden)
    }

    /// (W_out + scale·B·A)·h, the vector every item embedding is dotted
    /// against.
    fn output_vector(
        &self,
        adapter: Option<&LowRankAdapter>,
        h: &[f64],
    ) -> Result<Vec<f64>, ModelError> {
        let mut o = self.w_out.matvec(h);
        if let Some(ad) = adapter {
            if ad.dim() != self.dim {
                return Err(ModelError::DimensionMismatch(format!(
                    "adapter dim {} vs backbone dim {}",
                    ad.dim(),
                    self.dim
                )));
            }
            let u = ad.a.matvec(h);
            let bu = ad.b.matvec(&u);
            for (oi, bi) in o.iter_mut().zip(&bu) {
                *oi += ad.scale() * bi;
            }
        }
        Ok(o)
    }

    /// Logits over the full vocabulary (padding row included).
    pub fn score_items(
        &self,
        adapter: Option<&LowRankAdapter>,
        window: &[usize],
    ) -> Result<Vec<f64>, ModelError> {
        let (_, h) = self.forward_parts(window)?;
        let o = self.output_vector(adapter, &h)?;
        Ok(self.e.matvec(&o))
    }

    /// Softmax over [`Backbone::score_items`].
    pub fn predict_distribution(
        &self,
        adapter: Option<&LowRankAdapter>,
        window: &[usize],
    ) -> Result<Vec<f64>, ModelError> {
        Ok(softmax(&self.score_items(adapter, window)?))
    }

    /// Top-k item indices by descending logit; ties break toward the
    /// lower index. The window's own items are not filtered out.
    pub fn predict_topk(
        &self,
        adapter: Option<&LowRankAdapter>,
        window: &[usize],
        k: usize,
    ) -> Result<Vec<usize>, ModelError> {
        if k > self.vocab_size {
            return Err(ModelError::KExceedsVocab {
                k,
                vocab: self.vocab_size,
            });
        }
        let logits = self.score_items(adapter, window)?;
        let mut order: Vec<usize> = (0..logits.len()).collect();
        order.sort_by(|&a, &b| logits[b].total_cmp(&logits[a]).then(a.cmp(&b)));
        order.truncate(k);
        Ok(order)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(MAGIC);
        w.u32(VERSION);
        w.u32(self.vocab_size as u32);
        w.u32(self.dim as u32);
        w.f64(self.rho);
        w.u8(u8::from(self.frozen));
        for m in [&self.e, &self.w_enc, &self.w_out] {
            for &x in m.as_slice() {
                w.f64(x);
            }
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SnapshotError> {
        let mut r = Reader::new_checked(bytes)?;
        r.magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(SnapshotError::UnsupportedVersion(version));
        }
        let vocab_size = r.u32()? as usize;
        let dim = r.u32()? as usize;
        let rho = r.f64()?;
        let frozen = match r.u8()? {
            0 => false,
            1 => true,
            _ => return Err(SnapshotError::Corrupt("bad frozen byte")),
        };
        let e = Mat::from_vec(vocab_size, dim, r.f64_vec(vocab_size.saturating_mul(dim))?);
        let w_enc = Mat::from_vec(dim, dim, r.f64_vec(dim * dim)?);
        let w_out = Mat::from_vec(dim, dim, r.f64_vec(dim * dim)?);
        r.expect_end()?;
        Self::from_parts(e, w_enc, w_out, rho, frozen)
            .map_err(|_| SnapshotError::Corrupt("invalid backbone parameters"))
    }
}
