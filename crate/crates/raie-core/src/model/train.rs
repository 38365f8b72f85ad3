//! Training loops and hand-written backpropagation.
//!
//! Setup phase: full-parameter next-item training, then freeze. Finetune
//! phase: per-region adapter training against the frozen backbone, with
//! each batch element drawn from the region's setup-era pool with
//! probability `mixing_ratio` and from its finetune-era pool otherwise.
//! All gradients are analytic; the tests pin them to finite differences.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::derive_seed;
use crate::error::ModelError;
use crate::model::adapter::LowRankAdapter;
use crate::model::backbone::Backbone;
use crate::model::mat::Mat;
use crate::model::optim::{clip_global_norm, AdamW};
use crate::vector::softmax;

/// One supervised pair: a context window of item indices and the index
/// of the item that followed it.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainExample {
    pub window: Vec<usize>,
    pub target: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub setup_epochs: u32,
    pub finetune_epochs: u32,
    pub batch_size: u32,
    /// Probability that a finetune batch element comes from the region's
    /// setup-era pool rather than its finetune-era pool.
    pub mixing_ratio: f64,
    pub weight_decay: f64,
    /// Cap on the joint gradient ℓ2 norm per step.
    pub grad_clip: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5e-4,
            setup_epochs: 5,
            finetune_epochs: 3,
            batch_size: 32,
            mixing_ratio: 0.7,
            weight_decay: 0.01,
            grad_clip: 5.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |msg: &str| Err(ModelError::InvalidConfig(msg.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive and finite");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.mixing_ratio) {
            return fail("mixing_ratio must lie in [0, 1]");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return fail("weight_decay must be >= 0");
        }
        if !(self.grad_clip > 0.0) {
            return fail("grad_clip must be > 0");
        }
        Ok(())
    }
}

/// Gradients of the batch loss with respect to the adapter factors.
#[derive(Clone, Debug)]
pub struct AdapterGrads {
    pub da: Mat,
    pub db: Mat,
}

/// Mean negative log-likelihood of the targets plus adapter-factor
/// gradients. Backbone parameters receive no gradient by construction.
pub fn next_item_loss(
    backbone: &Backbone,
    adapter: &LowRankAdapter,
    batch: &[TrainExample],
) -> Result<(f64, AdapterGrads), ModelError> {
    let refs: Vec<&TrainExample> = batch.iter().collect();
    adapter_loss_grads(backbone, adapter, &refs, None)
}

fn adapter_loss_grads(
    backbone: &Backbone,
    adapter: &LowRankAdapter,
    batch: &[&TrainExample],
    dropout: Option<(&[Vec<bool>], f64)>,
) -> Result<(f64, AdapterGrads), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyRegionData);
    }
    if adapter.dim() != backbone.dim() {
        return Err(ModelError::DimensionMismatch(format!(
            "adapter dim {} vs backbone dim {}",
            adapter.dim(),
            backbone.dim()
        )));
    }
    let vocab = backbone.vocab_size();
    let mut loss = 0.0;
    let mut da = Mat::zeros(adapter.rank(), adapter.dim());
    let mut db = Mat::zeros(adapter.dim(), adapter.rank());
    for (i, ex) in batch.iter().enumerate() {
        if ex.target >= vocab {
            return Err(ModelError::ItemOutOfRange {
                index: ex.target,
                vocab,
            });
        }
        let (_, h) = backbone.forward_parts(&ex.window)?;
        // Inverted dropout on the adapter input only; the base path
        // always sees the clean hidden state.
        let h_ad: Vec<f64> = match dropout {
            Some((masks, rate)) => {
                let keep = 1.0 - rate;
                h.iter()
                    .zip(&masks[i])
                    .map(|(&x, &kept)| if kept { x / keep } else { 0.0 })
                    .collect()
            }
            None => h.clone(),
        };
        let u = adapter.a.matvec(&h_ad);
        let mut o = backbone.w_out().matvec(&h);
        let bu = adapter.b.matvec(&u);
        for (oi, bi) in o.iter_mut().zip(&bu) {
            *oi += adapter.scale() * bi;
        }
        let probs = softmax(&backbone.e().matvec(&o));
        loss -= probs[ex.target].max(1e-300).ln();

        // dz = softmax − onehot(target); d_o = Eᵀ dz;
        // dB += scale·d_o uᵀ; du = scale·Bᵀ d_o; dA += du h_adᵀ.
        let mut dz = probs;
        dz[ex.target] -= 1.0;
        let d_o = backbone.e().tmatvec(&dz);
        db.add_outer(&d_o, &u, adapter.scale());
        let mut du = adapter.b.tmatvec(&d_o);
        for x in du.iter_mut() {
            *x *= adapter.scale();
        }
        da.add_outer(&du, &h_ad, 1.0);
    }
    let inv = 1.0 / batch.len() as f64;
    Ok((
        loss * inv,
        AdapterGrads {
            da: da.scaled(inv),
            db: db.scaled(inv),
        },
    ))
}

struct BaseGrads {
    de: Mat,
    denc: Mat,
    dout: Mat,
}

/// Loss and gradients for every base tensor (setup phase; no adapter).
fn base_loss_grads(
    backbone: &Backbone,
    batch: &[&TrainExample],
) -> Result<(f64, BaseGrads), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyRegionData);
    }
    let vocab = backbone.vocab_size();
    let dim = backbone.dim();
    let mut loss = 0.0;
    let mut de = Mat::zeros(vocab, dim);
    let mut denc = Mat::zeros(dim, dim);
    let mut dout = Mat::zeros(dim, dim);
    for ex in batch {
        if ex.target >= vocab {
            return Err(ModelError::ItemOutOfRange {
                index: ex.target,
                vocab,
            });
        }
        let (s, h) = backbone.forward_parts(&ex.window)?;
        let o = backbone.w_out().matvec(&h);
        let probs = softmax(&backbone.e().matvec(&o));
        loss -= probs[ex.target].max(1e-300).ln();

        let mut dz = probs;
        dz[ex.target] -= 1.0;
        let d_o = backbone.e().tmatvec(&dz);
        dout.add_outer(&d_o, &h, 1.0);
        let dh = backbone.w_out().tmatvec(&d_o);
        denc.add_outer(&dh, &s, 1.0);
        let ds = backbone.w_enc().tmatvec(&dh);
        // E gets gradient both as the output table (dz_v · o per row)
        // and through the recency-weighted input pooling.
        de.add_outer(&dz, &o, 1.0);
        let len = ex.window.len();
        for (j, &v) in ex.window.iter().enumerate() {
            let w = backbone.rho().powi((len - 1 - j) as i32);
            for (cell, &g) in de.row_mut(v).iter_mut().zip(&ds) {
                *cell += w * g;
            }
        }
    }
    let inv = 1.0 / batch.len() as f64;
    Ok((
        loss * inv,
        BaseGrads {
            de: de.scaled(inv),
            denc: denc.scaled(inv),
            dout: dout.scaled(inv),
        },
    ))
}

/// Trains all base parameters for `setup_epochs`, then freezes the
/// backbone. Returns the mean loss of the final epoch (or a plain
/// evaluation pass when `setup_epochs` is 0).
pub fn train_setup_backbone(
    backbone: &mut Backbone,
    examples: &[TrainExample],
    config: &TrainConfig,
) -> Result<f64, ModelError> {
    config.validate()?;
    if backbone.is_frozen() {
        return Err(ModelError::AlreadyFrozen);
    }
    if examples.is_empty() {
        return Err(ModelError::EmptyRegionData);
    }
    if config.setup_epochs == 0 {
        let refs: Vec<&TrainExample> = examples.iter().collect();
        let (loss, _) = base_loss_grads(backbone, &refs)?;
        backbone.freeze()?;
        return Ok(loss);
    }
    let dim = backbone.dim();
    let vocab = backbone.vocab_size();
    let mut opt_e = AdamW::new(vocab * dim, config.learning_rate, config.weight_decay);
    let mut opt_enc = AdamW::new(dim * dim, config.learning_rate, config.weight_decay);
    let mut opt_out = AdamW::new(dim * dim, config.learning_rate, config.weight_decay);
    let batch_size = config.batch_size as usize;
    let mut final_loss = 0.0;
    for epoch in 0..config.setup_epochs {
        let mut order: Vec<usize> = (0..examples.len()).collect();
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "setup-shuffle", u64::from(epoch)));
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch_size) {
            let batch: Vec<&TrainExample> = chunk.iter().map(|&i| &examples[i]).collect();
            let (loss, mut g) = base_loss_grads(backbone, &batch)?;
            epoch_loss += loss * batch.len() as f64;
            clip_global_norm(
                &mut [
                    g.de.as_mut_slice(),
                    g.denc.as_mut_slice(),
                    g.dout.as_mut_slice(),
                ],
                config.grad_clip,
            );
            let (e, enc, out) = backbone.params_mut()?;
            opt_e.step(e.as_mut_slice(), g.de.as_slice());
            opt_enc.step(enc.as_mut_slice(), g.denc.as_slice());
            opt_out.step(out.as_mut_slice(), g.dout.as_slice());
        }
        final_loss = epoch_loss / examples.len() as f64;
    }
    backbone.freeze()?;
    Ok(final_loss)
}

#[derive(Clone, Debug)]
pub struct AdapterTrainReport {
    pub final_epoch_loss: f64,
    pub batches_run: u64,
    pub s_examples: usize,
    pub f_examples: usize,
}

/// Trains one region's adapter for `finetune_epochs` against the frozen
/// backbone. Every batch slot picks the setup pool with probability
/// `mixing_ratio` (falling back to whichever pool is nonempty), then
/// samples uniformly with replacement. The backbone fingerprint is
/// checked before and after: any change is a FrozenViolation.
pub fn train_region_adapter(
    backbone: &Backbone,
    adapter: &mut LowRankAdapter,
    s_pool: &[TrainExample],
    f_pool: &[TrainExample],
    config: &TrainConfig,
    seed: u64,
) -> Result<AdapterTrainReport, ModelError> {
    config.validate()?;
    if !backbone.is_frozen() {
        return Err(ModelError::NotFrozen);
    }
    if s_pool.is_empty() && f_pool.is_empty() {
        return Err(ModelError::EmptyRegionData);
    }
    let base_print = backbone.fingerprint();
    // Epoch size counts only pools the mixing rule can actually draw
    // from, so a pool that is present but unreachable (mixing pinned to
    // the other side) doesn't inflate the batch count. This is what
    // makes a K=1 no-edit run bit-identical to a plain global adapter.
    let s_reachable = !s_pool.is_empty() && (f_pool.is_empty() || config.mixing_ratio > 0.0);
    let f_reachable = !f_pool.is_empty() && (s_pool.is_empty() || config.mixing_ratio < 1.0);
    let mut epoch_size = 0;
    if s_reachable {
        epoch_size += s_pool.len();
    }
    if f_reachable {
        epoch_size += f_pool.len();
    }
    let batch_size = config.batch_size as usize;
    let batches_per_epoch = epoch_size.div_ceil(batch_size);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut opt_a = AdamW::new(
        adapter.rank() * adapter.dim(),
        config.learning_rate,
        config.weight_decay,
    );
    let mut opt_b = AdamW::new(
        adapter.dim() * adapter.rank(),
        config.learning_rate,
        config.weight_decay,
    );
    let rate = adapter.dropout_rate();
    let mut final_loss = 0.0;
    let mut batches_run = 0;
    for _ in 0..config.finetune_epochs {
        let mut epoch_loss = 0.0;
        for _ in 0..batches_per_epoch {
            let mut batch: Vec<&TrainExample> = Vec::with_capacity(batch_size);
            for _ in 0..batch_size {
                // Forced outcomes consume no randomness, so a one-pool
                // run draws the same batches as a run that never had a
                // second pool (the global-adapter equivalence).
                let from_s = if s_pool.is_empty() {
                    false
                } else if f_pool.is_empty() {
                    true
                } else if config.mixing_ratio <= 0.0 {
                    false
                } else if config.mixing_ratio >= 1.0 {
                    true
                } else {
                    rng.random::<f64>() < config.mixing_ratio
                };
                let pool = if from_s { s_pool } else { f_pool };
                batch.push(&pool[rng.random_range(0..pool.len())]);
            }
            let masks: Option<Vec<Vec<bool>>> = (rate > 0.0).then(|| {
                batch
                    .iter()
                    .map(|_| (0..backbone.dim()).map(|_| rng.random::<f64>() >= rate).collect())
                    .collect()
            });
            let (loss, mut g) = adapter_loss_grads(
                backbone,
                adapter,
                &batch,
                masks.as_ref().map(|m| (m.as_slice(), rate)),
            )?;
            epoch_loss += loss;
            batches_run += 1;
            clip_global_norm(
                &mut [g.da.as_mut_slice(), g.db.as_mut_slice()],
                config.grad_clip,
            );
            opt_a.step(adapter.a.as_mut_slice(), g.da.as_slice());
            opt_b.step(adapter.b.as_mut_slice(), g.db.as_slice());
        }
        final_loss = epoch_loss / batches_per_epoch as f64;
    }
    if backbone.fingerprint() != base_print {
        return Err(ModelError::FrozenViolation);
    }
    Ok(AdapterTrainReport {
        final_epoch_loss: final_loss,
        batches_run,
        s_examples: s_pool.len(),
        f_examples: f_pool.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(window: Vec<usize>, target: usize) -> TrainExample {
        TrainExample { window, target }
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
    }

    fn seeded_adapter(dim: usize, rank: usize, seed: u64) -> LowRankAdapter {
        let mut ad = LowRankAdapter::init(dim, rank, 16.0, 0.0, seed).unwrap();
        // Nonzero B so every gradient path is exercised.
        for i in 0..dim {
            for j in 0..rank {
                *ad.b.at_mut(i, j) = ((i * rank + j + 1) as f64 * 0.31).sin() * 0.2;
            }
        }
        ad
    }

    #[test]
    fn uniform_logits_cost_ln_two() {
        // All-zero embeddings make every logit 0: softmax is uniform
        // over |V| = 2 and the loss is exactly ln 2.
        let e = Mat::zeros(2, 2);
        let b = Backbone::from_parts(
            e,
            Mat::from_fn(2, 2, |i, j| f64::from(u8::from(i == j))),
            Mat::from_fn(2, 2, |i, j| f64::from(u8::from(i == j))),
            1.0,
            true,
        )
        .unwrap();
        let ad = LowRankAdapter::init(2, 1, 16.0, 0.0, 0).unwrap();
        let (loss, _) = next_item_loss(&b, &ad, &[ex(vec![1], 1)]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn dominant_margin_drives_loss_to_zero() {
        let e = Mat::from_vec(2, 1, vec![0.0, 10.0]);
        let b = Backbone::from_parts(
            e,
            Mat::from_vec(1, 1, vec![1.0]),
            Mat::from_vec(1, 1, vec![1.0]),
            1.0,
            true,
        )
        .unwrap();
        let ad = LowRankAdapter::init(1, 1, 16.0, 0.0, 0).unwrap();
        // logits = (0, 100): the target's probability is ~1.
        let (loss, _) = next_item_loss(&b, &ad, &[ex(vec![1], 1)]).unwrap();
        assert!(loss < 1e-20);
    }

    #[test]
    fn adapter_gradients_match_finite_differences() {
        let eps = 1e-5;
        for (vocab, dim, rank, seed) in [(4, 3, 2, 1u64), (5, 4, 1, 2), (3, 2, 2, 3)] {
            let mut bb = Backbone::new(vocab, dim, 0.7, seed).unwrap();
            bb.freeze().unwrap();
            let ad = seeded_adapter(dim, rank, seed + 50);
            let batch = vec![
                ex(vec![1, vocab - 1], 2 % vocab),
                ex(vec![vocab - 1], 1),
                ex(vec![2 % vocab, 1, 1], vocab - 1),
            ];
            let (_, g) = next_item_loss(&bb, &ad, &batch).unwrap();
            let mut checked = 0;
            let picks: [(&Mat, fn(&mut LowRankAdapter) -> &mut Mat); 2] =
                [(&g.da, |a| &mut a.a), (&g.db, |a| &mut a.b)];
            for (grad, pick) in picks {
                for i in 0..grad.rows() {
                    for j in 0..grad.cols() {
                        let mut plus = ad.clone();
                        *pick(&mut plus).at_mut(i, j) += eps;
                        let mut minus = ad.clone();
                        *pick(&mut minus).at_mut(i, j) -= eps;
                        let (lp, _) = next_item_loss(&bb, &plus, &batch).unwrap();
                        let (lm, _) = next_item_loss(&bb, &minus, &batch).unwrap();
                        let fd = (lp - lm) / (2.0 * eps);
                        assert!(
                            rel_err(fd, grad.at(i, j)) <= 1e-4,
                            "grad mismatch at ({i},{j}): fd={fd} analytic={}",
                            grad.at(i, j)
                        );
                        checked += 1;
                    }
                }
            }
            assert!(checked > 0);
        }
    }

    #[test]
    fn base_gradients_match_finite_differences() {
        let eps = 1e-5;
        let bb = Backbone::new(4, 3, 0.6, 9).unwrap();
        let batch_owned = vec![ex(vec![1, 3], 2), ex(vec![2], 3), ex(vec![3, 3, 1], 1)];
        let batch: Vec<&TrainExample> = batch_owned.iter().collect();
        let (_, g) = base_loss_grads(&bb, &batch).unwrap();
        // Perturb every parameter of every tensor through from_parts.
        let tensors: [(&Mat, u8); 3] = [(&g.de, 0), (&g.denc, 1), (&g.dout, 2)];
        for (grad, which) in tensors {
            for i in 0..grad.rows() {
                for j in 0..grad.cols() {
                    let eval = |delta: f64| {
                        let mut e = bb.e().clone();
                        let mut enc = bb.w_enc().clone();
                        let mut out = bb.w_out().clone();
                        match which {
                            0 => *e.at_mut(i, j) += delta,
                            1 => *enc.at_mut(i, j) += delta,
                            _ => *out.at_mut(i, j) += delta,
                        }
                        let b2 = Backbone::from_parts(e, enc, out, bb.rho(), false).unwrap();
                        let (loss, _) = base_loss_grads(&b2, &batch).unwrap();
                        loss
                    };
                    let fd = (eval(eps) - eval(-eps)) / (2.0 * eps);
                    assert!(
                        rel_err(fd, grad.at(i, j)) <= 1e-4,
                        "tensor {which} ({i},{j}): fd={fd} analytic={}",
                        grad.at(i, j)
                    );
                }
            }
        }
    }

    fn chain_examples(reps: usize) -> (Vec<TrainExample>, Vec<TrainExample>) {
        // Three deterministic cyclic transition chains over items 1..=9.
        let chains = [[1, 2, 3], [4, 5, 6], [7, 8, 9]];
        let mut train = Vec::new();
        let mut test = Vec::new();
        for ch in chains {
            for i in 0..3 {
                let window = vec![ch[i], ch[(i + 1) % 3]];
                let target = ch[(i + 2) % 3];
                test.push(ex(window.clone(), target));
                for _ in 0..reps {
                    train.push(ex(window.clone(), target));
                }
            }
        }
        (train, test)
    }

    #[test]
    fn toy_chain_task_is_learned_in_five_epochs() {
        let mut b = Backbone::new(10, 8, 0.9, 4).unwrap();
        let (train, test) = chain_examples(100);
        let config = TrainConfig {
            learning_rate: 0.01,
            setup_epochs: 5,
            batch_size: 16,
            ..TrainConfig::default()
        };
        let final_loss = train_setup_backbone(&mut b, &train, &config).unwrap();
        assert!(b.is_frozen());
        assert!(final_loss < 1.0, "final loss {final_loss}");
        let correct = test
            .iter()
            .filter(|e| b.predict_topk(None, &e.window, 1).unwrap()[0] == e.target)
            .count();
        assert!(
            correct as f64 / test.len() as f64 > 0.9,
            "accuracy {correct}/{}",
            test.len()
        );
    }

    #[test]
    fn zero_epochs_only_freezes() {
        let mut b = Backbone::new(6, 3, 0.9, 1).unwrap();
        let before = b.fingerprint();
        let config = TrainConfig {
            setup_epochs: 0,
            ..TrainConfig::default()
        };
        let loss = train_setup_backbone(&mut b, &[ex(vec![1], 2)], &config).unwrap();
        assert!(b.is_frozen());
        assert_eq!(b.fingerprint(), before);
        assert!(loss.is_finite() && loss > 0.0);
    }

    #[test]
    fn setup_training_is_deterministic() {
        let run = || {
            let mut b = Backbone::new(10, 4, 0.9, 7).unwrap();
            let (train, _) = chain_examples(10);
            let config = TrainConfig {
                setup_epochs: 2,
                ..TrainConfig::default()
            };
            train_setup_backbone(&mut b, &train, &config).unwrap();
            b.fingerprint()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn adapter_training_requires_frozen_backbone() {
        let b = Backbone::new(6, 3, 0.9, 1).unwrap();
        let mut ad = LowRankAdapter::init(3, 1, 16.0, 0.0, 0).unwrap();
        let pool = vec![ex(vec![1], 2)];
        assert!(matches!(
            train_region_adapter(&b, &mut ad, &pool, &[], &TrainConfig::default(), 0),
            Err(ModelError::NotFrozen)
        ));
    }

    #[test]
    fn empty_pools_leave_adapter_untouched() {
        let mut b = Backbone::new(6, 3, 0.9, 1).unwrap();
        b.freeze().unwrap();
        let mut ad = LowRankAdapter::init(3, 1, 16.0, 0.0, 0).unwrap();
        let before = ad.fingerprint();
        assert!(matches!(
            train_region_adapter(&b, &mut ad, &[], &[], &TrainConfig::default(), 0),
            Err(ModelError::EmptyRegionData)
        ));
        assert_eq!(ad.fingerprint(), before);
    }

    #[test]
    fn mixing_one_never_touches_the_finetune_pool() {
        let mut b = Backbone::new(6, 3, 0.9, 1).unwrap();
        b.freeze().unwrap();
        let s_pool = vec![ex(vec![1, 2], 3), ex(vec![2], 4)];
        // Poisoned F pool: drawing from it would error with
        // ItemOutOfRange, so success proves it was never sampled.
        let f_pool = vec![ex(vec![1], 999)];
        let config = TrainConfig {
            mixing_ratio: 1.0,
            finetune_epochs: 2,
            ..TrainConfig::default()
        };
        let mut ad = LowRankAdapter::init(3, 1, 16.0, 0.0, 0).unwrap();
        train_region_adapter(&b, &mut ad, &s_pool, &f_pool, &config, 5).unwrap();
        let config0 = TrainConfig {
            mixing_ratio: 0.0,
            ..config
        };
        let mut ad2 = LowRankAdapter::init(3, 1, 16.0, 0.0, 0).unwrap();
        assert!(matches!(
            train_region_adapter(&b, &mut ad2, &s_pool, &f_pool, &config0, 5),
            Err(ModelError::ItemOutOfRange { index: 999, .. })
        ));
    }

    #[test]
    fn adapter_training_reduces_region_loss_and_freezes_base() {
        let mut b = Backbone::new(10, 6, 0.9, 11).unwrap();
        let (train, _) = chain_examples(30);
        train_setup_backbone(
            &mut b,
            &train,
            &TrainConfig {
                setup_epochs: 1,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        let base_print = b.fingerprint();
        // Region data with transitions the base was never trained on.
        let region_pool: Vec<TrainExample> =
            (0..40).map(|i| ex(vec![1 + (i % 3)], 7)).collect();
        let mut ad = LowRankAdapter::init(6, 2, 16.0, 0.05, 3).unwrap();
        let (before, _) = next_item_loss(&b, &ad, &region_pool).unwrap();
        let config = TrainConfig {
            learning_rate: 0.02,
            finetune_epochs: 3,
            ..TrainConfig::default()
        };
        let report = train_region_adapter(&b, &mut ad, &region_pool, &[], &config, 17).unwrap();
        let (after, _) = next_item_loss(&b, &ad, &region_pool).unwrap();
        assert!(after < before, "loss went {before} -> {after}");
        assert_eq!(b.fingerprint(), base_print);
        assert!(report.batches_run > 0);
    }

    #[test]
    fn adapter_training_is_deterministic() {
        let mut b = Backbone::new(8, 4, 0.9, 2).unwrap();
        b.freeze().unwrap();
        let pool: Vec<TrainExample> = (0..10).map(|i| ex(vec![1 + (i % 4)], 5)).collect();
        let run = |seed: u64| {
            let mut ad = LowRankAdapter::init(4, 2, 16.0, 0.05, 9).unwrap();
            train_region_adapter(&b, &mut ad, &pool, &[], &TrainConfig::default(), seed).unwrap();
            ad.fingerprint()
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }
}
