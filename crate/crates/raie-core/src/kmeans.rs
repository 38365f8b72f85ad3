//! Spherical k-means: cosine-similarity clustering of unit vectors.
//!
//! Maximizes Σ_k Σ_{e ∈ C_k} c_k·e subject to ‖c_k‖ = 1. For a fixed
//! assignment the optimal center is the normalized member sum, so Lloyd
//! iterations (assign to the most-similar center, re-normalize sums)
//! increase the objective monotonically. Multiple seeded restarts guard
//! against poor local optima; the best restart wins.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::derive_seed;
use crate::error::KmeansError;
use crate::vector::{norm, UnitVector};

#[derive(Clone, Debug)]
pub struct KmeansResult {
    pub centers: Vec<UnitVector>,
    pub assignments: Vec<usize>,
    /// Final objective Σ_i c_{a(i)}·v_i of the winning restart.
    pub objective: f64,
    /// Objective after each Lloyd iteration of the winning restart.
    pub trace: Vec<f64>,
}

/// Clusters unit vectors into `k` groups by cosine similarity.
///
/// Deterministic for a given `seed`: every restart draws its initial
/// centers from a seeded generator, and ties (assignment and restart
/// selection) break toward the lowest index. `k` must not exceed the
/// number of distinct vectors; `k = 0` is rejected the same way.
pub fn spherical_kmeans(
    vectors: &[UnitVector],
    k: usize,
    max_iter: usize,
    restarts: usize,
    seed: u64,
) -> Result<KmeansResult, KmeansError> {
    if vectors.is_empty() {
        return Err(KmeansError::EmptyInput);
    }
    let dim = vectors[0].dim();
    for v in vectors {
        if v.dim() != dim {
            return Err(KmeansError::DimensionMismatch {
                expected: dim,
                got: v.dim(),
            });
        }
    }
    let distinct = distinct_indices(vectors);
    if k == 0 || k > distinct.len() {
        return Err(KmeansError::KTooLarge {
            k,
            distinct: distinct.len(),
        });
    }

    let mut best: Option<KmeansResult> = None;
    for r in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "kmeans-restart", r as u64));
        // Initial centers: k distinct input vectors, sampled without
        // replacement so no two restarts start collapsed.
        let mut pool = distinct.clone();
        pool.shuffle(&mut rng);
        let mut centers: Vec<UnitVector> =
            pool[..k].iter().map(|&i| vectors[i].clone()).collect();

        let mut assignments = assign(vectors, &centers);
        let mut trace = Vec::new();
        for _ in 0..max_iter {
            update_centers(vectors, &assignments, &mut centers);
            trace.push(objective(vectors, &centers, &assignments));
            let next = assign(vectors, &centers);
            if next == assignments {
                break;
            }
            assignments = next;
        }
        let obj = objective(vectors, &centers, &assignments);
        if best.as_ref().map_or(true, |b| obj > b.objective) {
            best = Some(KmeansResult {
                centers,
                assignments,
                objective: obj,
                trace,
            });
        }
    }
    Ok(best.expect("at least one restart runs"))
}

/// Indices of the first occurrence of each bit-distinct vector.
fn distinct_indices(vectors: &[UnitVector]) -> Vec<usize> {
    let mut seen: Vec<Vec<u64>> = Vec::new();
    let mut out = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        let bits: Vec<u64> = v.as_slice().iter().map(|x| x.to_bits()).collect();
        if !seen.contains(&bits) {
            seen.push(bits);
            out.push(i);
        }
    }
    out
}

fn assign(vectors: &[UnitVector], centers: &[UnitVector]) -> Vec<usize> {
    vectors
        .iter()
        .map(|v| {
            let mut best = 0;
            let mut best_dot = centers[0].dot(v);
            for (j, c) in centers.iter().enumerate().skip(1) {
                let d = c.dot(v);
                if d > best_dot {
                    best = j;
                    best_dot = d;
                }
            }
            best
        })
        .collect()
}

fn update_centers(vectors: &[UnitVector], assignments: &[usize], centers: &mut [UnitVector]) {
    let dim = vectors[0].dim();
    for (j, center) in centers.iter_mut().enumerate() {
        let mut sum = vec![0.0; dim];
        let mut any = false;
        for (v, &a) in vectors.iter().zip(assignments) {
            if a == j {
                for (s, x) in sum.iter_mut().zip(v.as_slice()) {
                    *s += x;
                }
                any = true;
            }
        }
        // Empty clusters and degenerate (cancelling) sums keep their
        // previous center rather than producing NaNs.
        if any && norm(&sum) > 1e-12 {
            *center = UnitVector::normalize(sum).expect("norm checked above");
        }
    }
}

fn objective(vectors: &[UnitVector], centers: &[UnitVector], assignments: &[usize]) -> f64 {
    vectors
        .iter()
        .zip(assignments)
        .map(|(v, &a)| centers[a].dot(v))
        .sum()
}
