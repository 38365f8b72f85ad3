//! Ranking metrics for next-item prediction with a single relevant item.

/// 1.0 if `target` appears in the first `k` entries of `ranked`, else 0.0.
pub fn recall_at_k(ranked: &[usize], target: usize, k: usize) -> f64 {
    match rank_of(ranked, target) {
        Some(rank) if rank <= k => 1.0,
        _ => 0.0,
    }
}

/// 1/log2(rank+1) if `target` sits at rank ∈ [1, k], else 0.0. With one
/// relevant item the ideal DCG is 1, so no further normalization applies.
pub fn ndcg_at_k(ranked: &[usize], target: usize, k: usize) -> f64 {
    match rank_of(ranked, target) {
        Some(rank) if rank <= k => 1.0 / ((rank as f64) + 1.0).log2(),
        _ => 0.0,
    }
}

/// 1-based position of `target` in `ranked`.
fn rank_of(ranked: &[usize], target: usize) -> Option<usize> {
    ranked.iter().position(|&i| i == target).map(|p| p + 1)
}

/// Mean of a metric over examples; 0.0 for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}
