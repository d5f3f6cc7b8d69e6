//! Benjamini-Hochberg step-up procedure.

/// Indices rejected by the BH step-up rule at `level`, in ascending index
/// order. Finds the largest rank `k` with `p_(k) <= k/m * level` and rejects
/// every hypothesis whose p-value is at most `p_(k)`.
pub fn bh_fdr(p_values: &[f64], level: f64) -> Vec<usize> {
    let m = p_values.len();
    if m == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
    let mut cutoff = None;
    for (rank0, &idx) in order.iter().enumerate() {
        let bound = (rank0 + 1) as f64 / m as f64 * level;
        if p_values[idx] <= bound {
            cutoff = Some(rank0);
        }
    }
    let Some(k) = cutoff else {
        return Vec::new();
    };
    let mut out: Vec<usize> = order[..=k].to_vec();
    out.sort_unstable();
    out
}
