use statrs::distribution::{ContinuousCDF, Normal};

/// Average ranks of `|d|` over all entries, zeros included.
fn signed_ranks(diffs: &[f64]) -> (Vec<f64>, Vec<bool>, usize) {
    let n = diffs.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[idx[j + 1]].abs() == diffs[idx[i]].abs() {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    let positive = diffs.iter().map(|d| *d > 0.0).collect();
    let zeros = diffs.iter().filter(|d| **d == 0.0).count();
    (ranks, positive, zeros)
}

fn w_plus(ranks: &[f64], positive: &[bool]) -> f64 {
    ranks.iter().zip(positive).filter(|(_, p)| **p).map(|(r, _)| r).sum()
}

/// Two-sided exact p-value from the full sign-assignment distribution of the
/// nonzero differences, with Pratt's treatment of zeros.
pub fn wilcoxon_exact(diffs: &[f64]) -> f64 {
    let diffs: Vec<f64> = diffs.iter().copied().filter(|d| d.is_finite()).collect();
    if diffs.iter().all(|d| *d == 0.0) {
        return 1.0;
    }
    let (ranks, positive, _) = signed_ranks(&diffs);
    // Doubled ranks are integers even with averaged ties.
    let nonzero: Vec<usize> = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d != 0.0)
        .map(|(_, r)| (2.0 * r).round() as usize)
        .collect();
    let total: usize = nonzero.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    for &r in &nonzero {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let all: f64 = counts.iter().sum();
    let w = (2.0 * w_plus(&ranks, &positive)).round() as usize;
    let lower: f64 = counts[..=w].iter().sum::<f64>() / all;
    let upper: f64 = counts[w..].iter().sum::<f64>() / all;
    (2.0 * lower.min(upper)).min(1.0)
}

/// Two-sided normal approximation with continuity and tie corrections.
pub fn wilcoxon_normal(diffs: &[f64]) -> f64 {
    let diffs: Vec<f64> = diffs.iter().copied().filter(|d| d.is_finite()).collect();
    if diffs.iter().all(|d| *d == 0.0) {
        return 1.0;
    }
    let (ranks, positive, n0) = signed_ranks(&diffs);
    let n = diffs.len() as f64;
    let z0 = n0 as f64;
    let mean = (n * (n + 1.0) - z0 * (z0 + 1.0)) / 4.0;
    let mut var = (n * (n + 1.0) * (2.0 * n + 1.0) - z0 * (z0 + 1.0) * (2.0 * z0 + 1.0)) / 24.0;
    let mut sorted: Vec<f64> = diffs.iter().filter(|d| **d != 0.0).map(|d| d.abs()).collect();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        var -= (t * t * t - t) / 48.0;
        i = j + 1;
    }
    if var <= 0.0 {
        return 1.0;
    }
    let dev = (w_plus(&ranks, &positive) - mean).abs() - 0.5;
    if dev <= 0.0 {
        return 1.0;
    }
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * (1.0 - std_normal.cdf(dev / var.sqrt()))).min(1.0)
}

/// Exact for up to 12 pairs, normal approximation beyond.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> f64 {
    let n = diffs.iter().filter(|d| d.is_finite()).count();
    if n <= 12 {
        wilcoxon_exact(diffs)
    } else {
        wilcoxon_normal(diffs)
    }
}

/// Benjamini-Hochberg step-up rejections at level `q`.
pub fn fdr_bh(p_values: &[f64], q: f64) -> Vec<bool> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut k_max = 0;
    for (rank, &i) in order.iter().enumerate() {
        if p_values[i] <= (rank + 1) as f64 * q / m as f64 {
            k_max = rank + 1;
        }
    }
    let mut reject = vec![false; m];
    for &i in &order[..k_max] {
        reject[i] = true;
    }
    reject
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Brute-force oracle: enumerate every sign pattern of the nonzero ranks.
    fn enumerate_p(diffs: &[f64]) -> f64 {
        let (ranks, positive, _) = signed_ranks(diffs);
        let nz: Vec<f64> = diffs.iter().zip(&ranks).filter(|(d, _)| **d != 0.0).map(|(_, r)| *r).collect();
        let w = w_plus(&ranks, &positive);
        let (mut le, mut ge) = (0u32, 0u32);
        for mask in 0u32..(1 << nz.len()) {
            let s: f64 = nz.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, r)| r).sum();
            if s <= w + 1e-9 {
                le += 1;
            }
            if s >= w - 1e-9 {
                ge += 1;
            }
        }
        let total = (1u32 << nz.len()) as f64;
        (2.0 * (le.min(ge) as f64) / total).min(1.0)
    }

    #[test]
    fn three_positive() {
        assert_relative_eq!(wilcoxon_signed_rank(&[1.0, 2.0, 3.0]), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn symmetric_pairs() {
        assert_eq!(wilcoxon_signed_rank(&[1.0, -1.0, 2.0, -2.0]), 1.0);
        assert_eq!(wilcoxon_signed_rank(&[0.0, 0.0]), 1.0);
        assert_eq!(wilcoxon_signed_rank(&[]), 1.0);
    }

    #[test]
    fn twenty_positive_is_tiny() {
        let d: Vec<f64> = (1..=20).map(f64::from).collect();
        assert!(wilcoxon_signed_rank(&d) < 1e-4);
    }

    #[test]
    fn exact_matches_enumeration_with_ties_and_zeros() {
        let d = [0.0, 1.5, -1.5, 2.0, 3.0, -0.5, 3.0, 4.0, 0.0, -2.5];
        assert_relative_eq!(wilcoxon_exact(&d), enumerate_p(&d), epsilon = 1e-12);
    }

    #[test]
    fn bh_hand_example() {
        assert_eq!(fdr_bh(&[0.01, 0.02, 0.04], 0.05), vec![true, true, true]);
        assert_eq!(fdr_bh(&[0.9], 0.05), vec![false]);
        assert!(fdr_bh(&[], 0.05).is_empty());
        // Step-up: 0.04 passes at rank 3 even though 0.03 > 0.05/3.
        assert_eq!(fdr_bh(&[0.03, 0.04, 0.035], 0.05), vec![true, true, true]);
        assert_eq!(fdr_bh(&[0.03, 0.06, 0.2], 0.05), vec![false, false, false]);
    }
}
