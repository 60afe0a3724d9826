//! Convergence and Monte Carlo error diagnostics.

use statrs::distribution::{ContinuousCDF, Normal};

/// Classic split-chain potential scale reduction. Constant input gives 1.
pub fn split_rhat(chains: &[&[f64]]) -> f64 {
    let halves: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| {
            let h = c.len() / 2;
            [&c[..h], &c[c.len() - h..]]
        })
        .filter(|h| h.len() >= 2)
        .collect();
    if halves.len() < 2 {
        return f64::NAN;
    }
    let n = halves.iter().map(|h| h.len()).min().unwrap() as f64;
    let means: Vec<f64> = halves.iter().map(|h| h.iter().sum::<f64>() / h.len() as f64).collect();
    let grand = means.iter().sum::<f64>() / means.len() as f64;
    let b = n * means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
    let w = halves
        .iter()
        .zip(&means)
        .map(|(h, m)| h.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (h.len() - 1) as f64)
        .sum::<f64>()
        / halves.len() as f64;
    if w <= 0.0 {
        return if b <= 0.0 { 1.0 } else { f64::INFINITY };
    }
    (((n - 1.0) / n * w + b / n) / w).sqrt()
}

/// Rank-normalized split-R̂: the larger of the bulk value and the value on
/// the folded draws `|x - median|`. Robust to heavy tails.
pub fn rank_rhat(chains: &[&[f64]]) -> f64 {
    let bulk = split_rhat_owned(&rank_normalize(chains));
    let pooled: Vec<f64> = chains.iter().flat_map(|c| c.iter().copied()).collect();
    let med = median(&pooled);
    let folded: Vec<Vec<f64>> = chains
        .iter()
        .map(|c| c.iter().map(|x| (x - med).abs()).collect())
        .collect();
    let refs: Vec<&[f64]> = folded.iter().map(|v| v.as_slice()).collect();
    let tail = split_rhat_owned(&rank_normalize(&refs));
    bulk.max(tail)
}

fn split_rhat_owned(v: &[Vec<f64>]) -> f64 {
    let refs: Vec<&[f64]> = v.iter().map(|c| c.as_slice()).collect();
    split_rhat(&refs)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Normal scores of pooled ranks, ties averaged.
fn rank_normalize(chains: &[&[f64]]) -> Vec<Vec<f64>> {
    let pooled: Vec<f64> = chains.iter().flat_map(|c| c.iter().copied()).collect();
    let s = pooled.len();
    let mut idx: Vec<usize> = (0..s).collect();
    idx.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut rank = vec![0.0; s];
    let mut i = 0;
    while i < s {
        let mut j = i;
        while j + 1 < s && pooled[idx[j + 1]] == pooled[idx[i]] {
            j += 1;
        }
        let r = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            rank[k] = r;
        }
        i = j + 1;
    }
    let normal = Normal::standard();
    let z: Vec<f64> = rank
        .iter()
        .map(|&r| normal.inverse_cdf((r - 0.375) / (s as f64 + 0.25)))
        .collect();
    let mut out = Vec::with_capacity(chains.len());
    let mut off = 0;
    for c in chains {
        out.push(z[off..off + c.len()].to_vec());
        off += c.len();
    }
    out
}

/// Standard error of the pooled mean by non-overlapping batch means.
pub fn batch_means_se(chains: &[&[f64]], batches_per_chain: usize) -> f64 {
    let mut means = Vec::new();
    for c in chains {
        let size = c.len() / batches_per_chain.max(1);
        if size == 0 {
            continue;
        }
        for b in c.chunks_exact(size).take(batches_per_chain) {
            means.push(b.iter().sum::<f64>() / size as f64);
        }
    }
    let k = means.len();
    if k < 2 {
        return f64::NAN;
    }
    let grand = means.iter().sum::<f64>() / k as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (k - 1) as f64;
    (var / k as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn normals(seed: u64, n: usize, shift: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| crate::special::std_normal(&mut rng) + shift).collect()
    }

    #[test]
    fn iid_chains_have_rhat_near_one() {
        let a = normals(1, 4000, 0.0);
        let b = normals(2, 4000, 0.0);
        assert!((split_rhat(&[&a, &b]) - 1.0).abs() < 0.01);
        assert!((rank_rhat(&[&a, &b]) - 1.0).abs() < 0.01);
    }

    #[test]
    fn shifted_chains_are_flagged() {
        let a = normals(3, 2000, 0.0);
        let b = normals(4, 2000, 2.0);
        assert!(rank_rhat(&[&a, &b]) > 1.1);
    }

    #[test]
    fn constant_chains() {
        let a = vec![1.0; 100];
        assert_eq!(split_rhat(&[&a, &a]), 1.0);
        assert_eq!(rank_rhat(&[&a, &a]), 1.0);
    }

    #[test]
    fn batch_se_scales_like_iid() {
        let a = normals(5, 10_000, 0.0);
        let se = batch_means_se(&[&a], 20);
        assert!((se - 0.01).abs() < 0.005, "{se}");
    }
}
