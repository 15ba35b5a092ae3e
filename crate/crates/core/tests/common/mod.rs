//! Reference implementations used as test oracles. They share no code with
//! the library: beta CDFs come from binomial sums, quantiles and crossing
//! levels from plain bisection.

#![allow(dead_code)]

/// `P(Bin(n, x) >= k)`, which equals `I_x(k, n + 1 - k)`.
pub fn binom_upper(k: usize, n: usize, x: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let mut c = 1.0;
    let mut total = 0.0;
    for j in 0..=n {
        if j > 0 {
            c = c * (n + 1 - j) as f64 / j as f64;
        }
        if j >= k {
            total += c * x.powi(j as i32) * (1.0 - x).powi((n - j) as i32);
        }
    }
    total
}

/// `p`-quantile of Beta(k, n + 1 - k) with the conventions `k = 0 -> 0`
/// and `k = n + 1 -> 1`.
pub fn beta_q(p: f64, k: usize, n: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if k > n {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if binom_upper(k, n, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Do the two bands fail to overlap at counts `(kx, ky)` at level `a`?
pub fn separated(a: f64, kx: usize, nx: usize, ky: usize, ny: usize) -> bool {
    let lx = beta_q(a, kx, nx);
    let ux = beta_q(1.0 - a, kx + 1, nx);
    let ly = beta_q(a, ky, ny);
    let uy = beta_q(1.0 - a, ky + 1, ny);
    lx > uy || ly > ux
}

/// Smallest level at which the bands separate, by bisection on the level.
pub fn oracle_threshold(kx: usize, nx: usize, ky: usize, ny: usize) -> Option<f64> {
    let top = 0.5 - 1e-12;
    if !separated(top, kx, nx, ky, ny) {
        return None;
    }
    let (mut lo, mut hi) = (0.0f64, top);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if separated(mid, kx, nx, ky, ny) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Every arrangement of `nx` X labels (`false`) and `ny` Y labels (`true`).
pub fn arrangements(nx: usize, ny: usize) -> Vec<Vec<bool>> {
    let n = nx + ny;
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == ny)
        .map(|m| (0..n).map(|i| m >> i & 1 == 1).collect())
        .collect()
}

/// Global statistic of an arrangement from oracle thresholds (0.5 when the
/// bands never separate).
pub fn oracle_arrangement_stat(labels: &[bool], nx: usize, ny: usize) -> f64 {
    let (mut kx, mut ky) = (0, 0);
    let mut best = 0.5f64;
    for &is_y in labels {
        if is_y {
            ky += 1;
        } else {
            kx += 1;
        }
        if let Some(t) = oracle_threshold(kx, nx, ky, ny) {
            best = best.min(t);
        }
    }
    best
}

/// The calibration rule on a finite null distribution: the largest value
/// `v < 0.5` with `#{T <= v} <= floor(alpha * B)`. Values closer than `tol`
/// are treated as one.
pub fn oracle_alpha_tilde(stats: &[f64], alpha: f64, tol: f64) -> Option<(f64, f64)> {
    let mut s = stats.to_vec();
    s.sort_by(f64::total_cmp);
    let b = s.len();
    let m = (alpha * b as f64 + 1e-9).floor() as usize;
    let mut best = None;
    let mut i = 0;
    while i < b {
        let mut j = i;
        while j + 1 < b && s[j + 1] - s[i] <= tol {
            j += 1;
        }
        if s[i] < 0.5 - tol && j < m {
            best = Some((s[i], (j + 1) as f64 / b as f64));
        }
        i = j + 1;
    }
    best
}

/// Three-sigma Monte Carlo half-width for a proportion.
pub fn three_se(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}
