//! Poisson-arrival tests on one-hour windows.
//!
//! Within a window of length L starting at w, arrival times are mapped to
//! U = (τ - w) / L. Under a Poisson process with constant rate on the
//! window the sorted U are uniform order statistics.
//!
//! * `ks_cu` pools the U values and compares them with U(0,1).
//! * `ks_log` uses the exponential-spacings transform of the U order
//!   statistics, X_j = -(n+1-j) ln((1-U_(j)) / (1-U_(j-1))) with U_(0)=0,
//!   which are i.i.d. Exp(1) under the null.
//! * `ks_lewis` applies Durbin's modification: spacings C_j = U_(j) - U_(j-1)
//!   for j = 1..n+1 (with U_(n+1) = 1) are sorted, rescaled as
//!   g_j = (n+2-j)(C_(j) - C_(j-1)), and the partial sums Z_i = g_1 + ... + g_i
//!   for i = 1..n are uniform order statistics under the null.

use serde::{Deserialize, Serialize};

use super::{TestResult, VerifyError};
use crate::stats::{exp1_cdf, ks_p_value, ks_statistic, uniform_cdf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalWindow {
    pub index: i64,
    pub start: f64,
    pub length: f64,
    /// Sorted arrival times inside `[start, start + length)`.
    pub times: Vec<f64>,
}

impl ArrivalWindow {
    /// Arrival times mapped to [0, 1).
    pub fn uniforms(&self) -> Vec<f64> {
        self.times.iter().map(|t| (t - self.start) / self.length).collect()
    }
}

/// Groups sorted arrival times into windows `[origin + k L, origin + (k+1) L)`.
/// Only windows containing at least one arrival are returned.
pub fn group_by_window(arrivals: &[f64], origin: f64, length: f64) -> Vec<ArrivalWindow> {
    let mut out: Vec<ArrivalWindow> = Vec::new();
    for &t in arrivals {
        let k = ((t - origin) / length).floor() as i64;
        match out.last_mut() {
            Some(w) if w.index == k => w.times.push(t),
            _ => out.push(ArrivalWindow {
                index: k,
                start: origin + k as f64 * length,
                length,
                times: vec![t],
            }),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedInterarrivals {
    pub values: Vec<f64>,
    /// Window index of the earlier arrival of each gap.
    pub windows: Vec<i64>,
}

impl NormalizedInterarrivals {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn by_window(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        let mut current = None;
        for (&v, &w) in self.values.iter().zip(&self.windows) {
            if current != Some(w) {
                out.push(Vec::new());
                current = Some(w);
            }
            out.last_mut().expect("pushed").push(v);
        }
        out
    }
}

/// Gaps between successive arrivals scaled by the arrival count of the
/// earlier arrival's window (the local rate per window length). Windows with
/// fewer than two arrivals contribute nothing; a gap reaching into the next
/// window keeps the earlier window's rate.
pub fn normalized_interarrivals(arrivals: &[f64], origin: f64, window: f64) -> NormalizedInterarrivals {
    let groups = group_by_window(arrivals, origin, window);
    let mut values = Vec::new();
    let mut windows = Vec::new();
    let mut pos = 0;
    for g in &groups {
        let count = g.times.len();
        let end = pos + count;
        if count >= 2 {
            for i in pos..end.min(arrivals.len() - 1) {
                let gap = arrivals[i + 1] - arrivals[i];
                if gap > 0.0 {
                    values.push(gap * count as f64 / window);
                    windows.push(g.index);
                }
            }
        }
        pos = end;
    }
    NormalizedInterarrivals { values, windows }
}

fn one_sample<F: Fn(f64) -> f64 + Copy>(
    per_window: &[Vec<f64>],
    skipped: usize,
    cdf: F,
) -> TestResult {
    let pooled: Vec<f64> = per_window.iter().flatten().copied().collect();
    let d = ks_statistic(&pooled, cdf);
    let window_p: Vec<f64> = per_window
        .iter()
        .filter(|w| !w.is_empty())
        .map(|w| ks_p_value(w.len(), ks_statistic(w, cdf)))
        .collect();
    TestResult {
        statistic: d,
        n: pooled.len(),
        dof: None,
        p_value: ks_p_value(pooled.len(), d),
        windows_used: window_p.len(),
        windows_skipped: skipped,
        mean_window_p: (!window_p.is_empty())
            .then(|| window_p.iter().sum::<f64>() / window_p.len() as f64),
        window_p_values: window_p,
    }
}

/// KS test of normalized inter-arrival times against Exp(1).
pub fn ks_standard(samples: &[f64]) -> TestResult {
    let d = ks_statistic(samples, exp1_cdf);
    TestResult::single(d, samples.len(), ks_p_value(samples.len(), d))
}

/// `ks_standard` pooled over windows, with per-window p-values attached.
pub fn ks_standard_windows(values: &NormalizedInterarrivals) -> TestResult {
    one_sample(&values.by_window(), 0, exp1_cdf)
}

/// Conditional-uniform KS test.
pub fn ks_cu(windows: &[ArrivalWindow]) -> TestResult {
    let per: Vec<Vec<f64>> = windows.iter().map(ArrivalWindow::uniforms).collect();
    let skipped = per.iter().filter(|w| w.is_empty()).count();
    one_sample(&per, skipped, uniform_cdf)
}

/// Exponential-spacings transform of sorted uniforms.
pub fn log_transform(uniforms: &[f64]) -> Vec<f64> {
    let mut u = uniforms.to_vec();
    u.sort_by(f64::total_cmp);
    let n = u.len();
    let mut prev = 0.0f64;
    u.iter()
        .enumerate()
        .map(|(i, &x)| {
            let j = i + 1;
            let v = -((n + 1 - j) as f64) * ((1.0 - x).ln() - (1.0 - prev).ln());
            prev = x;
            v
        })
        .collect()
}

/// Durbin's rescaled sorted spacings, returned as n cumulative sums.
pub fn lewis_transform(uniforms: &[f64]) -> Vec<f64> {
    let mut u = uniforms.to_vec();
    u.sort_by(f64::total_cmp);
    let n = u.len();
    let mut c: Vec<f64> = Vec::with_capacity(n + 1);
    let mut prev = 0.0;
    for &x in u.iter().chain(std::iter::once(&1.0)) {
        c.push(x - prev);
        prev = x;
    }
    c.sort_by(f64::total_cmp);
    let mut z = Vec::with_capacity(n);
    let (mut acc, mut prev) = (0.0, 0.0);
    for (i, &ci) in c.iter().take(n).enumerate() {
        let j = i + 1;
        acc += (n + 2 - j) as f64 * (ci - prev);
        prev = ci;
        z.push(acc.min(1.0));
    }
    z
}

fn check_windows(windows: &[ArrivalWindow]) -> Result<(), VerifyError> {
    if let Some(w) = windows.iter().find(|w| w.times.is_empty()) {
        return Err(VerifyError::WindowTooSmall {
            window: w.index.max(0) as usize,
            n: 0,
        });
    }
    Ok(())
}

/// Log KS test: exponential spacings per window, pooled, against Exp(1).
pub fn ks_log(windows: &[ArrivalWindow]) -> Result<TestResult, VerifyError> {
    check_windows(windows)?;
    let per: Vec<Vec<f64>> = windows.iter().map(|w| log_transform(&w.uniforms())).collect();
    Ok(one_sample(&per, 0, exp1_cdf))
}

/// Lewis KS test: Durbin-modified uniforms per window, pooled, against U(0,1).
pub fn ks_lewis(windows: &[ArrivalWindow]) -> Result<TestResult, VerifyError> {
    check_windows(windows)?;
    let per: Vec<Vec<f64>> = windows.iter().map(|w| lewis_transform(&w.uniforms())).collect();
    Ok(one_sample(&per, 0, uniform_cdf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp};

    #[test]
    fn equally_spaced_normalize_to_one() {
        let arrivals: Vec<f64> = (0..40).map(|i| i as f64 * 360.0).collect();
        let v = normalized_interarrivals(&arrivals, 0.0, 3600.0);
        // the last arrival has no successor
        assert_eq!(v.len(), 39);
        assert!(v.values.iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn singleton_windows_contribute_nothing() {
        let v = normalized_interarrivals(&[10.0, 4000.0, 8000.0, 8100.0], 0.0, 3600.0);
        assert_eq!(v.values, vec![100.0 * 2.0 / 3600.0]);
        assert_eq!(v.windows, vec![2]);
    }

    #[test]
    fn poisson_mean_near_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let gap = Exp::new(50.0 / 3600.0).unwrap();
        let mut t = 0.0;
        let mut arrivals = Vec::new();
        while arrivals.len() < 10_000 {
            t += gap.sample(&mut rng);
            arrivals.push(t);
        }
        let v = normalized_interarrivals(&arrivals, 0.0, 3600.0);
        let m = v.values.iter().sum::<f64>() / v.len() as f64;
        assert!((0.93..=1.07).contains(&m), "{m}");
    }

    #[test]
    fn ks_standard_single_point() {
        let r = ks_standard(&[2f64.ln()]);
        assert_relative_eq!(r.statistic, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn ks_standard_exact_quantiles() {
        let n = 200;
        let xs: Vec<f64> = (1..=n)
            .map(|i| -(1.0 - (i as f64 - 0.5) / n as f64).ln())
            .collect();
        assert_relative_eq!(ks_standard(&xs).statistic, 0.5 / n as f64, epsilon = 1e-12);
    }

    #[test]
    fn cu_midpoints() {
        let windows: Vec<ArrivalWindow> = (0..10)
            .map(|k| ArrivalWindow {
                index: k,
                start: k as f64 * 3600.0,
                length: 3600.0,
                times: vec![k as f64 * 3600.0 + 1800.0],
            })
            .collect();
        let r = ks_cu(&windows);
        assert_relative_eq!(r.statistic, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn log_transform_matches_exponential_spacings() {
        // with n = 1 the transform is -ln(1 - U)
        assert_relative_eq!(log_transform(&[0.5])[0], 2f64.ln(), epsilon = 1e-12);
        let x = log_transform(&[0.2, 0.6]);
        assert_relative_eq!(x[0], -2.0 * 0.8f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(x[1], -(0.4f64.ln() - 0.8f64.ln()), epsilon = 1e-12);
    }

    #[test]
    fn lewis_transform_golden() {
        // U = (0.1, 0.5): C = (0.1, 0.4, 0.5), sorted; g = 3*0.1, 2*0.3
        let z = lewis_transform(&[0.5, 0.1]);
        assert_eq!(z.len(), 2);
        assert_relative_eq!(z[0], 0.3, epsilon = 1e-12);
        assert_relative_eq!(z[1], 0.9, epsilon = 1e-12);
        // single arrival: Z = 2 min(U, 1 - U)
        assert_relative_eq!(lewis_transform(&[0.8])[0], 0.4, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_single_window() {
        let w = vec![ArrivalWindow {
            index: 0,
            start: 0.0,
            length: 1.0,
            times: vec![0.3],
        }];
        let r = ks_log(&w).unwrap();
        assert_eq!(r.n, 1);
        assert!((0.0..=1.0).contains(&r.p_value));
        let r = ks_lewis(&w).unwrap();
        assert_eq!(r.n, 1);
    }

    #[test]
    fn empty_window_rejected() {
        let w = vec![ArrivalWindow {
            index: 3,
            start: 0.0,
            length: 1.0,
            times: vec![],
        }];
        assert!(matches!(ks_log(&w), Err(VerifyError::WindowTooSmall { .. })));
    }

    #[test]
    fn equally_spaced_rejected_by_log() {
        let n = 150;
        let w = vec![ArrivalWindow {
            index: 0,
            start: 0.0,
            length: 1.0,
            times: (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect(),
        }];
        assert!(ks_log(&w).unwrap().p_value < 0.01);
    }

    #[test]
    fn transforms_preserve_null() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let windows: Vec<ArrivalWindow> = (0..200)
            .map(|k| {
                let mut times: Vec<f64> = (0..30).map(|_| k as f64 + rng.random::<f64>()).collect();
                times.sort_by(f64::total_cmp);
                ArrivalWindow {
                    index: k,
                    start: k as f64,
                    length: 1.0,
                    times,
                }
            })
            .collect();
        assert!(ks_cu(&windows).p_value > 0.001);
        assert!(ks_log(&windows).unwrap().p_value > 0.001);
        assert!(ks_lewis(&windows).unwrap().p_value > 0.001);
    }
}
