use serde::{Deserialize, Serialize};

use super::{NormalizedInterarrivals, VerifyError};
use crate::stats::{exp1_cdf, uniform_cdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    Exp1,
    Uniform,
}

impl Reference {
    pub fn cdf(self, x: f64) -> f64 {
        match self {
            Reference::Exp1 => exp1_cdf(x),
            Reference::Uniform => uniform_cdf(x),
        }
    }

    pub fn quantile(self, p: f64) -> f64 {
        match self {
            Reference::Exp1 => -(-p).ln_1p(),
            Reference::Uniform => p,
        }
    }
}

/// Points for P-P `(F(x_(i)), i/n)` and Q-Q `(F⁻¹((i-0.5)/n), x_(i))` plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpQq {
    pub pp: Vec<(f64, f64)>,
    pub qq: Vec<(f64, f64)>,
}

pub fn pp_qq_data(samples: &[f64], reference: Reference) -> Result<PpQq, VerifyError> {
    if samples.is_empty() {
        return Err(VerifyError::InsufficientData("no samples".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let pp = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (reference.cdf(x), (i + 1) as f64 / n))
        .collect();
    let qq = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (reference.quantile((i as f64 + 0.5) / n), x))
        .collect();
    Ok(PpQq { pp, qq })
}

/// Empirical distribution of Δτ̄_k given that Δτ̄_{k-1} fell in one lag bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalHistogram {
    pub lag_lo: f64,
    pub lag_hi: f64,
    pub count: usize,
    /// Bin edges shared by all histograms; the last bin is open above.
    pub edges: Vec<f64>,
    /// Probability per bin; `edges.len()` entries.
    pub mass: Vec<f64>,
}

/// Splits successive pairs (Δτ̄_{k-1}, Δτ̄_k) within the same window into
/// `lag_bins` equal-count groups by the lagged value and histograms the
/// current value of each group over `edges`.
pub fn conditional_interarrival_histogram(
    values: &NormalizedInterarrivals,
    lag_bins: usize,
    edges: &[f64],
) -> Result<Vec<ConditionalHistogram>, VerifyError> {
    if lag_bins == 0 || edges.is_empty() || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(VerifyError::InvalidInput(
            "need lag_bins >= 1 and increasing edges".into(),
        ));
    }
    let mut pairs: Vec<(f64, f64)> = values
        .values
        .windows(2)
        .zip(values.windows.windows(2))
        .filter(|(_, w)| w[0] == w[1])
        .map(|(v, _)| (v[0], v[1]))
        .collect();
    if pairs.is_empty() {
        return Err(VerifyError::InsufficientData("no successive pairs".into()));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pairs.len();
    let mut out = Vec::with_capacity(lag_bins);
    for b in 0..lag_bins {
        let (lo, hi) = (b * n / lag_bins, (b + 1) * n / lag_bins);
        if lo == hi {
            continue;
        }
        let group = &pairs[lo..hi];
        let mut mass = vec![0.0; edges.len()];
        for &(_, x) in group {
            let k = edges.partition_point(|&e| e <= x).saturating_sub(1);
            mass[k] += 1.0;
        }
        mass.iter_mut().for_each(|m| *m /= group.len() as f64);
        out.push(ConditionalHistogram {
            lag_lo: group[0].0,
            lag_hi: group[group.len() - 1].0,
            count: group.len(),
            edges: edges.to_vec(),
            mass,
        });
    }
    Ok(out)
}

/// Total-variation distance between two histograms over the same bins.
pub fn total_variation(a: &ConditionalHistogram, b: &ConditionalHistogram) -> f64 {
    0.5 * a.mass.iter().zip(&b.mass).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp};

    fn edges() -> Vec<f64> {
        (0..12).map(|i| i as f64 * 0.25).collect()
    }

    #[test]
    fn single_point() {
        let r = pp_qq_data(&[2f64.ln()], Reference::Exp1).unwrap();
        assert_relative_eq!(r.pp[0].0, 0.5, epsilon = 1e-12);
        assert_eq!(r.pp[0].1, 1.0);
    }

    #[test]
    fn quantile_samples_on_diagonal() {
        let n = 100;
        let xs: Vec<f64> = (0..n).map(|i| -(1.0 - (i as f64 + 0.5) / n as f64).ln()).collect();
        let r = pp_qq_data(&xs, Reference::Exp1).unwrap();
        for (f, p) in &r.pp {
            assert!((f - p).abs() <= 0.5 / n as f64 + 1e-12);
        }
        for (q, x) in &r.qq {
            assert_relative_eq!(q, x, epsilon = 1e-9);
        }
    }

    #[test]
    fn iid_histograms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let e = Exp::new(1.0).unwrap();
        let values: Vec<f64> = (0..100_000).map(|_| e.sample(&mut rng)).collect();
        let v = NormalizedInterarrivals {
            windows: vec![0; values.len()],
            values,
        };
        let h = conditional_interarrival_histogram(&v, 3, &edges()).unwrap();
        for a in &h {
            for b in &h {
                assert!(total_variation(a, b) < 0.05);
            }
        }
    }

    #[test]
    fn markov_input_differs() {
        // alternate regimes: small gaps follow small gaps
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let e = Exp::new(1.0).unwrap();
        let mut values = Vec::new();
        let mut scale: f64 = 0.3;
        for i in 0..20_000 {
            if i % 20 == 0 {
                scale = if scale < 1.0 { 1.7 } else { 0.3 };
            }
            values.push(scale * e.sample(&mut rng));
        }
        let v = NormalizedInterarrivals {
            windows: vec![0; values.len()],
            values,
        };
        let h = conditional_interarrival_histogram(&v, 3, &edges()).unwrap();
        assert!(total_variation(&h[0], &h[2]) > 0.1);
    }

    #[test]
    fn constant_input_spikes() {
        let v = NormalizedInterarrivals {
            values: vec![1.0; 50],
            windows: vec![0; 50],
        };
        for h in conditional_interarrival_histogram(&v, 2, &edges()).unwrap() {
            assert_eq!(h.mass.iter().filter(|&&m| m > 0.0).count(), 1);
        }
    }
}
