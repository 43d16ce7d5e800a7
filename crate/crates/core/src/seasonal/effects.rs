use serde::{Deserialize, Serialize};

use super::{calendar_cell, cell_index, HourlySeries, SeasonalError, WEEK_HOURS};

/// Weekday × hour cell means m_{j,k}, with the equivalent decomposition
/// m_{j,k} = α_j + β_k + γ_{j,k}. Here α_j is the weekday mean (it carries
/// the overall level), Σ_k β_k = 0, and γ sums to zero along both axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedEffects {
    /// 168 values indexed by `weekday * 24 + hour`, weekday 0 = Monday.
    pub cell_means: Vec<f64>,
    pub cell_counts: Vec<usize>,
    /// Cells without observations, filled from the additive α + β fit.
    pub imputed: Vec<(usize, usize)>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub utc_offset_hours: f64,
}

impl FixedEffects {
    pub fn mean(&self, weekday: usize, hour: usize) -> f64 {
        self.cell_means[cell_index(weekday, hour)]
    }

    /// Cell mean for the hour containing `t`.
    pub fn mean_at(&self, t: f64) -> f64 {
        let (d, h) = calendar_cell(t, self.utc_offset_hours);
        self.mean(d, h)
    }

    /// Fitted values for every hour of `series`.
    pub fn fitted(&self, series: &HourlySeries) -> Vec<f64> {
        (0..series.len())
            .map(|k| {
                let (d, h) = series.cell(k);
                self.mean(d, h)
            })
            .collect()
    }
}

/// Least-squares fit of the saturated weekday × hour model, i.e. the mean of
/// each of the 168 cells.
pub fn fit_fixed_effects(series: &HourlySeries) -> Result<FixedEffects, SeasonalError> {
    let mut sums = vec![0.0; WEEK_HOURS];
    let mut counts = vec![0usize; WEEK_HOURS];
    for (k, &v) in series.values.iter().enumerate() {
        let (d, h) = series.cell(k);
        sums[cell_index(d, h)] += v;
        counts[cell_index(d, h)] += 1;
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(SeasonalError::InsufficientData("empty series".into()));
    }
    let mut means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
        .collect();

    let mut imputed = Vec::new();
    if counts.iter().any(|&c| c == 0) {
        let (a, b) = additive_fit(&means);
        for d in 0..7 {
            for h in 0..24 {
                if counts[cell_index(d, h)] == 0 {
                    means[cell_index(d, h)] = a[d] + b[h];
                    imputed.push((d, h));
                }
            }
        }
    }

    let alpha: Vec<f64> = (0..7)
        .map(|d| (0..24).map(|h| means[cell_index(d, h)]).sum::<f64>() / 24.0)
        .collect();
    let grand = alpha.iter().sum::<f64>() / 7.0;
    let beta: Vec<f64> = (0..24)
        .map(|h| (0..7).map(|d| means[cell_index(d, h)]).sum::<f64>() / 7.0 - grand)
        .collect();
    let gamma = (0..WEEK_HOURS)
        .map(|c| means[c] - alpha[c / 24] - beta[c % 24])
        .collect();
    Ok(FixedEffects {
        cell_means: means,
        cell_counts: counts,
        imputed,
        alpha,
        beta,
        gamma,
        utc_offset_hours: series.utc_offset_hours,
    })
}

// Backfitting of m_{d,h} ≈ a_d + b_h over the observed cells.
fn additive_fit(means: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut a = vec![0.0; 7];
    let mut b = vec![0.0; 24];
    for _ in 0..500 {
        let mut change: f64 = 0.0;
        for d in 0..7 {
            let obs: Vec<f64> = (0..24)
                .filter_map(|h| {
                    let m = means[cell_index(d, h)];
                    (!m.is_nan()).then(|| m - b[h])
                })
                .collect();
            let new = if obs.is_empty() { 0.0 } else { obs.iter().sum::<f64>() / obs.len() as f64 };
            change = change.max((new - a[d]).abs());
            a[d] = new;
        }
        for h in 0..24 {
            let obs: Vec<f64> = (0..7)
                .filter_map(|d| {
                    let m = means[cell_index(d, h)];
                    (!m.is_nan()).then(|| m - a[d])
                })
                .collect();
            let new = if obs.is_empty() { 0.0 } else { obs.iter().sum::<f64>() / obs.len() as f64 };
            change = change.max((new - b[h]).abs());
            b[h] = new;
        }
        if change < 1e-12 {
            break;
        }
    }
    (a, b)
}

/// X(t) = series(t) - m_{d(t), h(t)}.
pub fn residual_series(series: &HourlySeries, effects: &FixedEffects) -> HourlySeries {
    let fitted = effects.fitted(series);
    HourlySeries::new(
        series.origin,
        series.utc_offset_hours,
        series.values.iter().zip(fitted).map(|(v, m)| v - m).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::queue::HOUR;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    // Monday 1970-01-05 00:00 UTC
    const MONDAY: f64 = 4.0 * 86400.0;

    #[test]
    fn constant_series() {
        let s = HourlySeries::new(MONDAY, 0.0, vec![3.5; 2 * WEEK_HOURS]);
        let fe = fit_fixed_effects(&s).unwrap();
        assert!(fe.cell_means.iter().all(|&m| m == 3.5));
        assert!(residual_series(&s, &fe).values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn recovers_cells_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let values: Vec<f64> = (0..20 * WEEK_HOURS)
            .map(|k| {
                let (d, h) = ((k / 24) % 7, k % 24);
                (d + h) as f64 + noise.sample(&mut rng)
            })
            .collect();
        let s = HourlySeries::new(MONDAY, 0.0, values);
        let fe = fit_fixed_effects(&s).unwrap();
        for d in 0..7 {
            for h in 0..24 {
                assert!((fe.mean(d, h) - (d + h) as f64).abs() < 0.1);
                let c = cell_index(d, h);
                let rebuilt = fe.alpha[d] + fe.beta[h] + fe.gamma[c];
                assert!((rebuilt - fe.cell_means[c]).abs() < 1e-12);
            }
        }
        assert!(fe.beta.iter().sum::<f64>().abs() < 1e-9);
        for d in 0..7 {
            assert!((0..24).map(|h| fe.gamma[cell_index(d, h)]).sum::<f64>().abs() < 1e-9);
        }
        // per-cell residual means vanish and series = fitted + residual
        let x = residual_series(&s, &fe);
        let mut cell_sum = vec![0.0; WEEK_HOURS];
        for (k, v) in x.values.iter().enumerate() {
            let (d, h) = s.cell(k);
            cell_sum[cell_index(d, h)] += v;
        }
        assert!(cell_sum.iter().all(|v| v.abs() < 1e-9));
        let fitted = fe.fitted(&s);
        for k in 0..s.len() {
            assert!((fitted[k] + x.values[k] - s.values[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_cells_imputed_additively() {
        // three days only: Monday..Wednesday
        let values: Vec<f64> = (0..72).map(|k| (k / 24) as f64 * 10.0 + (k % 24) as f64).collect();
        let s = HourlySeries::new(MONDAY, 0.0, values);
        let fe = fit_fixed_effects(&s).unwrap();
        assert_eq!(fe.imputed.len(), 4 * 24);
        assert!((fe.mean(1, 5) - 15.0).abs() < 1e-9);
        assert!(fe.mean_at(MONDAY + 6.0 * 86400.0 + 3.0 * HOUR).is_finite());
    }
}
