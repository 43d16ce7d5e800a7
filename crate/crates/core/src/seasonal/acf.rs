use super::SeasonalError;

/// Sample autocorrelation at lags `0..=max_lag` (biased, divisor n).
pub fn acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>, SeasonalError> {
    if x.len() <= max_lag {
        return Err(SeasonalError::InsufficientData(format!(
            "series of length {} for max lag {max_lag}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let c0 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if c0 == 0.0 {
        return Err(SeasonalError::DegenerateSeries);
    }
    Ok((0..=max_lag)
        .map(|k| {
            if k == 0 {
                return 1.0;
            }
            x.iter()
                .zip(&x[k..])
                .map(|(a, b)| (a - mean) * (b - mean))
                .sum::<f64>()
                / n
                / c0
        })
        .collect())
}

/// Partial autocorrelation at lags `1..=max_lag` by Durbin–Levinson.
pub fn pacf_from_acf(rho: &[f64]) -> Vec<f64> {
    let max_lag = rho.len() - 1;
    let mut out = Vec::with_capacity(max_lag);
    let mut phi: Vec<f64> = Vec::new();
    let mut v = 1.0;
    for k in 1..=max_lag {
        let num = rho[k] - phi.iter().enumerate().map(|(j, p)| p * rho[k - 1 - j]).sum::<f64>();
        let a = if v > 0.0 { num / v } else { 0.0 };
        let prev = phi.clone();
        phi.push(a);
        for j in 0..k - 1 {
            phi[j] = prev[j] - a * prev[k - 2 - j];
        }
        v *= 1.0 - a * a;
        out.push(a.clamp(-1.0, 1.0));
    }
    out
}

/// ACF at lags `0..=max_lag` and PACF at lags `1..=max_lag`.
pub fn acf_pacf(x: &[f64], max_lag: usize) -> Result<(Vec<f64>, Vec<f64>), SeasonalError> {
    let rho = acf(x, max_lag)?;
    let pacf = pacf_from_acf(&rho);
    Ok((rho, pacf))
}
