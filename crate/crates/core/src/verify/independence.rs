use serde::{Deserialize, Serialize};

use super::{TestResult, VerifyError};
use crate::eventlog::StayRecord;
use crate::stats::chi_square_sf;

/// Minimum expected count per cell for a window to be tested.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PearsonResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub min_expected: f64,
}

/// Pearson's chi-square test of independence on a contingency table.
pub fn pearson_independence(table: &[Vec<f64>]) -> Result<PearsonResult, VerifyError> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 || table.iter().any(|r| r.len() != cols) {
        return Err(VerifyError::InvalidInput(
            "table must be rectangular and at least 2x2".into(),
        ));
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let total: f64 = row_sums.iter().sum();
    if total <= 0.0 {
        return Err(VerifyError::InsufficientData("empty table".into()));
    }
    let mut stat = 0.0;
    let mut min_expected = f64::INFINITY;
    for (i, row) in table.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let e = row_sums[i] * col_sums[j] / total;
            min_expected = min_expected.min(e);
            if e > 0.0 {
                stat += (obs - e).powi(2) / e;
            }
        }
    }
    let dof = (rows - 1) * (cols - 1);
    Ok(PearsonResult {
        statistic: stat,
        dof,
        p_value: chi_square_sf(stat, dof as f64),
        min_expected,
    })
}

/// Service times grouped by arrival window, in arrival order.
pub fn service_pairs_by_window(stays: &[StayRecord], origin: f64, window: f64) -> Vec<Vec<f64>> {
    let mut groups: Vec<Vec<f64>> = Vec::new();
    let mut current: Option<i64> = None;
    let mut sorted: Vec<&StayRecord> = stays.iter().collect();
    sorted.sort_by(|a, b| a.arrival_time.total_cmp(&b.arrival_time));
    for s in sorted {
        let k = ((s.arrival_time - origin) / window).floor() as i64;
        if current != Some(k) {
            groups.push(Vec::new());
            current = Some(k);
        }
        groups.last_mut().expect("pushed").push(s.service_time);
    }
    groups
}

// Equal-mass bins by rank; invariant under monotone transforms.
fn rank_bins(xs: &[f64], bins: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0; xs.len()];
    for (rank, &i) in idx.iter().enumerate() {
        out[i] = rank * bins / xs.len();
    }
    out
}

/// Chi-square test of independence between successive service times.
///
/// Each window is cut into disjoint pairs (S_1, S_2), (S_3, S_4), ... so
/// that the cell counts come from independent pairs under the null; the
/// pairs are binned into `bins` equal-mass classes per margin.
/// Windows where any expected cell count falls below 5 are skipped. The
/// pooled statistic is the sum over tested windows with summed degrees of
/// freedom.
pub fn chi_square_independence(
    windows: &[Vec<f64>],
    bins: usize,
) -> Result<TestResult, VerifyError> {
    if bins < 2 {
        return Err(VerifyError::InvalidInput("bins must be at least 2".into()));
    }
    let (mut stat, mut dof, mut n, mut skipped) = (0.0, 0usize, 0usize, 0usize);
    let mut window_p = Vec::new();
    for w in windows {
        if w.len() < 2 {
            skipped += 1;
            continue;
        }
        let (a, b): (Vec<f64>, Vec<f64>) = w.chunks_exact(2).map(|p| (p[0], p[1])).unzip();
        let first = rank_bins(&a, bins);
        let second = rank_bins(&b, bins);
        let mut table = vec![vec![0.0; bins]; bins];
        for (&a, &b) in first.iter().zip(&second) {
            table[a][b] += 1.0;
        }
        match pearson_independence(&table) {
            Ok(r) if r.min_expected >= MIN_EXPECTED => {
                stat += r.statistic;
                dof += r.dof;
                n += a.len();
                window_p.push(r.p_value);
            }
            _ => skipped += 1,
        }
    }
    if window_p.is_empty() {
        return Err(VerifyError::InsufficientData(format!(
            "no window has an expected count of at least {MIN_EXPECTED} in every cell"
        )));
    }
    Ok(TestResult {
        statistic: stat,
        n,
        dof: Some(dof),
        p_value: chi_square_sf(stat, dof as f64),
        windows_used: window_p.len(),
        windows_skipped: skipped,
        mean_window_p: Some(window_p.iter().sum::<f64>() / window_p.len() as f64),
        window_p_values: window_p,
    })
}
