//! Distribution helpers shared by the test battery and the forecast code.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Largest sample size for which KS p-values use the exact distribution.
pub const KS_EXACT_MAX_N: usize = 1000;

/// P(D_n < d) for the two-sided one-sample KS statistic, by the
/// Marsaglia–Tsang–Wang matrix method.
pub fn kolmogorov_cdf_exact(n: usize, d: f64) -> f64 {
    if n == 0 || d <= 0.0 {
        return 0.0;
    }
    let nf = n as f64;
    if d >= 1.0 {
        return 1.0;
    }
    if nf * d * d > 18.37 {
        return 1.0;
    }
    let k = (nf * d).floor() as usize + 1;
    let m = 2 * k - 1;
    let h = k as f64 - nf * d;

    let mut hm = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            hm[i * m + j] = if i + 1 >= j { 1.0 } else { 0.0 };
        }
    }
    for i in 0..m {
        hm[i * m] -= h.powi(i as i32 + 1);
        hm[(m - 1) * m + i] -= h.powi((m - i) as i32);
    }
    if 2.0 * h - 1.0 > 0.0 {
        hm[(m - 1) * m] += (2.0 * h - 1.0).powi(m as i32);
    }
    for i in 0..m {
        for j in 0..m {
            if i + 1 > j {
                for g in 1..=(i + 1 - j) {
                    hm[i * m + j] /= g as f64;
                }
            }
        }
    }

    let (q, mut eq) = matrix_power(&hm, m, n);
    let mut s = q[(k - 1) * m + (k - 1)];
    for i in 1..=n {
        s *= i as f64 / nf;
        if s < 1e-140 {
            s *= 1e140;
            eq -= 140;
        }
    }
    (s * 10f64.powi(eq)).clamp(0.0, 1.0)
}

fn matmul(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * m];
    for i in 0..m {
        for l in 0..m {
            let x = a[i * m + l];
            if x == 0.0 {
                continue;
            }
            for j in 0..m {
                c[i * m + j] += x * b[l * m + j];
            }
        }
    }
    c
}

// Returns (A^n scaled, decimal exponent) with A^n = scaled * 10^exponent.
fn matrix_power(a: &[f64], m: usize, n: usize) -> (Vec<f64>, i32) {
    if n == 1 {
        return (a.to_vec(), 0);
    }
    let (half, e) = matrix_power(a, m, n / 2);
    let mut v = matmul(&half, &half, m);
    let mut ev = 2 * e;
    if n % 2 == 1 {
        v = matmul(a, &v, m);
    }
    let centre = v[(m / 2) * m + m / 2];
    if centre > 1e140 {
        v.iter_mut().for_each(|x| *x *= 1e-140);
        ev += 140;
    }
    (v, ev)
}

/// Kolmogorov limiting survival function Q(x) = 2 Σ (-1)^{k-1} exp(-2k²x²).
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sided KS p-value: exact for small n, asymptotic Kolmogorov with √n
/// scaling otherwise.
pub fn ks_p_value(n: usize, d: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if n <= KS_EXACT_MAX_N {
        1.0 - kolmogorov_cdf_exact(n, d)
    } else {
        kolmogorov_sf((n as f64).sqrt() * d)
    }
}

/// Two-sided KS statistic of `samples` against a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Two-sample KS statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    if a.is_empty() || b.is_empty() {
        return (0.0, 1.0);
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    (d, kolmogorov_sf((en + 0.12 + 0.11 / en) * d))
}

pub fn exp1_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x).exp_m1()
    }
}

pub fn uniform_cdf(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

pub fn std_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

pub fn std_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(x: f64, dof: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(dof).map(|d| d.sf(x)).unwrap_or(f64::NAN)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn rmse(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return f64::NAN;
    }
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

/// Median of a slice (NaN for empty input).
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_matches_known_values() {
        // reference values from the Marsaglia-Tsang-Wang C routine
        assert_relative_eq!(kolmogorov_cdf_exact(10, 0.274), 0.6284796154565043, epsilon = 1e-9);
        assert_relative_eq!(kolmogorov_cdf_exact(1, 0.5), 0.0, epsilon = 1e-12);
        assert_relative_eq!(kolmogorov_cdf_exact(1, 0.75), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn exact_close_to_asymptotic_at_boundary() {
        let d = 0.2;
        let exact = 1.0 - kolmogorov_cdf_exact(35, d);
        let asym = kolmogorov_sf(35f64.sqrt() * d);
        assert!((exact - asym).abs() < 0.03, "{exact} {asym}");
    }

    #[test]
    fn exact_is_monotone() {
        let mut prev = 0.0;
        for i in 1..100 {
            let v = kolmogorov_cdf_exact(20, i as f64 / 100.0);
            assert!(v + 1e-12 >= prev);
            prev = v;
        }
    }

    #[test]
    fn kolmogorov_sf_known() {
        assert_relative_eq!(kolmogorov_sf(1.36), 0.0494, epsilon = 2e-4);
        assert_relative_eq!(kolmogorov_sf(1.0), 0.26999967, epsilon = 1e-6);
    }

    #[test]
    fn chi_square_tail() {
        assert_relative_eq!(chi_square_sf(3.841458820694124, 1.0), 0.05, epsilon = 1e-9);
        assert_eq!(chi_square_sf(0.0, 4.0), 1.0);
    }

    #[test]
    fn ks_statistic_single_point() {
        assert_relative_eq!(ks_statistic(&[2f64.ln()], exp1_cdf), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn moments() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(variance(&[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(rmse(&[1.0, -1.0]), 1.0);
        assert_eq!(median(&[3.0, 1.0, 2.0, 4.0]), 2.5);
    }
}
