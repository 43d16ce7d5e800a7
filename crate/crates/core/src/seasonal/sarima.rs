//! SARIMA(1,0,0)×(0,1,1)₂₄.
//!
//! The model is (1 - φB)(1 - B²⁴) X_t = (1 + ΘB²⁴) ε_t with ε white noise of
//! variance σ². Writing w_t = X_t - X_{t-24}, this is an ARMA(1, 24) whose
//! only nonzero MA coefficient sits at lag 24.
//!
//! Estimation minimizes the conditional sum of squares (pre-sample
//! innovations set to zero) and then refines the optimum on the exact
//! Gaussian likelihood of w, evaluated with a Kalman filter.

use argmin::core::{CostFunction, Error as ArgminError, Executor, State, TerminationReason};
use argmin::solver::neldermead::NelderMead;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SeasonalError;

pub const SEASON: usize = 24;
/// Bound on |Θ| during estimation.
pub const THETA_CAP: f64 = 0.98;
const PHI_CAP: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SarimaModel {
    pub phi: f64,
    pub theta: f64,
    pub sigma2: f64,
}

impl SarimaModel {
    pub fn new(phi: f64, theta: f64, sigma2: f64) -> Result<Self, SeasonalError> {
        if !(phi.abs() < 1.0 && theta.abs() < 1.0 && sigma2 >= 0.0) {
            return Err(SeasonalError::InvalidInput(format!(
                "need |phi| < 1, |theta| < 1, sigma2 >= 0; got ({phi}, {theta}, {sigma2})"
            )));
        }
        Ok(SarimaModel { phi, theta, sigma2 })
    }

    /// Weights ψ_j of X in terms of past innovations, j = 0..n.
    pub fn psi_weights(&self, n: usize) -> Vec<f64> {
        let s = SEASON;
        let mut psi = vec![0.0; n];
        for j in 0..n {
            let mut v = if j == 0 { 1.0 } else { self.phi * psi[j - 1] };
            if j == s {
                v += self.theta;
            }
            if j >= s {
                v += psi[j - s];
            }
            if j > s {
                v -= self.phi * psi[j - s - 1];
            }
            psi[j] = v;
        }
        psi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SarimaFit {
    pub model: SarimaModel,
    /// Conditional sum of squares at the starting point and at the CSS optimum.
    pub css_initial: f64,
    pub css: f64,
    /// Exact Gaussian log-likelihood of the differenced series.
    pub loglik: f64,
    pub aic: f64,
    pub n: usize,
    pub iterations: u64,
    pub refined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub tolerance: f64,
    pub max_iters: u64,
    pub refine: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tolerance: 1e-8,
            max_iters: 500,
            refine: true,
        }
    }
}

pub fn seasonal_difference(x: &[f64]) -> Vec<f64> {
    x.iter().skip(SEASON).zip(x).map(|(a, b)| a - b).collect()
}

fn css_residuals_w(w: &[f64], phi: f64, theta: f64) -> Vec<f64> {
    let mut e = vec![0.0; w.len()];
    for i in 1..w.len() {
        let ma = if i > SEASON { theta * e[i - SEASON] } else { 0.0 };
        e[i] = w[i] - phi * w[i - 1] - ma;
    }
    e
}

/// Conditional one-step innovations of `x` under `model`. The first 25
/// entries are conditioning values and are zero.
pub fn sarima_residuals(model: &SarimaModel, x: &[f64]) -> Vec<f64> {
    if x.len() <= SEASON {
        return vec![0.0; x.len()];
    }
    let mut out = vec![0.0; SEASON];
    out.extend(css_residuals_w(&seasonal_difference(x), model.phi, model.theta));
    out
}

fn css(w: &[f64], phi: f64, theta: f64) -> f64 {
    css_residuals_w(w, phi, theta).iter().map(|e| e * e).sum()
}

fn to_params(p: &[f64]) -> (f64, f64) {
    (PHI_CAP * p[0].tanh(), THETA_CAP * p[1].tanh())
}

fn from_params(phi: f64, theta: f64) -> Vec<f64> {
    vec![
        (phi / PHI_CAP).clamp(-0.999, 0.999).atanh(),
        (theta / THETA_CAP).clamp(-0.999, 0.999).atanh(),
    ]
}

struct CssCost<'a> {
    w: &'a [f64],
    scale: f64,
}

impl CostFunction for CssCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> Result<f64, ArgminError> {
        let (phi, theta) = to_params(p);
        Ok(css(self.w, phi, theta) / self.scale)
    }
}

struct NegLogLik<'a> {
    w: &'a [f64],
    scale: f64,
}

impl CostFunction for NegLogLik<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> Result<f64, ArgminError> {
        let (phi, theta) = to_params(p);
        Ok(-exact_loglik(self.w, phi, theta).0 / self.scale)
    }
}

fn simplex(start: &[f64], step: f64) -> Vec<Vec<f64>> {
    vec![
        start.to_vec(),
        vec![start[0] + step, start[1]],
        vec![start[0], start[1] + step],
    ]
}

fn minimize<C>(cost: C, start: &[f64], step: f64, opts: &FitOptions) -> Result<(Vec<f64>, f64, u64, bool), SeasonalError>
where
    C: CostFunction<Param = Vec<f64>, Output = f64>,
{
    let solver = NelderMead::new(simplex(start, step))
        .with_sd_tolerance(opts.tolerance)
        .map_err(|e| SeasonalError::NonConvergence {
            iterations: 0,
            detail: e.to_string(),
        })?;
    let res = Executor::new(cost, solver)
        .configure(|s| s.max_iters(opts.max_iters))
        .run()
        .map_err(|e| SeasonalError::NonConvergence {
            iterations: 0,
            detail: e.to_string(),
        })?;
    let state = res.state();
    let best = state.get_best_param().cloned().unwrap_or_else(|| start.to_vec());
    let converged = matches!(
        state.get_termination_reason(),
        Some(TerminationReason::SolverConverged)
    );
    Ok((best, state.get_best_cost(), state.get_iter(), converged))
}

/// Fits φ, Θ and σ² with the default options.
pub fn fit_sarima(x: &[f64]) -> Result<SarimaFit, SeasonalError> {
    fit_sarima_with(x, &FitOptions::default())
}

pub fn fit_sarima_with(x: &[f64], opts: &FitOptions) -> Result<SarimaFit, SeasonalError> {
    if x.len() < 11 * SEASON {
        return Err(SeasonalError::InsufficientData(format!(
            "{} hours; at least {} are needed",
            x.len(),
            11 * SEASON
        )));
    }
    let w = seasonal_difference(x);
    let wvar = w.iter().map(|v| v * v).sum::<f64>() / w.len() as f64;
    if !(wvar > 1e-300) {
        return Err(SeasonalError::DegenerateSeries);
    }

    let start = from_params(0.0, 0.0);
    let css_initial = css(&w, 0.0, 0.0);
    let (p_css, _, it1, converged) = minimize(
        CssCost {
            w: &w,
            scale: css_initial,
        },
        &start,
        0.5,
        opts,
    )?;
    if !converged {
        let (phi, theta) = to_params(&p_css);
        return Err(SeasonalError::NonConvergence {
            iterations: it1,
            detail: format!("CSS stopped at phi={phi:.4}, theta={theta:.4}"),
        });
    }
    let (phi_c, theta_c) = to_params(&p_css);
    let css_opt = css(&w, phi_c, theta_c);

    let mut params = p_css.clone();
    let mut iterations = it1;
    let mut refined = false;
    if opts.refine {
        let base = -exact_loglik(&w, phi_c, theta_c).0;
        if let Ok((p_ml, _, it2, ok)) = minimize(
            NegLogLik {
                w: &w,
                scale: base.abs().max(1.0),
            },
            &p_css,
            0.05,
            opts,
        ) {
            iterations += it2;
            let (phi_m, theta_m) = to_params(&p_ml);
            if ok && -exact_loglik(&w, phi_m, theta_m).0 <= base {
                params = p_ml;
                refined = true;
            }
        }
    }
    let (phi, theta) = to_params(&params);
    let (loglik, sigma2) = exact_loglik(&w, phi, theta);
    Ok(SarimaFit {
        model: SarimaModel { phi, theta, sigma2 },
        css_initial,
        css: css_opt,
        loglik,
        aic: -2.0 * loglik + 2.0 * 3.0,
        n: w.len(),
        iterations,
        refined,
    })
}

/// AIC of the seasonal random walk (0,0,0)×(0,1,0)₂₄ on the same data.
pub fn seasonal_random_walk_aic(x: &[f64]) -> f64 {
    let w = seasonal_difference(x);
    let m = w.len() as f64;
    let s2 = w.iter().map(|v| v * v).sum::<f64>() / m;
    let loglik = -0.5 * m * ((2.0 * std::f64::consts::PI).ln() + s2.ln() + 1.0);
    -2.0 * loglik + 2.0
}

const R: usize = SEASON + 1;

// T·M for the companion transition with a single AR coefficient.
fn t_left(phi: f64, m: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; R * R];
    for j in 0..R {
        out[j] = phi * m[j] + m[R + j];
        for i in 1..R - 1 {
            out[i * R + j] = m[(i + 1) * R + j];
        }
    }
    out
}

// M·Tᵀ.
fn t_right(phi: f64, m: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; R * R];
    for i in 0..R {
        out[i * R] = phi * m[i * R] + m[i * R + 1];
        for j in 1..R - 1 {
            out[i * R + j] = m[i * R + j + 1];
        }
    }
    out
}

fn matmul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; R * R];
    for i in 0..R {
        for k in 0..R {
            let x = a[i * R + k];
            if x != 0.0 {
                for j in 0..R {
                    c[i * R + j] += x * b[k * R + j];
                }
            }
        }
    }
    c
}

fn transpose(a: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; R * R];
    for i in 0..R {
        for j in 0..R {
            t[j * R + i] = a[i * R + j];
        }
    }
    t
}

// Stationary state covariance (σ² = 1) by the doubling algorithm.
fn stationary_cov(phi: f64, rr: &[f64]) -> Vec<f64> {
    let mut p = rr.to_vec();
    let mut a = vec![0.0; R * R];
    a[0] = phi;
    for i in 0..R - 1 {
        a[i * R + i + 1] = 1.0;
    }
    for _ in 0..64 {
        let apa = matmul(&matmul(&a, &p), &transpose(&a));
        let delta = apa.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        p.iter_mut().zip(&apa).for_each(|(x, y)| *x += y);
        if delta < 1e-14 {
            break;
        }
        a = matmul(&a, &a);
    }
    p
}

/// Concentrated exact log-likelihood of the differenced series and the
/// implied innovation variance.
fn exact_loglik(w: &[f64], phi: f64, theta: f64) -> (f64, f64) {
    let mut rvec = vec![0.0; R];
    rvec[0] = 1.0;
    rvec[SEASON] = theta;
    let mut rr = vec![0.0; R * R];
    for i in 0..R {
        for j in 0..R {
            rr[i * R + j] = rvec[i] * rvec[j];
        }
    }
    let mut p = stationary_cov(phi, &rr);
    let mut a = vec![0.0; R];
    let (mut sum_v2f, mut sum_logf) = (0.0, 0.0);
    let mut steady = false;
    let mut k = vec![0.0; R];
    let mut f = 1.0;
    for &y in w {
        if !steady {
            f = p[0];
            for i in 0..R {
                k[i] = p[i * R] / f;
            }
        }
        let v = y - a[0];
        sum_v2f += v * v / f;
        sum_logf += f.ln();
        for i in 0..R {
            a[i] += k[i] * v;
        }
        let a0 = a[0];
        for i in 0..R - 1 {
            a[i] = a[i + 1];
        }
        a[R - 1] = 0.0;
        a[0] += phi * a0;
        if !steady {
            let mut upd = p.clone();
            for i in 0..R {
                for j in 0..R {
                    upd[i * R + j] -= p[i * R] * p[j] / f;
                }
            }
            let mut next = t_right(phi, &t_left(phi, &upd));
            next.iter_mut().zip(&rr).for_each(|(x, y)| *x += y);
            let change = next
                .iter()
                .zip(&p)
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            p = next;
            steady = change < 1e-11;
        }
    }
    let m = w.len() as f64;
    let sigma2 = sum_v2f / m;
    let ll = -0.5 * m * ((2.0 * std::f64::consts::PI).ln() + sigma2.ln() + 1.0) - 0.5 * sum_logf;
    (ll, sigma2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepForecast {
    pub mean: f64,
    pub variance: f64,
}

/// Recursive `h`-step forecasts from the end of `history`, with variances
/// from the ψ-weight representation.
pub fn forecast_sarima(
    model: &SarimaModel,
    history: &[f64],
    h: usize,
) -> Result<Vec<StepForecast>, SeasonalError> {
    let n = history.len();
    if n < SEASON + 1 {
        return Err(SeasonalError::InsufficientData(format!(
            "{n} hours of history; at least {} are needed",
            SEASON + 1
        )));
    }
    let w = seasonal_difference(history);
    let e = css_residuals_w(&w, model.phi, model.theta);
    let m = w.len();
    let mut x = history.to_vec();
    let mut w_hat = w.clone();
    for step in 0..h {
        let j = m + step;
        let ma = if j >= SEASON && j - SEASON < m {
            model.theta * e[j - SEASON]
        } else {
            0.0
        };
        let wj = model.phi * w_hat[j - 1] + ma;
        w_hat.push(wj);
        x.push(x[n + step - SEASON] + wj);
    }
    let psi = model.psi_weights(h);
    let mut acc = 0.0;
    Ok((0..h)
        .map(|k| {
            acc += psi[k] * psi[k];
            StepForecast {
                mean: x[n + k],
                variance: model.sigma2 * acc,
            }
        })
        .collect())
}

/// Simulates `n` values from the model started at zero, after a burn-in of
/// 20 seasons.
pub fn simulate_sarima<R: Rng + ?Sized>(model: &SarimaModel, n: usize, rng: &mut R) -> Vec<f64> {
    let noise = Normal::new(0.0, model.sigma2.sqrt()).expect("finite variance");
    let burn = 20 * SEASON;
    let total = n + burn;
    let eps: Vec<f64> = (0..total).map(|_| noise.sample(rng)).collect();
    let mut w = vec![0.0; total];
    let mut x = vec![0.0; total];
    for t in 0..total {
        let ar = if t > 0 { model.phi * w[t - 1] } else { 0.0 };
        let ma = if t >= SEASON { model.theta * eps[t - SEASON] } else { 0.0 };
        w[t] = ar + eps[t] + ma;
        x[t] = if t >= SEASON { x[t - SEASON] + w[t] } else { w[t] };
    }
    x.split_off(burn)
}
