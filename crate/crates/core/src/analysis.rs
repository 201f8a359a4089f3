//! Growth constants and exponents of counting sequences.
//!
//! Coefficients are taken as `f64` indexed by order: `coeffs[p] = a_p`.

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("need at least {need} coefficients in the window, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("coefficient a_{0} is zero or negative")]
    NonPositive(usize),
    #[error("fit did not converge after {iterations} iterations (cost {cost:e})")]
    NoConvergence { iterations: usize, cost: f64 },
    #[error("tail sum diverges for alpha = {0}")]
    DivergentTail(f64),
    #[error("mu must be positive, got {0}")]
    BadMu(f64),
}

pub fn to_f64(values: &[BigUint]) -> Vec<f64> {
    values
        .iter()
        .map(|v| v.to_f64().unwrap_or(f64::INFINITY))
        .collect()
}

/// Inclusive range of orders used by a fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitWindow {
    pub start: usize,
    pub end: Option<usize>,
}

impl Default for FitWindow {
    fn default() -> Self {
        FitWindow {
            start: 12,
            end: None,
        }
    }
}

impl FitWindow {
    pub fn from(start: usize) -> Self {
        FitWindow { start, end: None }
    }

    fn orders(&self, len: usize) -> std::ops::RangeInclusive<usize> {
        let end = self.end.unwrap_or(usize::MAX).min(len.saturating_sub(1));
        self.start.max(1)..=end
    }
}

fn logs(coeffs: &[f64], window: FitWindow, need: usize) -> Result<Vec<(f64, f64, f64)>, AnalysisError> {
    let pts: Vec<(f64, f64, f64)> = window
        .orders(coeffs.len())
        .map(|p| {
            let a = coeffs[p];
            if a > 0.0 && a.is_finite() {
                Ok((p as f64, (p as f64).ln(), a.ln()))
            } else {
                Err(AnalysisError::NonPositive(p))
            }
        })
        .collect::<Result<_, _>>()?;
    if pts.len() < need {
        return Err(AnalysisError::TooShort {
            need,
            got: pts.len(),
        });
    }
    Ok(pts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuEstimate {
    pub mu: f64,
    pub uncertainty: f64,
    /// Second-order extrapolated ratios, by order.
    pub extrapolants: Vec<(usize, f64)>,
}

/// Ratio method with second-order extrapolation in `1/p`:
/// `R_p = (p^2 r_p - 2 (p-1)^2 r_{p-1} + (p-2)^2 r_{p-2}) / 2`,
/// `r_p = a_p / a_{p-1}`. The spread is taken over the last four values.
pub fn estimate_mu(coeffs: &[f64]) -> Result<MuEstimate, AnalysisError> {
    let n = coeffs.len();
    if n < 7 {
        return Err(AnalysisError::TooShort { need: 6, got: n.saturating_sub(1) });
    }
    for (p, &a) in coeffs.iter().enumerate().skip(1) {
        if !(a > 0.0 && a.is_finite()) {
            return Err(AnalysisError::NonPositive(p));
        }
    }
    let r = |p: usize| coeffs[p] / coeffs[p - 1];
    let extrapolants: Vec<(usize, f64)> = (4..n)
        .map(|p| {
            let (a, b, c) = (p as f64, (p - 1) as f64, (p - 2) as f64);
            (p, (a * a * r(p) - 2.0 * b * b * r(p - 1) + c * c * r(p - 2)) / 2.0)
        })
        .collect();
    Ok(summarize(extrapolants))
}

/// Ratio method for sequences with a parity oscillation: same-parity
/// ratios `s_p = a_p / a_{p-2}` tend to `mu^2`, extrapolated as
/// `(p s_p - (p-2) s_{p-2}) / 2` before taking the square root.
pub fn estimate_mu_alternating(coeffs: &[f64]) -> Result<MuEstimate, AnalysisError> {
    let n = coeffs.len();
    if n < 8 {
        return Err(AnalysisError::TooShort { need: 7, got: n.saturating_sub(1) });
    }
    for (p, &a) in coeffs.iter().enumerate().skip(1) {
        if !(a > 0.0 && a.is_finite()) {
            return Err(AnalysisError::NonPositive(p));
        }
    }
    let s = |p: usize| coeffs[p] / coeffs[p - 2];
    let extrapolants: Vec<(usize, f64)> = (4..n)
        .map(|p| {
            let e = (p as f64 * s(p) - (p - 2) as f64 * s(p - 2)) / 2.0;
            (p, e.max(0.0).sqrt())
        })
        .collect();
    Ok(summarize(extrapolants))
}

fn summarize(extrapolants: Vec<(usize, f64)>) -> MuEstimate {
    let tail = &extrapolants[extrapolants.len().saturating_sub(4)..];
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, v)| (lo.min(v), hi.max(v)));
    MuEstimate {
        mu: tail.last().expect("nonempty").1,
        uncertainty: hi - lo,
        extrapolants,
    }
}

/// `a_p = mu^p p^-alpha (a log p + b)` fitted in log space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub mu: f64,
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    /// One standard error each for mu, alpha, a, b.
    pub errors: [f64; 4],
    pub window: FitWindow,
    /// `log(model) - log(a_p)` by order.
    pub residuals: Vec<(usize, f64)>,
    pub iterations: usize,
}

impl FitResult {
    /// `a_p g_c^p` according to the fitted form.
    pub fn scaled_term(&self, p: f64) -> f64 {
        p.powf(-self.alpha) * (self.a * p.ln() + self.b)
    }
}

type P4 = Vector4<f64>;

fn lc_residuals(pts: &[(f64, f64, f64)], th: &P4) -> Option<DVector<f64>> {
    let mut r = DVector::zeros(pts.len());
    for (k, &(p, lp, la)) in pts.iter().enumerate() {
        let amp = th[2] * lp + th[3];
        if amp <= 0.0 {
            return None;
        }
        r[k] = p * th[0] - th[1] * lp + amp.ln() - la;
    }
    Some(r)
}

fn lc_jacobian(pts: &[(f64, f64, f64)], th: &P4) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(pts.len(), 4);
    for (k, &(p, lp, _)) in pts.iter().enumerate() {
        let amp = th[2] * lp + th[3];
        j[(k, 0)] = p;
        j[(k, 1)] = -lp;
        j[(k, 2)] = lp / amp;
        j[(k, 3)] = 1.0 / amp;
    }
    j
}

struct LmOutcome {
    theta: P4,
    cost: f64,
    iterations: usize,
    converged: bool,
}

fn levenberg_marquardt(pts: &[(f64, f64, f64)], start: P4) -> Option<LmOutcome> {
    let mut th = start;
    let mut r = lc_residuals(pts, &th)?;
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    for it in 1..=1000 {
        let j = lc_jacobian(pts, &th);
        let jt = j.transpose();
        let jtj: Matrix4<f64> = (&jt * &j).fixed_view::<4, 4>(0, 0).into();
        let g: P4 = (&jt * &r).fixed_view::<4, 1>(0, 0).into();
        let mut improved = false;
        for _ in 0..60 {
            let mut m = jtj;
            for d in 0..4 {
                m[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
            }
            let Some(step) = m.lu().solve(&(-g)) else {
                lambda *= 10.0;
                continue;
            };
            let cand = th + step;
            if let Some(rc) = lc_residuals(pts, &cand) {
                let c = rc.norm_squared();
                if c <= cost {
                    let small = step.norm() <= 1e-13 * (1.0 + th.norm());
                    th = cand;
                    r = rc;
                    let rel = (cost - c) / cost.max(1e-300);
                    cost = c;
                    lambda = (lambda / 10.0).max(1e-15);
                    improved = true;
                    if small || rel < 1e-16 {
                        return Some(LmOutcome {
                            theta: th,
                            cost,
                            iterations: it,
                            converged: true,
                        });
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            // no downhill step at any damping: stationary to working precision
            return Some(LmOutcome {
                theta: th,
                cost,
                iterations: it,
                converged: g.norm() <= 1e-8 * (1.0 + cost.sqrt()),
            });
        }
    }
    Some(LmOutcome {
        theta: th,
        cost,
        iterations: 1000,
        converged: false,
    })
}

/// Starting amplitudes for fixed `mu`, `alpha`: linear fit of the implied
/// amplitude `a_p mu^-p p^alpha` against `log p`.
fn amplitude_guess(pts: &[(f64, f64, f64)], ln_mu: f64, alpha: f64) -> (f64, f64) {
    let z: Vec<(f64, f64)> = pts
        .iter()
        .map(|&(p, lp, la)| (lp, (la - p * ln_mu + alpha * lp).exp()))
        .collect();
    let n = z.len() as f64;
    let (sx, sy) = z.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxx, sxy) = z.iter().fold((0.0, 0.0), |(a, b), &(x, y)| {
        (a + (x - mx) * (x - mx), b + (x - mx) * (y - my))
    });
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = my - a * mx;
    if z.iter().all(|&(x, _)| a * x + b > 0.0) {
        (a, b)
    } else {
        (0.0, my)
    }
}

/// `log a_p = c + p log mu - alpha log p`, linear least squares.
fn plain_with_constant(pts: &[(f64, f64, f64)]) -> (f64, f64, f64) {
    let x = DMatrix::from_fn(pts.len(), 3, |k, c| match c {
        0 => 1.0,
        1 => pts[k].0,
        _ => -pts[k].1,
    });
    let y = DVector::from_iterator(pts.len(), pts.iter().map(|t| t.2));
    let sol = x
        .svd(true, true)
        .solve(&y, 1e-14)
        .expect("full column rank for three distinct orders");
    (sol[0], sol[1], sol[2])
}

pub fn fit_log_correction(coeffs: &[f64], window: FitWindow) -> Result<FitResult, AnalysisError> {
    let pts = logs(coeffs, window, 6)?;
    let (_, ln_mu0, alpha0) = plain_with_constant(&pts);
    let mut best: Option<LmOutcome> = None;
    for alpha in [alpha0, 2.0, 2.5, 3.0, 3.5, 4.0] {
        // mu for this alpha from the two-parameter fit
        let x = DMatrix::from_fn(pts.len(), 2, |k, c| if c == 0 { 1.0 } else { pts[k].0 });
        let y = DVector::from_iterator(pts.len(), pts.iter().map(|t| t.2 + alpha * t.1));
        let ln_mu = x
            .svd(true, true)
            .solve(&y, 1e-14)
            .map(|s| s[1])
            .unwrap_or(ln_mu0);
        let (a, b) = amplitude_guess(&pts, ln_mu, alpha);
        if let Some(out) = levenberg_marquardt(&pts, P4::new(ln_mu, alpha, a, b)) {
            if out.converged && best.as_ref().is_none_or(|b| out.cost < b.cost) {
                best = Some(out);
            }
        }
    }
    let out = best.ok_or(AnalysisError::NoConvergence {
        iterations: 1000,
        cost: f64::NAN,
    })?;
    let th = out.theta;
    let j = lc_jacobian(&pts, &th);
    let dof = (pts.len() as f64 - 4.0).max(1.0);
    let sigma2 = out.cost / dof;
    let cov = (j.transpose() * &j).try_inverse().map(|m| m * sigma2);
    let se = |k: usize| cov.as_ref().map(|c| c[(k, k)].max(0.0).sqrt()).unwrap_or(f64::NAN);
    let mu = th[0].exp();
    let residuals = lc_residuals(&pts, &th)
        .expect("accepted parameters are in the domain")
        .iter()
        .zip(&pts)
        .map(|(r, t)| (t.0 as usize, *r))
        .collect();
    Ok(FitResult {
        mu,
        alpha: th[1],
        a: th[2],
        b: th[3],
        errors: [mu * se(0), se(1), se(2), se(3)],
        window,
        residuals,
        iterations: out.iterations,
    })
}

/// `a_p = mu^p p^-alpha` with no amplitude, the literal leading form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub mu: f64,
    pub alpha: f64,
    pub window: FitWindow,
    pub residuals: Vec<(usize, f64)>,
}

pub fn fit_power_law(coeffs: &[f64], window: FitWindow) -> Result<PowerLawFit, AnalysisError> {
    let pts = logs(coeffs, window, 3)?;
    let x = DMatrix::from_fn(pts.len(), 2, |k, c| if c == 0 { pts[k].0 } else { -pts[k].1 });
    let y = DVector::from_iterator(pts.len(), pts.iter().map(|t| t.2));
    let sol = x
        .svd(true, true)
        .solve(&y, 1e-14)
        .expect("two distinct orders give full rank");
    let residuals = pts
        .iter()
        .map(|&(p, lp, la)| (p as usize, p * sol[0] - sol[1] * lp - la))
        .collect();
    Ok(PowerLawFit {
        mu: sol[0].exp(),
        alpha: sol[1],
        window,
        residuals,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub mu: f64,
    pub mu2: f64,
    pub mu2_error: f64,
    pub g_c: f64,
    #[serde(rename = "G_at_gc")]
    pub g_at_gc: f64,
    /// Estimated size of the part of `G(g_c)` beyond the known orders.
    #[serde(rename = "G_error")]
    pub g_error: f64,
    pub partial_sum: f64,
    pub notes: Vec<String>,
}

/// `sum_{p > n} p^-alpha (a log p + b)`: explicit terms to `10^5`, then the
/// integral of the same form.
fn tail_sum(fit: &FitResult, n: usize) -> Result<f64, AnalysisError> {
    let alpha = fit.alpha;
    if alpha <= 1.0 {
        return Err(AnalysisError::DivergentTail(alpha));
    }
    const CUT: usize = 100_000;
    let mut s = 0.0;
    for p in (n + 1..=CUT.max(n)).rev() {
        s += fit.scaled_term(p as f64);
    }
    let m = CUT.max(n) as f64 + 0.5;
    let k = alpha - 1.0;
    s += m.powf(-k) * (fit.a * m.ln() / k + fit.a / (k * k) + fit.b / k);
    Ok(s)
}

/// `mu2 = mu / G(1/mu)^2`, with `G(1/mu)` summed from the known coefficients
/// plus the tail implied by `fit`.
pub fn mu2_from_identity(g: &[f64], fit: &FitResult) -> Result<AsymptoticsReport, AnalysisError> {
    if g.len() < 16 {
        return Err(AnalysisError::TooShort {
            need: 16,
            got: g.len(),
        });
    }
    if fit.mu.is_nan() || fit.mu <= 0.0 {
        return Err(AnalysisError::BadMu(fit.mu));
    }
    let n = g.len() - 1;
    let g_c = 1.0 / fit.mu;
    let partial: f64 = g.iter().rev().fold(0.0, |acc, &a| acc * g_c + a);
    let tail = tail_sum(fit, n)?;
    let total = partial + tail;
    let mu2 = fit.mu / (total * total);
    let g_error = tail.abs();
    let mu2_error = 2.0 * mu2 * g_error / total;
    let notes = vec![format!(
        "G(g_c) = {partial:.6} from orders 0..={n} plus tail {tail:.6}"
    )];
    Ok(AsymptoticsReport {
        mu: fit.mu,
        mu2,
        mu2_error,
        g_c,
        g_at_gc: total,
        g_error,
        partial_sum: partial,
        notes,
    })
}

/// Sign pattern of successive ratio differences; persistent alternation
/// points to a singularity on the negative axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub ratio_differences: Vec<(usize, f64)>,
    pub sign_changes: usize,
    /// Alternation in at least three quarters of consecutive differences.
    pub oscillating: bool,
}

pub fn oscillation_diagnostic(coeffs: &[f64]) -> OscillationReport {
    let ratios: Vec<(usize, f64)> = (1..coeffs.len())
        .filter(|&p| coeffs[p - 1] > 0.0 && coeffs[p] > 0.0)
        .map(|p| (p, coeffs[p] / coeffs[p - 1]))
        .collect();
    let diffs: Vec<(usize, f64)> = ratios
        .windows(2)
        .filter(|w| w[1].0 == w[0].0 + 1)
        .map(|w| (w[1].0, w[1].1 - w[0].1))
        .collect();
    let sign_changes = diffs
        .windows(2)
        .filter(|w| w[0].1.signum() != w[1].1.signum())
        .count();
    let pairs = diffs.len().saturating_sub(1);
    OscillationReport {
        oscillating: pairs > 0 && 4 * sign_changes >= 3 * pairs,
        ratio_differences: diffs,
        sign_changes,
    }
}
