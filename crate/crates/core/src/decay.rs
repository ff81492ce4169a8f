//! Decay models for correlation curves and the contour integral bound.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_NOISE_FLOOR: f64 = 1e-7;
pub const MIN_POINTS: usize = 10;
pub const DEFAULT_TRUNCATION: f64 = 1e6;

const CAVEAT: &str = "an upper bound of the form C exp(-delta sqrt(t)) is consistent with faster decay; \
the best-fitting model describes the sampled envelope only";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DecayModel {
    /// `C e^{-delta t}`
    Exp,
    /// `C e^{-delta sqrt t}`
    Stretched,
    /// `C t^{-delta}`
    Poly,
}

impl DecayModel {
    pub const ALL: [DecayModel; 3] = [DecayModel::Exp, DecayModel::Stretched, DecayModel::Poly];

    fn abscissa(self, t: f64) -> f64 {
        match self {
            DecayModel::Exp => t,
            DecayModel::Stretched => t.sqrt(),
            DecayModel::Poly => t.ln(),
        }
    }

    /// `C * model(t)`.
    pub fn eval(self, c: f64, delta: f64, t: f64) -> f64 {
        c * (-delta * self.abscissa(t)).exp()
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: DecayModel,
    pub delta: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub t_range: (f64, f64),
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub fits: Vec<DecayFit>,
    pub best: DecayModel,
    pub caveat: String,
}

impl DecayReport {
    pub fn fit(&self, model: DecayModel) -> &DecayFit {
        self.fits.iter().find(|f| f.model == model).expect("all models are fitted")
    }
}

/// Least squares `y = a + b x`; returns `(a, b, R^2)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 {
        1.0 - sse / syy
    } else if sse <= 1e-24 * n {
        1.0
    } else {
        0.0
    };
    (icpt, slope, r2)
}

/// `max_{s >= t} |rho(s)|` at every sample, assuming `ts` increasing.
fn tail_envelope(rhos: &[Complex64]) -> Vec<f64> {
    let mut env = vec![0.0; rhos.len()];
    let mut run: f64 = 0.0;
    for (k, r) in rhos.iter().enumerate().rev() {
        run = run.max(r.norm());
        env[k] = run;
    }
    env
}

/// Fits all three models to `log` of the tail envelope `max_{s >= t} |rho(s)|`.
///
/// The envelope removes zero crossings of oscillating curves. Only samples
/// with `t > 0` and envelope above `noise_floor` are used.
pub fn fit_decay(ts: &[f64], rhos: &[Complex64], noise_floor: f64) -> Result<DecayReport> {
    if ts.len() != rhos.len() {
        return Err(Error::InvalidArgument(format!(
            "{} times but {} correlation values",
            ts.len(),
            rhos.len()
        )));
    }
    if ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("times must be strictly increasing".into()));
    }
    let env = tail_envelope(rhos);
    let (t_used, y): (Vec<f64>, Vec<f64>) = ts
        .iter()
        .zip(&env)
        .filter(|(&t, &e)| t > 0.0 && e > noise_floor)
        .map(|(&t, &e)| (t, e.ln()))
        .unzip();
    if t_used.len() < MIN_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_POINTS,
            got: t_used.len(),
        });
    }
    let t_range = (t_used[0], *t_used.last().unwrap());
    let fits: Vec<DecayFit> = DecayModel::ALL
        .iter()
        .map(|&model| {
            let x: Vec<f64> = t_used.iter().map(|&t| model.abscissa(t)).collect();
            let (icpt, slope, r2) = linear_fit(&x, &y);
            DecayFit {
                model,
                delta: (-slope).max(0.0),
                prefactor: icpt.exp(),
                r_squared: r2,
                t_range,
                points: x.len(),
            }
        })
        .collect();
    let best = fits
        .iter()
        .fold(None::<&DecayFit>, |acc, f| match acc {
            Some(a) if a.r_squared >= f.r_squared => Some(a),
            _ => Some(f),
        })
        .unwrap()
        .model;
    Ok(DecayReport {
        fits,
        best,
        caveat: CAVEAT.to_string(),
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub holds: bool,
    /// `min_t (C e^{-delta sqrt t} - |rho(t)|)`.
    pub min_slack: f64,
    pub worst_t: f64,
}

/// Checks `|rho(t)| <= C e^{-delta sqrt t}` at every sample.
pub fn envelope_check(ts: &[f64], rhos: &[Complex64], c: f64, delta: f64) -> EnvelopeCheck {
    let mut out = EnvelopeCheck {
        holds: true,
        min_slack: f64::INFINITY,
        worst_t: f64::NAN,
    };
    for (&t, r) in ts.iter().zip(rhos) {
        let slack = DecayModel::Stretched.eval(c, delta, t) - r.norm();
        if slack < out.min_slack {
            out.min_slack = slack;
            out.worst_t = t;
        }
    }
    out.holds = out.min_slack >= 0.0;
    out
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContourValue {
    pub t: f64,
    pub value: f64,
    /// Natural log of `value`, accurate even when `value` underflows.
    pub log_value: f64,
    /// Bound on the neglected part beyond the integration range, relative to `value`.
    pub tail: f64,
    /// Upper limit of `|b|` actually integrated to.
    pub b_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContourTable {
    pub alpha: f64,
    pub delta1: f64,
    pub rows: Vec<ContourValue>,
    /// Slope of `log value` against `sqrt t`, an empirical `-delta_2`.
    pub slope: f64,
    pub r_squared: f64,
}

/// `int_{|b| >= 3} exp(-delta1 t / log|b|) log|b| / |b|^{1+alpha} db`.
///
/// With `v = log b` the integrand is `2 v exp(-delta1 t / v - alpha v)`,
/// peaked at `v* = sqrt(delta1 t / alpha)`. The range is cut at
/// `max(log b_max, v*) + 50 / alpha`; beyond it the integrand is below
/// `v e^{-alpha v}`, whose tail is added as a relative bound.
pub fn contour_integral(alpha: f64, delta1: f64, t: f64, b_max: f64) -> Result<ContourValue> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(delta1 > 0.0) || !(t >= 0.0) || !(b_max > 3.0) {
        return Err(Error::InvalidArgument(format!(
            "need delta1 > 0, t >= 0, b_max > 3; got {delta1}, {t}, {b_max}"
        )));
    }
    let v0 = 3f64.ln();
    let phi = |v: f64| v.ln() - delta1 * t / v - alpha * v;
    let v_star = (delta1 * t / alpha).sqrt();
    let peak = if v_star > v0 { phi(v_star) } else { phi(v0) };
    let v_end = b_max.ln().max(v_star) + 50.0 / alpha;
    let out = quadrature::integrate(|v| (phi(v) - peak).exp(), v0, v_end, 1e-13);
    let scaled = out.integral;
    let log_value = LN_2 + peak + scaled.ln();
    let tail_abs = (-alpha * v_end).exp() * (v_end / alpha + 1.0 / (alpha * alpha));
    Ok(ContourValue {
        t,
        value: log_value.exp(),
        log_value,
        tail: 2.0 * tail_abs / log_value.exp(),
        b_max: v_end.exp(),
    })
}

/// [`contour_integral`] over `t_list` with a fit of `log value` against `sqrt t`.
pub fn contour_bound_check(alpha: f64, delta1: f64, t_list: &[f64]) -> Result<ContourTable> {
    let rows: Vec<ContourValue> = t_list
        .iter()
        .map(|&t| contour_integral(alpha, delta1, t, DEFAULT_TRUNCATION))
        .collect::<Result<_>>()?;
    let (slope, r_squared) = if rows.len() >= 2 {
        let x: Vec<f64> = rows.iter().map(|r| r.t.sqrt()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.log_value).collect();
        let (_, s, r2) = linear_fit(&x, &y);
        (s, r2)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(ContourTable {
        alpha,
        delta1,
        rows,
        slope,
        r_squared,
    })
}
