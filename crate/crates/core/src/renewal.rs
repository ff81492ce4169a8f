//! Correlation curves through the roof-arrival density.
//!
//! Mass of `F` leaves the fibres through the roof and re-enters at the base.
//! Let `Q(sigma, z)` be the density (against `mu`) of arrivals at `(z, 0)` at
//! time `sigma`, weighted by `F`. It satisfies the renewal equation
//!
//! `Q(sigma, .) = L[ F(., r - sigma) 1{sigma < r} + Q(sigma - r(.), .) ]`
//!
//! with `L` the normalised transfer operator at `s = 0`. Then
//! `chi(t) = (1/R) int int_{t - r(z)}^{t} Q(sigma, z) E(z, t - sigma) d sigma d mu(z)`
//! and `Delta(t)` is a single fibre integral, with `R = int r d mu`.
//!
//! Time is discretised with step `dt`; `Q` is interpolated in time by cubic
//! Lagrange polynomials (linear next to `sigma = 0`) and in space linearly.
//! The cost is linear in `t`, and unlike direct quadrature it does not follow
//! individual orbits, so it stays accurate for long horizons.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observable::SuspensionObservable;
use crate::quad;
use crate::suspension::invariant_integral;
use crate::system::System;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenewalOptions {
    /// Time step of the arrival density.
    pub dt: f64,
    /// Spacing of the reported curve; rounded to a multiple of `dt`.
    pub out_step: f64,
}

impl Default for RenewalOptions {
    fn default() -> Self {
        RenewalOptions {
            dt: 0.005,
            out_step: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationCurve {
    pub t: Vec<f64>,
    pub rho: Vec<Complex64>,
    pub delta: Vec<Complex64>,
    pub chi: Vec<Complex64>,
}

/// `chi` sampled on an even number of uniform steps (for Simpson's rule).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChiCurve {
    pub t: Vec<f64>,
    pub chi: Vec<Complex64>,
    pub step: f64,
}

struct Engine<'a> {
    system: &'a System,
    e: &'a SuspensionObservable,
    f: &'a SuspensionObservable,
    dt: f64,
    /// Per kernel entry: normalised weight and lag `r(y x) / dt`.
    weights: Vec<f64>,
    lags: Vec<f64>,
    /// Node-major ring buffer of `Q` levels: `ring[m * depth + j % depth]`.
    ring: Vec<Complex64>,
    depth: usize,
    /// Per node: `E(z, i dt)` for `i dt < r(z)`, and `E(z, r(z))`.
    e_table: Vec<Vec<Complex64>>,
    e_top: Vec<Complex64>,
    node_roof: Vec<f64>,
    k: usize,
}

#[inline]
fn cubic_weights(th: f64) -> [f64; 4] {
    [
        -th * (th - 1.0) * (th - 2.0) / 6.0,
        (th + 1.0) * (th - 1.0) * (th - 2.0) / 2.0,
        -(th + 1.0) * th * (th - 2.0) / 2.0,
        (th + 1.0) * th * (th - 1.0) / 6.0,
    ]
}

/// Trapezoid rule over `f(0..n)` with third-order endpoint derivative corrections.
#[inline]
fn corrected_trapezoid<F: FnMut(usize) -> Complex64>(n: usize, h: f64, mut f: F) -> Complex64 {
    if n < 2 {
        return Complex64::new(0.0, 0.0);
    }
    let zero = Complex64::new(0.0, 0.0);
    let (mut head, mut tail) = ([zero; 3], [zero; 3]);
    let mut sum = zero;
    for i in 0..n {
        let v = f(i);
        sum += v;
        if i < 3 {
            head[i] = v;
        }
        tail = [tail[1], tail[2], v];
    }
    let mut t = (sum - (head[0] + tail[2]) * 0.5) * h;
    if n >= 4 {
        let db = (tail[2] * 3.0 - tail[1] * 4.0 + tail[0]) * 0.5;
        let da = (head[0] * -3.0 + head[1] * 4.0 - head[2]) * 0.5;
        t -= (db - da) * (h / 12.0);
    }
    t
}

impl<'a> Engine<'a> {
    fn new(
        system: &'a System,
        e: &'a SuspensionObservable,
        f: &'a SuspensionObservable,
        dt: f64,
    ) -> Result<Engine<'a>> {
        let roof = system.roof();
        if !(dt > 0.0 && dt <= roof.infimum() / 4.0) {
            return Err(Error::InvalidArgument(format!(
                "renewal step must lie in (0, inf r / 4 = {}], got {dt}",
                roof.infimum() / 4.0
            )));
        }
        let op = system.operator(Complex64::new(0.0, 0.0));
        let weights = op.weights().iter().map(|w| w.re).collect();
        let lags = system
            .kernel()
            .entries()
            .iter()
            .map(|en| {
                let l = en.roof / dt;
                if (l - l.round()).abs() < 1e-9 {
                    l.round()
                } else {
                    l
                }
            })
            .collect();
        let grid = system.grid();
        let levels = (roof.supremum() / dt).ceil() as usize + 8;
        let n = grid.len();
        let mut e_table = Vec::with_capacity(n);
        let mut e_top = Vec::with_capacity(n);
        let mut node_roof = Vec::with_capacity(n);
        for k in 0..n {
            let z = grid.node(k);
            let r = roof.eval(z);
            let count = (r / dt).ceil() as usize + 1;
            e_table.push((0..count).map(|i| e.eval_with_roof(z, (i as f64 * dt).min(r), r)).collect());
            e_top.push(e.eval_with_roof(z, r, r));
            node_roof.push(r);
        }
        Ok(Engine {
            system,
            e,
            f,
            dt,
            weights,
            lags,
            ring: vec![Complex64::new(0.0, 0.0); n * levels],
            depth: levels,
            e_table,
            e_top,
            node_roof,
            k: 0,
        })
    }

    #[inline]
    fn at(&self, node: usize, j: usize) -> Complex64 {
        self.ring[node * self.depth + j % self.depth]
    }

    /// `Q` at fractional level `l` (in units of `dt`), with `pick(j)` reading level `j`.
    #[inline]
    fn q_at<P: Fn(usize) -> Complex64>(&self, l: f64, pick: P) -> Complex64 {
        let lo = l.floor() as usize;
        let th = l - lo as f64;
        if th == 0.0 {
            return pick(lo);
        }
        if lo >= 1 && lo + 2 < self.k {
            let w = cubic_weights(th);
            (0..4).map(|q| pick(lo - 1 + q) * w[q]).sum()
        } else {
            pick(lo) * (1.0 - th) + pick(lo + 1) * th
        }
    }

    /// Computes `Q` at level `self.k` and advances.
    fn step(&mut self) {
        let k = self.k;
        let sigma = k as f64 * self.dt;
        let kernel = self.system.kernel();
        let entries = kernel.entries();
        let n = self.system.grid().len();
        let f = self.f;
        let this = &*self;
        let next: Vec<Complex64> = (0..n)
            .into_par_iter()
            .with_min_len(64)
            .map(|m| {
                let mut acc = Complex64::new(0.0, 0.0);
                for e in kernel.row(m) {
                    let en = &entries[e];
                    let mut v = Complex64::new(0.0, 0.0);
                    if sigma < en.roof {
                        v += f.eval_with_roof(en.point, en.roof - sigma, en.roof);
                    }
                    let l = k as f64 - this.lags[e];
                    if l >= 0.0 {
                        v += this.q_at(l, |j| {
                            this.at(en.src, j) * (1.0 - en.frac) + this.at(en.src + 1, j) * en.frac
                        });
                    }
                    acc += v * this.weights[e];
                }
                acc
            })
            .collect();
        let slot = k % self.depth;
        for (m, v) in next.into_iter().enumerate() {
            self.ring[m * self.depth + slot] = v;
        }
        self.k += 1;
    }

    /// `(Delta(t), chi(t))` at the latest computed level, before the `1/R` factor.
    fn observe(&self) -> (Complex64, Complex64) {
        let k = self.k - 1;
        let t = k as f64 * self.dt;
        let grid = self.system.grid();
        let weights = self.system.srb().weights();
        let (e, f, dt) = (self.e, self.f, self.dt);
        let parts: Vec<(Complex64, Complex64)> = (0..grid.len())
            .into_par_iter()
            .with_min_len(16)
            .map(|m| {
                if weights[m] == 0.0 {
                    return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
                }
                let z = grid.node(m);
                let r = self.node_roof[m];
                let delta = if t < r {
                    quad::integrate_complex(0.0, r - t, |u| {
                        e.eval_with_roof(z, u + t, r) * f.eval_with_roof(z, u, r)
                    })
                } else {
                    Complex64::new(0.0, 0.0)
                };
                let tab = &self.e_table[m];
                let lower = t - r;
                let row = &self.ring[m * self.depth..(m + 1) * self.depth];
                let window = |first: usize| {
                    let start = first % self.depth;
                    corrected_trapezoid(k + 1 - first, dt, |i| {
                        let mut pos = start + i;
                        if pos >= self.depth {
                            pos -= self.depth;
                        }
                        row[pos] * tab[k - first - i]
                    })
                };
                let chi = if lower <= 0.0 {
                    window(0)
                } else {
                    let l = lower / dt;
                    let lo = l.floor() as usize;
                    let phi = l - lo as f64;
                    let first = lo + 1;
                    let q_low = self.q_at(l, |j| self.at(m, j));
                    let q_first = self.at(m, first) * tab[k - first];
                    let partial = (q_low * self.e_top[m] + q_first) * (0.5 * (1.0 - phi) * dt);
                    partial + window(first)
                };
                (delta * weights[m], chi * weights[m])
            })
            .collect();
        let mut d = Complex64::new(0.0, 0.0);
        let mut c = Complex64::new(0.0, 0.0);
        for (a, b) in parts {
            d += a;
            c += b;
        }
        (d, c)
    }
}

fn stride_of(opts: &RenewalOptions) -> Result<usize> {
    if !(opts.out_step > 0.0) {
        return Err(Error::InvalidArgument(format!("output step must be positive, got {}", opts.out_step)));
    }
    Ok(((opts.out_step / opts.dt).round() as usize).max(1))
}

/// `rho(t) = Delta(t) + chi(t) - int E int F` for `t = 0, out_step, ..., >= t_max`.
pub fn correlation_curve(
    system: &System,
    e: &SuspensionObservable,
    f: &SuspensionObservable,
    t_max: f64,
    opts: &RenewalOptions,
) -> Result<CorrelationCurve> {
    if !(t_max >= 0.0) {
        return Err(Error::InvalidArgument(format!("t_max must be >= 0, got {t_max}")));
    }
    let stride = stride_of(opts)?;
    let steps = (t_max / opts.dt).ceil() as usize;
    let outputs = steps.div_ceil(stride);
    let mut engine = Engine::new(system, e, f, opts.dt)?;
    let product = invariant_integral(system, e) * invariant_integral(system, f);
    let rbar = system.mean_roof();
    let mut curve = CorrelationCurve {
        t: Vec::new(),
        rho: Vec::new(),
        delta: Vec::new(),
        chi: Vec::new(),
    };
    for k in 0..=outputs * stride {
        engine.step();
        if k % stride == 0 {
            let (d, c) = engine.observe();
            let (d, c) = (d / rbar, c / rbar);
            curve.t.push(k as f64 * opts.dt);
            curve.delta.push(d);
            curve.chi.push(c);
            curve.rho.push(d + c - product);
        }
    }
    Ok(curve)
}

/// `chi` alone on `[0, T]`, `T >= t_max` with an even number of output steps.
pub fn chi_curve(
    system: &System,
    e: &SuspensionObservable,
    f: &SuspensionObservable,
    t_max: f64,
    opts: &RenewalOptions,
) -> Result<ChiCurve> {
    let stride = stride_of(opts)?;
    let step = stride as f64 * opts.dt;
    let mut outputs = (t_max / step).ceil() as usize;
    if outputs % 2 == 1 {
        outputs += 1;
    }
    let mut engine = Engine::new(system, e, f, opts.dt)?;
    let rbar = system.mean_roof();
    let mut t = Vec::with_capacity(outputs + 1);
    let mut chi = Vec::with_capacity(outputs + 1);
    for k in 0..=outputs * stride {
        engine.step();
        if k % stride == 0 {
            t.push(k as f64 * opts.dt);
            chi.push(engine.observe().1 / rbar);
        }
    }
    Ok(ChiCurve { t, chi, step })
}
