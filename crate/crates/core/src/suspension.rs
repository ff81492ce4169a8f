//! The suspension semiflow, its invariant measure and correlation functions.
//!
//! Every integral against the flow-invariant probability carries the factor
//! `1 / integral r d mu`, so that `Delta + chi = rho`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::markov_map::MarkovMap;
use crate::observable::SuspensionObservable;
use crate::quad;
use crate::renewal::{self, RenewalOptions};
use crate::roof::RoofFunction;
use crate::system::System;
use crate::transfer::{resolvent_apply, ResolventOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuspensionPoint {
    pub x: f64,
    pub u: f64,
}

impl SuspensionPoint {
    pub fn new(x: f64, u: f64, map: &MarkovMap, roof: &RoofFunction) -> Result<SuspensionPoint> {
        map.interval_of(x).ok_or(Error::Domain(x))?;
        if !(u >= 0.0 && u < roof.eval(x)) {
            return Err(Error::InvalidArgument(format!(
                "height {u} outside [0, r(x)) at x = {x}"
            )));
        }
        Ok(SuspensionPoint { x, u })
    }
}

/// `phi_t(x, u)`: rise at unit speed and jump `(x, r(x)) -> (T x, 0)`.
pub fn flow(map: &MarkovMap, roof: &RoofFunction, p: SuspensionPoint, t: f64) -> Result<SuspensionPoint> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("flow time must be >= 0, got {t}")));
    }
    let mut x = p.x;
    let mut height = p.u + t;
    loop {
        let r = roof.eval(x);
        if height < r {
            return Ok(SuspensionPoint { x, u: height });
        }
        height -= r;
        x = map.forward(x)?;
    }
}

/// `int E(phi_t(x,u)) F(x,u) du` over `u` in `[ua, ub]`, split where the orbit crosses the roof.
fn fiber_integral(
    map: &MarkovMap,
    roof: &RoofFunction,
    x: f64,
    t: f64,
    (ua, ub): (f64, f64),
    e: &SuspensionObservable,
    f: &SuspensionObservable,
) -> Result<Complex64> {
    if ub <= ua {
        return Ok(Complex64::new(0.0, 0.0));
    }
    // orbit points and cumulative crossing times c_k = r_k(x)
    let mut xs = vec![x];
    let mut rs = vec![roof.eval(x)];
    let mut cross = vec![0.0, rs[0]];
    while *cross.last().unwrap() <= ub + t {
        let next = map.forward(*xs.last().unwrap())?;
        let r = roof.eval(next);
        xs.push(next);
        rs.push(r);
        cross.push(cross.last().unwrap() + r);
    }
    let rx = rs[0];
    let mut breaks = vec![ua];
    for &c in &cross {
        let u = c - t;
        if u > ua && u < ub {
            breaks.push(u);
        }
    }
    breaks.push(ub);
    let mut total = Complex64::new(0.0, 0.0);
    for w in breaks.windows(2) {
        let mid = 0.5 * (w[0] + w[1]) + t;
        let k = cross.partition_point(|&c| c <= mid) - 1;
        let (xk, rk, ck) = (xs[k], rs[k], cross[k]);
        total += quad::integrate_complex(w[0], w[1], |u| {
            e.eval_with_roof(xk, u + t - ck, rk) * f.eval_with_roof(x, u, rx)
        });
    }
    Ok(total)
}

fn srb_sum<G>(system: &System, g: G) -> Result<Complex64>
where
    G: Fn(f64) -> Result<Complex64> + Sync,
{
    let grid = system.grid();
    let w = system.srb().weights();
    let vals: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|k| if w[k] == 0.0 { Ok(Complex64::new(0.0, 0.0)) } else { g(grid.node(k)) })
        .collect::<Result<Vec<_>>>()?;
    Ok(w.iter().zip(&vals).map(|(w, v)| v * w).sum::<Complex64>() / system.mean_roof())
}

/// `(1/int r d mu) int int_0^{r(x)} E(x,u) du d mu(x)`.
pub fn invariant_integral(system: &System, e: &SuspensionObservable) -> Complex64 {
    srb_sum(system, |x| {
        let r = system.roof().eval(x);
        Ok(quad::integrate_complex(0.0, r, |u| e.eval_with_roof(x, u, r)))
    })
    .expect("no fallible step")
}

/// `(1/int r d mu) int int E(phi_t(x,u)) F(x,u) du d mu` by nested quadrature.
pub fn flow_integral(
    system: &System,
    e: &SuspensionObservable,
    f: &SuspensionObservable,
    t: f64,
) -> Result<Complex64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t must be >= 0, got {t}")));
    }
    let (map, roof) = (system.map(), system.roof());
    srb_sum(system, |x| fiber_integral(map, roof, x, t, (0.0, roof.eval(x)), e, f))
}

/// `(Delta(t), chi(t))`: the parts of the correlation from heights `u < r(x) - t`
/// (no roof crossing) and `u >= r(x) - t`.
pub fn chi_delta_split(
    system: &System,
    e: &SuspensionObservable,
    f: &SuspensionObservable,
    t: f64,
) -> Result<(Complex64, Complex64)> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t must be >= 0, got {t}")));
    }
    let (map, roof) = (system.map(), system.roof());
    let delta = srb_sum(system, |x| {
        let r = roof.eval(x);
        fiber_integral(map, roof, x, t, (0.0, (r - t).max(0.0)), e, f)
    })?;
    let chi = srb_sum(system, |x| {
        let r = roof.eval(x);
        fiber_integral(map, roof, x, t, ((r - t).max(0.0), r), e, f)
    })?;
    Ok((delta, chi))
}

/// `rho_{E,F}(t) = int E o phi_t F - int E int F` by direct nested quadrature.
///
/// The integrand oscillates in `x` on the scale of the `n`-cylinders with
/// `n ~ t / inf r`, so this is accurate only for moderate `t`; see
/// [`crate::renewal`] for long curves.
pub fn correlation(
    system: &System,
    e: &SuspensionObservable,
    f: &SuspensionObservable,
    t: f64,
) -> Result<Complex64> {
    let (d, c) = chi_delta_split(system, e, f, t)?;
    let me = invariant_integral(system, e);
    let mf = invariant_integral(system, f);
    Ok(d + c - me * mf)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: Complex64,
    /// Standard error of the real and imaginary parts.
    pub std_error: (f64, f64),
    pub samples: usize,
}

const MC_CHUNK: usize = 1 << 14;

/// Monte Carlo estimate of `rho_{E,F}(t)`: `x ~ mu`, `u ~ U[0, r(x))`, weight `r(x) / int r d mu`.
pub fn correlation_monte_carlo(
    system: &System,
    e: &SuspensionObservable,
    f: &SuspensionObservable,
    t: f64,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let (map, roof) = (system.map(), system.roof());
    let sampler = SrbSampler::new(system);
    let rbar = system.mean_roof();
    let chunks = samples.div_ceil(MC_CHUNK);
    let partial: Vec<[f64; 4]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut acc = [0.0; 4];
            for _ in 0..n {
                let x = sampler.sample(&mut rng);
                let r = roof.eval(x);
                let u = rng.random::<f64>() * r;
                let p = flow(map, roof, SuspensionPoint { x, u }, t)?;
                let v = e.eval(p.x, p.u) * f.eval_with_roof(x, u, r) * (r / rbar);
                acc[0] += v.re;
                acc[1] += v.im;
                acc[2] += v.re * v.re;
                acc[3] += v.im * v.im;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s = [0.0; 4];
    for p in &partial {
        for i in 0..4 {
            s[i] += p[i];
        }
    }
    let n = samples as f64;
    let mean = Complex64::new(s[0] / n, s[1] / n);
    let var_re = (s[2] / n - mean.re * mean.re).max(0.0) * n / (n - 1.0);
    let var_im = (s[3] / n - mean.im * mean.im).max(0.0) * n / (n - 1.0);
    let me = invariant_integral(system, e);
    let mf = invariant_integral(system, f);
    Ok(MonteCarloEstimate {
        mean: mean - me * mf,
        std_error: ((var_re / n).sqrt(), (var_im / n).sqrt()),
        samples,
    })
}

/// Inverse-CDF sampling from the piecewise-linear SRB density.
struct SrbSampler {
    nodes: Vec<f64>,
    dens: Vec<f64>,
    cells: Vec<usize>,
    cdf: Vec<f64>,
}

impl SrbSampler {
    fn new(system: &System) -> SrbSampler {
        let grid = system.grid();
        let h = system.srb().density().values();
        let m = grid.m();
        let mut cells = Vec::new();
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        for i in 0..grid.intervals().len() {
            let dx = grid.spacing(i);
            for j in 0..m - 1 {
                let k = i * m + j;
                acc += 0.5 * dx * (h[k].re + h[k + 1].re);
                cells.push(k);
                cdf.push(acc);
            }
        }
        for c in &mut cdf {
            *c /= acc;
        }
        SrbSampler {
            nodes: grid.nodes(),
            dens: h.iter().map(|v| v.re).collect(),
            cells,
            cdf,
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let v: f64 = rng.random();
        let c = self.cdf.partition_point(|&p| p < v).min(self.cells.len() - 1);
        let k = self.cells[c];
        let (x0, x1) = (self.nodes[k], self.nodes[k + 1]);
        let (h0, h1) = (self.dens[k], self.dens[k + 1]);
        // linear density on the cell: invert its quadratic CDF
        let w: f64 = rng.random();
        let s = if (h1 - h0).abs() < 1e-14 * (h0 + h1) {
            w
        } else {
            let a = 0.5 * (h1 - h0);
            let total = 0.5 * (h0 + h1);
            (-h0 + (h0 * h0 + 4.0 * a * w * total).max(0.0).sqrt()) / (2.0 * a)
        };
        x0 + (x1 - x0) * s.clamp(0.0, 1.0)
    }
}

/// `e_s(x) = int_0^{r(x)} e^{-s u} E(x, u) du` on the system grid.
///
/// One 32-point panel while `|s| r <= 16`, then one panel per further 16 radians.
pub fn es_transform(system: &System, e: &SuspensionObservable, s: Complex64) -> GridFunction {
    let roof = system.roof();
    system.function(|x| {
        let r = roof.eval(x);
        let panels = (s.norm() * r / 16.0).ceil() as usize;
        quad::integrate_complex_panels(0.0, r, panels, |u| (-s * u).exp() * e.eval_with_roof(x, u, r))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceValue {
    pub s: Complex64,
    pub value: Complex64,
    /// Neumann terms used (series route) or time samples (direct route).
    pub terms: usize,
    /// Truncation estimate: last term size (series) or tail bound (direct).
    pub truncation: f64,
}

/// `hat chi(s) = (1/int r d mu) int e_s L_s (1 - L_s)^{-1} f_{-s} d mu`.
pub fn laplace_chi_series(
    system: &System,
    e: &SuspensionObservable,
    f: &SuspensionObservable,
    s: Complex64,
    opts: &ResolventOptions,
) -> Result<LaplaceValue> {
    let es = es_transform(system, e, s);
    let fs = es_transform(system, f, -s);
    let op = system.operator(s);
    let res = resolvent_apply(&op, &op.apply(&fs), opts)?;
    let rbar = system.mean_roof();
    let value = system.srb().integrate(&(&es * &res.value)) / rbar;
    Ok(LaplaceValue {
        s,
        value,
        terms: res.terms,
        truncation: res.last_norm * es.sup_norm() / rbar,
    })
}

/// `int_0^T e^{-s t} chi(t) dt` by Simpson's rule on the renewal curve at step `2 dt`, with
/// tail bound `|E|_inf |F|_inf e^{-a T} / a`. The curve is computed once for all `s`.
pub fn laplace_direct(
    system: &System,
    e: &SuspensionObservable,
    f: &SuspensionObservable,
    s_list: &[Complex64],
    t_max: f64,
    opts: &RenewalOptions,
) -> Result<Vec<LaplaceValue>> {
    if let Some(s) = s_list.iter().find(|s| !(s.re > 0.0)) {
        return Err(Error::InvalidArgument(format!("direct Laplace route needs Re s > 0, got {s}")));
    }
    if !(t_max > 0.0) {
        return Err(Error::InvalidArgument(format!("T_max must be positive, got {t_max}")));
    }
    let fine = RenewalOptions {
        out_step: 2.0 * opts.dt,
        ..*opts
    };
    let curve = renewal::chi_curve(system, e, f, t_max, &fine)?;
    let bound = e.sup_norm(system) * f.sup_norm(system);
    let h = curve.step;
    let n = curve.t.len() - 1;
    Ok(s_list
        .iter()
        .map(|&s| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, (&t, &c)) in curve.t.iter().zip(&curve.chi).enumerate() {
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += (-s * t).exp() * c * w;
            }
            let t_end = curve.t[n];
            LaplaceValue {
                s,
                value: acc * (h / 3.0),
                terms: n + 1,
                truncation: bound * (-s.re * t_end).exp() / s.re,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalogue;
    use std::sync::Arc;

    fn obs(sys: &System, name: &str) -> SuspensionObservable {
        SuspensionObservable::parse(name, Arc::clone(sys.roof())).unwrap()
    }

    #[test]
    fn flow_examples() {
        let (map, roof) = catalogue::build_preset("doub2-constant").unwrap();
        let p = SuspensionPoint::new(0.2, 0.5, &map, &roof).unwrap();
        let q = flow(&map, &roof, p, 0.8).unwrap();
        assert!((q.x - 0.4).abs() < 1e-15 && (q.u - 0.3).abs() < 1e-14);
        assert_eq!(flow(&map, &roof, p, 0.0).unwrap(), p);
        let (map, roof) = catalogue::build_preset("doub2-linear").unwrap();
        let p = SuspensionPoint::new(0.2, 0.0, &map, &roof).unwrap();
        let q = flow(&map, &roof, p, 1.05).unwrap();
        assert_eq!((q.x, q.u), (0.2, 1.05));
        assert!(flow(&map, &roof, p, -1.0).is_err());
        assert!(SuspensionPoint::new(0.2, 1.1, &map, &roof).is_err());
    }

    #[test]
    fn invariant_integral_examples() {
        let sys = System::preset("doub2-constant", 257).unwrap();
        assert!((invariant_integral(&sys, &obs(&sys, "const")) - 1.0).norm() < 1e-12);
        assert!((invariant_integral(&sys, &obs(&sys, "u")) - 0.5).norm() < 1e-6);
        let sys = System::preset("doub2-linear", 1025).unwrap();
        assert!((sys.mean_roof() - 1.25).abs() < 1e-6);
    }

    #[test]
    fn split_is_additive_and_delta_vanishes_late() {
        let sys = System::preset("doub2-quadratic", 257).unwrap();
        let e = obs(&sys, "sin_ur").centered(&sys);
        let f = obs(&sys, "cos_u*x").centered(&sys);
        for t in [0.0, 0.4, 1.1] {
            let (d, c) = chi_delta_split(&sys, &e, &f, t).unwrap();
            let rho = correlation(&sys, &e, &f, t).unwrap();
            assert!((d + c - rho).norm() < 1e-8);
        }
        let (d, _) = chi_delta_split(&sys, &e, &f, 1.3).unwrap();
        assert!(d.norm() < 1e-12);
    }

    #[test]
    fn centered_constant_has_no_correlation() {
        let sys = System::preset("nonlin-quadratic", 257).unwrap();
        let e = obs(&sys, "const").centered(&sys);
        let f = obs(&sys, "sin_u*x").centered(&sys);
        for t in [0.0, 0.7, 2.5] {
            assert!(correlation(&sys, &e, &f, t).unwrap().norm() < 1e-10);
        }
    }

    #[test]
    fn variance_at_zero() {
        let sys = System::preset("doub2-kink", 257).unwrap();
        let e = obs(&sys, "sin_ur*x").centered(&sys);
        let v = correlation(&sys, &e, &e, 0.0).unwrap();
        assert!(v.re > 0.0 && v.im.abs() < 1e-15);
    }

    #[test]
    fn es_examples() {
        let sys = System::preset("doub2-constant", 129).unwrap();
        let one = obs(&sys, "const");
        let e1 = es_transform(&sys, &one, Complex64::new(1.0, 0.0));
        assert!(e1.values().iter().all(|v| (v.re - (1.0 - (-1.0f64).exp())).abs() < 1e-14));
        let e20 = es_transform(&sys, &one, Complex64::new(0.0, 20.0));
        assert!(e20.sup_norm() <= 0.1);
        let sys = System::preset("doub2-quadratic", 129).unwrap();
        let e0 = es_transform(&sys, &obs(&sys, "const"), Complex64::new(0.0, 0.0));
        for k in 0..sys.grid().len() {
            assert!((e0.values()[k].re - sys.roof().eval(sys.grid().node(k))).abs() < 1e-14);
        }
    }

    #[test]
    fn laplace_series_damps_centered_observables() {
        let sys = System::preset("doub2-quadratic", 257).unwrap();
        let e = obs(&sys, "sin_ur").centered(&sys);
        let mut last = f64::INFINITY;
        for a in [1.0, 4.0, 16.0] {
            let v = laplace_chi_series(&sys, &e, &e, Complex64::new(a, 2.0), &ResolventOptions::default())
                .unwrap()
                .value
                .norm();
            assert!(v < last);
            last = v;
        }
        assert!(last < 1e-3);
    }
}
