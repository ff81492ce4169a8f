//! Empirical spectral probes of `L_{ib}`: Lasota–Yorke constants, Dolgopyat
//! contraction counts and the resolvent half-width.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BNormContext, Grid, GridFunction};
use crate::system::System;
use crate::transfer::{resolvent_apply, ResolventOptions};

type ProbeFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// A named test function of `x`, defined in closed form so that it can be
/// sampled on any grid.
#[derive(Clone)]
pub struct Probe {
    pub name: String,
    f: ProbeFn,
}

impl Probe {
    pub fn new<F: Fn(f64) -> Complex64 + Send + Sync + 'static>(name: &str, f: F) -> Probe {
        Probe {
            name: name.to_string(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        (self.f)(x)
    }

    pub fn sample(&self, grid: &Arc<Grid>) -> GridFunction {
        GridFunction::from_fn(Arc::clone(grid), |x| self.eval(x))
    }
}

impl std::fmt::Debug for Probe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Probe({})", self.name)
    }
}

/// The fixed probe basket: constant, identity, `sin(2 pi k x)` for `k = 1, 2, 4`
/// and two seeded random Hölder Fourier fields.
#[derive(Debug, Clone)]
pub struct ProbeBasket {
    pub probes: Vec<Probe>,
}

const HOLDER_MODES: usize = 64;

impl ProbeBasket {
    pub fn standard(seed: u64, alpha: f64) -> ProbeBasket {
        let mut probes = vec![
            Probe::new("const", |_| Complex64::new(1.0, 0.0)),
            Probe::new("x", |x| Complex64::new(x, 0.0)),
        ];
        for k in [1.0, 2.0, 4.0] {
            probes.push(Probe::new(&format!("sin{k}"), move |x| {
                Complex64::new((2.0 * PI * k * x).sin(), 0.0)
            }));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for name in ["holder_a", "holder_b"] {
            probes.push(random_holder_field(name, &mut rng, alpha));
        }
        ProbeBasket { probes }
    }

    pub fn constants() -> ProbeBasket {
        ProbeBasket {
            probes: vec![Probe::new("const", |_| Complex64::new(1.0, 0.0))],
        }
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }
}

/// `sum_k k^{-(1/2 + alpha)} (a_k cos 2 pi k x + b_k sin 2 pi k x)` with complex
/// Gaussian coefficients, scaled so the coefficient sum is one.
fn random_holder_field(name: &str, rng: &mut ChaCha8Rng, alpha: f64) -> Probe {
    let mut coeffs = Vec::with_capacity(HOLDER_MODES);
    let mut total = 0.0;
    for k in 1..=HOLDER_MODES {
        let mut g = || -> f64 { StandardNormal.sample(rng) };
        let a = Complex64::new(g(), g());
        let b = Complex64::new(g(), g());
        let w = (k as f64).powf(-(0.5 + alpha));
        total += w * (a.norm() + b.norm());
        coeffs.push((k as f64, a * w, b * w));
    }
    for c in &mut coeffs {
        c.1 /= total;
        c.2 /= total;
    }
    Probe::new(name, move |x| {
        coeffs
            .iter()
            .map(|&(k, a, b)| a * (2.0 * PI * k * x).cos() + b * (2.0 * PI * k * x).sin())
            .sum()
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LyRecord {
    pub probe: String,
    pub b: f64,
    pub n: usize,
    /// `|L^n h|_alpha`.
    pub seminorm: f64,
    pub h_sup: f64,
    pub h_seminorm: f64,
    /// The ratio whose maximum defines `C9`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LasotaYorkeFit {
    pub c9: f64,
    pub lambda: f64,
    pub alpha: f64,
    /// Least `n` with `1/2 + C9 lambda^{alpha n} <= 3/4`.
    pub n1: usize,
    pub records: Vec<LyRecord>,
}

impl LasotaYorkeFit {
    /// Right-hand side of the inequality for one record.
    pub fn bound(&self, rec: &LyRecord) -> f64 {
        self.c9
            * (rec.b.abs().powf(self.alpha) * rec.h_sup
                + self.lambda.powf(self.alpha * rec.n as f64) * rec.h_seminorm)
    }

    /// The default `C3 = 4 C9`.
    pub fn c3(&self) -> f64 {
        4.0 * self.c9
    }
}

/// Smallest `C9` with `|L_{ib}^n h|_alpha <= C9 (|b|^alpha |h|_inf + lambda^{alpha n} |h|_alpha)`
/// over the basket.
pub fn lasota_yorke_fit(
    system: &System,
    b_list: &[f64],
    n_list: &[usize],
    basket: &ProbeBasket,
) -> Result<LasotaYorkeFit> {
    if let Some(&b) = b_list.iter().find(|b| b.abs() < 3.0) {
        return Err(Error::InvalidArgument(format!("Lasota-Yorke fit needs |b| >= 3, got {b}")));
    }
    if n_list.is_empty() || b_list.is_empty() || basket.is_empty() {
        return Err(Error::InvalidArgument("empty b-list, n-list or basket".into()));
    }
    let alpha = system.alpha();
    let lambda = system.map().expansion().lambda;
    let n_max = *n_list.iter().max().unwrap();
    let grid = system.grid();
    let mut records = Vec::new();
    for probe in &basket.probes {
        let h = probe.sample(grid);
        let (h_sup, h_semi) = (h.sup_norm(), h.holder_seminorm());
        for &b in b_list {
            let op = system.operator(Complex64::new(0.0, b));
            let mut g = h.clone();
            for n in 1..=n_max {
                g = op.apply(&g);
                if n_list.contains(&n) {
                    let semi = g.holder_seminorm();
                    let denom = b.abs().powf(alpha) * h_sup + lambda.powf(alpha * n as f64) * h_semi;
                    records.push(LyRecord {
                        probe: probe.name.clone(),
                        b,
                        n,
                        seminorm: semi,
                        h_sup,
                        h_seminorm: h_semi,
                        ratio: semi / denom,
                    });
                }
            }
        }
    }
    let c9 = records.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let n1 = (1..=10_000)
        .find(|&n| 0.5 + c9 * lambda.powf(alpha * n as f64) <= 0.75)
        .unwrap_or(10_000);
    Ok(LasotaYorkeFit {
        c9,
        lambda,
        alpha,
        n1,
        records,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DolgopyatOptions {
    pub target: f64,
    pub cap: usize,
    pub c3: f64,
    /// Refine the grid with `|b|` so that phases stay resolved.
    pub refine: bool,
}

impl DolgopyatOptions {
    pub fn new(c3: f64) -> Self {
        DolgopyatOptions {
            target: 0.75,
            cap: 1000,
            c3,
            refine: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DolgopyatTrace {
    pub b: f64,
    /// Smallest `N` with `max_h ||L^N h||_b / ||h||_b <= target`.
    pub n: usize,
    /// Worst ratio after each iteration.
    pub trace: Vec<f64>,
    pub nodes: usize,
    pub admitted: Vec<String>,
}

/// Nodes per interval needed to resolve `e^{-i b r}` on the preimages.
pub fn nodes_for_frequency(system: &System, b: f64) -> usize {
    let widest = system.map().intervals().iter().map(|iv| iv.len()).fold(0.0, f64::max);
    let need = (8.0 * b.abs() * widest).ceil() as usize;
    let current = system.grid().m();
    if need < current {
        current
    } else {
        need.next_power_of_two() + 1
    }
}

/// Iterates `L_{ib}` on the admissible part of the basket until the `b`-norm
/// contracts to `target`.
pub fn dolgopyat_probe(
    system: &System,
    b: f64,
    opts: &DolgopyatOptions,
    basket: &ProbeBasket,
) -> Result<DolgopyatTrace> {
    if !(opts.target > 0.0 && opts.target < 1.0) {
        return Err(Error::InvalidArgument(format!("target must be in (0,1), got {}", opts.target)));
    }
    let ctx = BNormContext::new(b, opts.c3, system.alpha())?;
    let refined;
    let sys = if opts.refine {
        let m = nodes_for_frequency(system, b);
        if m != system.grid().m() {
            refined = system.with_nodes(m)?;
            &refined
        } else {
            system
        }
    } else {
        system
    };
    let grid = sys.grid();
    let bound = 2.0 * opts.c3 * b.abs().powf(ctx.alpha);
    let mut admitted = Vec::new();
    let mut funcs = Vec::new();
    for p in &basket.probes {
        let h = p.sample(grid);
        if h.holder_seminorm() <= bound * h.sup_norm() && h.sup_norm() > 0.0 {
            admitted.push(p.name.clone());
            let nrm = h.b_norm(&ctx);
            funcs.push((h, nrm));
        }
    }
    if funcs.is_empty() {
        return Err(Error::InvalidArgument("no probe satisfies the seminorm hypothesis".into()));
    }
    let op = sys.operator(Complex64::new(0.0, b));
    let mut trace = Vec::new();
    for n in 1..=opts.cap {
        let mut worst: f64 = 0.0;
        for (h, h0) in funcs.iter_mut() {
            *h = op.apply(h);
            worst = worst.max(h.b_norm(&ctx) / *h0);
        }
        trace.push(worst);
        if worst <= opts.target {
            return Ok(DolgopyatTrace {
                b,
                n,
                trace,
                nodes: grid.m(),
                admitted,
            });
        }
    }
    Err(Error::NoContraction {
        b,
        target: opts.target,
        cap: opts.cap,
    })
}

/// Largest `a < 0` (to `tol`) at which the Neumann series for `L_{a+ib}`
/// still converges on `h = 1`, searched in `[a_min, 0]`.
pub fn resolvent_halfwidth(system: &System, b: f64, a_min: f64, tol: f64) -> f64 {
    let one = system.function(|_| Complex64::new(1.0, 0.0));
    let converges = |a: f64| {
        let op = system.operator(Complex64::new(a, b));
        resolvent_apply(&op, &one, &ResolventOptions::default()).is_ok()
    };
    if !converges(0.0) {
        return 0.0;
    }
    if converges(a_min) {
        return a_min;
    }
    let (mut lo, mut hi) = (a_min, 0.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if converges(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
