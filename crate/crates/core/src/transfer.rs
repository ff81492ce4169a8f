//! Twisted transfer operators `L_s f(x) = sum_y e^{(phi - s r)(y x)} f(y x)`.
//!
//! The operator is discretised as a sparse kernel: each grid node `x` receives
//! one contribution per inverse branch, read off the grid by linear
//! interpolation at `y(x)`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BNormContext, Grid, GridFunction};
use crate::markov_map::MarkovMap;
use crate::roof::RoofFunction;

/// Default nodes per interval.
pub const DEFAULT_NODES: usize = 1025;

const EIGEN_TOL: f64 = 1e-13;
const EIGEN_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy)]
pub(crate) struct KernelEntry {
    /// Lower interpolation node of the preimage.
    pub src: usize,
    pub frac: f64,
    /// `|y'(x)|`.
    pub deriv: f64,
    /// `r(y x)`.
    pub roof: f64,
    /// `y x`.
    pub point: f64,
}

/// Preimage structure of all grid nodes.
#[derive(Debug, Clone)]
pub struct Kernel {
    grid: Arc<Grid>,
    offsets: Vec<usize>,
    entries: Vec<KernelEntry>,
}

impl Kernel {
    pub fn new(map: &MarkovMap, roof: &RoofFunction, grid: Arc<Grid>) -> Kernel {
        let n = map.len();
        let mut offsets = Vec::with_capacity(grid.len() + 1);
        let mut entries = Vec::new();
        offsets.push(0);
        for k in 0..grid.len() {
            let j = grid.interval_of_node(k);
            let x = grid.node(k);
            for i in 0..n {
                if let Some(b) = map.branch(i, j) {
                    let (y, dy) = b.eval(x);
                    let y = map.interval(i).clamp(y);
                    let (src, frac) = grid.stencil_in(i, y);
                    entries.push(KernelEntry {
                        src,
                        frac,
                        deriv: dy.abs(),
                        roof: roof.eval(y),
                        point: y,
                    });
                }
            }
            offsets.push(entries.len());
        }
        Kernel { grid, offsets, entries }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub(crate) fn entries(&self) -> &[KernelEntry] {
        &self.entries
    }

    pub(crate) fn row(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    /// Applies the kernel with per-entry weights.
    pub(crate) fn apply_weighted(&self, weights: &[Complex64], f: &[Complex64]) -> Vec<Complex64> {
        let interp = |e: &KernelEntry| f[e.src] * (1.0 - e.frac) + f[e.src + 1] * e.frac;
        (0..self.grid.len())
            .into_par_iter()
            .with_min_len(256)
            .map(|k| {
                self.row(k)
                    .map(|e| weights[e] * interp(&self.entries[e]))
                    .sum::<Complex64>()
            })
            .collect()
    }
}

/// Leading eigendata of the unnormalised operator with the geometric potential.
#[derive(Debug, Clone)]
pub struct EigenReport {
    pub eigenvalue: f64,
    /// Positive eigenfunction with `(1/|I|) integral h dx = 1`.
    pub density: GridFunction,
    pub iterations: usize,
}

/// Power iteration for the leading eigenpair of `L_0`.
pub fn leading_eigen(kernel: &Kernel) -> Result<EigenReport> {
    let grid = Arc::clone(kernel.grid());
    let w: Vec<Complex64> = kernel.entries.iter().map(|e| Complex64::new(e.deriv, 0.0)).collect();
    let mut h = GridFunction::constant(Arc::clone(&grid), Complex64::new(1.0, 0.0));
    let mut change = f64::INFINITY;
    for it in 1..=EIGEN_MAX_ITER {
        let g = GridFunction::new(Arc::clone(&grid), kernel.apply_weighted(&w, h.values()))?;
        let lambda = g.lebesgue_mean().re / h.lebesgue_mean().re;
        let next = g.scale(Complex64::new(1.0 / g.lebesgue_mean().re, 0.0));
        change = (&next - &h).sup_norm();
        h = next;
        if change < EIGEN_TOL {
            if h.values().iter().any(|v| !(v.re > 0.0)) {
                return Err(Error::Convergence {
                    iterations: it,
                    change,
                });
            }
            return Ok(EigenReport {
                eigenvalue: lambda,
                density: h,
                iterations: it,
            });
        }
    }
    Err(Error::Convergence {
        iterations: EIGEN_MAX_ITER,
        change,
    })
}

/// The normalised potential `phi + log h - log h o T - log lambda`, stored
/// through the entry weights `|y'| h(y x) / (lambda h(x))`.
#[derive(Debug, Clone)]
pub struct Potential {
    weights: Vec<f64>,
    corrector: Option<Vec<f64>>,
}

impl Potential {
    /// The raw geometric potential `log |y'|`.
    pub fn geometric(kernel: &Kernel) -> Potential {
        Potential {
            weights: kernel.entries.iter().map(|e| e.deriv).collect(),
            corrector: None,
        }
    }

    pub fn is_normalized(&self) -> bool {
        self.corrector.is_some()
    }

    /// Nodal values of `log h`, present once normalised.
    pub fn corrector(&self) -> Option<&[f64]> {
        self.corrector.as_deref()
    }

    /// Values of the potential at `y(x)` for each kernel entry, in kernel order.
    pub fn entry_values(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.ln()).collect()
    }
}

/// Normalises the geometric potential with its leading eigendata.
pub fn normalize(kernel: &Kernel, eigen: &EigenReport) -> Potential {
    let h = eigen.density.values();
    let mut weights = vec![0.0; kernel.entries.len()];
    for k in 0..kernel.grid.len() {
        for e in kernel.row(k) {
            let en = &kernel.entries[e];
            let hy = h[en.src].re * (1.0 - en.frac) + h[en.src + 1].re * en.frac;
            weights[e] = en.deriv * hy / (eigen.eigenvalue * h[k].re);
        }
    }
    Potential {
        weights,
        corrector: Some(h.iter().map(|v| v.re.ln()).collect()),
    }
}

/// The equilibrium state of the normalised potential, as quadrature weights.
#[derive(Debug, Clone)]
pub struct SrbMeasure {
    density: GridFunction,
    weights: Vec<f64>,
}

impl SrbMeasure {
    pub fn from_density(density: GridFunction) -> SrbMeasure {
        let weights = density
            .grid()
            .trapezoid_weights()
            .iter()
            .zip(density.values())
            .map(|(w, h)| w * h.re)
            .collect();
        SrbMeasure { density, weights }
    }

    /// Density with respect to normalised Lebesgue measure `dx / |I|`.
    pub fn density(&self) -> &GridFunction {
        &self.density
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, g: &GridFunction) -> Complex64 {
        self.integrate_values(g.values())
    }

    pub fn integrate_values(&self, v: &[Complex64]) -> Complex64 {
        self.weights.iter().zip(v).map(|(w, v)| v * w).sum()
    }

    pub fn integrate_real<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let grid = self.density.grid();
        (0..grid.len()).map(|k| self.weights[k] * f(grid.node(k))).sum()
    }
}

/// `integral g d mu`.
pub fn srb_integrate(g: &GridFunction, mu: &SrbMeasure) -> Complex64 {
    mu.integrate(g)
}

/// `L_s` for one value of `s`, with precomputed entry weights.
#[derive(Debug, Clone)]
pub struct TransferOperator {
    kernel: Arc<Kernel>,
    weights: Vec<Complex64>,
    s: Complex64,
}

impl TransferOperator {
    pub fn new(kernel: Arc<Kernel>, potential: &Potential, s: Complex64) -> TransferOperator {
        let weights = kernel
            .entries
            .iter()
            .zip(&potential.weights)
            .map(|(e, &w)| (-s * e.roof).exp() * w)
            .collect();
        TransferOperator { kernel, weights, s }
    }

    pub fn s(&self) -> Complex64 {
        self.s
    }

    pub(crate) fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn kernel(&self) -> &Arc<Kernel> {
        &self.kernel
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.kernel.grid()
    }

    pub fn apply(&self, f: &GridFunction) -> GridFunction {
        let values = self.kernel.apply_weighted(&self.weights, f.values());
        GridFunction::new(Arc::clone(f.grid()), values).expect("same grid")
    }

    pub fn apply_n(&self, f: &GridFunction, n: usize) -> GridFunction {
        (0..n).fold(f.clone(), |g, _| self.apply(&g))
    }
}

/// One-shot application of `L_s` (builds the kernel).
pub fn apply_transfer(
    map: &MarkovMap,
    potential_normalized: bool,
    roof: &RoofFunction,
    s: Complex64,
    f: &GridFunction,
) -> Result<GridFunction> {
    let kernel = Arc::new(Kernel::new(map, roof, Arc::clone(f.grid())));
    let pot = if potential_normalized {
        normalize(&kernel, &leading_eigen(&kernel)?)
    } else {
        Potential::geometric(&kernel)
    };
    Ok(TransferOperator::new(kernel, &pot, s).apply(f))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResolventOptions {
    pub tol: f64,
    pub max_terms: usize,
    /// Use this `b`-norm for the stopping rule when `|b| >= 3`.
    pub bnorm: Option<BNormContext>,
}

impl Default for ResolventOptions {
    fn default() -> Self {
        ResolventOptions {
            tol: 1e-12,
            max_terms: 10_000,
            bnorm: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResolventSum {
    pub value: GridFunction,
    pub terms: usize,
    pub last_norm: f64,
}

/// Consecutive non-decreasing term norms tolerated before giving up.
const STALL_LIMIT: usize = 50;

/// `sum_{n >= 0} L_s^n f` by Neumann series.
pub fn resolvent_apply(
    op: &TransferOperator,
    f: &GridFunction,
    opts: &ResolventOptions,
) -> Result<ResolventSum> {
    let norm = |g: &GridFunction| match opts.bnorm {
        Some(ctx) if ctx.b.abs() >= 3.0 => g.b_norm(&ctx),
        _ => g.sup_norm(),
    };
    let mut sum = f.clone();
    let mut term = f.clone();
    let mut prev = norm(&term);
    let mut terms = 1;
    let mut stall = 0;
    if prev < opts.tol {
        return Ok(ResolventSum {
            value: sum,
            terms,
            last_norm: prev,
        });
    }
    loop {
        if terms >= opts.max_terms {
            return Err(Error::Divergence {
                terms,
                last_norm: prev,
            });
        }
        term = op.apply(&term);
        let nrm = norm(&term);
        if !nrm.is_finite() {
            return Err(Error::Divergence {
                terms,
                last_norm: nrm,
            });
        }
        sum = &sum + &term;
        terms += 1;
        if nrm < opts.tol {
            return Ok(ResolventSum {
                value: sum,
                terms,
                last_norm: nrm,
            });
        }
        if nrm >= prev * (1.0 - 1e-12) {
            stall += 1;
            if stall >= STALL_LIMIT {
                return Err(Error::Divergence {
                    terms,
                    last_norm: nrm,
                });
            }
        } else {
            stall = 0;
        }
        prev = nrm;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalogue;

    fn setup(name: &str, m: usize) -> (Arc<Kernel>, Potential, SrbMeasure) {
        let (map, roof) = catalogue::build_preset(name).unwrap();
        let grid = Arc::new(Grid::new(map.intervals(), m, map.alpha()).unwrap());
        let kernel = Arc::new(Kernel::new(&map, &roof, grid));
        let eig = leading_eigen(&kernel).unwrap();
        let pot = normalize(&kernel, &eig);
        (kernel, pot, SrbMeasure::from_density(eig.density))
    }

    #[test]
    fn doubling_eigendata_is_trivial() {
        let (kernel, _, _) = setup("doub2-constant", 257);
        let eig = leading_eigen(&kernel).unwrap();
        assert!((eig.eigenvalue - 1.0).abs() < 1e-14);
        assert!(eig.density.values().iter().all(|v| (v.re - 1.0).abs() < 1e-13));
    }

    #[test]
    fn normalized_operator_fixes_constants() {
        let (kernel, pot, _) = setup("nonlin-quadratic", 1025);
        let op = TransferOperator::new(kernel, &pot, Complex64::new(0.0, 0.0));
        let one = GridFunction::constant(Arc::clone(op.grid()), Complex64::new(1.0, 0.0));
        let l1 = op.apply(&one);
        assert!(l1.values().iter().all(|v| (v - 1.0).norm() < 1e-12));
    }

    #[test]
    fn constant_roof_twist_example() {
        let (kernel, pot, _) = setup("doub2-constant", 257);
        let op = TransferOperator::new(kernel, &pot, Complex64::new(1.0, 0.0));
        let one = GridFunction::constant(Arc::clone(op.grid()), Complex64::new(1.0, 0.0));
        let e = (-1.0f64).exp();
        assert!(op.apply(&one).values().iter().all(|v| (v.re - e).abs() < 1e-15));
    }

    #[test]
    fn srb_is_a_probability() {
        let (_, _, mu) = setup("nonlin-quadratic", 513);
        let total: f64 = mu.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn resolvent_examples() {
        let (kernel, pot, _) = setup("doub2-constant", 257);
        let grid = Arc::clone(kernel.grid());
        let one = GridFunction::constant(Arc::clone(&grid), Complex64::new(1.0, 0.0));
        let s = Complex64::new(0.5, 0.0);
        let op = TransferOperator::new(Arc::clone(&kernel), &pot, s);
        let r = resolvent_apply(&op, &one, &ResolventOptions::default()).unwrap();
        let expect = 1.0 / (1.0 - (-0.5f64).exp());
        assert!(r.value.values().iter().all(|v| (v.re - expect).abs() < 1e-10));

        let op = TransferOperator::new(Arc::clone(&kernel), &pot, Complex64::new(20.0, 0.0));
        let r = resolvent_apply(&op, &one, &ResolventOptions::default()).unwrap();
        assert!(r.terms <= 3);

        for s in [Complex64::new(0.0, 0.0), Complex64::new(0.0, 2.0 * std::f64::consts::PI)] {
            let op = TransferOperator::new(Arc::clone(&kernel), &pot, s);
            assert!(matches!(
                resolvent_apply(&op, &one, &ResolventOptions::default()),
                Err(Error::Divergence { .. })
            ));
        }
    }

    #[test]
    fn corrector_vanishes_for_affine_maps() {
        for name in ["doub2-quadratic", "tri3-kink"] {
            let (_, pot, _) = setup(name, 257);
            assert!(pot.corrector().unwrap().iter().all(|c| c.abs() < 1e-12));
        }
    }

    #[test]
    fn duality_and_resolvent_identity() {
        let (kernel, pot, mu) = setup("nonlin-quadratic", 513);
        let grid = Arc::clone(kernel.grid());
        let f = GridFunction::from_fn(Arc::clone(&grid), |x| Complex64::new((7.0 * x).sin(), x * x));
        let l0 = TransferOperator::new(Arc::clone(&kernel), &pot, Complex64::new(0.0, 0.0));
        assert!((mu.integrate(&l0.apply(&f)) - mu.integrate(&f)).norm() < 1e-6);

        let op = TransferOperator::new(kernel, &pot, Complex64::new(0.7, 4.0));
        let opts = ResolventOptions::default();
        let r = resolvent_apply(&op, &f, &opts).unwrap();
        let back = &r.value - &op.apply(&r.value);
        assert!((&back - &f).sup_norm() <= opts.tol * r.terms as f64);
    }

    #[test]
    fn constant_roof_twist_covariance() {
        let (map, _) = catalogue::build_preset("nonlin-constant").unwrap();
        let roof = RoofFunction::constant(1.3, &map).unwrap();
        let grid = Arc::new(Grid::new(map.intervals(), 257, 0.5).unwrap());
        let kernel = Arc::new(Kernel::new(&map, &roof, Arc::clone(&grid)));
        let pot = normalize(&kernel, &leading_eigen(&kernel).unwrap());
        let f = GridFunction::from_real(grid, |x| (3.0 * x).cos());
        let s = Complex64::new(0.4, -9.0);
        let lhs = TransferOperator::new(Arc::clone(&kernel), &pot, s).apply(&f);
        let rhs = TransferOperator::new(kernel, &pot, Complex64::new(0.0, 0.0))
            .apply(&f)
            .scale((-s * 1.3).exp());
        assert!((&lhs - &rhs).sup_norm() < 1e-14);
    }
}
