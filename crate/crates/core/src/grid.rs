//! Piecewise-linear function spaces on a union of intervals and their norms.

use std::io::{Read, Write};
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov_map::Interval;

/// Points per interval of the subgrid used for Hölder seminorms.
pub const SEMINORM_POINTS: usize = 65;
/// Subgrid points closer than this are treated as the same point.
const COINCIDENT: f64 = 1e-12;

/// `M` equally spaced nodes (endpoints included) on each interval.
#[derive(Debug, Clone)]
pub struct Grid {
    intervals: Vec<Interval>,
    m: usize,
    alpha: f64,
    total_length: f64,
    sub_points: Vec<(usize, f64)>,
    pair_weights: Vec<(u32, u32, f64)>,
}

impl Grid {
    pub fn new(intervals: &[Interval], m: usize, alpha: f64) -> Result<Grid> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!("grid needs at least 2 nodes, got {m}")));
        }
        if intervals.is_empty() {
            return Err(Error::InvalidArgument("grid needs at least one interval".into()));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must be in (0, 1], got {alpha}")));
        }
        let mut sub_points = Vec::with_capacity(intervals.len() * SEMINORM_POINTS);
        for (i, iv) in intervals.iter().enumerate() {
            for k in 0..SEMINORM_POINTS {
                sub_points.push((i, iv.lo + iv.len() * k as f64 / (SEMINORM_POINTS - 1) as f64));
            }
        }
        let pair_weights = pair_table(&sub_points, alpha);
        Ok(Grid {
            intervals: intervals.to_vec(),
            m,
            alpha,
            total_length: intervals.iter().map(Interval::len).sum(),
            sub_points,
            pair_weights,
        })
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    /// Nodes per interval.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.m * self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn spacing(&self, interval: usize) -> f64 {
        self.intervals[interval].len() / (self.m - 1) as f64
    }

    /// Position of the flat node index `k`.
    #[inline]
    pub fn node(&self, k: usize) -> f64 {
        let (i, j) = (k / self.m, k % self.m);
        let iv = self.intervals[i];
        iv.lo + iv.len() * j as f64 / (self.m - 1) as f64
    }

    pub fn interval_of_node(&self, k: usize) -> usize {
        k / self.m
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.node(k)).collect()
    }

    /// Trapezoid weights for `(1/|I|) * integral over I`.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.len());
        for i in 0..self.intervals.len() {
            let h = self.spacing(i) / self.total_length;
            for j in 0..self.m {
                w.push(if j == 0 || j == self.m - 1 { 0.5 * h } else { h });
            }
        }
        w
    }

    /// Interpolation stencil `(lower flat index, fraction)` for a point of the closure
    /// of interval `i`.
    #[inline]
    pub fn stencil_in(&self, i: usize, x: f64) -> (usize, f64) {
        let iv = self.intervals[i];
        let p = ((x - iv.lo) / iv.len() * (self.m - 1) as f64).clamp(0.0, (self.m - 1) as f64);
        let j = (p.floor() as usize).min(self.m - 2);
        (i * self.m + j, p - j as f64)
    }

    /// Locates `x` in the closure of some interval.
    pub fn stencil(&self, x: f64) -> Result<(usize, f64)> {
        let i = self
            .intervals
            .iter()
            .position(|iv| iv.contains_closed(x))
            .ok_or(Error::Domain(x))?;
        Ok(self.stencil_in(i, x))
    }

    fn sub_stencils(&self) -> Vec<(usize, f64)> {
        self.sub_points.iter().map(|&(i, x)| self.stencil_in(i, x)).collect()
    }
}

fn pair_table(points: &[(usize, f64)], alpha: f64) -> Vec<(u32, u32, f64)> {
    let mut out = Vec::new();
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            let d = (points[a].1 - points[b].1).abs();
            if d >= COINCIDENT {
                out.push((a as u32, b as u32, d.powf(-alpha)));
            }
        }
    }
    out
}

/// Parameters of the `|b|`-weighted norm `max(|f|_inf, |f|_alpha / (C3 |b|^alpha))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BNormContext {
    pub b: f64,
    pub c3: f64,
    pub alpha: f64,
}

impl BNormContext {
    pub fn new(b: f64, c3: f64, alpha: f64) -> Result<Self> {
        if b.abs() < 3.0 {
            return Err(Error::InvalidArgument(format!("b-norm requires |b| >= 3, got {b}")));
        }
        if !(c3 > 0.0) {
            return Err(Error::InvalidArgument(format!("C3 must be positive, got {c3}")));
        }
        Ok(BNormContext { b, c3, alpha })
    }
}

/// Complex values on the nodes of a [`Grid`], interpolated linearly in between.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<GridFunction> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: Arc<Grid>, f: F) -> GridFunction {
        let values = (0..grid.len()).map(|k| f(grid.node(k))).collect();
        GridFunction { grid, values }
    }

    pub fn from_real<F: Fn(f64) -> f64>(grid: Arc<Grid>, f: F) -> GridFunction {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn constant(grid: Arc<Grid>, c: Complex64) -> GridFunction {
        let values = vec![c; grid.len()];
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    #[inline]
    pub(crate) fn at_stencil(&self, (k, t): (usize, f64)) -> Complex64 {
        self.values[k] * (1.0 - t) + self.values[k + 1] * t
    }

    /// Linear interpolation at any point of the closure of `I`.
    pub fn interpolate(&self, x: f64) -> Result<Complex64> {
        Ok(self.at_stencil(self.grid.stencil(x)?))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Hölder seminorm on the fixed subgrid, cross-interval pairs included.
    pub fn holder_seminorm(&self) -> f64 {
        self.seminorm_from_table(&self.grid.pair_weights)
    }

    /// Hölder seminorm with an exponent different from the grid's.
    pub fn holder_seminorm_with(&self, alpha: f64) -> f64 {
        if alpha == self.grid.alpha {
            return self.holder_seminorm();
        }
        self.seminorm_from_table(&pair_table(&self.grid.sub_points, alpha))
    }

    fn seminorm_from_table(&self, table: &[(u32, u32, f64)]) -> f64 {
        let sub: Vec<Complex64> = self
            .grid
            .sub_stencils()
            .into_iter()
            .map(|s| self.at_stencil(s))
            .collect();
        table
            .iter()
            .map(|&(a, b, w)| (sub[a as usize] - sub[b as usize]).norm() * w)
            .fold(0.0, f64::max)
    }

    /// `|f|_inf + |f|_alpha`.
    pub fn holder_norm(&self) -> f64 {
        self.sup_norm() + self.holder_seminorm()
    }

    pub fn b_norm(&self, ctx: &BNormContext) -> f64 {
        let semi = self.holder_seminorm_with(ctx.alpha);
        self.sup_norm().max(semi / (ctx.c3 * ctx.b.abs().powf(ctx.alpha)))
    }

    /// Plain trapezoid average `(1/|I|) * integral f dx`.
    pub fn lebesgue_mean(&self) -> Complex64 {
        self.grid
            .trapezoid_weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| v * w)
            .sum()
    }

    pub fn scale(&self, c: Complex64) -> GridFunction {
        self.map(|v| v * c)
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> GridFunction {
        GridFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_with<F: Fn(Complex64, Complex64) -> Complex64>(&self, o: &GridFunction, f: F) -> GridFunction {
        assert!(
            Arc::ptr_eq(&self.grid, &o.grid) || self.grid.len() == o.grid.len(),
            "grid functions live on different grids"
        );
        GridFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().zip(&o.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Writes `x,re,im` rows with a header.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "re", "im"])?;
        for (k, v) in self.values.iter().enumerate() {
            wr.write_record(&[
                format!("{:.17e}", self.grid.node(k)),
                format!("{:.17e}", v.re),
                format!("{:.17e}", v.im),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads values written by [`GridFunction::write_csv`] onto `grid`.
    pub fn read_csv<R: Read>(grid: Arc<Grid>, r: R) -> Result<GridFunction> {
        let mut rd = csv::Reader::from_reader(r);
        let mut values = Vec::with_capacity(grid.len());
        for (k, rec) in rd.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Io(format!("row {k}: missing column {i}")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Io(format!("row {k}: {e}")))
            };
            let x = parse(0)?;
            if k >= grid.len() || (x - grid.node(k)).abs() > 1e-12 * grid.total_length().max(1.0) {
                return Err(Error::Io(format!("row {k}: node {x} does not match the grid")));
            }
            values.push(Complex64::new(parse(1)?, parse(2)?));
        }
        GridFunction::new(grid, values).map_err(|e| Error::Io(e.to_string()))
    }
}

impl Add for &GridFunction {
    type Output = GridFunction;
    fn add(self, o: &GridFunction) -> GridFunction {
        self.zip_with(o, |a, b| a + b)
    }
}

impl Sub for &GridFunction {
    type Output = GridFunction;
    fn sub(self, o: &GridFunction) -> GridFunction {
        self.zip_with(o, |a, b| a - b)
    }
}

impl Mul for &GridFunction {
    type Output = GridFunction;
    fn mul(self, o: &GridFunction) -> GridFunction {
        self.zip_with(o, |a, b| a * b)
    }
}
