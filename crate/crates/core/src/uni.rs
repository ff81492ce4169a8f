//! Non-integrability diagnostics for the roof.
//!
//! For two inverse branches `y1, y2` of the same depth defined on a common
//! domain, `R(x) = r_n(y1 x) - r_n(y2 x)`. A roof cohomologous to a locally
//! constant function makes every `R` locally constant; oscillation of some `R`
//! is the witness that it is not.
//!
//! Branch pairs are indexed by their itinerary prefixes `(i_0, ..., i_{n-1})`.
//! The same prefix pair defines `R` on every interval it can be completed to;
//! adjacent intervals on which `R` is continuous are merged into one segment.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BNormContext, GridFunction};
use crate::markov_map::{BranchWord, MarkovMap};
use crate::roof::RoofFunction;
use crate::spectral::nodes_for_frequency;
use crate::system::System;

/// `delta` values reported by [`cancellation_set_measure`].
pub const DELTA_GRID: [f64; 5] = [0.001, 0.003, 0.01, 0.03, 0.1];

/// Word pairs examined per depth before switching to random sampling.
pub const DEFAULT_BUDGET: usize = 4096;

/// Depth of the truncated telescoping sum in [`cohomology_verdict`].
pub const TAIL_DEPTH: usize = 64;

const PROBE_INSET: f64 = 1e-6;
const JUNCTION_TOL: f64 = 1e-9;
const SEARCH_SEED: u64 = 0x0005_eed0_f0b1;
const CYLINDER_SAMPLES: usize = 33;

/// `r_n(y x)` for the word `prefix` completed by the interval `last`.
#[inline]
fn roof_sum(map: &MarkovMap, roof: &RoofFunction, prefix: &[usize], last: usize, x: f64) -> f64 {
    let mut z = x;
    let mut cur = last;
    let mut sum = 0.0;
    for &s in prefix.iter().rev() {
        z = map.branch(s, cur).expect("admissible prefix").eval(z).0;
        sum += roof.eval(z);
        cur = s;
    }
    sum
}

/// `R_{y1,y2}(x) = r_n(y1 x) - r_n(y2 x)`.
pub fn branch_pair_r(
    map: &MarkovMap,
    roof: &RoofFunction,
    w1: &BranchWord,
    w2: &BranchWord,
    x: f64,
) -> Result<f64> {
    if w1.len() != w2.len() || w1.domain_interval() != w2.domain_interval() {
        return Err(Error::WordMismatch(w1.symbols().to_vec(), w2.symbols().to_vec()));
    }
    let r = |z: f64| roof.eval(z);
    Ok(map.birkhoff_sum(r, w1, x)? - map.birkhoff_sum(r, w2, x)?)
}

/// A pair of depth-`n` branches and two points where their `R` differs by `d`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OscillationWitness {
    pub depth: usize,
    /// Words completed by the interval of `x1`.
    pub w1: BranchWord,
    pub w2: BranchWord,
    pub x1: f64,
    pub x2: f64,
    pub d: f64,
    /// Adjacent intervals, left to right, on which this `R` is continuous.
    pub segment: Vec<usize>,
}

impl OscillationWitness {
    fn prefixes(&self) -> (&[usize], &[usize]) {
        let n = self.depth;
        (&self.w1.symbols()[..n], &self.w2.symbols()[..n])
    }

    /// `R` anywhere on the witness segment.
    pub fn r_at(&self, map: &MarkovMap, roof: &RoofFunction, x: f64) -> Result<f64> {
        let j = self
            .segment
            .iter()
            .copied()
            .find(|&j| map.interval(j).contains_closed(x))
            .ok_or(Error::Domain(x))?;
        let (p1, p2) = self.prefixes();
        Ok(roof_sum(map, roof, p1, j, x) - roof_sum(map, roof, p2, j, x))
    }
}

/// Admissible prefixes `(i_0, ..., i_{n-1})`.
fn prefixes(map: &MarkovMap, n: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0..map.len()).map(|i| vec![i]).collect();
    for _ in 1..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                let last = *p.last().unwrap();
                (0..map.len()).filter(move |&j| map.admissible(last, j)).map(move |j| {
                    let mut q = p.clone();
                    q.push(j);
                    q
                })
            })
            .collect();
    }
    out
}

struct Candidate {
    pair: (usize, usize),
    segment: Vec<usize>,
    hi: (f64, usize),
    lo: (f64, usize),
    d: f64,
}

/// Segments of adjacent intervals on which the prefix pair's `R` is continuous.
fn segments(map: &MarkovMap, roof: &RoofFunction, p1: &[usize], p2: &[usize], order: &[usize]) -> Vec<Vec<usize>> {
    let (l1, l2) = (*p1.last().unwrap(), *p2.last().unwrap());
    let r = |j: usize, x: f64| roof_sum(map, roof, p1, j, x) - roof_sum(map, roof, p2, j, x);
    let mut out: Vec<Vec<usize>> = Vec::new();
    for &j in order {
        if !(map.admissible(l1, j) && map.admissible(l2, j)) {
            continue;
        }
        if let Some(seg) = out.last_mut() {
            let prev = *seg.last().unwrap();
            let (a, b) = (map.interval(prev), map.interval(j));
            if (a.hi - b.lo).abs() <= 1e-12 {
                let (ra, rb) = (r(prev, a.hi), r(j, b.lo));
                if (ra - rb).abs() <= JUNCTION_TOL * (1.0 + ra.abs()) {
                    seg.push(j);
                    continue;
                }
            }
        }
        out.push(vec![j]);
    }
    out
}

fn golden_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..90 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if b - a <= 1e-15 * (1.0 + hi.abs()) {
            break;
        }
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Maximises `|R(x1) - R(x2)|` over depth-`n` branch pairs.
///
/// Each interval of a segment is probed near both ends and at its midpoint;
/// the best pair is then refined by alternating golden-section searches over
/// the closures of the two intervals. More than `budget` pairs are sampled at
/// random with a fixed seed.
pub fn find_uni_witness(map: &MarkovMap, roof: &RoofFunction, n: usize, budget: usize) -> Result<OscillationWitness> {
    if n == 0 {
        return Err(Error::InvalidArgument("witness depth must be at least 1".into()));
    }
    let words = prefixes(map, n);
    let count = words.len();
    if count < 2 {
        return Err(Error::InvalidArgument(format!("depth {n} has fewer than two branches")));
    }
    let total = count * (count - 1) / 2;
    let pairs: Vec<(usize, usize)> = if total <= budget.max(1) {
        (0..count).flat_map(|a| (a + 1..count).map(move |b| (a, b))).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(SEARCH_SEED ^ n as u64);
        (0..budget.max(1))
            .map(|_| {
                let a = rng.random_range(0..count);
                let mut b = rng.random_range(0..count - 1);
                if b >= a {
                    b += 1;
                }
                (a.min(b), a.max(b))
            })
            .collect()
    };
    let mut order: Vec<usize> = (0..map.len()).collect();
    order.sort_by(|&a, &b| map.interval(a).lo.total_cmp(&map.interval(b).lo));

    let candidates: Vec<Option<Candidate>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (p1, p2) = (&words[a], &words[b]);
            let mut best: Option<Candidate> = None;
            for seg in segments(map, roof, p1, p2, &order) {
                let mut hi = (f64::NEG_INFINITY, 0.0, 0);
                let mut lo = (f64::INFINITY, 0.0, 0);
                for &j in &seg {
                    let iv = map.interval(j);
                    let inset = PROBE_INSET.min(iv.len() / 4.0);
                    for x in [iv.lo + inset, iv.midpoint(), iv.hi - inset] {
                        let v = roof_sum(map, roof, p1, j, x) - roof_sum(map, roof, p2, j, x);
                        if v > hi.0 {
                            hi = (v, x, j);
                        }
                        if v < lo.0 {
                            lo = (v, x, j);
                        }
                    }
                }
                let d = hi.0 - lo.0;
                if best.as_ref().map_or(true, |c| d > c.d) {
                    best = Some(Candidate {
                        pair: (a, b),
                        segment: seg,
                        hi: (hi.1, hi.2),
                        lo: (lo.1, lo.2),
                        d,
                    });
                }
            }
            best
        })
        .collect();
    let mut best: Option<Candidate> = None;
    for c in candidates.into_iter().flatten() {
        if best.as_ref().map_or(true, |b| c.d > b.d) {
            best = Some(c);
        }
    }
    let best = best.ok_or_else(|| Error::InvalidArgument(format!("no branch pair of depth {n} shares a domain")))?;
    let (p1, p2) = (&words[best.pair.0], &words[best.pair.1]);
    let r = |j: usize, x: f64| roof_sum(map, roof, p1, j, x) - roof_sum(map, roof, p2, j, x);
    let ((mut x1, j1), (mut x2, j2)) = (best.hi, best.lo);
    let mut d = best.d;
    for _ in 0..2 {
        let r2 = r(j2, x2);
        let iv = map.interval(j1);
        let (x, v) = golden_max(|x| (r(j1, x) - r2).abs(), iv.lo, iv.hi);
        if v >= d {
            x1 = x;
            d = v;
        }
        let r1 = r(j1, x1);
        let iv = map.interval(j2);
        let (x, v) = golden_max(|x| (r1 - r(j2, x)).abs(), iv.lo, iv.hi);
        if v >= d {
            x2 = x;
            d = v;
        }
    }
    Ok(OscillationWitness {
        depth: n,
        w1: map.word_with_prefix(p1, j1)?,
        w2: map.word_with_prefix(p2, j1)?,
        x1,
        x2,
        d: (r(j1, x1) - r(j2, x2)).abs(),
        segment: best.segment,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    NotCohomologous,
    LikelyCohomologous,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DepthRecord {
    pub depth: usize,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CylinderDeviation {
    pub from: usize,
    pub to: usize,
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohomologyReport {
    pub verdict: Verdict,
    pub threshold: f64,
    pub depths: Vec<DepthRecord>,
    pub witness: OscillationWitness,
    /// Largest oscillation of `r - h o T + h` over a two-cylinder.
    pub deviation: f64,
    pub cylinders: Vec<CylinderDeviation>,
    pub tail_depth: usize,
}

/// `max(1e-3 |r|_Lip, 1e-10)`.
pub fn default_threshold(roof: &RoofFunction) -> f64 {
    (1e-3 * roof.lipschitz()).max(1e-10)
}

/// Truncated telescoping function along the smallest-predecessor tail.
struct Telescope<'a> {
    map: &'a MarkovMap,
    roof: &'a RoofFunction,
    pred: Vec<usize>,
    depth: usize,
}

impl Telescope<'_> {
    fn eval(&self, i: usize, x: f64) -> f64 {
        let anchor = self.map.interval(i).midpoint();
        let (mut z, mut za, mut cur) = (x, anchor, i);
        let mut h = 0.0;
        for _ in 0..self.depth {
            let p = self.pred[cur];
            let b = self.map.branch(p, cur).expect("predecessor is admissible");
            z = b.eval(z).0;
            za = b.eval(za).0;
            h += self.roof.eval(z) - self.roof.eval(za);
            cur = p;
        }
        h
    }
}

/// Two-pronged test of whether `r` is cohomologous to a locally constant function.
///
/// The witness prong takes the largest `D` over depths `1..=max_depth`. The
/// coboundary prong builds `h(x) = sum_{m<=K} r(y^(m) x) - r(y^(m) x_i)` along
/// a fixed backward path and measures how far `r - h o T + h` is from constant
/// on every two-cylinder `[ij]`.
pub fn cohomology_verdict(
    map: &MarkovMap,
    roof: &RoofFunction,
    max_depth: usize,
    threshold: Option<f64>,
) -> Result<CohomologyReport> {
    if max_depth < 4 {
        return Err(Error::InvalidArgument(format!("max_depth must be at least 4, got {max_depth}")));
    }
    let threshold = threshold.unwrap_or_else(|| default_threshold(roof));
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be positive, got {threshold}")));
    }
    let mut depths = Vec::with_capacity(max_depth);
    let mut witness: Option<OscillationWitness> = None;
    for n in 1..=max_depth {
        let w = find_uni_witness(map, roof, n, DEFAULT_BUDGET)?;
        depths.push(DepthRecord { depth: n, d: w.d });
        if witness.as_ref().map_or(true, |b| w.d > b.d) {
            witness = Some(w);
        }
    }
    let witness = witness.expect("max_depth >= 4");

    let pred: Vec<usize> = (0..map.len())
        .map(|j| (0..map.len()).find(|&i| map.admissible(i, j)).expect("mixing map has predecessors"))
        .collect();
    let tele = Telescope {
        map,
        roof,
        pred,
        depth: TAIL_DEPTH,
    };
    let mut cylinders = Vec::new();
    for i in 0..map.len() {
        for j in 0..map.len() {
            let Some(b) = map.branch(i, j) else { continue };
            let iv = map.interval(j);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for k in 0..CYLINDER_SAMPLES {
                let u = iv.lo + iv.len() * k as f64 / (CYLINDER_SAMPLES - 1) as f64;
                let x = b.eval(u).0;
                let g = roof.eval(x) - tele.eval(j, u) + tele.eval(i, x);
                lo = lo.min(g);
                hi = hi.max(g);
            }
            cylinders.push(CylinderDeviation {
                from: i,
                to: j,
                deviation: hi - lo,
            });
        }
    }
    let deviation = cylinders.iter().map(|c| c.deviation).fold(0.0, f64::max);
    let verdict = if witness.d > threshold {
        Verdict::NotCohomologous
    } else if witness.d < threshold / 10.0 && deviation < threshold / 10.0 {
        Verdict::LikelyCohomologous
    } else {
        Verdict::Inconclusive
    };
    Ok(CohomologyReport {
        verdict,
        threshold,
        depths,
        witness,
        deviation,
        cylinders,
        tail_depth: TAIL_DEPTH,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionPoints {
    pub b: f64,
    /// `x'_1, ..., x'_p`, in order from `x1` towards `x2`.
    pub points: Vec<f64>,
    pub r_values: Vec<f64>,
    /// `pi / (3 |b|)`, signed along `R(x2) - R(x1)`.
    pub step: f64,
    /// `pi |x2 - x1| / (D |b|)`.
    pub gap_bound: f64,
    /// Indices `k` with `|x'_{k+1} - x'_k| <= gap_bound`.
    pub well_spaced: Vec<usize>,
}

impl PartitionPoints {
    /// At least half of the gaps respect the bound.
    pub fn half_well_spaced(&self) -> bool {
        let gaps = self.points.len().saturating_sub(1);
        2 * self.well_spaced.len() >= gaps
    }
}

/// Points where `R` climbs from `R(x1)` in steps of `pi / (3|b|)`.
///
/// Roots are bracketed by sampling `[x1, x2]` finely, refined by bisection, and
/// the root nearest the previous point is kept.
pub fn partition_points(
    map: &MarkovMap,
    roof: &RoofFunction,
    witness: &OscillationWitness,
    b: f64,
) -> Result<PartitionPoints> {
    if b.abs() < 3.0 {
        return Err(Error::InvalidArgument(format!("|b| must be at least 3, got {b}")));
    }
    let (x1, x2) = (witness.x1, witness.x2);
    let r = |x: f64| witness.r_at(map, roof, x);
    let (r1, r2) = (r(x1)?, r(x2)?);
    let d = (r2 - r1).abs();
    let step = PI / (3.0 * b.abs());
    let p = (d / step).floor() as usize;
    if d == 0.0 || p < 3 {
        return Err(Error::InsufficientOscillation(d * b.abs()));
    }
    let step = step * (r2 - r1).signum();

    const SAMPLES: usize = 1 << 14;
    let xs: Vec<f64> = (0..=SAMPLES).map(|k| x1 + (x2 - x1) * k as f64 / SAMPLES as f64).collect();
    let rs: Vec<f64> = xs.iter().map(|&x| r(x)).collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(p);
    let mut values = Vec::with_capacity(p);
    let mut prev = x1;
    for k in 1..=p {
        let target = r1 + k as f64 * step;
        let mut best: Option<f64> = None;
        for s in 0..SAMPLES {
            let (fa, fb) = (rs[s] - target, rs[s + 1] - target);
            if fa == 0.0 || fa.signum() != fb.signum() {
                let (mut a, mut bb, mut ga) = (xs[s], xs[s + 1], fa);
                for _ in 0..200 {
                    let m = 0.5 * (a + bb);
                    if m == a || m == bb {
                        break;
                    }
                    let gm = r(m)? - target;
                    if gm == 0.0 {
                        a = m;
                        bb = m;
                        break;
                    }
                    if gm.signum() == ga.signum() {
                        a = m;
                        ga = gm;
                    } else {
                        bb = m;
                    }
                }
                let root = if (r(a)? - target).abs() <= (r(bb)? - target).abs() { a } else { bb };
                if best.map_or(true, |q| (root - prev).abs() < (q - prev).abs()) {
                    best = Some(root);
                }
            }
        }
        let root = best.ok_or_else(|| Error::Convergence {
            iterations: k,
            change: target,
        })?;
        points.push(root);
        values.push(r(root)?);
        prev = root;
    }
    let gap_bound = PI * (x2 - x1).abs() / (d * b.abs());
    let well_spaced = points
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[1] - w[0]).abs() <= gap_bound)
        .map(|(k, _)| k)
        .collect();
    Ok(PartitionPoints {
        b,
        points,
        r_values: values,
        step,
        gap_bound,
        well_spaced,
    })
}

/// Smallest depth `n` with `4 C3 C^a lambda^{a n} |x1 - x2|^a pi^{a-1} <= D^a / 12`,
/// where `C` is the distortion constant of the map.
pub fn scale_condition_depth(map: &MarkovMap, witness: &OscillationWitness, c3: f64) -> Option<usize> {
    let a = map.alpha();
    let e = map.expansion();
    let lhs0 = 4.0 * c3 * e.c_exp.powf(a) * (witness.x1 - witness.x2).abs().powf(a) * PI.powf(a - 1.0);
    let rhs = witness.d.powf(a) / 12.0;
    if !(rhs > 0.0) {
        return None;
    }
    (0..=10_000).find(|&n| lhs0 * e.lambda.powf(a * n as f64) <= rhs)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CancellationReport {
    pub b: f64,
    pub n_iter: usize,
    pub deltas: Vec<f64>,
    /// `mu{x : |L^n h(x)| <= (1 - delta) |h|_inf}` for each delta.
    pub measures: Vec<f64>,
    /// `mu{x : |L^n h(x)| >= (1 - 1e-9) |h|_inf}`.
    pub flat_fraction: f64,
    pub nodes: usize,
}

/// Measures where `L_{ib}^n h` falls below `(1 - delta) |h|_inf`.
///
/// The grid is refined with `|b|` as in the contraction probe, so `h` is
/// given as a function of `x`.
pub fn cancellation_set_measure<F>(system: &System, b: f64, h: F, n_iter: usize, c3: f64) -> Result<CancellationReport>
where
    F: Fn(f64) -> Complex64,
{
    let ctx = BNormContext::new(b, c3, system.alpha())?;
    let m = nodes_for_frequency(system, b);
    let refined;
    let sys = if m != system.grid().m() {
        refined = system.with_nodes(m)?;
        &refined
    } else {
        system
    };
    let h = GridFunction::from_fn(Arc::clone(sys.grid()), h);
    let sup = h.sup_norm();
    let seminorm = h.holder_seminorm();
    let bound = 2.0 * ctx.c3 * b.abs().powf(ctx.alpha) * sup;
    if !(seminorm <= bound) || sup == 0.0 {
        return Err(Error::Hypothesis { seminorm, bound });
    }
    let g = sys.operator(Complex64::new(0.0, b)).apply_n(&h, n_iter);
    let weights = sys.srb().weights();
    let mass: f64 = weights.iter().sum();
    let measure = |pred: &dyn Fn(f64) -> bool| {
        g.values()
            .iter()
            .zip(weights)
            .filter(|(v, _)| pred(v.norm()))
            .map(|(_, w)| w)
            .sum::<f64>()
            / mass
    };
    let measures = DELTA_GRID.iter().map(|&d| measure(&|v| v <= (1.0 - d) * sup)).collect();
    let flat_fraction = measure(&|v| v >= (1.0 - 1e-9) * sup);
    Ok(CancellationReport {
        b,
        n_iter,
        deltas: DELTA_GRID.to_vec(),
        measures,
        flat_fraction,
        nodes: sys.grid().m(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalogue;

    #[test]
    fn pair_r_closed_form() {
        let (map, roof) = catalogue::build_preset("doub2-quadratic").unwrap();
        let w1 = map.word(&[0, 0]).unwrap();
        let w2 = map.word(&[1, 0]).unwrap();
        let r0 = branch_pair_r(&map, &roof, &w1, &w2, 0.0).unwrap();
        assert!((r0 + 0.0625).abs() < 1e-15);
        let w1 = map.word(&[0, 1]).unwrap();
        let w2 = map.word(&[1, 1]).unwrap();
        let r1 = branch_pair_r(&map, &roof, &w1, &w2, 1.0).unwrap();
        assert!((r1 + 0.1875).abs() < 1e-15);
        let short = map.word(&[0, 1, 1]).unwrap();
        assert!(matches!(branch_pair_r(&map, &roof, &w1, &short, 0.7), Err(Error::WordMismatch(..))));
        assert!(matches!(branch_pair_r(&map, &roof, &w1, &w2, 0.2), Err(Error::Domain(_))));
    }

    #[test]
    fn witness_examples() {
        let (map, roof) = catalogue::build_preset("doub2-quadratic").unwrap();
        let w = find_uni_witness(&map, &roof, 1, DEFAULT_BUDGET).unwrap();
        assert!((w.d - 0.125).abs() < 1e-10, "{w:?}");
        assert_eq!(w.segment, vec![0, 1]);
        assert_ne!(w.w1, w.w2);
        let (map, roof) = catalogue::build_preset("doub2-constant").unwrap();
        for n in 1..=4 {
            assert!(find_uni_witness(&map, &roof, n, DEFAULT_BUDGET).unwrap().d <= 1e-12);
        }
        let (map, roof) = catalogue::build_preset("doub2-linear").unwrap();
        for n in 1..=6 {
            assert!(find_uni_witness(&map, &roof, n, DEFAULT_BUDGET).unwrap().d <= 1e-10);
        }
    }

    #[test]
    fn verdict_examples() {
        let (map, roof) = catalogue::build_preset("doub2-constant").unwrap();
        assert_eq!(cohomology_verdict(&map, &roof, 4, None).unwrap().verdict, Verdict::LikelyCohomologous);
        let (map, roof) = catalogue::build_preset("doub2-linear").unwrap();
        let rep = cohomology_verdict(&map, &roof, 6, None).unwrap();
        assert_eq!(rep.verdict, Verdict::LikelyCohomologous);
        assert!(rep.deviation < 1e-8);
        let (map, roof) = catalogue::build_preset("doub2-quadratic").unwrap();
        let rep = cohomology_verdict(&map, &roof, 6, None).unwrap();
        assert_eq!(rep.verdict, Verdict::NotCohomologous);
        assert!(rep.witness.d >= 0.1);
        assert!(cohomology_verdict(&map, &roof, 3, None).is_err());
    }

    #[test]
    fn partition_of_affine_witness() {
        let (map, roof) = catalogue::build_preset("doub2-quadratic").unwrap();
        let w = find_uni_witness(&map, &roof, 1, DEFAULT_BUDGET).unwrap();
        let pp = partition_points(&map, &roof, &w, 100.0).unwrap();
        assert_eq!(pp.points.len(), 11);
        let r1 = w.r_at(&map, &roof, w.x1).unwrap();
        for (k, v) in pp.r_values.iter().enumerate() {
            assert!((v - r1 - (k + 1) as f64 * pp.step).abs() < 1e-10);
        }
        assert!(pp.half_well_spaced());
        assert!(matches!(
            partition_points(&map, &roof, &w, 3.0),
            Err(Error::InsufficientOscillation(_))
        ));
    }

    #[test]
    fn cancellation_is_monotone_and_vanishes_at_resonance() {
        let sys = System::preset("doub2-constant", 257).unwrap();
        let one = |_: f64| Complex64::new(1.0, 0.0);
        let rep = cancellation_set_measure(&sys, 20.0 * PI, one, 5, 3.0).unwrap();
        assert!(rep.measures.iter().all(|&m| m == 0.0));
        assert!((rep.flat_fraction - 1.0).abs() < 1e-12);
        let sys = System::preset("doub2-quadratic", 257).unwrap();
        let rep = cancellation_set_measure(&sys, 10.0, one, 3, 3.0).unwrap();
        assert!(rep.measures.windows(2).all(|w| w[1] <= w[0]));
        let rough = |x: f64| Complex64::new((2.0 * PI * 64.0 * x).cos(), 0.0);
        assert!(matches!(
            cancellation_set_measure(&sys, 3.0, rough, 3, 0.1),
            Err(Error::Hypothesis { .. })
        ));
    }
}
