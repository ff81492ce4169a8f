//! Expanding Markov interval maps described by their inverse branches.
//!
//! A map is a finite family of disjoint open intervals `I_0..I_{N-1}` and, for
//! every admissible symbol pair `(i, j)`, an inverse branch `y_ij: I_j -> I_i`.
//! The branch is the inverse of `T` restricted to the cylinder `[ij]`. A word
//! `(i_0, ..., i_n)` composes from the deepest symbol outward and maps `I_{i_n}`
//! into `I_{i_0}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used for interval-membership tests on closures.
pub(crate) const ENDPOINT_TOL: f64 = 1e-12;

const EXPANSION_SAMPLES: usize = 1024;
const EXPANSION_SAFETY: f64 = 1.01;
const TILING_TOL: f64 = 1e-9;
const INVERSION_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Membership in the closure, with a small relative tolerance.
    pub fn contains_closed(&self, x: f64) -> bool {
        let tol = ENDPOINT_TOL * self.len().max(1.0);
        x >= self.lo - tol && x <= self.hi + tol
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

/// The closed branch families a map can be configured with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchFamily {
    Affine,
    /// Affine composed with `u -> u + eps * u * (1 - u)` on the rescaled domain.
    Perturbed { eps: f64 },
}

/// An inverse branch `y_ij : closure(I_j) -> closure(I_i)`.
///
/// Parameterised by its values at the two ends of the domain, so orientation
/// reversing branches are allowed. With `u = (x - lo_j) / |I_j|`,
/// `y(x) = start + (end - start) * P(u)` where `P(u) = u + eps * u * (1 - u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseBranch {
    pub from: usize,
    pub to: usize,
    domain: Interval,
    start: f64,
    end: f64,
    eps: f64,
}

impl InverseBranch {
    pub fn family(&self) -> BranchFamily {
        if self.eps == 0.0 {
            BranchFamily::Affine
        } else {
            BranchFamily::Perturbed { eps: self.eps }
        }
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// The (closed) image of the branch, ordered.
    pub fn image(&self) -> Interval {
        Interval::new(self.start.min(self.end), self.start.max(self.end))
    }

    pub fn is_increasing(&self) -> bool {
        self.end > self.start
    }

    /// `(y(x), y'(x))`. No domain check.
    #[inline]
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let len = self.domain.len();
        let u = (x - self.domain.lo) / len;
        let p = u + self.eps * u * (1.0 - u);
        let dp = 1.0 + self.eps * (1.0 - 2.0 * u);
        let span = self.end - self.start;
        (self.start + span * p, span * dp / len)
    }

    /// Solves `y(z) = x` for `z` in the closed domain by safeguarded Newton.
    pub fn invert(&self, x: f64) -> f64 {
        let (mut a, mut b) = (self.domain.lo, self.domain.hi);
        let increasing = self.is_increasing();
        // residual sign convention: g(z) = y(z) - x, increasing in z after flip
        let g = |z: f64| {
            let (y, dy) = self.eval(z);
            if increasing {
                (y - x, dy)
            } else {
                (x - y, -dy)
            }
        };
        let span = self.end - self.start;
        let mut z = self.domain.lo + self.domain.len() * ((x - self.start) / span).clamp(0.0, 1.0);
        for _ in 0..200 {
            let (gz, dg) = g(z);
            if gz == 0.0 {
                return z;
            }
            if gz > 0.0 {
                b = z;
            } else {
                a = z;
            }
            let newton = z - gz / dg;
            let next = if newton.is_finite() && newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
            if (next - z).abs() <= INVERSION_TOL * self.domain.len() {
                return next;
            }
            z = next;
            if b - a <= INVERSION_TOL * self.domain.len() {
                break;
            }
        }
        z
    }
}

/// A finite symbol sequence `(i_0, ..., i_n)` with every consecutive pair admissible.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BranchWord {
    symbols: Vec<usize>,
}

impl BranchWord {
    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    /// Number of inverse branches composed (symbols minus one).
    pub fn len(&self) -> usize {
        self.symbols.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn first(&self) -> usize {
        self.symbols[0]
    }

    /// Index of the interval the composed branch is defined on.
    pub fn domain_interval(&self) -> usize {
        *self.symbols.last().expect("words are never empty")
    }
}

/// Expansion constants estimated from sampled branch derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConstants {
    /// Largest sampled `|y'|` over all one-step branches.
    pub max_derivative: f64,
    pub lambda: f64,
    pub c_exp: f64,
}

/// A validated `C^{1+alpha}` expanding Markov interval map. Immutable.
#[derive(Debug, Clone)]
pub struct MarkovMap {
    intervals: Vec<Interval>,
    branches: Vec<InverseBranch>,
    slots: Vec<Option<usize>>,
    alpha: f64,
    expansion: ExpansionConstants,
    mixing_exponent: usize,
}

/// One branch as supplied by a caller or a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BranchSpec {
    /// `y(x) = slope * x + intercept` on `I_to`.
    Affine {
        from: usize,
        to: usize,
        slope: f64,
        intercept: f64,
    },
    /// `image = [y(lo_to), y(hi_to)]`, perturbed by `eps`.
    Perturbed {
        from: usize,
        to: usize,
        image: [f64; 2],
        eps: f64,
    },
}

impl BranchSpec {
    fn endpoints(&self) -> (usize, usize) {
        match *self {
            BranchSpec::Affine { from, to, .. } | BranchSpec::Perturbed { from, to, .. } => {
                (from, to)
            }
        }
    }
}

/// Declarative description of a map: the JSON schema of `map` in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub intervals: Vec<[f64; 2]>,
    pub branches: Vec<BranchSpec>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    0.5
}

impl MarkovMap {
    /// Builds and validates a map.
    pub fn build(spec: &MapSpec) -> Result<MarkovMap> {
        let n = spec.intervals.len();
        if n == 0 {
            return Err(Error::InvalidArgument("a map needs at least one interval".into()));
        }
        if !(spec.alpha > 0.0 && spec.alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, 1], got {}",
                spec.alpha
            )));
        }
        let intervals: Vec<Interval> = spec
            .intervals
            .iter()
            .map(|&[lo, hi]| Interval::new(lo, hi))
            .collect();
        for (k, iv) in intervals.iter().enumerate() {
            if !(iv.lo.is_finite() && iv.hi.is_finite() && iv.lo < iv.hi) {
                return Err(Error::InvalidArgument(format!(
                    "interval {k} = ({}, {}) is not a bounded nonempty interval",
                    iv.lo, iv.hi
                )));
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| intervals[a].lo.total_cmp(&intervals[b].lo));
        for w in order.windows(2) {
            let (a, b) = (intervals[w[0]], intervals[w[1]]);
            if a.hi > b.lo + TILING_TOL {
                return Err(Error::Overlap(w[0].min(w[1]), w[0].max(w[1])));
            }
        }

        let mut slots = vec![None; n * n];
        let mut branches = Vec::with_capacity(spec.branches.len());
        for bs in &spec.branches {
            let (from, to) = bs.endpoints();
            if from >= n || to >= n {
                return Err(Error::InvalidArgument(format!(
                    "branch ({from},{to}) refers to a missing interval"
                )));
            }
            if slots[from * n + to].is_some() {
                return Err(Error::InvalidArgument(format!(
                    "branch ({from},{to}) supplied twice"
                )));
            }
            let domain = intervals[to];
            let branch = match *bs {
                BranchSpec::Affine {
                    slope, intercept, ..
                } => InverseBranch {
                    from,
                    to,
                    domain,
                    start: slope * domain.lo + intercept,
                    end: slope * domain.hi + intercept,
                    eps: 0.0,
                },
                BranchSpec::Perturbed { image, eps, .. } => {
                    if !(eps.abs() < 1.0) {
                        return Err(Error::InvalidArgument(format!(
                            "branch ({from},{to}): perturbation |eps| = {} must be < 1",
                            eps.abs()
                        )));
                    }
                    InverseBranch {
                        from,
                        to,
                        domain,
                        start: image[0],
                        end: image[1],
                        eps,
                    }
                }
            };
            if branch.start == branch.end || !branch.start.is_finite() || !branch.end.is_finite() {
                return Err(Error::Range {
                    from,
                    to,
                    detail: "branch is not strictly monotone".into(),
                });
            }
            slots[from * n + to] = Some(branches.len());
            branches.push(branch);
        }

        // Range: every image inside the closure of its target interval.
        for b in &branches {
            let img = b.image();
            let target = intervals[b.from];
            let tol = TILING_TOL * target.len();
            if img.lo < target.lo - tol || img.hi > target.hi + tol {
                return Err(Error::Range {
                    from: b.from,
                    to: b.to,
                    detail: format!(
                        "image [{}, {}] not inside [{}, {}]",
                        img.lo, img.hi, target.lo, target.hi
                    ),
                });
            }
        }
        // Markov tiling: the images of the branches into I_i partition I_i.
        for i in 0..n {
            let mut imgs: Vec<(usize, Interval)> = (0..n)
                .filter_map(|j| slots[i * n + j].map(|k| (j, branches[k].image())))
                .collect();
            let target = intervals[i];
            let tol = TILING_TOL * target.len();
            if imgs.is_empty() {
                return Err(Error::Range {
                    from: i,
                    to: i,
                    detail: format!("interval {i} has no inverse branches, T is undefined there"),
                });
            }
            imgs.sort_by(|a, b| a.1.lo.total_cmp(&b.1.lo));
            let mut cursor = target.lo;
            for &(j, img) in &imgs {
                if (img.lo - cursor).abs() > tol {
                    return Err(Error::Range {
                        from: i,
                        to: j,
                        detail: format!(
                            "branch images leave a gap or overlap at {cursor} in interval {i}"
                        ),
                    });
                }
                cursor = img.hi;
            }
            if (cursor - target.hi).abs() > tol {
                return Err(Error::Range {
                    from: i,
                    to: imgs.last().map(|p| p.0).unwrap_or(i),
                    detail: format!("branch images do not cover interval {i}"),
                });
            }
        }

        // Expansion on a uniform sample of each branch domain.
        let mut max_derivative: f64 = 0.0;
        for b in &branches {
            let d = sampled_sup_derivative(b, EXPANSION_SAMPLES);
            if d >= 1.0 {
                return Err(Error::Expansion {
                    from: b.from,
                    to: b.to,
                    derivative: d,
                });
            }
            max_derivative = max_derivative.max(d);
        }
        let mut lambda = EXPANSION_SAFETY * max_derivative;
        if lambda >= 1.0 {
            lambda = 0.5 * (1.0 + max_derivative);
        }

        let mixing_exponent = primitive_exponent(n, &slots).ok_or(Error::Mixing { bound: n * n })?;

        let mut map = MarkovMap {
            intervals,
            branches,
            slots,
            alpha: spec.alpha,
            expansion: ExpansionConstants {
                max_derivative,
                lambda,
                c_exp: 1.0,
            },
            mixing_exponent,
        };
        map.expansion.c_exp = map.estimate_c_exp();
        Ok(map)
    }

    /// Max over sampled words of `sup |y_w'| / lambda^|w|`, times the safety factor.
    fn estimate_c_exp(&self) -> f64 {
        const WORD_BUDGET: usize = 20_000;
        let lambda = self.expansion.lambda;
        let mut best: f64 = 0.0;
        let mut words: Vec<Vec<usize>> = (0..self.len()).map(|i| vec![i]).collect();
        for depth in 1..=6 {
            let mut next = Vec::new();
            for w in &words {
                let last = *w.last().unwrap();
                for j in 0..self.len() {
                    if self.admissible(last, j) {
                        let mut v = w.clone();
                        v.push(j);
                        next.push(v);
                    }
                }
            }
            if next.len() > WORD_BUDGET {
                break;
            }
            for w in &next {
                let word = BranchWord { symbols: w.clone() };
                let dom = self.intervals[word.domain_interval()];
                for k in 0..=32 {
                    let x = dom.lo + dom.len() * k as f64 / 32.0;
                    let (_, d) = self.compose(&word, x);
                    best = best.max(d.abs() / lambda.powi(depth));
                }
            }
            words = next;
        }
        EXPANSION_SAFETY * best.max(f64::MIN_POSITIVE)
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn interval(&self, i: usize) -> Interval {
        self.intervals[i]
    }

    pub fn branches(&self) -> &[InverseBranch] {
        &self.branches
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn expansion(&self) -> ExpansionConstants {
        self.expansion
    }

    /// Smallest `n` with `A^n > 0` entrywise.
    pub fn mixing_exponent(&self) -> usize {
        self.mixing_exponent
    }

    /// Total Lebesgue length of `I`.
    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(Interval::len).sum()
    }

    pub fn admissible(&self, i: usize, j: usize) -> bool {
        self.slots[i * self.len() + j].is_some()
    }

    pub fn branch(&self, i: usize, j: usize) -> Option<&InverseBranch> {
        self.slots[i * self.len() + j].map(|k| &self.branches[k])
    }

    /// Transition matrix as rows of 0/1.
    pub fn transition_matrix(&self) -> Vec<Vec<u8>> {
        let n = self.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.admissible(i, j) as u8).collect())
            .collect()
    }

    /// Index of an interval whose closure contains `x` (first by index).
    pub fn interval_of(&self, x: f64) -> Option<usize> {
        self.intervals.iter().position(|iv| iv.contains_closed(x))
    }

    /// Validates a full symbol sequence `(i_0, ..., i_n)`.
    pub fn word(&self, symbols: &[usize]) -> Result<BranchWord> {
        if symbols.is_empty() {
            return Err(Error::InvalidArgument("a word needs at least one symbol".into()));
        }
        if let Some(&bad) = symbols.iter().find(|&&s| s >= self.len()) {
            return Err(Error::InvalidArgument(format!("symbol {bad} out of range")));
        }
        for w in symbols.windows(2) {
            if !self.admissible(w[0], w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "transition {} -> {} is not admissible",
                    w[0], w[1]
                )));
            }
        }
        Ok(BranchWord {
            symbols: symbols.to_vec(),
        })
    }

    /// Completes an itinerary prefix `(i_0, ..., i_{n-1})` with the interval `last`.
    pub fn word_with_prefix(&self, prefix: &[usize], last: usize) -> Result<BranchWord> {
        let mut s = prefix.to_vec();
        s.push(last);
        self.word(&s)
    }

    /// `(y(x), y'(x))` for the composed branch, without domain checks.
    pub(crate) fn compose(&self, w: &BranchWord, x: f64) -> (f64, f64) {
        let mut z = x;
        let mut d = 1.0;
        for pair in w.symbols.windows(2).rev() {
            let b = self.branch(pair[0], pair[1]).expect("word validated");
            let (y, dy) = b.eval(z);
            z = y;
            d *= dy;
        }
        (z, d)
    }

    /// Evaluates the composed inverse branch and its derivative by the chain rule.
    pub fn apply_word(&self, w: &BranchWord, x: f64) -> Result<(f64, f64)> {
        if !self.intervals[w.domain_interval()].contains_closed(x) {
            return Err(Error::Domain(x));
        }
        Ok(self.compose(w, x))
    }

    /// `sum_{k<n} f(T^k y(x))` where `y` is the branch of the word `w`.
    pub fn birkhoff_sum<F: Fn(f64) -> f64>(&self, f: F, w: &BranchWord, x: f64) -> Result<f64> {
        if !self.intervals[w.domain_interval()].contains_closed(x) {
            return Err(Error::Domain(x));
        }
        Ok(self.birkhoff_unchecked(&f, w.symbols(), x))
    }

    pub(crate) fn birkhoff_unchecked<F: Fn(f64) -> f64>(&self, f: &F, symbols: &[usize], x: f64) -> f64 {
        let mut z = x;
        let mut sum = 0.0;
        for pair in symbols.windows(2).rev() {
            let b = self.branch(pair[0], pair[1]).expect("word validated");
            z = b.eval(z).0;
            sum += f(z);
        }
        sum
    }

    /// Locates the branch `y_ij` whose image contains `x` and returns it with `T(x)`.
    pub fn locate(&self, x: f64) -> Result<(&InverseBranch, f64)> {
        let i = self.interval_of(x).ok_or(Error::Domain(x))?;
        let n = self.len();
        let mut best: Option<(&InverseBranch, f64)> = None;
        for j in 0..n {
            if let Some(b) = self.branch(i, j) {
                let img = b.image();
                let dist = if x < img.lo {
                    img.lo - x
                } else if x > img.hi {
                    x - img.hi
                } else {
                    0.0
                };
                if dist == 0.0 {
                    return Ok((b, b.invert(x)));
                }
                if best.is_none_or(|(_, d)| dist < d) {
                    best = Some((b, dist));
                }
            }
        }
        match best {
            Some((b, dist)) if dist <= TILING_TOL * self.intervals[i].len() => {
                Ok((b, b.invert(b.image().clamp(x))))
            }
            _ => Err(Error::Domain(x)),
        }
    }

    /// The forward map `T`.
    pub fn forward(&self, x: f64) -> Result<f64> {
        self.locate(x).map(|(_, z)| z)
    }

    /// `phi(x) = -log |T'(x)| = log |y'(T x)|`.
    pub fn geometric_potential(&self, x: f64) -> Result<f64> {
        let (b, z) = self.locate(x)?;
        Ok(b.eval(z).1.abs().ln())
    }
}

fn sampled_sup_derivative(b: &InverseBranch, samples: usize) -> f64 {
    let dom = b.domain();
    (0..samples)
        .map(|k| {
            let x = dom.lo + dom.len() * k as f64 / (samples - 1) as f64;
            b.eval(x).1.abs()
        })
        .fold(0.0, f64::max)
}

/// Smallest `n <= N^2` with `A^n` entrywise positive.
fn primitive_exponent(n: usize, slots: &[Option<usize>]) -> Option<usize> {
    let a: Vec<bool> = slots.iter().map(Option::is_some).collect();
    let mut power = a.clone();
    for k in 1..=n * n {
        if power.iter().all(|&v| v) {
            return Some(k);
        }
        let mut next = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                next[i * n + j] = (0..n).any(|l| power[i * n + l] && a[l * n + j]);
            }
        }
        power = next;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalogue;

    #[test]
    fn doubling_map_constants() {
        let m = catalogue::doub2();
        assert_eq!(m.len(), 2);
        assert_eq!(m.transition_matrix(), vec![vec![1, 1], vec![1, 1]]);
        assert!((m.expansion().max_derivative - 0.5).abs() < 1e-15);
        assert!(m.expansion().lambda < 1.0);
        assert_eq!(m.mixing_exponent(), 1);
    }

    #[test]
    fn expanding_branch_rejected() {
        let spec = MapSpec {
            intervals: vec![[0.0, 1.0]],
            branches: vec![BranchSpec::Perturbed {
                from: 0,
                to: 0,
                image: [0.0, 1.0],
                eps: 0.1,
            }],
            alpha: 0.5,
        };
        match MarkovMap::build(&spec) {
            Err(Error::Expansion { derivative, .. }) => assert!((derivative - 1.1).abs() < 1e-12),
            other => panic!("expected expansion error, got {other:?}"),
        }
    }

    #[test]
    fn overlapping_intervals_rejected() {
        let mut spec = catalogue::doub2_spec();
        spec.intervals[1] = [0.4, 1.0];
        assert!(matches!(MarkovMap::build(&spec), Err(Error::Overlap(0, 1))));
    }

    #[test]
    fn escaping_branch_rejected() {
        let mut spec = catalogue::doub2_spec();
        spec.branches[0] = BranchSpec::Affine {
            from: 0,
            to: 0,
            slope: 0.5,
            intercept: 0.3,
        };
        assert!(matches!(MarkovMap::build(&spec), Err(Error::Range { .. })));
    }

    #[test]
    fn non_primitive_matrix_rejected() {
        // {I0, I1} and {I2, I3} swap every step, so A^n is never positive
        let aff = |from, to, intercept| BranchSpec::Affine { from, to, slope: 0.5, intercept };
        let spec = MapSpec {
            intervals: vec![[0.0, 1.0], [1.0, 2.0], [2.0, 3.0], [3.0, 4.0]],
            branches: vec![
                aff(0, 2, -1.0),
                aff(0, 3, -1.0),
                aff(1, 2, 0.0),
                aff(1, 3, 0.0),
                aff(2, 0, 2.0),
                aff(2, 1, 2.0),
                aff(3, 0, 3.0),
                aff(3, 1, 3.0),
            ],
            alpha: 0.5,
        };
        assert!(matches!(MarkovMap::build(&spec), Err(Error::Mixing { bound: 16 })));
    }

    #[test]
    fn primitive_exponent_of_golden_mean_shift() {
        let slots = vec![Some(0), Some(1), Some(2), None];
        assert_eq!(primitive_exponent(2, &slots), Some(2));
        let swap = vec![None, Some(0), Some(1), None];
        assert_eq!(primitive_exponent(2, &swap), None);
    }

    #[test]
    fn word_examples() {
        let m = catalogue::doub2();
        let w = m.word(&[0, 0, 0]).unwrap();
        let (y, d) = m.apply_word(&w, 0.4).unwrap();
        assert!((y - 0.1).abs() < 1e-15 && (d - 0.25).abs() < 1e-15);
        let w = m.word(&[1, 0, 0]).unwrap();
        let (y, d) = m.apply_word(&w, 0.4).unwrap();
        assert!((y - 0.6).abs() < 1e-15 && (d - 0.25).abs() < 1e-15);
        let id = m.word(&[1]).unwrap();
        assert_eq!(m.apply_word(&id, 0.7).unwrap(), (0.7, 1.0));
        assert!(matches!(m.apply_word(&w, 0.7), Err(Error::Domain(_))));
    }

    #[test]
    fn birkhoff_examples() {
        let m = catalogue::doub2();
        let w = m.word(&[1, 0, 1, 0]).unwrap();
        assert_eq!(m.birkhoff_sum(|_| 1.0, &w, 0.3).unwrap(), 3.0);
        let w = m.word(&[0, 0, 0]).unwrap();
        assert_eq!(m.birkhoff_sum(|x| x, &w, 0.0).unwrap(), 0.0);
        // y = y_01 o y_10, y(0) = 1/4 and T(1/4) = 1/2
        let w = m.word(&[0, 1, 0]).unwrap();
        assert!((m.birkhoff_sum(|x| x, &w, 0.0).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn potential_examples() {
        let d = catalogue::doub2();
        let t = catalogue::tri3();
        for x in [0.01, 0.3, 0.77] {
            assert!((d.geometric_potential(x).unwrap() + 2f64.ln()).abs() < 1e-14);
            assert!((t.geometric_potential(x).unwrap() + 3f64.ln()).abs() < 1e-14);
        }
        // NONLIN against a finite-difference derivative of the forward map
        let m = catalogue::nonlin();
        let x = 0.25 - 0.03;
        let h = 1e-6;
        let dt = (m.forward(x + h).unwrap() - m.forward(x - h).unwrap()) / (2.0 * h);
        assert!((m.geometric_potential(x).unwrap() + dt.abs().ln()).abs() < 1e-8);
    }

    #[test]
    fn nonlin_contraction_estimate() {
        let m = catalogue::nonlin();
        let e = m.expansion();
        assert!((e.max_derivative - 0.525).abs() < 1e-12);
        assert!(e.lambda <= 0.55);
    }

    #[test]
    fn markov_consistency() {
        for m in [catalogue::doub2(), catalogue::tri3(), catalogue::nonlin()] {
            for b in m.branches() {
                let dom = b.domain();
                for k in 1..50 {
                    let x = dom.lo + dom.len() * k as f64 / 50.0;
                    let y = b.eval(x).0;
                    assert!((m.forward(y).unwrap() - x).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn c_exp_bounds_word_derivatives() {
        let m = catalogue::nonlin();
        let e = m.expansion();
        let w = m.word(&[0, 0, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        for k in 0..=20 {
            let x = 0.5 * k as f64 / 20.0;
            let (_, d) = m.apply_word(&w, x).unwrap();
            assert!(d.abs() <= e.c_exp * e.lambda.powi(8));
        }
    }
}
