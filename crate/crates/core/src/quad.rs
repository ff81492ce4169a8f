//! Fixed-order Gauss–Legendre rules.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

/// Order of the fibre rule.
pub const FIBRE_ORDER: usize = 32;

fn reference_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let gl = GaussLegendre::new(NonZeroUsize::new(FIBRE_ORDER).unwrap());
        let mut pairs: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs
    })
}

/// Nodes and weights of the 32-point rule mapped to `[a, b]`.
pub fn gl32(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    reference_rule().iter().map(move |&(x, w)| (c + h * x, h * w))
}

pub fn integrate(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    gl32(a, b).map(|(x, w)| w * f(x)).sum()
}

pub fn integrate_complex(a: f64, b: f64, f: impl Fn(f64) -> Complex64) -> Complex64 {
    gl32(a, b).map(|(x, w)| f(x) * w).sum()
}

/// Composite rule on `panels` equal subintervals.
pub fn integrate_complex_panels(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> Complex64) -> Complex64 {
    let n = panels.max(1);
    let h = (b - a) / n as f64;
    (0..n)
        .map(|k| {
            let lo = a + h * k as f64;
            integrate_complex(lo, lo + h, &f)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_high_degree_polynomials() {
        let v = integrate(0.0, 2.0, |x| x.powi(40));
        assert!((v / (2f64.powi(41) / 41.0) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_exponential() {
        let s = Complex64::new(0.5, 20.0);
        let v = integrate_complex(0.0, 1.0, |u| (-s * u).exp());
        let exact = (1.0 - (-s).exp()) / s;
        assert!((v - exact).norm() < 1e-13);
    }
}
