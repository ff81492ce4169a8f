//! Observables `E(x, u)` on the suspension space, selected by name.
//!
//! Grammar: factors joined by `*`. A factor is `const`, `x`, `u`, or one of
//! `sin_u`, `cos_u`, `exp_u`, `sin_x`, `cos_x`, `sin_ur`, `cos_ur` with an
//! optional integer frequency suffix (`sin_u2`). The `_ur` family uses the
//! rescaled height `u / r(x)`, so `sin_ur` vanishes at both ends of a fibre.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SEMINORM_POINTS;
use crate::quad;
use crate::roof::RoofFunction;
use crate::system::System;

type CustomFn = Arc<dyn Fn(f64, f64, f64) -> Complex64 + Send + Sync>;

#[derive(Clone)]
enum Factor {
    Const(Complex64),
    X,
    U,
    SinU(f64),
    CosU(f64),
    ExpU(f64),
    SinX(f64),
    CosX(f64),
    SinUr(f64),
    CosUr(f64),
    Custom(CustomFn),
}

impl Factor {
    #[inline]
    fn eval(&self, x: f64, u: f64, r: f64) -> Complex64 {
        let re = |v: f64| Complex64::new(v, 0.0);
        match self {
            Factor::Const(c) => *c,
            Factor::X => re(x),
            Factor::U => re(u),
            Factor::SinU(k) => re((2.0 * PI * k * u).sin()),
            Factor::CosU(k) => re((2.0 * PI * k * u).cos()),
            Factor::ExpU(k) => Complex64::from_polar(1.0, 2.0 * PI * k * u),
            Factor::SinX(k) => re((2.0 * PI * k * x).sin()),
            Factor::CosX(k) => re((2.0 * PI * k * x).cos()),
            Factor::SinUr(k) => re((2.0 * PI * k * u / r).sin()),
            Factor::CosUr(k) => re((2.0 * PI * k * u / r).cos()),
            Factor::Custom(f) => f(x, u, r),
        }
    }

    fn parse(token: &str) -> Result<Factor> {
        let t = token.trim();
        if t == "const" || t == "1" {
            return Ok(Factor::Const(Complex64::new(1.0, 0.0)));
        }
        if t == "x" {
            return Ok(Factor::X);
        }
        if t == "u" {
            return Ok(Factor::U);
        }
        let stems: [(&str, fn(f64) -> Factor); 7] = [
            ("sin_ur", Factor::SinUr),
            ("cos_ur", Factor::CosUr),
            ("sin_u", Factor::SinU),
            ("cos_u", Factor::CosU),
            ("exp_u", Factor::ExpU),
            ("sin_x", Factor::SinX),
            ("cos_x", Factor::CosX),
        ];
        for (stem, make) in stems {
            if let Some(rest) = t.strip_prefix(stem) {
                if rest.is_empty() {
                    return Ok(make(1.0));
                }
                if let Ok(k) = rest.parse::<u32>() {
                    if k > 0 {
                        return Ok(make(k as f64));
                    }
                }
            }
        }
        Err(Error::Config(format!("unknown observable factor '{t}'")))
    }
}

/// `|E|_inf`, `|E|_alpha` (in x, uniformly in u) and `|d_u E|_inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormComponents {
    pub sup: f64,
    pub holder: f64,
    pub du_sup: f64,
}

impl NormComponents {
    /// `||E||_{alpha,1}`.
    pub fn total(&self) -> f64 {
        self.sup + self.holder + self.du_sup
    }
}

/// A catalogue observable bound to a roof, optionally centred.
#[derive(Clone)]
pub struct SuspensionObservable {
    name: String,
    factors: Vec<Factor>,
    roof: Arc<RoofFunction>,
    offset: Complex64,
}

impl fmt::Debug for SuspensionObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SuspensionObservable")
            .field("name", &self.name)
            .field("offset", &self.offset)
            .finish()
    }
}

impl SuspensionObservable {
    pub fn parse(name: &str, roof: Arc<RoofFunction>) -> Result<SuspensionObservable> {
        if name.trim().is_empty() {
            return Err(Error::Config("empty observable name".into()));
        }
        let factors = name.split('*').map(Factor::parse).collect::<Result<Vec<_>>>()?;
        Ok(SuspensionObservable {
            name: name.trim().to_string(),
            factors,
            roof,
            offset: Complex64::new(0.0, 0.0),
        })
    }

    pub fn constant(c: Complex64, roof: Arc<RoofFunction>) -> SuspensionObservable {
        SuspensionObservable {
            name: format!("{c}"),
            factors: vec![Factor::Const(c)],
            roof,
            offset: Complex64::new(0.0, 0.0),
        }
    }

    /// Wraps `f(x, u, r(x))`.
    pub fn custom<F>(name: &str, f: F, roof: Arc<RoofFunction>) -> SuspensionObservable
    where
        F: Fn(f64, f64, f64) -> Complex64 + Send + Sync + 'static,
    {
        SuspensionObservable {
            name: name.to_string(),
            factors: vec![Factor::Custom(Arc::new(f))],
            roof,
            offset: Complex64::new(0.0, 0.0),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn roof(&self) -> &Arc<RoofFunction> {
        &self.roof
    }

    /// The mean subtracted by [`SuspensionObservable::centered`], zero otherwise.
    pub fn offset(&self) -> Complex64 {
        self.offset
    }

    #[inline]
    pub fn eval(&self, x: f64, u: f64) -> Complex64 {
        let r = self.roof.eval(x);
        self.eval_with_roof(x, u, r)
    }

    #[inline]
    pub(crate) fn eval_with_roof(&self, x: f64, u: f64, r: f64) -> Complex64 {
        let mut v = Complex64::new(1.0, 0.0);
        for f in &self.factors {
            v *= f.eval(x, u, r);
        }
        v - self.offset
    }

    /// Subtracts the invariant mean, computed once.
    pub fn centered(&self, system: &System) -> SuspensionObservable {
        let mut raw = self.clone();
        raw.offset = Complex64::new(0.0, 0.0);
        let mean = crate::suspension::invariant_integral(system, &raw);
        SuspensionObservable {
            offset: mean,
            ..raw
        }
    }

    /// Estimated norm components on a sample of the suspension space.
    ///
    /// The Hölder part is taken in `x` on the seminorm subgrid at fixed heights
    /// `u` in `[0, inf r)`, and `d_u E` by central differences.
    pub fn norms(&self, system: &System) -> NormComponents {
        let map = system.map();
        let xs: Vec<f64> = map
            .intervals()
            .iter()
            .flat_map(|iv| {
                (0..SEMINORM_POINTS)
                    .map(move |k| iv.lo + iv.len() * k as f64 / (SEMINORM_POINTS - 1) as f64)
            })
            .collect();
        const HEIGHTS: usize = 33;
        let (mut sup, mut du_sup, mut holder): (f64, f64, f64) = (0.0, 0.0, 0.0);
        let alpha = system.alpha();
        for &x in &xs {
            let r = self.roof.eval(x);
            for j in 0..HEIGHTS {
                let u = r * j as f64 / HEIGHTS as f64;
                sup = sup.max(self.eval(x, u).norm());
                let h = 1e-6 * r;
                let (a, b) = ((u - h).max(0.0), (u + h).min(r * (1.0 - 1e-12)));
                du_sup = du_sup.max((self.eval(x, b) - self.eval(x, a)).norm() / (b - a));
            }
        }
        let inf_r = self.roof.infimum();
        for j in 0..HEIGHTS {
            let u = inf_r * j as f64 / HEIGHTS as f64;
            let vals: Vec<Complex64> = xs.iter().map(|&x| self.eval(x, u)).collect();
            for a in 0..xs.len() {
                for b in a + 1..xs.len() {
                    let d = (xs[a] - xs[b]).abs();
                    if d > 1e-12 {
                        holder = holder.max((vals[a] - vals[b]).norm() / d.powf(alpha));
                    }
                }
            }
        }
        NormComponents {
            sup,
            holder,
            du_sup,
        }
    }

    /// `sup |E|` on a sample of the suspension space.
    pub fn sup_norm(&self, system: &System) -> f64 {
        let grid = system.grid();
        let mut s: f64 = 0.0;
        for k in (0..grid.len()).step_by(8) {
            let x = grid.node(k);
            let r = self.roof.eval(x);
            for (u, _) in quad::gl32(0.0, r) {
                s = s.max(self.eval(x, u).norm());
            }
            s = s.max(self.eval(x, 0.0).norm());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalogue;

    #[test]
    fn parse_catalogue_names() {
        let (_, roof) = catalogue::build_preset("doub2-linear").unwrap();
        let e = SuspensionObservable::parse("sin_ur*cos_x2", Arc::clone(&roof)).unwrap();
        let x = 0.3;
        let r = roof.eval(x);
        let v = e.eval(x, 0.25 * r).re;
        assert!((v - (4.0 * PI * x).cos()).abs() < 1e-14);
        let e = SuspensionObservable::parse("exp_u3", Arc::clone(&roof)).unwrap();
        assert!((e.eval(0.1, 0.5) - Complex64::from_polar(1.0, 3.0 * PI)).norm() < 1e-14);
        for bad in ["", "sin_q", "sin_u0", "x**u"] {
            assert!(SuspensionObservable::parse(bad, Arc::clone(&roof)).is_err(), "{bad}");
        }
    }

    #[test]
    fn norm_components_of_u() {
        let sys = System::preset("doub2-constant", 257).unwrap();
        let e = SuspensionObservable::parse("u", Arc::clone(sys.roof())).unwrap();
        let n = e.norms(&sys);
        assert!((n.du_sup - 1.0).abs() < 1e-6);
        assert!(n.holder < 1e-12);
        assert!(n.sup <= 1.0 && n.sup > 0.9);
        assert!((n.total() - n.sup - 1.0).abs() < 1e-6);
    }
}
