//! Roof functions `r: I -> R_+` for the suspension semiflow.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov_map::{Interval, MarkovMap};

const SAMPLES_PER_INTERVAL: usize = 2048;

/// Serializable roof families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RoofSpec {
    /// `c0 + c1 x + c2 x^2`.
    Polynomial { c0: f64, c1: f64, c2: f64 },
    /// `base + slope |x - center|`.
    Kink { base: f64, slope: f64, center: f64 },
}

type CustomFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Polynomial { c0: f64, c1: f64, c2: f64 },
    Kink { base: f64, slope: f64, center: f64 },
    Custom(CustomFn),
}

/// A strictly positive Lipschitz roof with cached constants.
#[derive(Clone)]
pub struct RoofFunction {
    kind: Kind,
    lipschitz: f64,
    infimum: f64,
    supremum: f64,
}

impl fmt::Debug for RoofFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            Kind::Polynomial { c0, c1, c2 } => format!("Polynomial({c0}, {c1}, {c2})"),
            Kind::Kink { base, slope, center } => format!("Kink({base}, {slope}, {center})"),
            Kind::Custom(_) => "Custom".to_string(),
        };
        f.debug_struct("RoofFunction")
            .field("kind", &kind)
            .field("lipschitz", &self.lipschitz)
            .field("infimum", &self.infimum)
            .field("supremum", &self.supremum)
            .finish()
    }
}

impl RoofFunction {
    pub fn from_spec(spec: &RoofSpec, map: &MarkovMap) -> Result<RoofFunction> {
        let kind = match *spec {
            RoofSpec::Polynomial { c0, c1, c2 } => Kind::Polynomial { c0, c1, c2 },
            RoofSpec::Kink { base, slope, center } => Kind::Kink { base, slope, center },
        };
        Self::with_kind(kind, map.intervals(), None)
    }

    pub fn constant(c: f64, map: &MarkovMap) -> Result<RoofFunction> {
        Self::from_spec(&RoofSpec::Polynomial { c0: c, c1: 0.0, c2: 0.0 }, map)
    }

    /// Wraps an arbitrary closure. When `lipschitz` is `None` it is estimated
    /// from sampled difference quotients with a 1% margin.
    pub fn custom<F>(f: F, lipschitz: Option<f64>, map: &MarkovMap) -> Result<RoofFunction>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::with_kind(Kind::Custom(Arc::new(f)), map.intervals(), lipschitz)
    }

    fn with_kind(kind: Kind, intervals: &[Interval], lip: Option<f64>) -> Result<RoofFunction> {
        let mut roof = RoofFunction {
            kind,
            lipschitz: 0.0,
            infimum: f64::INFINITY,
            supremum: f64::NEG_INFINITY,
        };
        let mut sampled_lip: f64 = 0.0;
        for iv in intervals {
            let mut pts: Vec<f64> = (0..=SAMPLES_PER_INTERVAL)
                .map(|k| iv.lo + iv.len() * k as f64 / SAMPLES_PER_INTERVAL as f64)
                .collect();
            pts.extend(roof.critical_points().into_iter().filter(|&c| c > iv.lo && c < iv.hi));
            pts.sort_by(f64::total_cmp);
            let vals: Vec<f64> = pts.iter().map(|&x| roof.eval(x)).collect();
            for (k, &v) in vals.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "roof is not finite at x = {}",
                        pts[k]
                    )));
                }
                roof.infimum = roof.infimum.min(v);
                roof.supremum = roof.supremum.max(v);
            }
            for k in 1..pts.len() {
                let dx = pts[k] - pts[k - 1];
                if dx > 0.0 {
                    sampled_lip = sampled_lip.max((vals[k] - vals[k - 1]).abs() / dx);
                }
            }
        }
        if roof.infimum <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "roof must be strictly positive, infimum is {}",
                roof.infimum
            )));
        }
        roof.lipschitz = match (&roof.kind, lip) {
            (_, Some(l)) => {
                if l < 0.0 || sampled_lip > l * (1.0 + 1e-9) + 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "declared Lipschitz constant {l} is below the sampled {sampled_lip}"
                    )));
                }
                l
            }
            (Kind::Polynomial { c1, c2, .. }, None) => intervals
                .iter()
                .flat_map(|iv| [iv.lo, iv.hi])
                .map(|x| (c1 + 2.0 * c2 * x).abs())
                .fold(0.0, f64::max),
            (Kind::Kink { slope, .. }, None) => slope.abs(),
            (Kind::Custom(_), None) => 1.01 * sampled_lip,
        };
        Ok(roof)
    }

    fn critical_points(&self) -> Vec<f64> {
        match self.kind {
            Kind::Polynomial { c1, c2, .. } if c2 != 0.0 => vec![-c1 / (2.0 * c2)],
            Kind::Kink { center, .. } => vec![center],
            _ => Vec::new(),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Polynomial { c0, c1, c2 } => c0 + x * (c1 + c2 * x),
            Kind::Kink { base, slope, center } => base + slope * (x - center).abs(),
            Kind::Custom(f) => f(x),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn infimum(&self) -> f64 {
        self.infimum
    }

    pub fn supremum(&self) -> f64 {
        self.supremum
    }

    pub fn is_constant(&self) -> bool {
        self.supremum - self.infimum <= 1e-14 * self.supremum
    }

    /// The serializable description, if the roof has one.
    pub fn spec(&self) -> Option<RoofSpec> {
        match self.kind {
            Kind::Polynomial { c0, c1, c2 } => Some(RoofSpec::Polynomial { c0, c1, c2 }),
            Kind::Kink { base, slope, center } => Some(RoofSpec::Kink { base, slope, center }),
            Kind::Custom(_) => None,
        }
    }

    /// `r + g o T - g`, cohomologous to `r`. Its Lipschitz constant is estimated
    /// by sampling since `T` jumps between cylinders.
    pub fn plus_coboundary<G>(&self, g: G, map: Arc<MarkovMap>) -> Result<RoofFunction>
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let base = self.clone();
        let m = Arc::clone(&map);
        let f = move |x: f64| {
            let tx = m.forward(x).unwrap_or(f64::NAN);
            base.eval(x) + g(tx) - g(x)
        };
        Self::custom(f, None, &map)
    }
}
