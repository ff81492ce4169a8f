//! Canonical maps and roofs used by tests, the CLI and the bindings.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::markov_map::{BranchSpec, MapSpec, MarkovMap};
use crate::roof::{RoofFunction, RoofSpec};

/// Perturbation applied to the first DOUB2 branch in NONLIN.
pub const NONLIN_EPS: f64 = 0.05;

pub fn doub2_spec() -> MapSpec {
    let mut branches = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            branches.push(BranchSpec::Affine {
                from: i,
                to: j,
                slope: 0.5,
                intercept: 0.5 * i as f64,
            });
        }
    }
    MapSpec {
        intervals: vec![[0.0, 0.5], [0.5, 1.0]],
        branches,
        alpha: 0.5,
    }
}

pub fn tri3_spec() -> MapSpec {
    let mut branches = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            branches.push(BranchSpec::Affine {
                from: i,
                to: j,
                slope: 1.0 / 3.0,
                intercept: i as f64 / 3.0,
            });
        }
    }
    MapSpec {
        intervals: vec![[0.0, 1.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0], [2.0 / 3.0, 1.0]],
        branches,
        alpha: 0.5,
    }
}

pub fn nonlin_spec() -> MapSpec {
    let mut spec = doub2_spec();
    spec.branches[0] = BranchSpec::Perturbed {
        from: 0,
        to: 0,
        image: [0.0, 0.25],
        eps: NONLIN_EPS,
    };
    spec
}

pub fn doub2() -> MarkovMap {
    MarkovMap::build(&doub2_spec()).expect("DOUB2 is valid")
}

pub fn tri3() -> MarkovMap {
    MarkovMap::build(&tri3_spec()).expect("TRI3 is valid")
}

pub fn nonlin() -> MarkovMap {
    MarkovMap::build(&nonlin_spec()).expect("NONLIN is valid")
}

pub fn map_spec(name: &str) -> Result<MapSpec> {
    match name {
        "doub2" => Ok(doub2_spec()),
        "tri3" => Ok(tri3_spec()),
        "nonlin" => Ok(nonlin_spec()),
        other => Err(Error::Config(format!("unknown map preset '{other}'"))),
    }
}

pub fn roof_spec(name: &str) -> Result<RoofSpec> {
    match name {
        "constant" => Ok(RoofSpec::Polynomial { c0: 1.0, c1: 0.0, c2: 0.0 }),
        "linear" => Ok(RoofSpec::Polynomial { c0: 1.0, c1: 0.5, c2: 0.0 }),
        "quadratic" => Ok(RoofSpec::Polynomial { c0: 1.0, c1: 0.0, c2: 0.25 }),
        "kink" => Ok(RoofSpec::Kink {
            base: 1.0,
            slope: 1.0 / 3.0,
            center: 1.0 / 3.0,
        }),
        other => Err(Error::Config(format!("unknown roof preset '{other}'"))),
    }
}

/// Splits a preset name like `doub2-quadratic` into map and roof specs.
pub fn preset(name: &str) -> Result<(MapSpec, RoofSpec)> {
    let (m, r) = name
        .split_once('-')
        .ok_or_else(|| Error::Config(format!("preset '{name}' is not of the form <map>-<roof>")))?;
    Ok((map_spec(m)?, roof_spec(r)?))
}

/// Builds a preset as ready-to-use objects.
pub fn build_preset(name: &str) -> Result<(Arc<MarkovMap>, Arc<RoofFunction>)> {
    let (ms, rs) = preset(name)?;
    let map = Arc::new(MarkovMap::build(&ms)?);
    let roof = Arc::new(RoofFunction::from_spec(&rs, &map)?);
    Ok((map, roof))
}

pub const PRESET_NAMES: [&str; 5] = [
    "doub2-constant",
    "doub2-linear",
    "doub2-quadratic",
    "tri3-kink",
    "nonlin-quadratic",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_build() {
        for name in PRESET_NAMES {
            build_preset(name).unwrap();
        }
        assert!(matches!(preset("doub2"), Err(Error::Config(_))));
        assert!(matches!(preset("quad-linear"), Err(Error::Config(_))));
    }
}
