//! A map, a roof and their discretised transfer data bundled together.

use std::sync::Arc;

use num_complex::Complex64;

use crate::catalogue;
use crate::error::Result;
use crate::grid::{Grid, GridFunction};
use crate::markov_map::MarkovMap;
use crate::roof::RoofFunction;
use crate::transfer::{leading_eigen, normalize, EigenReport, Kernel, Potential, SrbMeasure, TransferOperator};

#[derive(Debug, Clone)]
pub struct System {
    map: Arc<MarkovMap>,
    roof: Arc<RoofFunction>,
    kernel: Arc<Kernel>,
    eigen: EigenReport,
    potential: Potential,
    srb: SrbMeasure,
    mean_roof: f64,
}

impl System {
    pub fn new(map: Arc<MarkovMap>, roof: Arc<RoofFunction>, nodes: usize) -> Result<System> {
        let grid = Arc::new(Grid::new(map.intervals(), nodes, map.alpha())?);
        let kernel = Arc::new(Kernel::new(&map, &roof, grid));
        let eigen = leading_eigen(&kernel)?;
        let potential = normalize(&kernel, &eigen);
        let srb = SrbMeasure::from_density(eigen.density.clone());
        let mean_roof = srb.integrate_real(|x| roof.eval(x));
        Ok(System {
            map,
            roof,
            kernel,
            eigen,
            potential,
            srb,
            mean_roof,
        })
    }

    pub fn preset(name: &str, nodes: usize) -> Result<System> {
        let (map, roof) = catalogue::build_preset(name)?;
        System::new(map, roof, nodes)
    }

    /// Same map and roof on a different grid, with the potential renormalised there.
    pub fn with_nodes(&self, nodes: usize) -> Result<System> {
        if nodes == self.grid().m() {
            return Ok(self.clone());
        }
        System::new(Arc::clone(&self.map), Arc::clone(&self.roof), nodes)
    }

    pub fn map(&self) -> &Arc<MarkovMap> {
        &self.map
    }

    pub fn roof(&self) -> &Arc<RoofFunction> {
        &self.roof
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.kernel.grid()
    }

    pub fn kernel(&self) -> &Arc<Kernel> {
        &self.kernel
    }

    pub fn eigen(&self) -> &EigenReport {
        &self.eigen
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn srb(&self) -> &SrbMeasure {
        &self.srb
    }

    /// `integral r d mu`.
    pub fn mean_roof(&self) -> f64 {
        self.mean_roof
    }

    pub fn alpha(&self) -> f64 {
        self.map.alpha()
    }

    /// The normalised operator `L_s`.
    pub fn operator(&self, s: Complex64) -> TransferOperator {
        TransferOperator::new(Arc::clone(&self.kernel), &self.potential, s)
    }

    pub fn function<F: Fn(f64) -> Complex64>(&self, f: F) -> GridFunction {
        GridFunction::from_fn(Arc::clone(self.grid()), f)
    }
}
