//! Iterative block placement at the argmax of the merit field, and the
//! single-pass variant driven by the analytic vacuum merit.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;

use crate::adjoint::{merit_field_over_region, vacuum_merit_field};
use crate::coherence::{rates_from_greens, RateSet};
use crate::dipole::{standard_dipoles, DipolePair, Rotation};
use crate::fdtd::{
    greens_field_in, rasterize, BlockIndex, FdtdConfig, GreensField, GreensOptions, Region,
    VoxelGeometry,
};
use crate::linalg::ComplexMatrix3;
use crate::{Error, Result};

/// First antinode of the reflector curve.
pub const ZETA1: f64 = 0.7627;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub backplate: bool,
    pub rotation: Rotation,
}

impl Scenario {
    pub fn pair(&self) -> DipolePair {
        standard_dipoles(self.rotation, 1.0, 1.0).expect("unit dipoles are valid")
    }
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            backplate: true,
            rotation: Rotation::Perpendicular,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = if self.backplate { "backplate" } else { "freestanding" };
        write!(f, "{base}-{}", self.rotation)
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (base, rot) = s.split_once('-').ok_or_else(|| {
            Error::InvalidArgument(format!(
                "scenario '{s}' must look like backplate-perpendicular"
            ))
        })?;
        let backplate = match base {
            "backplate" => true,
            "freestanding" => false,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown base '{other}' (expected backplate or freestanding)"
                )))
            }
        };
        Ok(Self {
            backplate,
            rotation: rot.parse()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationConfig {
    pub scenario: Scenario,
    /// Atom height in ζ above the backplate interface, or above the region
    /// mid-plane when freestanding.
    pub atom_zeta: f64,
    pub max_iterations: usize,
    pub fdtd: FdtdConfig,
    pub region: Region,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::default(),
            atom_zeta: ZETA1,
            max_iterations: 20,
            fdtd: FdtdConfig::default(),
            region: Region::default(),
        }
    }
}

impl OptimizationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.atom_zeta > 0.0 && self.atom_zeta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "atom_zeta must be positive, got {}",
                self.atom_zeta
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be >= 1".into()));
        }
        self.fdtd.validate()?;
        self.region.validate()
    }

    /// Empty starting geometry for the scenario.
    pub fn initial_geometry(&self) -> Result<VoxelGeometry> {
        VoxelGeometry::new(self.region, self.scenario.backplate, self.atom_zeta)
    }
}

/// Coherence and rates at the atom for one geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceResult {
    pub rho: Complex64,
    pub rates: RateSet,
}

/// One iteration: the coherence of the geometry before placement, and the
/// block placed afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// 1-based.
    pub iteration: usize,
    pub block: BlockIndex,
    pub merit_max: f64,
    pub rho: Complex64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub kappa12: Complex64,
    /// Seconds.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    pub records: Vec<TraceRecord>,
    /// Position in `records` of the largest |ρ₁₂|; ties go to the earliest.
    pub best_iteration: usize,
    /// The geometry whose coherence is `records[best_iteration]`.
    pub best_geometry: VoxelGeometry,
    /// Geometry after the last placement.
    pub final_geometry: VoxelGeometry,
}

impl OptimizationTrace {
    pub fn best(&self) -> &TraceRecord {
        &self.records[self.best_iteration]
    }

    pub fn peak_rho(&self) -> f64 {
        self.best().rho.norm()
    }
}

/// Geometry plus the trace that produced it; enough to resume a run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationState {
    pub geometry: VoxelGeometry,
    pub records: Vec<TraceRecord>,
}

impl OptimizationState {
    pub fn new(config: &OptimizationConfig) -> Result<Self> {
        Ok(Self {
            geometry: config.initial_geometry()?,
            records: Vec::new(),
        })
    }

    /// Checks that the trace and the placement order agree.
    pub fn validate(&self, config: &OptimizationConfig) -> Result<()> {
        let g = &self.geometry;
        if g.region != config.region
            || g.backplate != config.scenario.backplate
            || g.atom_zeta != config.atom_zeta
        {
            return Err(Error::InvalidArgument(
                "checkpoint geometry does not match the configuration".into(),
            ));
        }
        if g.len() != self.records.len() {
            return Err(Error::InvalidArgument(format!(
                "checkpoint has {} blocks but {} trace rows",
                g.len(),
                self.records.len()
            )));
        }
        for (k, (r, b)) in self.records.iter().zip(g.blocks()).enumerate() {
            if r.iteration != k + 1 || r.block != *b {
                return Err(Error::InvalidArgument(format!(
                    "trace row {} does not match placement {b}",
                    k + 1
                )));
            }
        }
        Ok(())
    }
}

/// ½(ImG + ImGᵀ) restricted to the rows and columns in `support`.
///
/// Entries outside the support are never computed when source axes are
/// skipped, and the transpose average removes the small discrete
/// non-reciprocity of a finite run.
pub fn effective_im_g(g: &ComplexMatrix3, support: [bool; 3]) -> ComplexMatrix3 {
    let im = g.im();
    let mut out = ComplexMatrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            if support[i] && support[j] {
                out[(i, j)] = 0.5 * (im[(i, j)] + im[(j, i)]);
            }
        }
    }
    out
}

/// Coherence and rates from the equal-point tensor.
pub fn coherence_at_atom(g_at_atom: &ComplexMatrix3, pair: &DipolePair) -> Result<CoherenceResult> {
    let im = effective_im_g(g_at_atom, pair.support());
    let rates = rates_from_greens(&im, pair)?;
    Ok(CoherenceResult {
        rho: rates.steady_coherence(),
        rates,
    })
}

/// Green's field for `geometry` with only the source axes the pair needs
/// and the region cells as monitor.
pub fn evaluate(
    geometry: &VoxelGeometry,
    config: &FdtdConfig,
    pair: &DipolePair,
    with_region: bool,
) -> Result<GreensField> {
    let medium = rasterize(geometry, config)?;
    let cells = if with_region {
        Some(geometry.region.cells(&medium.lattice)?)
    } else {
        None
    };
    let options = GreensOptions {
        axes: pair.support(),
        cells,
        ..GreensOptions::default()
    };
    greens_field_in(&medium, geometry.atom_position(), config, &options)
}

/// Simulates the current geometry, records its coherence and places one block
/// at the merit argmax, even when that merit is not positive.
pub fn iterate_once(
    geometry: &mut VoxelGeometry,
    config: &OptimizationConfig,
    iteration: usize,
) -> Result<TraceRecord> {
    let start = Instant::now();
    let free = geometry.free_candidates();
    if free.is_empty() {
        return Err(Error::RegionExhausted);
    }
    let pair = config.scenario.pair();
    let field = evaluate(geometry, &config.fdtd, &pair, true)?;
    if !field.is_finite() {
        return Err(Error::Numerical("Green's field has non-finite entries".into()));
    }
    let coherence = coherence_at_atom(&field.at_atom, &pair)?;
    let g_eff = effective_im_g(&field.at_atom, pair.support()).scale(Complex64::i());
    let merit = merit_field_over_region(&field, &g_eff, &pair, &geometry.region, &free)?;
    let (block, merit_max) = merit.argmax().ok_or(Error::RegionExhausted)?;
    geometry.place(block)?;
    Ok(TraceRecord {
        iteration,
        block,
        merit_max,
        rho: coherence.rho,
        gamma1: coherence.rates.gamma1,
        gamma2: coherence.rates.gamma2,
        kappa12: coherence.rates.kappa12,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Runs from an empty geometry to `max_iterations` placements.
pub fn run_optimization(config: &OptimizationConfig) -> Result<OptimizationTrace> {
    run_optimization_from(config, OptimizationState::new(config)?, |_| Ok(()))
}

/// Continues from `state`, calling `on_iteration` after every placement.
/// Stops early, without error, once the region is full.
pub fn run_optimization_from<F>(
    config: &OptimizationConfig,
    mut state: OptimizationState,
    mut on_iteration: F,
) -> Result<OptimizationTrace>
where
    F: FnMut(&OptimizationState) -> Result<()>,
{
    config.validate()?;
    state.validate(config)?;
    while state.records.len() < config.max_iterations {
        if state.geometry.free_candidates().is_empty() {
            break;
        }
        let iteration = state.records.len() + 1;
        let record = iterate_once(&mut state.geometry, config, iteration)?;
        state.records.push(record);
        on_iteration(&state)?;
    }
    finish(config, state)
}

fn finish(config: &OptimizationConfig, state: OptimizationState) -> Result<OptimizationTrace> {
    if state.records.is_empty() {
        return Err(Error::RegionExhausted);
    }
    let mut best = 0;
    for (k, r) in state.records.iter().enumerate() {
        if r.rho.norm() > state.records[best].rho.norm() {
            best = k;
        }
    }
    let mut best_geometry = config.initial_geometry()?;
    for &b in &state.geometry.blocks()[..best] {
        best_geometry.place(b)?;
    }
    Ok(OptimizationTrace {
        records: state.records,
        best_iteration: best,
        best_geometry,
        final_geometry: state.geometry,
    })
}

/// Fills every candidate whose analytic vacuum block merit is positive and
/// evaluates the result with one simulation.
pub fn single_pass(config: &OptimizationConfig) -> Result<(VoxelGeometry, CoherenceResult)> {
    config.validate()?;
    let mut geometry = config.initial_geometry()?;
    let pair = config.scenario.pair();
    let lattice = crate::fdtd::Lattice::from_config(&config.fdtd);
    let candidates: Vec<BlockIndex> = config.region.candidates().collect();
    let merit = vacuum_merit_field(
        &lattice,
        geometry.atom_position(),
        &pair,
        &config.region,
        &candidates,
        config.fdtd.source_center_freq,
    )?;
    for b in merit.positive() {
        geometry.place(b)?;
    }
    let field = evaluate(&geometry, &config.fdtd, &pair, false)?;
    let coherence = coherence_at_atom(&field.at_atom, &pair)?;
    Ok((geometry, coherence))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_round_trips() {
        for backplate in [true, false] {
            for rotation in [Rotation::Perpendicular, Rotation::Parallel] {
                let s = Scenario {
                    backplate,
                    rotation,
                };
                assert_eq!(s.to_string().parse::<Scenario>().unwrap(), s);
            }
        }
        assert!("backplate".parse::<Scenario>().is_err());
        assert!("mirror-parallel".parse::<Scenario>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = OptimizationConfig::default();
        c.validate().unwrap();
        c.max_iterations = 0;
        assert!(c.validate().is_err());
        let c = OptimizationConfig {
            atom_zeta: -1.0,
            ..OptimizationConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn effective_environment_is_symmetric_and_masked() {
        let mut g = ComplexMatrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                g[(i, j)] = Complex64::new(0.0, (1 + i + 3 * j) as f64);
            }
        }
        let e = effective_im_g(&g, [false, true, true]);
        assert_eq!(e.asymmetry(), 0.0);
        for k in 0..3 {
            assert_eq!(e[(0, k)], Complex64::new(0.0, 0.0));
            assert_eq!(e[(k, 0)], Complex64::new(0.0, 0.0));
        }
        assert_eq!(e[(1, 2)].re, 0.5 * (8.0 + 6.0));
    }

    #[test]
    fn resume_state_must_match_trace() {
        let config = OptimizationConfig::default();
        let mut state = OptimizationState::new(&config).unwrap();
        state.validate(&config).unwrap();
        state.geometry.place(BlockIndex::new(0, 0, 0)).unwrap();
        assert!(state.validate(&config).is_err());
    }
}
