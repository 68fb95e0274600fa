//! Numerical-error protocol from random vacuum samples and the comparison
//! of FDTD against the analytic perfect-reflector curve.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytic::vacuum_im_greens_equal;
use crate::coherence::{reflector_coherence, steady_coherence};
use crate::dipole::{standard_dipoles, DipolePair, Rotation};
use crate::fdtd::{greens_field_in, halfspace_proxy, FdtdConfig, GreensOptions, Medium};
use crate::optimizer::coherence_at_atom;
use crate::units::length;
use crate::{Error, Result};

/// Distance kept from the absorber when sampling positions, λ₀.
pub const SAMPLE_MARGIN: f64 = 0.25;
/// Minimum number of successful samples for a budget.
pub const MIN_SAMPLES: usize = 10;
/// Height of the PEC half-space surface in the reflector benchmark.
pub const BENCHMARK_SURFACE_Z: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    /// Voxels per wavelength; 0 for a non-lattice evaluator.
    pub resolution: usize,
    /// Mean |ρ₁₂| over the samples.
    pub systematic: f64,
    /// Sample standard deviation of |ρ₁₂|.
    pub random: f64,
    pub total: f64,
    pub n_samples: usize,
}

impl ErrorBudget {
    pub fn from_samples(resolution: usize, samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::Protocol(format!("need at least 2 samples, got {n}")));
        }
        if samples.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Protocol("samples must be finite and non-negative".into()));
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let random = var.sqrt();
        Ok(Self {
            resolution,
            systematic: mean,
            random,
            total: (mean * mean + random * random).sqrt(),
            n_samples: n,
        })
    }
}

/// Computes the coherence an orthogonal pair acquires at a point of an
/// otherwise empty box.
pub trait VacuumEvaluator: Sync {
    fn resolution(&self) -> usize;

    fn coherence(&self, position: [f64; 3], pair: &DipolePair) -> Result<Complex64>;
}

pub struct FdtdEvaluator {
    pub config: FdtdConfig,
    medium: Medium,
}

impl FdtdEvaluator {
    pub fn new(config: FdtdConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            medium: Medium::vacuum(&config),
        })
    }
}

impl VacuumEvaluator for FdtdEvaluator {
    fn resolution(&self) -> usize {
        self.config.resolution
    }

    fn coherence(&self, position: [f64; 3], pair: &DipolePair) -> Result<Complex64> {
        let options = GreensOptions {
            axes: pair.support(),
            ..GreensOptions::default()
        };
        let g = greens_field_in(&self.medium, position, &self.config, &options)?;
        Ok(coherence_at_atom(&g.at_atom, pair)?.rho)
    }
}

/// Exact vacuum tensor at every point.
pub struct AnalyticEvaluator {
    pub omega: f64,
}

impl VacuumEvaluator for AnalyticEvaluator {
    fn resolution(&self) -> usize {
        0
    }

    fn coherence(&self, _position: [f64; 3], pair: &DipolePair) -> Result<Complex64> {
        steady_coherence(&vacuum_im_greens_equal(self.omega), pair)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VacuumSample {
    pub index: usize,
    pub position: [f64; 3],
    /// |ρ₁₂|, or the failure message.
    pub outcome: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VacuumReport {
    pub budget: ErrorBudget,
    pub samples: Vec<VacuumSample>,
    /// Total error after each successful sample from the second on, as
    /// (successes, total).
    pub running_total: Vec<(usize, f64)>,
}

impl VacuumReport {
    pub fn failures(&self) -> usize {
        self.samples.iter().filter(|s| s.outcome.is_err()).count()
    }

    /// Budget over the first `n` successful samples.
    pub fn budget_after(&self, n: usize) -> Result<ErrorBudget> {
        let ok: Vec<f64> = self
            .samples
            .iter()
            .filter_map(|s| s.outcome.as_ref().ok().copied())
            .take(n)
            .collect();
        if ok.len() < n {
            return Err(Error::Protocol(format!(
                "only {} successful samples, asked for {n}",
                ok.len()
            )));
        }
        ErrorBudget::from_samples(self.budget.resolution, &ok)
    }
}

/// Reproducible sample positions, uniform in the box shrunk by `margin`.
pub fn sample_positions(
    box_half_extent: f64,
    margin: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<[f64; 3]>> {
    let half = box_half_extent - margin;
    if !(half > 0.0) {
        return Err(Error::Protocol(format!(
            "box half extent {box_half_extent} leaves no room for samples"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| std::array::from_fn(|_| rng.gen_range(-half..=half)))
        .collect())
}

/// Budget from `n_samples` vacuum evaluations with the perpendicular pair.
/// Failed samples are recorded and skipped.
pub fn vacuum_error_protocol_with(
    evaluator: &dyn VacuumEvaluator,
    box_half_extent: f64,
    margin: f64,
    n_samples: usize,
    seed: u64,
) -> Result<VacuumReport> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::Protocol(format!(
            "need at least {MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    let pair = standard_dipoles(Rotation::Perpendicular, 1.0, 1.0)?;
    let positions = sample_positions(box_half_extent, margin, n_samples, seed)?;
    let samples: Vec<VacuumSample> = positions
        .par_iter()
        .enumerate()
        .map(|(index, &position)| VacuumSample {
            index,
            position,
            outcome: evaluator
                .coherence(position, &pair)
                .map(|r| r.norm())
                .map_err(|e| e.to_string()),
        })
        .collect();
    let ok: Vec<f64> = samples
        .iter()
        .filter_map(|s| s.outcome.as_ref().ok().copied())
        .collect();
    if ok.len() < MIN_SAMPLES {
        return Err(Error::Protocol(format!(
            "only {} of {n_samples} samples succeeded",
            ok.len()
        )));
    }
    let resolution = evaluator.resolution();
    let running_total = (2..=ok.len())
        .map(|n| ErrorBudget::from_samples(resolution, &ok[..n]).map(|b| (n, b.total)))
        .collect::<Result<_>>()?;
    Ok(VacuumReport {
        budget: ErrorBudget::from_samples(resolution, &ok)?,
        samples,
        running_total,
    })
}

/// [`vacuum_error_protocol_with`] using the FDTD engine. Samples keep
/// [`SAMPLE_MARGIN`] from the absorber, widened to three cells on coarse
/// grids so the source stencil stays clear of it.
pub fn vacuum_error_protocol(config: &FdtdConfig, n_samples: usize, seed: u64) -> Result<VacuumReport> {
    let evaluator = FdtdEvaluator::new(*config)?;
    let margin = SAMPLE_MARGIN.max(3.0 * config.dx());
    vacuum_error_protocol_with(&evaluator, config.box_half_extent, margin, n_samples, seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkRow {
    pub resolution: usize,
    pub zeta: f64,
    pub fdtd: f64,
    pub analytic: f64,
    /// fdtd − analytic.
    pub difference: f64,
    pub total_error: f64,
    pub flagged: bool,
}

/// |ρ₁₂| for the perpendicular pair at height ζ above the PEC half-space
/// proxy, one row per ζ.
pub fn reflector_benchmark_at(
    config: &FdtdConfig,
    budget: &ErrorBudget,
    zeta_grid: &[f64],
) -> Result<Vec<BenchmarkRow>> {
    if budget.resolution != config.resolution {
        return Err(Error::InvalidArgument(format!(
            "budget is for {} ppw but the configuration uses {}",
            budget.resolution, config.resolution
        )));
    }
    let medium = halfspace_proxy(config, BENCHMARK_SURFACE_Z)?;
    let pair = standard_dipoles(Rotation::Perpendicular, 1.0, 1.0)?;
    let options = GreensOptions {
        axes: pair.support(),
        ..GreensOptions::default()
    };
    let top = config.box_half_extent;
    zeta_grid
        .iter()
        .map(|&zeta| {
            let z = BENCHMARK_SURFACE_Z + length(zeta);
            if !(zeta > 0.1) || z >= top {
                return Err(Error::Domain(format!(
                    "zeta = {zeta} must exceed 0.1 and keep the atom inside the box"
                )));
            }
            let g = greens_field_in(&medium, [0.0, 0.0, z], config, &options)?;
            let fdtd = coherence_at_atom(&g.at_atom, &pair)?.rho.norm();
            let analytic = reflector_coherence(zeta, 1.0, 1.0)?.abs();
            let difference = fdtd - analytic;
            Ok(BenchmarkRow {
                resolution: config.resolution,
                zeta,
                fdtd,
                analytic,
                difference,
                total_error: budget.total,
                flagged: difference.abs() > budget.total,
            })
        })
        .collect()
}

/// [`reflector_benchmark_at`] for each budget's resolution, other settings
/// taken from `base`.
pub fn reflector_benchmark(
    base: &FdtdConfig,
    budgets: &[ErrorBudget],
    zeta_grid: &[f64],
) -> Result<Vec<BenchmarkRow>> {
    let mut rows = Vec::new();
    for b in budgets {
        let config = FdtdConfig {
            resolution: b.resolution,
            ..*base
        };
        rows.extend(reflector_benchmark_at(&config, b, zeta_grid)?);
    }
    Ok(rows)
}

/// ζ values of the interior local maxima of |ρ₁₂| along the rows, taken
/// separately for the FDTD and analytic columns.
pub fn local_maxima(rows: &[BenchmarkRow]) -> (Vec<f64>, Vec<f64>) {
    let peaks = |f: &dyn Fn(&BenchmarkRow) -> f64| {
        rows.windows(3)
            .filter(|w| f(&w[1]) > f(&w[0]) && f(&w[1]) >= f(&w[2]))
            .map(|w| w[1].zeta)
            .collect::<Vec<_>>()
    };
    (peaks(&|r| r.fdtd), peaks(&|r| r.analytic))
}
