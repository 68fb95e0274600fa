//! Assembly of Green's tensors from point-source runs, and the vacuum
//! calibration.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use super::engine::{run_point_source, Monitor};
use super::geometry::{rasterize, Medium, VoxelGeometry};
use super::lattice::{CellBox, Lattice};
use super::{Axis, FdtdConfig};
use crate::linalg::{CVec3, ComplexMatrix3};
use crate::units::vacuum_im_g;
use crate::{Error, Result};

/// Which source orientations to run and where to sample the field.
#[derive(Debug, Clone, PartialEq)]
pub struct GreensOptions {
    /// Source axes to run; columns of skipped axes stay zero.
    pub axes: [bool; 3],
    /// Cells sampled for G(r″, r_atom); `None` keeps only the equal-point
    /// tensor.
    pub cells: Option<CellBox>,
    /// Extra sample points (physical coordinates).
    pub probes: Vec<[f64; 3]>,
    /// Apply the vacuum calibration factor.
    pub calibrated: bool,
}

impl Default for GreensOptions {
    fn default() -> Self {
        Self {
            axes: [true; 3],
            cells: None,
            probes: Vec::new(),
            calibrated: true,
        }
    }
}

/// G(r″, r_atom, ω₀) on a set of cells, plus the equal-point tensor.
#[derive(Debug, Clone)]
pub struct GreensField {
    pub lattice: Lattice,
    /// Physical atom position.
    pub atom: [f64; 3],
    pub at_atom: ComplexMatrix3,
    pub cells: Option<CellBox>,
    /// One tensor per cell of `cells`, x-fastest. Column j is the field
    /// from the ĵ-oriented source.
    pub values: Vec<ComplexMatrix3>,
    pub probes: Vec<ComplexMatrix3>,
    pub axes: [bool; 3],
    /// Real factor already applied to every tensor.
    pub calibration: f64,
    /// Time steps taken per source axis (0 for skipped axes).
    pub steps: [usize; 3],
}

impl GreensField {
    pub fn at_cell(&self, cell: [usize; 3]) -> Option<&ComplexMatrix3> {
        let b = self.cells.as_ref()?;
        b.offset(cell).map(|i| &self.values[i])
    }

    /// Whether every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.at_atom.is_finite()
            && self.values.iter().all(ComplexMatrix3::is_finite)
            && self.probes.iter().all(ComplexMatrix3::is_finite)
    }
}

/// Runs the requested source axes at `atom` in `medium` and assembles the
/// tensors column by column.
pub fn greens_field_in(
    medium: &Medium,
    atom: [f64; 3],
    config: &FdtdConfig,
    options: &GreensOptions,
) -> Result<GreensField> {
    let calibration = if options.calibrated {
        calibrate(config)?
    } else {
        1.0
    };
    let monitor = match options.cells {
        Some(b) => Monitor::Cells(b),
        None => Monitor::None,
    };
    let ncells = options.cells.map_or(0, |b| b.len());
    let mut at_atom = ComplexMatrix3::zeros();
    let mut values = vec![ComplexMatrix3::zeros(); ncells];
    let mut probes = vec![ComplexMatrix3::zeros(); options.probes.len()];
    let mut steps = [0; 3];
    let scale = |v: &CVec3| v.map(|z| z * calibration);
    for axis in Axis::ALL {
        let j = axis.index();
        if !options.axes[j] {
            continue;
        }
        let r = run_point_source(medium, config, atom, axis, &monitor, &options.probes)?;
        at_atom.set_column(j, &scale(&r.at_source));
        for (m, v) in values.iter_mut().zip(&r.field) {
            m.set_column(j, &scale(v));
        }
        for (m, v) in probes.iter_mut().zip(&r.probes) {
            m.set_column(j, &scale(v));
        }
        steps[j] = r.steps;
    }
    Ok(GreensField {
        lattice: medium.lattice,
        atom,
        at_atom,
        cells: options.cells,
        values,
        probes,
        axes: options.axes,
        calibration,
        steps,
    })
}

/// Full three-run Green's field for a geometry, sampled over the whole
/// non-absorbing box.
pub fn greens_field(geometry: &VoxelGeometry, config: &FdtdConfig) -> Result<GreensField> {
    let medium = rasterize(geometry, config)?;
    let options = GreensOptions {
        cells: Some(medium.lattice.interior()),
        ..GreensOptions::default()
    };
    greens_field_in(&medium, geometry.atom_position(), config, &options)
}

fn calibration_cache() -> &'static Mutex<HashMap<String, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<String, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Real factor mapping the raw vacuum equal-point Im-trace at the box centre
/// to its exact value 3ω₀/(6π). Cached per configuration.
pub fn calibrate(config: &FdtdConfig) -> Result<f64> {
    config.validate()?;
    let key = format!("{config:?}");
    if let Some(&f) = calibration_cache().lock().unwrap().get(&key) {
        return Ok(f);
    }
    let medium = Medium::vacuum(config);
    let options = GreensOptions {
        calibrated: false,
        ..GreensOptions::default()
    };
    let raw = greens_field_in(&medium, [0.0; 3], config, &options)?;
    let tr = raw.at_atom.trace().im;
    if !(tr.is_finite() && tr.abs() > 0.0) {
        return Err(Error::Numerical(format!(
            "vacuum calibration produced Im Tr G = {tr}"
        )));
    }
    let factor = 3.0 * vacuum_im_g(config.source_center_freq) / tr;
    calibration_cache().lock().unwrap().insert(key, factor);
    Ok(factor)
}
