//! Voxel geometries: the optimisation region, placed blocks, the PEC
//! backplate, and their rasterisation onto the Yee lattice.

use std::collections::BTreeSet;
use std::fmt;

use sha2::{Digest, Sha256};

use super::lattice::{stencil_nodes, CellBox, Lattice};
use super::FdtdConfig;
use crate::{Error, Result};

/// Permittivity of a placed block.
pub const BLOCK_PERMITTIVITY: f64 = 3.0;
/// Depth of the PEC backplate below the region, in λ₀.
pub const BACKPLATE_DEPTH: f64 = 0.5;

/// Candidate block index in the region lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockIndex {
    pub ix: usize,
    pub iy: usize,
    pub iz: usize,
}

impl BlockIndex {
    pub fn new(ix: usize, iy: usize, iz: usize) -> Self {
        Self { ix, iy, iz }
    }
}

impl fmt::Display for BlockIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.ix, self.iy, self.iz)
    }
}

/// Square slab of candidate cubes centred on the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    /// Side of the square footprint, λ₀.
    pub footprint: f64,
    /// Edge of one cubic block, λ₀.
    pub block_size: f64,
    /// Slab thickness in blocks.
    pub depth_blocks: usize,
}

impl Default for Region {
    fn default() -> Self {
        Self {
            footprint: 3.0,
            block_size: 1.0 / 6.0,
            depth_blocks: 1,
        }
    }
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        if !(self.block_size > 0.0 && self.footprint >= self.block_size) || self.depth_blocks == 0 {
            return Err(Error::InvalidArgument(format!(
                "invalid region: footprint {}, block {}, depth {}",
                self.footprint, self.block_size, self.depth_blocks
            )));
        }
        let n = self.footprint / self.block_size;
        if (n - n.round()).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "footprint {} is not a whole number of {} blocks",
                self.footprint, self.block_size
            )));
        }
        Ok(())
    }

    /// Blocks per side of the footprint.
    pub fn blocks_per_side(&self) -> usize {
        (self.footprint / self.block_size).round() as usize
    }

    pub fn shape(&self) -> [usize; 3] {
        let n = self.blocks_per_side();
        [n, n, self.depth_blocks]
    }

    pub fn candidate_count(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn contains(&self, b: BlockIndex) -> bool {
        let s = self.shape();
        b.ix < s[0] && b.iy < s[1] && b.iz < s[2]
    }

    /// Candidates in lexicographic order.
    pub fn candidates(&self) -> impl Iterator<Item = BlockIndex> {
        let [nx, ny, nz] = self.shape();
        (0..nx).flat_map(move |ix| {
            (0..ny).flat_map(move |iy| (0..nz).map(move |iz| BlockIndex::new(ix, iy, iz)))
        })
    }

    pub fn thickness(&self) -> f64 {
        self.depth_blocks as f64 * self.block_size
    }

    /// z of the lower face (the backplate interface).
    pub fn bottom(&self) -> f64 {
        -0.5 * self.thickness()
    }

    pub fn top(&self) -> f64 {
        0.5 * self.thickness()
    }

    /// Physical `[lo, hi]` per axis.
    pub fn block_bounds(&self, b: BlockIndex) -> [[f64; 2]; 3] {
        let s = self.block_size;
        let x0 = -0.5 * self.footprint + b.ix as f64 * s;
        let y0 = -0.5 * self.footprint + b.iy as f64 * s;
        let z0 = self.bottom() + b.iz as f64 * s;
        [[x0, x0 + s], [y0, y0 + s], [z0, z0 + s]]
    }

    pub fn block_centre(&self, b: BlockIndex) -> [f64; 3] {
        self.block_bounds(b).map(|[lo, hi]| 0.5 * (lo + hi))
    }

    /// Cells covered by a block, corners snapped down to cell boundaries.
    pub fn block_cells(&self, b: BlockIndex, lattice: &Lattice) -> Result<CellBox> {
        span_cells(lattice, self.block_bounds(b))
    }

    /// Cells covered by the whole region.
    pub fn cells(&self, lattice: &Lattice) -> Result<CellBox> {
        let h = 0.5 * self.footprint;
        span_cells(lattice, [[-h, h], [-h, h], [self.bottom(), self.top()]])
    }
}

fn span_cells(lattice: &Lattice, bounds: [[f64; 2]; 3]) -> Result<CellBox> {
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        let l = lattice.snap(bounds[a][0]);
        let h = lattice.snap(bounds[a][1]);
        if l < 0 || h > lattice.cells as isize {
            return Err(Error::Geometry(format!(
                "extent [{}, {}] leaves the simulation grid",
                bounds[a][0], bounds[a][1]
            )));
        }
        lo[a] = l as usize;
        hi[a] = h as usize;
    }
    Ok(CellBox::new(lo, hi))
}

/// Region, placed blocks (in placement order), backplate flag and atom
/// height.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGeometry {
    pub region: Region,
    pub backplate: bool,
    /// Atom height in ζ above the backplate interface (backplate on) or above
    /// the region mid-plane (backplate off).
    pub atom_zeta: f64,
    blocks: Vec<BlockIndex>,
    occupied: BTreeSet<BlockIndex>,
}

impl VoxelGeometry {
    pub fn new(region: Region, backplate: bool, atom_zeta: f64) -> Result<Self> {
        region.validate()?;
        if !(atom_zeta > 0.0) || !atom_zeta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "atom zeta must be positive, got {atom_zeta}"
            )));
        }
        Ok(Self {
            region,
            backplate,
            atom_zeta,
            blocks: Vec::new(),
            occupied: BTreeSet::new(),
        })
    }

    pub fn blocks(&self) -> &[BlockIndex] {
        &self.blocks
    }

    pub fn is_occupied(&self, b: BlockIndex) -> bool {
        self.occupied.contains(&b)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn place(&mut self, b: BlockIndex) -> Result<()> {
        if !self.region.contains(b) {
            return Err(Error::Geometry(format!("block {b} lies outside the region")));
        }
        if !self.occupied.insert(b) {
            return Err(Error::Geometry(format!("block {b} is already occupied")));
        }
        self.blocks.push(b);
        Ok(())
    }

    /// Unoccupied candidates in lexicographic order.
    pub fn free_candidates(&self) -> Vec<BlockIndex> {
        self.region
            .candidates()
            .filter(|b| !self.occupied.contains(b))
            .collect()
    }

    /// z of the plane the atom height is measured from.
    pub fn reference_z(&self) -> f64 {
        if self.backplate {
            self.region.bottom()
        } else {
            0.0
        }
    }

    /// Physical atom position on the z-axis.
    pub fn atom_position(&self) -> [f64; 3] {
        [0.0, 0.0, self.reference_z() + crate::units::length(self.atom_zeta)]
    }

    /// SHA-256 over a canonical description; insensitive to placement order.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!(
            "region {:?} {:?} {}\nbackplate {}\natom {:?}\n",
            self.region.footprint,
            self.region.block_size,
            self.region.depth_blocks,
            self.backplate,
            self.atom_zeta
        ));
        for b in &self.occupied {
            h.update(format!("{} {} {}\n", b.ix, b.iy, b.iz));
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Rasterised material: permittivity and PEC flag per cell.
#[derive(Debug, Clone)]
pub struct Medium {
    pub lattice: Lattice,
    pub eps: Vec<f64>,
    pub pec: Vec<bool>,
}

impl Medium {
    pub fn vacuum(config: &FdtdConfig) -> Self {
        let lattice = Lattice::from_config(config);
        let n = lattice.cells.pow(3);
        Self {
            lattice,
            eps: vec![1.0; n],
            pec: vec![false; n],
        }
    }

    #[inline]
    pub fn cell_index(&self, c: [usize; 3]) -> usize {
        let n = self.lattice.cells;
        c[0] + n * (c[1] + n * c[2])
    }

    pub fn eps_at(&self, c: [usize; 3]) -> f64 {
        self.eps[self.cell_index(c)]
    }

    pub fn is_pec(&self, c: [usize; 3]) -> bool {
        self.pec[self.cell_index(c)]
    }

    pub fn is_vacuum(&self, c: [usize; 3]) -> bool {
        let i = self.cell_index(c);
        !self.pec[i] && self.eps[i] == 1.0
    }

    pub fn fill_eps(&mut self, cells: &CellBox, eps: f64) {
        for c in cells.iter() {
            let i = self.cell_index(c);
            self.eps[i] = eps;
        }
    }

    pub fn fill_pec(&mut self, cells: &CellBox) {
        for c in cells.iter() {
            let i = self.cell_index(c);
            self.pec[i] = true;
        }
    }

    /// Checks that a point at physical `pos` couples only to vacuum: every
    /// cell touching a node of its interpolation stencil must be vacuum and
    /// lie inside the non-absorbing box.
    pub fn check_source_site(&self, pos: [f64; 3]) -> Result<[f64; 3]> {
        let l = &self.lattice;
        let g = pos.map(|x| l.to_grid(x));
        let (lo, hi) = l.interior_grid_range();
        if g.iter().any(|&v| !(v >= lo + 2.0 && v <= hi - 2.0)) {
            return Err(Error::Geometry(format!(
                "point ({}, {}, {}) is not inside the simulation box",
                pos[0], pos[1], pos[2]
            )));
        }
        for node in stencil_nodes(g) {
            for dk in 0..2 {
                for dj in 0..2 {
                    for di in 0..2 {
                        let c = [node[0] + di - 1, node[1] + dj - 1, node[2] + dk - 1];
                        if !self.is_vacuum(c) {
                            return Err(Error::Geometry(format!(
                                "point ({}, {}, {}) touches material in cell {:?}",
                                pos[0], pos[1], pos[2], c
                            )));
                        }
                    }
                }
            }
        }
        Ok(g)
    }
}

/// ε = 3 in block cells, PEC over the backplate slab, vacuum elsewhere.
pub fn rasterize(geometry: &VoxelGeometry, config: &FdtdConfig) -> Result<Medium> {
    config.validate()?;
    let mut medium = Medium::vacuum(config);
    let lattice = medium.lattice;
    let region_cells = geometry.region.cells(&lattice)?;
    let interior = lattice.interior();
    if interior.union(&region_cells) != interior {
        return Err(Error::Geometry(
            "optimisation region does not fit inside the simulation box".into(),
        ));
    }
    for &b in geometry.blocks() {
        let cells = geometry.region.block_cells(b, &lattice)?;
        medium.fill_eps(&cells, BLOCK_PERMITTIVITY);
    }
    if geometry.backplate {
        let h = 0.5 * geometry.region.footprint;
        let bottom = geometry.region.bottom();
        let cells = span_cells(&lattice, [[-h, h], [-h, h], [bottom - BACKPLATE_DEPTH, bottom]])?;
        medium.fill_pec(&cells);
    }
    medium.check_source_site(geometry.atom_position())?;
    Ok(medium)
}

/// PEC filling every cell below `surface_z` across the whole grid, the
/// closest realisable proxy for a perfectly reflecting half-space.
pub fn halfspace_proxy(config: &FdtdConfig, surface_z: f64) -> Result<Medium> {
    config.validate()?;
    let mut medium = Medium::vacuum(config);
    let l = medium.lattice;
    let k = l.snap(surface_z);
    if k <= 0 || k >= l.cells as isize {
        return Err(Error::Geometry(format!(
            "surface z = {surface_z} is outside the grid"
        )));
    }
    medium.fill_pec(&CellBox::new([0, 0, 0], [l.cells, l.cells, k as usize]));
    Ok(medium)
}
