//! Yee lattice bookkeeping: coordinates, flat indexing, cell boxes and the
//! interpolation stencils that couple point sources and probes to edges.
//!
//! Nodes sit at integer grid coordinates. The E-component along axis `a` at
//! node `p` lives on the edge between `p` and `p + ê_a`; all field arrays use
//! the same `(n+1)³` flat layout with x fastest.

use super::{Axis, FdtdConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    /// Cells per axis (the same on every axis).
    pub cells: usize,
    pub dx: f64,
    pub pml_cells: usize,
    /// Cells from the origin to the inner PML boundary.
    pub half_cells: usize,
}

impl Lattice {
    pub fn from_config(config: &FdtdConfig) -> Self {
        let res = config.resolution as f64;
        let half_cells = (config.box_half_extent * res).round() as usize;
        let pml_cells = (config.pml_thickness * res).round() as usize;
        Self {
            cells: 2 * (half_cells + pml_cells),
            dx: 1.0 / res,
            pml_cells,
            half_cells,
        }
    }

    /// Nodes per axis.
    #[inline]
    pub fn nodes(&self) -> usize {
        self.cells + 1
    }

    #[inline]
    pub fn strides(&self) -> [usize; 3] {
        let s1 = self.nodes();
        [1, s1, s1 * s1]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes().pow(3)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let s1 = self.nodes();
        i + s1 * (j + s1 * k)
    }

    /// Physical coordinate of node 0.
    #[inline]
    pub fn origin(&self) -> f64 {
        -((self.half_cells + self.pml_cells) as f64) * self.dx
    }

    /// Physical coordinate → continuous grid coordinate.
    #[inline]
    pub fn to_grid(&self, x: f64) -> f64 {
        (x - self.origin()) / self.dx
    }

    #[inline]
    pub fn to_physical(&self, g: f64) -> f64 {
        self.origin() + g * self.dx
    }

    /// Index of the first cell at or above `x`, snapping exact boundaries
    /// consistently (floor with a small tolerance).
    pub fn snap(&self, x: f64) -> isize {
        (self.to_grid(x) + 1e-9).floor() as isize
    }

    pub fn cell_centre(&self, cell: [usize; 3]) -> [f64; 3] {
        cell.map(|c| self.to_physical(c as f64 + 0.5))
    }

    /// Cells of the non-absorbing interior.
    pub fn interior(&self) -> CellBox {
        let lo = self.pml_cells;
        let hi = self.cells - self.pml_cells;
        CellBox::new([lo; 3], [hi; 3])
    }

    /// Grid coordinate range `[lo, hi]` occupied by the interior.
    pub fn interior_grid_range(&self) -> (f64, f64) {
        (self.pml_cells as f64, (self.cells - self.pml_cells) as f64)
    }
}

/// Axis-aligned box of cells, `lo` inclusive and `hi` exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellBox {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl CellBox {
    pub fn new(lo: [usize; 3], hi: [usize; 3]) -> Self {
        Self { lo, hi }
    }

    pub fn shape(&self) -> [usize; 3] {
        std::array::from_fn(|a| self.hi[a].saturating_sub(self.lo[a]))
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, c: [usize; 3]) -> bool {
        (0..3).all(|a| c[a] >= self.lo[a] && c[a] < self.hi[a])
    }

    /// Position of `c` in x-fastest order.
    pub fn offset(&self, c: [usize; 3]) -> Option<usize> {
        if !self.contains(c) {
            return None;
        }
        let s = self.shape();
        Some((c[0] - self.lo[0]) + s[0] * ((c[1] - self.lo[1]) + s[1] * (c[2] - self.lo[2])))
    }

    /// Cells in x-fastest order.
    pub fn iter(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let (lo, hi) = (self.lo, self.hi);
        (lo[2]..hi[2]).flat_map(move |k| {
            (lo[1]..hi[1]).flat_map(move |j| (lo[0]..hi[0]).map(move |i| [i, j, k]))
        })
    }

    /// Smallest box containing both.
    pub fn union(&self, other: &CellBox) -> CellBox {
        CellBox::new(
            std::array::from_fn(|a| self.lo[a].min(other.lo[a])),
            std::array::from_fn(|a| self.hi[a].max(other.hi[a])),
        )
    }
}

/// Four-point Lagrange weights for fractional offset `f` ∈ [0, 1), at
/// offsets −1, 0, 1, 2 from the base sample.
fn lagrange4(f: f64) -> [f64; 4] {
    [
        -f * (f - 1.0) * (f - 2.0) / 6.0,
        (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
        -(f + 1.0) * f * (f - 2.0) / 2.0,
        (f + 1.0) * f * (f - 1.0) / 6.0,
    ]
}

/// Weighted edges coupling a point at a continuous grid position to the
/// E-component along one axis.
///
/// Each component is interpolated on its own staggered sublattice (half
/// integers along its axis, integers across) with four-point Lagrange
/// weights per axis, exact for cubic fields. Injection and probing use the
/// same weights, which keeps the discrete Green's tensor reciprocal.
pub fn stencil(lattice: &Lattice, pos: [f64; 3], axis: Axis) -> Vec<(usize, f64)> {
    let a = axis.index();
    let mut base = [0isize; 3];
    let mut w = [[0.0; 4]; 3];
    for d in 0..3 {
        let q = if d == a { pos[d] - 0.5 } else { pos[d] };
        let b = q.floor();
        base[d] = b as isize;
        w[d] = lagrange4(q - b);
    }
    let mut out = Vec::with_capacity(64);
    for (dk, wk) in w[2].iter().enumerate() {
        for (dj, wj) in w[1].iter().enumerate() {
            for (di, wi) in w[0].iter().enumerate() {
                let wt = wi * wj * wk;
                if wt == 0.0 {
                    continue;
                }
                let idx = [di, dj, dk].map(|o| o as isize - 1);
                let p: [usize; 3] = std::array::from_fn(|d| (base[d] + idx[d]) as usize);
                out.push((lattice.index(p[0], p[1], p[2]), wt));
            }
        }
    }
    out
}

/// Nodes carrying non-zero stencil weight for a point at `pos`.
pub fn stencil_nodes(pos: [f64; 3]) -> Vec<[usize; 3]> {
    let base: [usize; 3] = pos.map(|p| p.floor() as usize);
    let mut out = Vec::with_capacity(8);
    for dk in 0..2 {
        for dj in 0..2 {
            for di in 0..2 {
                let off = [di, dj, dk];
                let live = (0..3).all(|d| off[d] == 0 || pos[d] > base[d] as f64);
                if live {
                    out.push([base[0] + di, base[1] + dj, base[2] + dk]);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice() -> Lattice {
        Lattice::from_config(&FdtdConfig::default())
    }

    #[test]
    fn default_lattice_dimensions() {
        let l = lattice();
        assert_eq!(l.cells, 72);
        assert_eq!(l.pml_cells, 12);
        assert_eq!(l.half_cells, 24);
        assert!((l.to_grid(0.0) - 36.0).abs() < 1e-12);
        assert!((l.to_physical(36.0)).abs() < 1e-12);
        assert_eq!(l.interior().shape(), [48, 48, 48]);
    }

    #[test]
    fn stencil_weights_sum_to_one() {
        let l = lattice();
        for pos in [[36.0, 36.0, 36.0], [30.25, 40.5, 33.9], [36.5, 36.5, 36.5]] {
            for axis in Axis::ALL {
                let s = stencil(&l, pos, axis);
                let total: f64 = s.iter().map(|(_, w)| w).sum();
                assert!((total - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn on_node_stencil_is_midpoint_rule() {
        let l = lattice();
        let s = stencil(&l, [36.0, 36.0, 36.0], Axis::Z);
        assert_eq!(s.len(), 4);
        let w: Vec<f64> = s.iter().map(|p| p.1).collect();
        assert_eq!(w, vec![-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0]);
        assert_eq!(s[1].0 + l.strides()[2], s[2].0);
        assert_eq!(stencil_nodes([36.0, 36.0, 36.0]), vec![[36, 36, 36]]);
        assert_eq!(stencil_nodes([36.0, 36.5, 36.0]).len(), 2);
    }

    #[test]
    fn cell_box_indexing() {
        let b = CellBox::new([2, 3, 4], [5, 5, 6]);
        assert_eq!(b.len(), 12);
        let cells: Vec<_> = b.iter().collect();
        assert_eq!(cells.len(), 12);
        for (n, c) in cells.iter().enumerate() {
            assert_eq!(b.offset(*c), Some(n));
        }
        assert_eq!(b.offset([5, 3, 4]), None);
    }
}
