use arrayvec::ArrayVec;

use crate::error::{Error, Result};

/// Most state or control dimensions a problem may have.
pub const MAX_DIMS: usize = 4;

/// Cost-to-go of an unreachable or constraint-violating state.
pub const INFEASIBLE: f64 = f64::INFINITY;

pub type Point = ArrayVec<f64, MAX_DIMS>;

/// A tensor-product grid, flattened row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Vec<f64>>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.is_empty() || axes.len() > MAX_DIMS {
            return Err(Error::InvalidArgument(format!(
                "a grid needs 1 to {MAX_DIMS} axes, got {}",
                axes.len()
            )));
        }
        for (d, a) in axes.iter().enumerate() {
            if a.is_empty() || a.iter().any(|v| !v.is_finite()) || a.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidArgument(format!(
                    "axis {d} must be nonempty, finite and strictly ascending"
                )));
            }
        }
        let mut strides = vec![1; axes.len()];
        for d in (0..axes.len() - 1).rev() {
            strides[d] = strides[d + 1] * axes[d + 1].len();
        }
        let len = axes.iter().map(Vec::len).product();
        Ok(Self { axes, strides, len })
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    /// Node coordinates of a flat index.
    pub fn point(&self, flat: usize) -> Point {
        let mut p = Point::new();
        for (d, a) in self.axes.iter().enumerate() {
            p.push(a[(flat / self.strides[d]) % a.len()]);
        }
        p
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Multilinear interpolation of node `values` at `x`, one axis at a time.
    ///
    /// Points outside the grid hull are [`INFEASIBLE`], and so is any point
    /// whose stencil gives nonzero weight to an infeasible node. Exact on grid
    /// nodes and cell faces.
    pub fn interp(&self, values: &[f64], x: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len);
        let dims = self.axes.len();
        let mut cells = [(0usize, 0.0f64); MAX_DIMS];
        for d in 0..dims {
            let a = &self.axes[d];
            let q = x[d];
            let n = a.len();
            if !(q >= a[0] && q <= a[n - 1]) {
                return INFEASIBLE;
            }
            if n > 1 {
                cells[d] = locate(a, q);
            }
        }
        self.interp_from(values, &cells[..dims], 0, 0)
    }

    fn interp_from(&self, values: &[f64], cells: &[(usize, f64)], d: usize, offset: usize) -> f64 {
        if d == cells.len() {
            return values[offset];
        }
        let stride = self.strides[d];
        if self.axes[d].len() == 1 {
            return self.interp_from(values, cells, d + 1, offset);
        }
        let (cell, frac) = cells[d];
        blend(cell, frac, |k| self.interp_from(values, cells, d + 1, offset + k * stride))
    }
}

#[inline]
fn locate(axis: &[f64], q: f64) -> (usize, f64) {
    let n = axis.len();
    let i = axis.partition_point(|&v| v <= q).saturating_sub(1).min(n - 2);
    (i, (q - axis[i]) / (axis[i + 1] - axis[i]))
}

/// Linear interpolation inside cell `cell` at fraction `frac`, reading node
/// values through `at`. A node with nonzero weight that is infeasible makes
/// the result [`INFEASIBLE`]; a node with zero weight is never read.
#[inline]
pub fn blend(cell: usize, frac: f64, at: impl Fn(usize) -> f64) -> f64 {
    if frac == 0.0 {
        return at(cell);
    }
    if frac == 1.0 {
        return at(cell + 1);
    }
    let a = at(cell);
    let b = at(cell + 1);
    if a == INFEASIBLE || b == INFEASIBLE {
        return INFEASIBLE;
    }
    (1.0 - frac) * a + frac * b
}

/// One-dimensional variant of [`Grid::interp`] on an ascending axis.
pub fn interp_1d(axis: &[f64], values: &[f64], q: f64) -> f64 {
    let n = axis.len();
    if !(q >= axis[0] && q <= axis[n - 1]) {
        return INFEASIBLE;
    }
    if n == 1 {
        return values[0];
    }
    let (i, f) = locate(axis, q);
    blend(i, f, |k| values[k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid2() -> Grid {
        Grid::new(vec![vec![0.0, 1.0, 3.0], vec![-1.0, 0.0, 2.0, 5.0]]).unwrap()
    }

    #[test]
    fn exact_at_nodes() {
        let g = grid2();
        let vals: Vec<f64> = (0..g.len()).map(|i| (i * i) as f64 * 0.37).collect();
        for k in 0..g.len() {
            assert_eq!(g.interp(&vals, &g.point(k)), vals[k]);
        }
    }

    #[test]
    fn bilinear_in_cell() {
        let g = Grid::new(vec![vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(g.interp(&[0.0, 0.0, 0.0, 4.0], &[0.5, 0.5]), 1.0);
    }

    #[test]
    fn outside_hull() {
        let g = grid2();
        let vals = vec![0.0; g.len()];
        assert_eq!(g.interp(&vals, &[3.1, 0.0]), INFEASIBLE);
        assert_eq!(g.interp(&vals, &[f64::NAN, 0.0]), INFEASIBLE);
    }

    #[test]
    fn infeasible_node_absorbs_its_cells() {
        let axis = [0.0, 1.0, 2.0];
        let vals = [1.0, INFEASIBLE, 3.0];
        assert_eq!(interp_1d(&axis, &vals, 0.5), INFEASIBLE);
        assert_eq!(interp_1d(&axis, &vals, 1.999), INFEASIBLE);
        assert_eq!(interp_1d(&axis, &vals, 0.0), 1.0);
        assert_eq!(interp_1d(&axis, &vals, 2.0), 3.0);
    }

    #[test]
    fn zero_weight_nodes_are_ignored_in_2d() {
        let g = Grid::new(vec![vec![0.0, 1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        let mut vals: Vec<f64> = (0..g.len()).map(|k| g.point(k)[0] + 10.0 * g.point(k)[1]).collect();
        vals[1] = INFEASIBLE;
        // On the face y = 0 the infeasible node (0, 1) carries no weight.
        assert!((g.interp(&vals, &[0.5, 0.0]) - 0.5).abs() < 1e-12);
        assert_eq!(g.interp(&vals, &[0.5, 0.1]), INFEASIBLE);
        assert!((g.interp(&vals, &[1.5, 0.5]) - 6.5).abs() < 1e-12);
    }

    #[test]
    fn single_node_axis() {
        let g = Grid::new(vec![vec![2.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(g.interp(&[1.0, 3.0], &[2.0, 0.25]), 1.5);
        assert_eq!(g.interp(&[1.0, 3.0], &[2.1, 0.25]), INFEASIBLE);
    }

    #[test]
    fn flat_index_round_trip() {
        let g = grid2();
        assert_eq!(g.flat_index(&[2, 1]), 9);
        assert_eq!(g.point(9).as_slice(), &[3.0, 0.0]);
    }

    proptest! {
        #[test]
        fn reproduces_affine_functions(x in 0.0f64..=3.0, y in -1.0f64..=5.0) {
            let g = grid2();
            let f = |p: &[f64]| 2.0 * p[0] - 0.5 * p[1] + 1.0;
            let vals: Vec<f64> = (0..g.len()).map(|k| f(&g.point(k))).collect();
            let v = g.interp(&vals, &[x, y]);
            prop_assert!((v - f(&[x, y])).abs() < 1e-12);
        }

        #[test]
        fn one_d_agrees_with_grid(q in 0.0f64..=2.0) {
            let axis = vec![0.0, 0.5, 2.0];
            let vals = [1.0, -2.0, 7.0];
            let g = Grid::new(vec![axis.clone()]).unwrap();
            prop_assert_eq!(g.interp(&vals, &[q]), interp_1d(&axis, &vals, q));
        }
    }
}
