use crate::error::{Error, Result};
use crate::indexsets::MAX_DIM;
use crate::scalar::Real;

/// Uniform tensor grid on `T^d` with nodes `2 pi t / G_j`.
///
/// Cell `t = (t_1, ..., t_d)` is the box whose lower corner is node `t`; cells
/// are numbered row-major (last axis fastest) and each carries measure
/// `1 / prod G_j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    sizes: Vec<usize>,
}

impl Grid {
    pub fn new(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() || sizes.len() > MAX_DIM {
            return Err(Error::UnsupportedDimension(sizes.len()));
        }
        if sizes.contains(&0) {
            return Err(Error::EmptyGrid);
        }
        Ok(Self { sizes: sizes.to_vec() })
    }

    pub fn cube(dim: usize, size: usize) -> Result<Self> {
        Self::new(&vec![size; dim])
    }

    /// Power-of-two grid with `G_j >= oversample * (2 D_j + 1)`.
    pub fn for_degrees(degrees: &[i64], oversample: usize) -> Result<Self> {
        let sizes: Vec<usize> = degrees
            .iter()
            .map(|&d| (oversample.max(1) * (2 * d.unsigned_abs() as usize + 1)).next_power_of_two())
            .collect();
        Self::new(&sizes)
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self, axis: usize) -> usize {
        self.sizes[axis]
    }

    /// Number of cells, `prod G_j`.
    pub fn total(&self) -> u64 {
        self.sizes.iter().map(|&g| g as u64).product()
    }

    pub fn cell_measure(&self) -> f64 {
        1.0 / self.total() as f64
    }

    /// Coordinate `2 pi t / G_axis`.
    pub fn node<T: Real>(&self, axis: usize, t: usize) -> T {
        T::lit(std::f64::consts::TAU * t as f64 / self.sizes[axis] as f64)
    }

    /// Multi-index of the cell with row-major number `index`.
    pub fn unravel(&self, mut index: u64) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            let g = self.sizes[a] as u64;
            out[a] = (index % g) as usize;
            index /= g;
        }
        out
    }

    pub fn ravel(&self, cell: &[usize]) -> u64 {
        cell.iter().zip(&self.sizes).fold(0u64, |acc, (&t, &g)| acc * g as u64 + t as u64)
    }

    /// Cell containing the torus point `x` (coordinates reduced mod `2 pi`).
    pub fn locate<T: Real>(&self, x: &[T]) -> Vec<usize> {
        x.iter()
            .zip(&self.sizes)
            .map(|(&xa, &g)| {
                let u = xa.to_f64_lossy().rem_euclid(std::f64::consts::TAU) / std::f64::consts::TAU;
                ((u * g as f64).floor() as usize).min(g - 1)
            })
            .collect()
    }

    /// Node coordinates of a cell's lower corner.
    pub fn point<T: Real>(&self, cell: &[usize]) -> Vec<T> {
        cell.iter().enumerate().map(|(a, &t)| self.node(a, t)).collect()
    }

    /// True when every axis can resolve the given degrees without aliasing.
    pub fn resolves(&self, degrees: &[i64]) -> bool {
        degrees.iter().zip(&self.sizes).all(|(&d, &g)| g as u64 > 2 * d.unsigned_abs())
    }

    pub fn describe(&self) -> String {
        self.sizes.iter().map(|g| g.to_string()).collect::<Vec<_>>().join("x")
    }
}
