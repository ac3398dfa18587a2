use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform node-centred grid on `[-L, L]` with `N` cells (`N + 1` nodes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid1D {
    half_length: f64,
    cells: usize,
    dx: f64,
}

#[derive(Serialize, Deserialize)]
struct GridSpec {
    half_length: f64,
    cells: usize,
}

impl TryFrom<GridSpec> for Grid1D {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        Grid1D::new(spec.half_length, spec.cells)
    }
}

impl From<Grid1D> for GridSpec {
    fn from(g: Grid1D) -> Self {
        GridSpec {
            half_length: g.half_length,
            cells: g.cells,
        }
    }
}

impl Grid1D {
    pub const MIN_CELLS: usize = 16;
    pub const MIN_HALF_LENGTH: f64 = 2.0;

    pub fn new(half_length: f64, cells: usize) -> Result<Self> {
        if cells < Self::MIN_CELLS {
            return Err(Error::domain(format!(
                "grid needs at least {} cells, got {cells}",
                Self::MIN_CELLS
            )));
        }
        if !(half_length >= Self::MIN_HALF_LENGTH && half_length.is_finite()) {
            return Err(Error::domain(format!(
                "half length must be at least {} so the domain contains [-1, 1], got {half_length}",
                Self::MIN_HALF_LENGTH
            )));
        }
        Ok(Self {
            half_length,
            cells,
            dx: 2.0 * half_length / cells as f64,
        })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn nodes(&self) -> usize {
        self.cells + 1
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.dx
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.nodes()).map(|i| self.x(i)).collect()
    }

    /// The grid with twice as many cells on the same domain.
    pub fn refined(&self) -> Self {
        Self::new(self.half_length, 2 * self.cells).expect("refinement keeps the grid valid")
    }

    /// Whether every node of `self` is a node of `finer`.
    pub fn nests_in(&self, finer: &Grid1D) -> bool {
        self.half_length == finer.half_length
            && finer.cells % self.cells == 0
            && finer.cells > self.cells
    }
}
