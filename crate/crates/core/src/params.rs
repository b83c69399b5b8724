//! Validated solver parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial dimension, fractional order and periodic grid layout.
///
/// Only reachable through [`SolverParams::new`], so every downstream consumer
/// can rely on `n ∈ {2, 3}`, `0 < s < 1`, `N` a power of two ≥ 16 and `L > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    n: usize,
    s: f64,
    grid_size: usize,
    box_length: f64,
}

impl SolverParams {
    pub fn new(n: usize, s: f64, grid_size: usize, box_length: f64) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(Error::InvalidParams(format!(
                "unsupported dimension {n}; expected 2 or 3"
            )));
        }
        check_order(s)?;
        if grid_size < 16 || !grid_size.is_power_of_two() {
            return Err(Error::InvalidParams(format!(
                "grid size {grid_size} is not a power of two >= 16"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidParams(format!(
                "box length {box_length} must be positive and finite"
            )));
        }
        Ok(Self {
            n,
            s,
            grid_size,
            box_length,
        })
    }

    /// Same grid, different fractional order.
    pub fn with_order(&self, s: f64) -> Result<Self> {
        Self::new(self.n, s, self.grid_size, self.box_length)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Grid spacing `L / N`.
    pub fn spacing(&self) -> f64 {
        self.box_length / self.grid_size as f64
    }

    /// Number of lattice nodes, `N^n`.
    pub fn node_count(&self) -> usize {
        self.grid_size.pow(self.n as u32)
    }

    /// Volume of one grid cell, `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n as i32)
    }

    /// Same layout as `other`, ignoring the fractional order.
    pub fn same_grid(&self, other: &SolverParams) -> bool {
        self.n == other.n && self.grid_size == other.grid_size && self.box_length == other.box_length
    }
}

/// Validates a fractional order against the open interval (0, 1).
pub fn check_order(s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "s = {s} out of open interval (0, 1)"
        )))
    }
}
