use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform one-dimensional sample grid.
///
/// Coordinates are `center + (i - (n-1)/2) * pitch`, strictly increasing in `i`,
/// so the grid is always symmetric about `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n_points: usize,
    pitch: f64,
    center: f64,
}

impl Grid1D {
    pub fn new(n_points: usize, pitch: f64, center: f64) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::Config(format!(
                "grid needs at least 2 points, got {n_points}"
            )));
        }
        if !(pitch > 0.0) || !pitch.is_finite() {
            return Err(Error::Config(format!("grid pitch must be positive, got {pitch}")));
        }
        if !center.is_finite() {
            return Err(Error::Config(format!("grid center must be finite, got {center}")));
        }
        Ok(Self { n_points, pitch, center })
    }

    /// Symmetric grid centered at the origin.
    pub fn centered(n_points: usize, pitch: f64) -> Result<Self> {
        Self::new(n_points, pitch, 0.0)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn coordinate(&self, index: usize) -> f64 {
        debug_assert!(index < self.n_points);
        let half = (self.n_points - 1) as f64 / 2.0;
        self.center + (index as f64 - half) * self.pitch
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.coordinate(i)).collect()
    }

    /// Total length covered by the sample cells (`n * pitch`).
    pub fn extent(&self) -> f64 {
        self.n_points as f64 * self.pitch
    }

    pub fn first(&self) -> f64 {
        self.coordinate(0)
    }

    pub fn last(&self) -> f64 {
        self.coordinate(self.n_points - 1)
    }
}
