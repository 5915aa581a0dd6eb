use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Sampled one-dimensional complex optical amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: Grid1D,
    pub wavelength: f64,
    pub amplitude: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid1D, wavelength: f64, amplitude: Vec<Complex64>) -> Result<Self> {
        if !(wavelength > 0.0) || !wavelength.is_finite() {
            return Err(Error::Config(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        if amplitude.len() != grid.n_points() {
            return Err(Error::Shape(format!(
                "amplitude length {} does not match grid size {}",
                amplitude.len(),
                grid.n_points()
            )));
        }
        Ok(Self { grid, wavelength, amplitude })
    }

    pub fn zeros(grid: Grid1D, wavelength: f64) -> Result<Self> {
        let n = grid.n_points();
        Self::new(grid, wavelength, vec![Complex64::ZERO; n])
    }

    /// Discrete energy `sum |E|^2 * pitch`.
    pub fn energy(&self) -> f64 {
        let pitch = self.grid.pitch();
        self.amplitude.iter().map(|a| a.norm_sqr()).sum::<f64>() * pitch
    }

    /// Per-sample intensity `|E|^2`.
    pub fn intensity(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a.norm_sqr()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_must_match_grid() {
        let g = Grid1D::centered(4, 1.0).unwrap();
        assert!(ComplexField::new(g, 1e-6, vec![Complex64::ZERO; 3]).is_err());
        assert!(ComplexField::new(g, 1e-6, vec![Complex64::ZERO; 4]).is_ok());
    }

    #[test]
    fn energy_scales_with_pitch() {
        let g = Grid1D::centered(2, 0.5).unwrap();
        let f = ComplexField::new(g, 1e-6, vec![Complex64::new(1.0, 0.0); 2]).unwrap();
        assert!((f.energy() - 1.0).abs() < 1e-15);
    }
}
