use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid1D;

/// Pseudo-thermal source: fully developed speckle over a hard aperture.
///
/// Every grid point inside the aperture carries an independent circular
/// complex Gaussian amplitude (delta-correlated across points) with
/// `<|E|^2> = mean_intensity`; points outside the aperture are zero.
/// Fields are a pure function of `(seed, shot_index)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    pub width: f64,
    pub grid: Grid1D,
    pub mean_intensity: f64,
    pub seed: u64,
}

impl SourceModel {
    pub fn new(width: f64, grid: Grid1D, mean_intensity: f64, seed: u64) -> Result<Self> {
        let model = Self { width, grid, mean_intensity, seed };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0) || !self.width.is_finite() {
            return Err(Error::Config(format!(
                "source width must be positive, got {}",
                self.width
            )));
        }
        if self.width > self.grid.extent() * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "source width {} exceeds grid extent {}",
                self.width,
                self.grid.extent()
            )));
        }
        if !(self.mean_intensity >= 0.0) || !self.mean_intensity.is_finite() {
            return Err(Error::Data(format!(
                "mean intensity must be non-negative, got {}",
                self.mean_intensity
            )));
        }
        Ok(())
    }

    /// Generates the speckle realization for one shot.
    ///
    /// Each shot uses its own counter-mode RNG stream, so shots are mutually
    /// independent and can be generated in any order or in parallel.
    pub fn speckle_field(&self, wavelength: f64, shot_index: u64) -> Result<ComplexField> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(shot_index.wrapping_add(1));
        let half_width = self.width / 2.0;
        let sigma = (self.mean_intensity / 2.0).sqrt();
        let amplitude = (0..self.grid.n_points())
            .map(|i| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let x = self.grid.coordinate(i) - self.grid.center();
                if x.abs() <= half_width {
                    Complex64::new(re * sigma, im * sigma)
                } else {
                    Complex64::ZERO
                }
            })
            .collect();
        ComplexField::new(self.grid, wavelength, amplitude)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> SourceModel {
        let grid = Grid1D::centered(64, 10e-6).unwrap();
        SourceModel::new(500e-6, grid, 2.0, 7).unwrap()
    }

    #[test]
    fn deterministic_per_seed_and_shot() {
        let m = model();
        let a = m.speckle_field(632.8e-9, 3).unwrap();
        let b = m.speckle_field(632.8e-9, 3).unwrap();
        assert_eq!(a, b);
        let c = m.speckle_field(632.8e-9, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_outside_aperture() {
        let m = model();
        let f = m.speckle_field(632.8e-9, 0).unwrap();
        for (i, a) in f.amplitude.iter().enumerate() {
            let x = m.grid.coordinate(i).abs();
            if x > m.width / 2.0 {
                assert_eq!(*a, Complex64::ZERO, "pixel {i} outside aperture not zero");
            }
        }
        // the aperture itself is populated
        assert!(f.energy() > 0.0);
    }

    #[test]
    fn width_cannot_exceed_grid() {
        let grid = Grid1D::centered(16, 1e-6).unwrap();
        assert!(SourceModel::new(17e-6, grid, 1.0, 0).is_err());
    }

    #[test]
    fn ensemble_statistics_are_fully_developed() {
        // Contrast std(I)/mean(I) -> 1 and first-order moments of the
        // quadratures -> Gaussian, checked at a fixed pixel over many shots.
        let m = model();
        let n_shots = 20_000;
        let pixel = 32;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut re_moments = [0.0_f64; 4];
        for shot in 0..n_shots {
            let f = m.speckle_field(632.8e-9, shot).unwrap();
            let a = f.amplitude[pixel];
            let i = a.norm_sqr();
            sum += i;
            sum_sq += i * i;
            for (k, acc) in re_moments.iter_mut().enumerate() {
                *acc += a.re.powi(k as i32 + 1);
            }
        }
        let n = n_shots as f64;
        let mean = sum / n;
        let var = sum_sq / n - mean * mean;
        let contrast = var.sqrt() / mean;
        assert!((contrast - 1.0).abs() < 0.05, "contrast {contrast}");
        assert!((mean - m.mean_intensity).abs() / m.mean_intensity < 0.02, "mean {mean}");

        let m1 = re_moments[0] / n;
        let m2 = re_moments[1] / n;
        let m3 = re_moments[2] / n;
        let m4 = re_moments[3] / n;
        let c2 = m2 - m1 * m1;
        let c3 = m3 - 3.0 * m1 * m2 + 2.0 * m1.powi(3);
        let c4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
        let skewness = c3 / c2.powf(1.5);
        let kurtosis = c4 / (c2 * c2);
        assert!(skewness.abs() < 0.05, "skewness {skewness}");
        assert!((kurtosis - 3.0).abs() < 0.1, "kurtosis {kurtosis}");
    }

    #[test]
    fn intensity_scales_linearly_with_mean_intensity() {
        let grid = Grid1D::centered(32, 10e-6).unwrap();
        let a = SourceModel::new(300e-6, grid, 1.0, 11).unwrap();
        let b = SourceModel::new(300e-6, grid, 3.0, 11).unwrap();
        let fa = a.speckle_field(632.8e-9, 5).unwrap();
        let fb = b.speckle_field(632.8e-9, 5).unwrap();
        for (x, y) in fa.amplitude.iter().zip(&fb.amplitude) {
            let ia = x.norm_sqr();
            let ib = y.norm_sqr();
            if ia > 0.0 {
                assert!((ib / ia - 3.0).abs() < 1e-12);
            }
        }
    }
}
