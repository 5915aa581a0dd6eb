use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid1D;
use crate::spectrum::{Provenance, SpectrumEstimate};

/// Sampled complex transmission function `t(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseObject {
    pub grid: Grid1D,
    pub transmission: Vec<Complex64>,
}

impl PhaseObject {
    pub fn new(grid: Grid1D, transmission: Vec<Complex64>) -> Result<Self> {
        if transmission.len() != grid.n_points() {
            return Err(Error::Shape(format!(
                "transmission length {} does not match grid size {}",
                transmission.len(),
                grid.n_points()
            )));
        }
        Ok(Self { grid, transmission })
    }

    /// Uniform transmission `t = 1` (open aperture over the whole grid).
    pub fn uniform(grid: Grid1D) -> Self {
        let n = grid.n_points();
        Self { grid, transmission: vec![Complex64::ONE; n] }
    }

    /// True when `|t(x)| = 1` everywhere within `tol`.
    pub fn is_pure_phase(&self, tol: f64) -> bool {
        self.transmission.iter().all(|t| (t.norm() - 1.0).abs() <= tol)
    }
}

/// Pure-phase slit pattern: phase `phase_depth` on `n_slits` slits of width
/// `slit_width` separated by `gap`, phase zero elsewhere, `|t| = 1` everywhere.
/// The pattern is centered on the grid.
pub fn phase_slits(
    n_slits: usize,
    slit_width: f64,
    gap: f64,
    phase_depth: f64,
    grid: &Grid1D,
) -> Result<PhaseObject> {
    if n_slits < 1 {
        return Err(Error::Config("need at least one slit".into()));
    }
    if !(slit_width > 0.0) || !(gap >= 0.0) {
        return Err(Error::Config(format!(
            "invalid slit layout: width {slit_width}, gap {gap}"
        )));
    }
    let pattern = n_slits as f64 * slit_width + (n_slits - 1) as f64 * gap;
    let span = grid.last() - grid.first();
    if pattern > span * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "slit pattern ({pattern} m) is wider than the grid span ({span} m)"
        )));
    }
    let left_edge = grid.center() - pattern / 2.0;
    let period = slit_width + gap;
    let on_slit = |x: f64| -> bool {
        let rel = x - left_edge;
        if rel < 0.0 || rel >= pattern {
            return false;
        }
        let m = (rel / period).floor() as usize;
        m < n_slits && rel - m as f64 * period < slit_width
    };
    let phase = Complex64::from_polar(1.0, phase_depth);
    let transmission = grid
        .coordinates()
        .iter()
        .map(|&x| if on_slit(x) { phase } else { Complex64::ONE })
        .collect();
    PhaseObject::new(*grid, transmission)
}

/// Pointwise transmission: `E_out(x) = t(x) E_in(x)`.
pub fn apply_object(field: &ComplexField, object: &PhaseObject) -> Result<ComplexField> {
    if field.grid != object.grid {
        return Err(Error::Shape(format!(
            "field grid ({} pts, pitch {:.3e}) and object grid ({} pts, pitch {:.3e}) differ",
            field.grid.n_points(),
            field.grid.pitch(),
            object.grid.n_points(),
            object.grid.pitch()
        )));
    }
    let amplitude = field
        .amplitude
        .iter()
        .zip(&object.transmission)
        .map(|(a, t)| a * t)
        .collect();
    ComplexField::new(field.grid, field.wavelength, amplitude)
}

/// Complex spectrum `T(f) = sum_x t(x) exp(+2 pi i f x) * pitch` at the given
/// physical frequencies (cycles per meter).
///
/// The sign convention matches the one the sensing relation uses, so sensing
/// unknowns and this transform agree sample by sample.
pub fn object_spectrum(object: &PhaseObject, freqs: &[f64]) -> Vec<Complex64> {
    let pitch = object.grid.pitch();
    let xs = object.grid.coordinates();
    freqs
        .iter()
        .map(|&f| {
            let mut acc = Complex64::ZERO;
            for (&x, &t) in xs.iter().zip(&object.transmission) {
                acc += t * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * f * x);
            }
            acc * pitch
        })
        .collect()
}

/// Ground-truth magnitude spectrum `|T(f)|` on `freqs`, unit-peak normalized.
pub fn spectrum_oracle(object: &PhaseObject, freqs: &[f64]) -> SpectrumEstimate {
    let magnitude = object_spectrum(object, freqs).iter().map(|t| t.norm()).collect();
    SpectrumEstimate::unit_peak(freqs.to_vec(), magnitude, Provenance::Oracle)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn object_grid() -> Grid1D {
        // 50 um pitch divides both the 600 um slit and the 600 um gap
        Grid1D::centered(128, 50e-6).unwrap()
    }

    #[test]
    fn five_slit_pattern_is_pure_phase_and_centered() {
        let grid = object_grid();
        let obj = phase_slits(5, 600e-6, 600e-6, std::f64::consts::PI, &grid).unwrap();
        assert!(obj.is_pure_phase(1e-12));
        // pattern symmetric about the grid center
        let n = grid.n_points();
        for i in 0..n {
            let a = obj.transmission[i];
            let b = obj.transmission[n - 1 - i];
            assert!((a - b).norm() < 1e-12, "asymmetry at {i}");
        }
        // phase takes exactly the two expected values
        let slit_px = obj
            .transmission
            .iter()
            .filter(|t| (t.re + 1.0).abs() < 1e-12)
            .count();
        assert_eq!(slit_px, 5 * 12, "5 slits x 12 px per 600 um slit");
    }

    #[test]
    fn zero_phase_depth_is_transparent() {
        let grid = object_grid();
        let obj = phase_slits(5, 600e-6, 600e-6, 0.0, &grid).unwrap();
        assert!(obj.transmission.iter().all(|t| (t - Complex64::ONE).norm() == 0.0));
    }

    #[test]
    fn pattern_wider_than_grid_is_rejected() {
        let grid = Grid1D::centered(32, 50e-6).unwrap();
        assert!(phase_slits(5, 600e-6, 600e-6, 1.0, &grid).is_err());
    }

    #[test]
    fn apply_object_requires_matching_grids() {
        let grid = object_grid();
        let other = Grid1D::centered(64, 50e-6).unwrap();
        let field = ComplexField::zeros(other, 632.8e-9).unwrap();
        let obj = PhaseObject::uniform(grid);
        assert!(matches!(apply_object(&field, &obj), Err(Error::Shape(_))));
    }

    #[test]
    fn unit_and_zero_transmission() {
        let grid = object_grid();
        let mut amp = vec![Complex64::ZERO; grid.n_points()];
        amp[10] = Complex64::new(0.3, -0.4);
        let field = ComplexField::new(grid, 632.8e-9, amp).unwrap();

        let unit = PhaseObject::uniform(grid);
        assert_eq!(apply_object(&field, &unit).unwrap(), field);

        let dark = PhaseObject::new(grid, vec![Complex64::ZERO; grid.n_points()]).unwrap();
        let out = apply_object(&field, &dark).unwrap();
        assert!(out.amplitude.iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn pure_phase_preserves_energy_exactly() {
        let grid = object_grid();
        let amp: Vec<Complex64> = (0..grid.n_points())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let field = ComplexField::new(grid, 632.8e-9, amp).unwrap();
        let obj = phase_slits(3, 400e-6, 200e-6, 1.234, &grid).unwrap();
        let out = apply_object(&field, &obj).unwrap();
        // |t| = 1 pointwise, so per-sample intensity is preserved to rounding
        let rel = (out.energy() - field.energy()).abs() / field.energy();
        assert!(rel < 1e-15);
    }

    #[test]
    fn open_aperture_spectrum_matches_dirichlet_kernel() {
        let grid = Grid1D::centered(64, 25e-6).unwrap();
        let obj = PhaseObject::uniform(grid);
        let freqs: Vec<f64> = (0..50).map(|i| i as f64 * 37.0).collect();
        let spec = object_spectrum(&obj, &freqs);
        let n = grid.n_points() as f64;
        let pitch = grid.pitch();
        for (&f, t) in freqs.iter().zip(&spec) {
            let u = std::f64::consts::PI * f * pitch;
            let expected = if u.abs() < 1e-12 {
                n * pitch
            } else {
                pitch * (n * u).sin() / u.sin()
            };
            assert!(
                (t.norm() - expected.abs()).abs() < 1e-9 * n * pitch,
                "|T({f})| = {} vs Dirichlet {}",
                t.norm(),
                expected.abs()
            );
        }
        // peak at f = 0
        let oracle = spectrum_oracle(&obj, &freqs);
        assert_eq!(oracle.peak_index(), 0);
    }

    #[test]
    fn phase_slits_suppress_the_zero_order() {
        let grid = object_grid();
        let freqs: Vec<f64> = (-256..=256).map(|i| i as f64 * 37.5).collect();
        let flat = spectrum_oracle(&phase_slits(5, 600e-6, 600e-6, 0.0, &grid).unwrap(), &freqs);
        let deep = spectrum_oracle(
            &phase_slits(5, 600e-6, 600e-6, std::f64::consts::PI, &grid).unwrap(),
            &freqs,
        );
        let center = freqs.len() / 2;
        assert!((flat.magnitude[center] - 1.0).abs() < 1e-12, "open aperture peaks at DC");
        assert!(
            deep.magnitude[center] < 0.5,
            "pi-depth slits must suppress DC, got {}",
            deep.magnitude[center]
        );
        // multi-peak structure: a first diffraction order near 1/(1.2 mm)
        let order = 1.0 / 1.2e-3;
        let (best, _) = freqs
            .iter()
            .enumerate()
            .filter(|(_, &f)| f > order * 0.5 && f < order * 1.5)
            .map(|(i, _)| (i, deep.magnitude[i]))
            .fold((0, 0.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        assert!(deep.magnitude[best] > 0.9, "first order should be near unit peak");
        // agreement with an 8x oversampled rendering of the same object
        let fine_grid = Grid1D::centered(1024, 6.25e-6).unwrap();
        let fine = spectrum_oracle(
            &phase_slits(5, 600e-6, 600e-6, std::f64::consts::PI, &fine_grid).unwrap(),
            &freqs,
        );
        let max_dev = deep
            .magnitude
            .iter()
            .zip(&fine.magnitude)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        assert!(max_dev < 0.05, "coarse vs oversampled oracle deviation {max_dev}");
    }

    #[test]
    fn magnitude_spectrum_is_shift_invariant() {
        let grid = object_grid();
        let obj = phase_slits(5, 600e-6, 600e-6, std::f64::consts::PI, &grid).unwrap();
        // shift the pattern by 4 pixels; the background is 1 everywhere, so a
        // rotation of the samples is an exact spatial shift of the pattern
        let mut shifted = obj.transmission.clone();
        shifted.rotate_right(4);
        let shifted = PhaseObject::new(grid, shifted).unwrap();
        // at reciprocal-lattice frequencies the sample rotation is an exact
        // spatial shift, so the modulus must match to rounding
        let df = 1.0 / grid.extent();
        let freqs: Vec<f64> = (-60..=60).map(|i| i as f64 * df).collect();
        let a = object_spectrum(&obj, &freqs);
        let b = object_spectrum(&shifted, &freqs);
        for (x, y) in a.iter().zip(&b) {
            assert!((x.norm() - y.norm()).abs() < 1e-9 * a[0].norm().max(1.0));
        }
    }
}
