//! Two-arm lensless Fourier-transform acquisition scheme.
//!
//! A beam-splitter copy of one speckle realization feeds both arms. The test
//! arm propagates `d21` to the object plane, picks up the transmission, and
//! propagates `d22` to the test detector. The reference arm travels the same
//! total distance `d1 = d21 + d22` to the reference detector; it is simulated
//! as the free-space path through the (shared) object plane, which keeps the
//! two arms numerically consistent sample by sample.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::fresnel::{apply_operator, fresnel_operator};
use crate::grid::Grid1D;
use crate::objects::{apply_object, PhaseObject};
use crate::source::SourceModel;

/// Tolerance on the Fourier condition `d1 = d21 + d22`, in meters.
pub const FOURIER_CONDITION_TOL: f64 = 1e-12;

/// Geometry of the two-arm scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeGeometry {
    pub wavelength: f64,
    pub d1: f64,
    pub d21: f64,
    pub d22: f64,
    pub source: SourceModel,
    pub object_grid: Grid1D,
    pub d1_grid: Grid1D,
    pub d2_grid: Grid1D,
}

impl SchemeGeometry {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        wavelength: f64,
        d1: f64,
        d21: f64,
        d22: f64,
        source: SourceModel,
        object_grid: Grid1D,
        d1_grid: Grid1D,
        d2_grid: Grid1D,
    ) -> Result<Self> {
        let geometry = Self { wavelength, d1, d21, d22, source, object_grid, d1_grid, d2_grid };
        geometry.validate()?;
        Ok(geometry)
    }

    /// Convenience constructor that sets `d1 = d21 + d22`.
    pub fn fourier(
        wavelength: f64,
        d21: f64,
        d22: f64,
        source: SourceModel,
        object_grid: Grid1D,
        d1_grid: Grid1D,
        d2_grid: Grid1D,
    ) -> Result<Self> {
        Self::new(wavelength, d21 + d22, d21, d22, source, object_grid, d1_grid, d2_grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength > 0.0) || !self.wavelength.is_finite() {
            return Err(Error::Config(format!(
                "wavelength must be positive, got {}",
                self.wavelength
            )));
        }
        for (name, d) in [("d1", self.d1), ("d21", self.d21), ("d22", self.d22)] {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Config(format!("distance {name} must be positive, got {d}")));
            }
        }
        if (self.d1 - (self.d21 + self.d22)).abs() >= FOURIER_CONDITION_TOL {
            return Err(Error::Config(format!(
                "Fourier condition violated: d1 = {} but d21 + d22 = {}",
                self.d1,
                self.d21 + self.d22
            )));
        }
        self.source.validate()
    }

    pub fn lambda_d22(&self) -> f64 {
        self.wavelength * self.d22
    }

    /// Detector pitch that makes the object plane and a detector with at most
    /// as many pixels a Fresnel-conjugate pair over `d22`.
    pub fn conjugate_detector_pitch(object_grid: &Grid1D, wavelength: f64, d22: f64) -> f64 {
        wavelength * d22 / object_grid.extent()
    }
}

/// One acquired speckle shot: reference intensities (plus, optionally, the
/// exact reference field) and test-detector intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotRecord {
    pub shot_index: u64,
    pub i_r: Vec<f64>,
    pub e_r: Option<Vec<Complex64>>,
    pub i_w: Vec<f64>,
}

/// Precomputed propagation operators for a fixed geometry.
///
/// Building the Fresnel matrices once and reusing them across shots is what
/// makes large ensembles cheap; shots only cost matrix-vector products.
pub struct ShotSimulator {
    geometry: SchemeGeometry,
    op_src_obj: Array2<Complex64>,
    op_obj_d1: Array2<Complex64>,
    op_obj_d2: Array2<Complex64>,
}

impl ShotSimulator {
    pub fn new(geometry: &SchemeGeometry) -> Result<Self> {
        geometry.validate()?;
        let op_src_obj = fresnel_operator(
            &geometry.source.grid,
            &geometry.object_grid,
            geometry.wavelength,
            geometry.d21,
        )?;
        let op_obj_d1 = fresnel_operator(
            &geometry.object_grid,
            &geometry.d1_grid,
            geometry.wavelength,
            geometry.d22,
        )?;
        let op_obj_d2 = fresnel_operator(
            &geometry.object_grid,
            &geometry.d2_grid,
            geometry.wavelength,
            geometry.d22,
        )?;
        Ok(Self { geometry: geometry.clone(), op_src_obj, op_obj_d1, op_obj_d2 })
    }

    pub fn geometry(&self) -> &SchemeGeometry {
        &self.geometry
    }

    /// Field at the object plane before the object, for `shot_index`.
    pub fn object_plane_field(&self, shot_index: u64) -> Result<ComplexField> {
        let speckle = self
            .geometry
            .source
            .speckle_field(self.geometry.wavelength, shot_index)?;
        apply_operator(&self.op_src_obj, &speckle, self.geometry.object_grid)
    }

    /// Simulates one shot. With `record_field`, the complex reference field is
    /// stored and `i_r` is its exact modulus squared.
    ///
    /// `noise_sigma` adds zero-mean Gaussian noise with standard deviation
    /// `noise_sigma * mean(intensity)` to recorded intensities (clamped at
    /// zero). When the reference field is recorded, `i_r` stays noise-free so
    /// that `i_r = |e_r|^2` holds exactly.
    pub fn simulate(
        &self,
        object: &PhaseObject,
        shot_index: u64,
        record_field: bool,
        noise_sigma: f64,
    ) -> Result<ShotRecord> {
        if object.grid != self.geometry.object_grid {
            return Err(Error::Shape(
                "object grid does not match the geometry's object plane".into(),
            ));
        }
        let at_object = self.object_plane_field(shot_index)?;

        let reference = apply_operator(&self.op_obj_d1, &at_object, self.geometry.d1_grid)?;
        let mut i_r = reference.intensity();

        let masked = apply_object(&at_object, object)?;
        let test = apply_operator(&self.op_obj_d2, &masked, self.geometry.d2_grid)?;
        let mut i_w = test.intensity();

        if noise_sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.geometry.source.seed ^ 0x6e6f_6973);
            rng.set_stream(shot_index.wrapping_add(1));
            if !record_field {
                add_intensity_noise(&mut i_r, noise_sigma, &mut rng);
            }
            add_intensity_noise(&mut i_w, noise_sigma, &mut rng);
        }

        let e_r = record_field.then(|| reference.amplitude.clone());
        Ok(ShotRecord { shot_index, i_r, e_r, i_w })
    }

    /// Simulates shots `0..n_shots` in parallel. Output order and content are
    /// independent of the thread count.
    pub fn simulate_batch(
        &self,
        object: &PhaseObject,
        n_shots: usize,
        record_field: bool,
        noise_sigma: f64,
    ) -> Result<Vec<ShotRecord>> {
        (0..n_shots as u64)
            .into_par_iter()
            .map(|shot| self.simulate(object, shot, record_field, noise_sigma))
            .collect()
    }
}

fn add_intensity_noise(values: &mut [f64], sigma: f64, rng: &mut ChaCha8Rng) {
    let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
    let scale = sigma * mean;
    for v in values.iter_mut() {
        let g: f64 = rng.sample(StandardNormal);
        *v = (*v + scale * g).max(0.0);
    }
}

/// One-off shot simulation; use [`ShotSimulator`] for ensembles.
pub fn simulate_shot(
    geometry: &SchemeGeometry,
    object: &PhaseObject,
    shot_index: u64,
    record_field: bool,
) -> Result<ShotRecord> {
    ShotSimulator::new(geometry)?.simulate(object, shot_index, record_field, 0.0)
}

/// Cross-checks one shot's test-arm intensity against a direct double-sum
/// quadrature over the object plane,
///
/// ```text
/// I(r2) = (1/(lambda d22)) * sum_{x,x'} conj(E t)(x) (E t)(x')
///         exp{ i pi [ (x'-r2)^2 - (x-r2)^2 ] / (lambda d22) } dx dx'
/// ```
///
/// and returns the maximum deviation over test-detector pixels relative to
/// the peak intensity (0 when both computations are identically zero).
pub fn quadrature_residual(
    geometry: &SchemeGeometry,
    object: &PhaseObject,
    shot_index: u64,
) -> Result<f64> {
    let sim = ShotSimulator::new(geometry)?;
    let shot = sim.simulate(object, shot_index, false, 0.0)?;

    let at_object = sim.object_plane_field(shot_index)?;
    let masked = apply_object(&at_object, object)?;
    let xs = geometry.object_grid.coordinates();
    let pitch = geometry.object_grid.pitch();
    let lam_d = geometry.lambda_d22();

    let direct: Vec<f64> = geometry
        .d2_grid
        .coordinates()
        .par_iter()
        .map(|&r2| {
            let mut acc = Complex64::ZERO;
            for (k, &x) in xs.iter().enumerate() {
                let fx = masked.amplitude[k];
                if fx == Complex64::ZERO {
                    continue;
                }
                let px = std::f64::consts::PI * (x - r2) * (x - r2) / lam_d;
                let left = fx.conj() * Complex64::from_polar(1.0, -px);
                for (k2, &x2) in xs.iter().enumerate() {
                    let fx2 = masked.amplitude[k2];
                    if fx2 == Complex64::ZERO {
                        continue;
                    }
                    let px2 = std::f64::consts::PI * (x2 - r2) * (x2 - r2) / lam_d;
                    acc += left * fx2 * Complex64::from_polar(1.0, px2);
                }
            }
            acc.re * pitch * pitch / lam_d
        })
        .collect();

    let scale = shot
        .i_w
        .iter()
        .chain(direct.iter())
        .cloned()
        .fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let max_dev = shot
        .i_w
        .iter()
        .zip(&direct)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    Ok(max_dev / scale)
}
