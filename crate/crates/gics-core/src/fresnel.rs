//! Paraxial free-space propagation by direct summation of the discretized
//! Fresnel kernel:
//!
//! ```text
//! E_out(u) = (1 / sqrt(i lambda d)) * sum_x E_in(x) exp{ i pi (u - x)^2 / (lambda d) } * pitch
//! ```
//!
//! Negative `d` selects the inverse kernel, so `propagate(d)` followed by
//! `propagate(-d)` on a matched grid pair is the identity.
//!
//! A grid pair is accepted when either
//!
//! * the kernel phase changes by less than pi between adjacent input samples
//!   for every output point (the classical quadrature criterion), or
//! * the pair is Fresnel-conjugate, `pitch_in * pitch_out * n = lambda |d|`
//!   with `n_out <= n_in`: the sum then evaluates a chirp/DFT/chirp factored
//!   transform exactly, and the propagation is unitary with periodic
//!   (wrap-around) boundary behaviour.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid1D;

const CONJUGATE_REL_TOL: f64 = 1e-9;

/// True when `src`/`dst` form a Fresnel-conjugate pair for distance `d`.
pub fn is_conjugate_pair(src: &Grid1D, dst: &Grid1D, wavelength: f64, distance: f64) -> bool {
    if dst.n_points() > src.n_points() {
        return false;
    }
    let product = src.pitch() * dst.pitch() * src.n_points() as f64;
    let target = wavelength * distance.abs();
    (product - target).abs() <= CONJUGATE_REL_TOL * target
}

fn check_sampling(src: &Grid1D, dst: &Grid1D, wavelength: f64, distance: f64) -> Result<()> {
    let lam_d = wavelength * distance.abs();
    // worst-case separation between an output point and an input sample
    let sep = (dst.last() - src.first()).abs().max((src.last() - dst.first()).abs());
    let step = src.pitch() * (2.0 * sep + src.pitch());
    if step <= lam_d * (1.0 + 1e-9) || is_conjugate_pair(src, dst, wavelength, distance) {
        return Ok(());
    }
    Err(Error::Aliasing(format!(
        "kernel phase steps {:.3} pi between adjacent input samples (pitch {:.3e} m, \
         max separation {:.3e} m, lambda*d {:.3e} m^2); refine the input grid or use a \
         Fresnel-conjugate grid pair",
        step / lam_d,
        src.pitch(),
        sep,
        lam_d,
    )))
}

/// Dense propagation operator from `src` to `dst` over `distance`.
///
/// Row `j`, column `k` maps the sample at `x_k` to the output point `u_j`.
pub fn fresnel_operator(
    src: &Grid1D,
    dst: &Grid1D,
    wavelength: f64,
    distance: f64,
) -> Result<Array2<Complex64>> {
    if !(wavelength > 0.0) || !wavelength.is_finite() {
        return Err(Error::Config(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    if distance == 0.0 || !distance.is_finite() {
        return Err(Error::Config(format!(
            "propagation distance must be non-zero and finite, got {distance}"
        )));
    }
    check_sampling(src, dst, wavelength, distance)?;

    let inv_lam_d = 1.0 / (wavelength * distance);
    let coef = Complex64::new(src.pitch(), 0.0)
        / Complex64::new(0.0, wavelength * distance).sqrt();
    let xs = src.coordinates();
    let us = dst.coordinates();
    let mut op = Array2::<Complex64>::zeros((dst.n_points(), src.n_points()));
    for (j, &u) in us.iter().enumerate() {
        for (k, &x) in xs.iter().enumerate() {
            let delta = u - x;
            let phase = std::f64::consts::PI * delta * delta * inv_lam_d;
            op[(j, k)] = coef * Complex64::from_polar(1.0, phase);
        }
    }
    Ok(op)
}

/// Applies a precomputed operator to a field on the operator's input grid.
pub fn apply_operator(
    op: &Array2<Complex64>,
    field: &ComplexField,
    target: Grid1D,
) -> Result<ComplexField> {
    if op.ncols() != field.amplitude.len() {
        return Err(Error::Shape(format!(
            "operator expects {} input samples, field has {}",
            op.ncols(),
            field.amplitude.len()
        )));
    }
    let input = Array1::from(field.amplitude.clone());
    let out = op.dot(&input);
    ComplexField::new(target, field.wavelength, out.to_vec())
}

/// One-off Fresnel propagation of `field` over `distance` onto `target`.
pub fn fresnel_propagate(
    field: &ComplexField,
    distance: f64,
    target: &Grid1D,
) -> Result<ComplexField> {
    let op = fresnel_operator(&field.grid, target, field.wavelength, distance)?;
    apply_operator(&op, field, *target)
}
