//! Small, fast fixture geometries shared by the unit tests.

use crate::grid::Grid1D;
use crate::objects::{phase_slits, PhaseObject};
use crate::scheme::SchemeGeometry;
use crate::source::SourceModel;

pub const LAMBDA: f64 = 632.8e-9;

/// Compact scheme: 128-point source, 48-point object plane, 48-pixel
/// detectors on the conjugate pitch. Runs a shot in well under a millisecond.
pub fn small_geometry(seed: u64) -> SchemeGeometry {
    let source_grid = Grid1D::centered(128, 6.25e-6).unwrap();
    let source = SourceModel::new(0.6e-3, source_grid, 1.0, seed).unwrap();
    let object_grid = Grid1D::centered(48, 40e-6).unwrap();
    let det_pitch = SchemeGeometry::conjugate_detector_pitch(&object_grid, LAMBDA, 0.1);
    let det = Grid1D::centered(48, det_pitch).unwrap();
    SchemeGeometry::fourier(LAMBDA, 0.1, 0.1, source, object_grid, det, det).unwrap()
}

/// Variant whose source fills a wider aperture, so the illumination at the
/// object plane is uncorrelated between adjacent samples.
pub fn wide_source_geometry(seed: u64) -> SchemeGeometry {
    let source_grid = Grid1D::centered(128, 12.5e-6).unwrap();
    let source = SourceModel::new(1.6e-3, source_grid, 1.0, seed).unwrap();
    let object_grid = Grid1D::centered(48, 40e-6).unwrap();
    let det_pitch = SchemeGeometry::conjugate_detector_pitch(&object_grid, LAMBDA, 0.1);
    let det = Grid1D::centered(48, det_pitch).unwrap();
    SchemeGeometry::fourier(LAMBDA, 0.1, 0.1, source, object_grid, det, det).unwrap()
}

/// Three-slit pure-phase object that fits the small geometry's object plane.
pub fn small_object(geometry: &SchemeGeometry) -> PhaseObject {
    phase_slits(3, 240e-6, 160e-6, std::f64::consts::PI, &geometry.object_grid).unwrap()
}
