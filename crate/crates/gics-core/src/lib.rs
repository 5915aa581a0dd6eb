//! Lensless Fourier-transform ghost imaging with compressive sampling.
//!
//! The crate simulates pseudo-thermal speckle acquisition through a two-arm
//! scheme, assembles the Hermitian-packed real sensing system that links
//! reference-detector fields to test-detector intensities, recovers the
//! object's spectrum magnitude `|T(f)|` by l1 minimization, and benchmarks
//! the result against the classical intensity-correlation reconstruction.

pub mod bench;
pub mod error;
pub mod field;
pub mod fresnel;
pub mod grid;
pub mod objects;
pub mod scheme;
pub mod sensing;
pub mod solver;
pub mod source;
pub mod spectrum;

#[cfg(test)]
pub(crate) mod testkit;

pub use error::{Error, Result};
pub use field::ComplexField;
pub use grid::Grid1D;
pub use objects::{apply_object, object_spectrum, phase_slits, spectrum_oracle, PhaseObject};
pub use scheme::{
    quadrature_residual, simulate_shot, SchemeGeometry, ShotRecord, ShotSimulator,
};
pub use sensing::{
    build_system, complex_sensing_row, conjecture_field, pack_row, union_frequency_axis,
    DiagonalConvention, HermitianPacking, HermitianSpectrum, PhaseStrategy, SensingMode,
    SensingSystem,
};
pub use solver::{
    extract_spectrum, select_lambda, solve_l1, ExtractedSpectrum, LambdaSelection, SolveResult,
    SolverConfig,
};
pub use source::SourceModel;
pub use spectrum::{Provenance, SpectrumEstimate};

pub use bench::{
    cgi_reconstruct, compare_spectra, efficiency_sweep, gics_reconstruct, metrics_against,
    Metrics, ReconComparison, RunMode, SweepConfig, SweepRow, SweepTable,
};
