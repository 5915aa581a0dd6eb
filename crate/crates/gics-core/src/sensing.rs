//! Real-valued sensing systems over Hermitian spectrum unknowns.
//!
//! One shot's reference field `e` induces the Hermitian coefficient matrix
//!
//! ```text
//! A[i][j] = conj(e[i]) e[j] exp{ i pi (r_i^2 - r_j^2) / (lambda d22) }
//! ```
//!
//! and the test-detector sample at `r2` obeys
//!
//! ```text
//! I(r2) = (pitch / (lambda d22))^2 * Re sum_ij A[i][j] B[i][j],
//! B[i][j] = conj(T(f_i)) T(f_j),   f_i = (r_i - r2) / (lambda d22).
//! ```
//!
//! Splitting `A = A1 + i A2` and `B = B1 + i B2` into symmetric (`A1`, `B1`)
//! and antisymmetric (`A2`, `B2`) real parts, the imaginary part of the sum
//! cancels identically and the real part becomes a real dot product between
//! a packed row and a packed unknown of exactly `n^2` real degrees of
//! freedom: diagonal slots, upper-triangle slots holding `B1`, and
//! lower-triangle slots holding the upper triangle of `B2`.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::scheme::{SchemeGeometry, ShotRecord};

/// What the diagonal slots of a packed row carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagonalConvention {
    /// Diagonal carries the reference intensities `I_r`; packed rows then dot
    /// packed unknowns exactly as the complex double sum does.
    ExactIntensity,
    /// Diagonal carries `sqrt(I_r)`; the literal single-shot rebuild rule.
    /// Not algebraically consistent, kept for reproduction and comparison.
    SqrtIntensity,
}

/// Reference-phase guess used when only intensities are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseStrategy {
    /// Flat phase: the reference field is taken as real, `sqrt(I_r)`.
    ZeroPhase,
    /// Quadratic wavefront `pi r^2 / (lambda d1)`: the curvature a point
    /// source at the diffuser would imprint on the reference detector, which
    /// is also the ensemble-mean phase of `conj(e_i) e_j`.
    SphericalWave,
    /// Uniform random phases in `[0, 2 pi)` drawn once from `seed`; the same
    /// profile is reused for every shot.
    SeededRandomPhase { seed: u64 },
}

impl PhaseStrategy {
    pub fn label(&self) -> &'static str {
        match self {
            PhaseStrategy::ZeroPhase => "zero-phase",
            PhaseStrategy::SphericalWave => "spherical-wave",
            PhaseStrategy::SeededRandomPhase { .. } => "seeded-random",
        }
    }
}

/// How sensing rows are derived from shot records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SensingMode {
    /// Exact complex reference field (requires recorded fields).
    Homodyne,
    /// Measured amplitudes with a guessed phase profile.
    PhaseConjecture(PhaseStrategy),
    /// Degraded system using only the diagonal slots.
    DiagonalOnly,
}

impl SensingMode {
    pub fn label(&self) -> String {
        match self {
            SensingMode::Homodyne => "homodyne".into(),
            SensingMode::PhaseConjecture(s) => format!("phase-conjecture/{}", s.label()),
            SensingMode::DiagonalOnly => "diagonal-only".into(),
        }
    }

    pub fn is_full(&self) -> bool {
        !matches!(self, SensingMode::DiagonalOnly)
    }
}

/// Bijection between `(i, j)` pixel pairs and flat indices `i * n + j`.
///
/// Slot content: `(i, i)` diagonal; `(i, j)` with `i < j` the symmetric part
/// `B1[i][j]`; `(i, j)` with `i > j` the antisymmetric part `B2[j][i]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HermitianPacking {
    pub n: usize,
}

impl HermitianPacking {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn flat(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        i * self.n + j
    }

    pub fn diagonal_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).map(|i| i * self.n + i)
    }

    /// Packs a Hermitian matrix into `n^2` reals (lossless).
    pub fn pack(&self, b: &Array2<Complex64>) -> Vec<f64> {
        assert_eq!(b.nrows(), self.n);
        assert_eq!(b.ncols(), self.n);
        let mut out = vec![0.0; self.len()];
        for i in 0..self.n {
            out[self.flat(i, i)] = b[(i, i)].re;
            for j in (i + 1)..self.n {
                out[self.flat(i, j)] = b[(i, j)].re;
                out[self.flat(j, i)] = b[(i, j)].im;
            }
        }
        out
    }

    /// Inverse of [`pack`](Self::pack); always returns an exactly Hermitian
    /// matrix.
    pub fn unpack(&self, packed: &[f64]) -> Result<Array2<Complex64>> {
        if packed.len() != self.len() {
            return Err(Error::Shape(format!(
                "packed length {} does not match n^2 = {}",
                packed.len(),
                self.len()
            )));
        }
        let mut b = Array2::<Complex64>::zeros((self.n, self.n));
        for i in 0..self.n {
            b[(i, i)] = Complex64::new(packed[self.flat(i, i)], 0.0);
            for j in (i + 1)..self.n {
                let v = Complex64::new(packed[self.flat(i, j)], packed[self.flat(j, i)]);
                b[(i, j)] = v;
                b[(j, i)] = v.conj();
            }
        }
        Ok(b)
    }
}

/// Hermitian spectrum estimate `B = conj(T) T^T` together with its packed form.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianSpectrum {
    pub b: Array2<Complex64>,
    pub packed: Vec<f64>,
}

impl HermitianSpectrum {
    /// Rank-one Hermitian matrix `B[i][j] = conj(t[i]) t[j]`.
    pub fn from_spectrum(t: &[Complex64]) -> Self {
        let n = t.len();
        let mut b = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] = t[i].conj() * t[j];
            }
        }
        let packed = HermitianPacking::new(n).pack(&b);
        Self { b, packed }
    }

    pub fn from_packed(packing: HermitianPacking, packed: &[f64]) -> Result<Self> {
        let b = packing.unpack(packed)?;
        Ok(Self { b, packed: packed.to_vec() })
    }
}

/// Complex sensing coefficients for one reference field on explicit detector
/// coordinates. Hermitian by construction.
pub fn sensing_row_from_coords(
    e_r: &[Complex64],
    r1: &[f64],
    lambda_d22: f64,
) -> Array2<Complex64> {
    assert_eq!(e_r.len(), r1.len());
    let n = e_r.len();
    // w_i = e_i * exp{-i pi r_i^2 / (lambda d22)}; A = conj(w) w^T
    let w: Vec<Complex64> = e_r
        .iter()
        .zip(r1)
        .map(|(e, &r)| e * Complex64::from_polar(1.0, -std::f64::consts::PI * r * r / lambda_d22))
        .collect();
    let mut a = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = w[i].conj() * w[j];
        }
    }
    a
}

/// Complex sensing coefficients on the geometry's reference detector.
pub fn complex_sensing_row(e_r: &[Complex64], geometry: &SchemeGeometry) -> Result<Array2<Complex64>> {
    if e_r.len() != geometry.d1_grid.n_points() {
        return Err(Error::Shape(format!(
            "reference field has {} samples, detector has {} pixels",
            e_r.len(),
            geometry.d1_grid.n_points()
        )));
    }
    Ok(sensing_row_from_coords(
        e_r,
        &geometry.d1_grid.coordinates(),
        geometry.lambda_d22(),
    ))
}

fn hermitian_deviation(a: &Array2<Complex64>) -> f64 {
    let n = a.nrows();
    let mut scale = 0.0_f64;
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            scale = scale.max(a[(i, j)].norm());
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    if scale > 0.0 {
        dev / scale
    } else {
        0.0
    }
}

/// Packs one Hermitian coefficient matrix into a real row: diagonal slots per
/// the convention, upper slots `2 * Re A[i][j]`, lower slots `2 * Im A[j][i]`
/// (equal to `-2 * A2` of the upper triangle).
///
/// Under [`DiagonalConvention::ExactIntensity`] the packed row satisfies
/// `row . pack(B) = Re sum_ij A[i][j] B[i][j]` exactly for every Hermitian `B`.
pub fn pack_row(
    a: &Array2<Complex64>,
    i_r: &[f64],
    convention: DiagonalConvention,
) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n || i_r.len() != n {
        return Err(Error::Shape(format!(
            "expected square {n}x{n} coefficients and {n} intensities, got {}x{} and {}",
            a.nrows(),
            a.ncols(),
            i_r.len()
        )));
    }
    let dev = hermitian_deviation(a);
    if dev > 1e-10 {
        return Err(Error::Consistency(format!(
            "coefficient matrix deviates from Hermitian symmetry by {dev:.3e} (relative)"
        )));
    }
    if let Some(bad) = i_r.iter().find(|v| **v < 0.0 || !v.is_finite()) {
        return Err(Error::Data(format!("invalid reference intensity {bad}")));
    }
    let packing = HermitianPacking::new(n);
    let mut row = vec![0.0; packing.len()];
    for i in 0..n {
        row[packing.flat(i, i)] = match convention {
            DiagonalConvention::ExactIntensity => i_r[i],
            DiagonalConvention::SqrtIntensity => i_r[i].sqrt(),
        };
        for j in (i + 1)..n {
            row[packing.flat(i, j)] = 2.0 * a[(i, j)].re;
            row[packing.flat(j, i)] = -2.0 * a[(i, j)].im;
        }
    }
    Ok(row)
}

/// Builds a guessed complex reference field `sqrt(I_r) exp(i phi)` from
/// measured intensities.
pub fn conjecture_field(
    i_r: &[f64],
    geometry: &SchemeGeometry,
    strategy: PhaseStrategy,
) -> Result<Vec<Complex64>> {
    if let Some(bad) = i_r.iter().find(|v| **v < 0.0 || !v.is_finite()) {
        return Err(Error::Data(format!("invalid reference intensity {bad}")));
    }
    if i_r.len() != geometry.d1_grid.n_points() {
        return Err(Error::Shape(format!(
            "intensity vector has {} samples, detector has {} pixels",
            i_r.len(),
            geometry.d1_grid.n_points()
        )));
    }
    let phases: Vec<f64> = match strategy {
        PhaseStrategy::ZeroPhase => vec![0.0; i_r.len()],
        PhaseStrategy::SphericalWave => geometry
            .d1_grid
            .coordinates()
            .iter()
            .map(|&r| std::f64::consts::PI * r * r / (geometry.wavelength * geometry.d1))
            .collect(),
        PhaseStrategy::SeededRandomPhase { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..i_r.len())
                .map(|_| rng.random::<f64>() * 2.0 * std::f64::consts::PI)
                .collect()
        }
    };
    Ok(i_r
        .iter()
        .zip(&phases)
        .map(|(&i, &phi)| Complex64::from_polar(i.sqrt(), phi))
        .collect())
}

/// Mapping of `(reference pixel, test pixel)` pairs onto a shared frequency
/// axis `f = (r1 - r2) / (lambda d22)`.
///
/// With several test pixels the reference and test grids must share their
/// pitch; pixel offsets are then exact integer shifts of the axis. Returns
/// the union axis and the shift of each test pixel's block within it.
pub fn union_frequency_axis(
    d1_grid: &Grid1D,
    d2_grid: &Grid1D,
    r2_pixels: &[usize],
    lambda_d22: f64,
) -> Result<(Vec<f64>, Vec<usize>)> {
    if r2_pixels.is_empty() {
        return Err(Error::Config("need at least one test-detector pixel".into()));
    }
    if let Some(&bad) = r2_pixels.iter().find(|&&q| q >= d2_grid.n_points()) {
        return Err(Error::Config(format!(
            "test pixel {bad} out of range (detector has {} pixels)",
            d2_grid.n_points()
        )));
    }
    let q_min = *r2_pixels.iter().min().unwrap();
    let q_max = *r2_pixels.iter().max().unwrap();
    if q_min != q_max {
        let rel = (d1_grid.pitch() - d2_grid.pitch()).abs() / d1_grid.pitch();
        if rel > 1e-12 {
            return Err(Error::Alignment(format!(
                "test pixels span several positions but detector pitches differ \
                 ({:.6e} vs {:.6e}); offsets are not integer multiples of the \
                 reference pitch",
                d1_grid.pitch(),
                d2_grid.pitch()
            )));
        }
    }
    let n = d1_grid.n_points();
    let union_len = n + (q_max - q_min);
    let r2_ref = d2_grid.coordinate(q_max);
    let freq_axis = (0..union_len)
        .map(|u| (d1_grid.first() + u as f64 * d1_grid.pitch() - r2_ref) / lambda_d22)
        .collect();
    let shifts = r2_pixels.iter().map(|&q| q_max - q).collect();
    Ok((freq_axis, shifts))
}

/// Assembled real sensing system `A' X = Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingSystem {
    /// Row-major `rows x cols` matrix.
    pub a: Vec<f64>,
    pub y: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    /// Reference-detector pixel count, the `n` of one shot's block.
    pub n_det: usize,
    /// Shared frequency axis (cycles per meter), strictly increasing.
    pub freq_axis: Vec<f64>,
    pub mode: SensingMode,
    pub convention: DiagonalConvention,
    pub r2_pixels: Vec<usize>,
}

impl SensingSystem {
    pub fn union_len(&self) -> usize {
        self.freq_axis.len()
    }

    /// Packing of the unknown on the union axis (full modes only).
    pub fn packing(&self) -> Option<HermitianPacking> {
        self.mode.is_full().then(|| HermitianPacking::new(self.union_len()))
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.a[k * self.cols..(k + 1) * self.cols]
    }

    /// `A x`, parallel over rows; each row's dot product is evaluated
    /// sequentially so results are independent of the thread count.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        use rayon::prelude::*;
        assert_eq!(x.len(), self.cols);
        self.a
            .par_chunks(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `A^T r` by row accumulation over fixed 64-row blocks evaluated in
    /// parallel; the block partials are summed in block order, so the result
    /// is independent of the thread count.
    pub fn matvec_t(&self, r: &[f64]) -> Vec<f64> {
        use rayon::prelude::*;
        assert_eq!(r.len(), self.rows);
        const BLOCK: usize = 64;
        let partials: Vec<Vec<f64>> = self
            .a
            .par_chunks(BLOCK * self.cols)
            .zip(r.par_chunks(BLOCK))
            .map(|(rows, weights)| {
                let mut acc = vec![0.0; self.cols];
                for (row, &w) in rows.chunks(self.cols).zip(weights) {
                    if w == 0.0 {
                        continue;
                    }
                    for (o, a) in acc.iter_mut().zip(row) {
                        *o += w * a;
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![0.0; self.cols];
        for partial in partials {
            for (o, p) in out.iter_mut().zip(&partial) {
                *o += p;
            }
        }
        out
    }

    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        self.matvec(x)
            .iter()
            .zip(&self.y)
            .map(|(ax, y)| (ax - y) * (ax - y))
            .sum::<f64>()
            .sqrt()
    }
}

/// Builds the sensing system from acquired shots.
///
/// One row per `(shot, test pixel)` pair. Each row and its measurement are
/// jointly rescaled to unit row norm, which conditions the solve without
/// changing the solution set.
pub fn build_system(
    shots: &[ShotRecord],
    geometry: &SchemeGeometry,
    mode: SensingMode,
    r2_pixels: &[usize],
    convention: DiagonalConvention,
) -> Result<SensingSystem> {
    if shots.is_empty() {
        return Err(Error::Config("no shots supplied".into()));
    }
    let n = geometry.d1_grid.n_points();
    for s in shots {
        if s.i_r.len() != n || s.i_w.len() != geometry.d2_grid.n_points() {
            return Err(Error::Shape(format!(
                "shot {} does not match the geometry's detector sizes",
                s.shot_index
            )));
        }
        if matches!(mode, SensingMode::Homodyne) && s.e_r.is_none() {
            return Err(Error::Mode(format!(
                "homodyne sensing requires recorded reference fields, shot {} has none",
                s.shot_index
            )));
        }
    }
    let (freq_axis, shifts) =
        union_frequency_axis(&geometry.d1_grid, &geometry.d2_grid, r2_pixels, geometry.lambda_d22())?;
    let union_len = freq_axis.len();
    let cols = if mode.is_full() { union_len * union_len } else { union_len };
    let rows = shots.len() * r2_pixels.len();
    let scale = {
        let s = geometry.d1_grid.pitch() / geometry.lambda_d22();
        s * s
    };

    let mut a = vec![0.0; rows * cols];
    let mut y = vec![0.0; rows];
    let mut k = 0;
    for shot in shots {
        // per-shot packed block on the detector-sized lattice
        let block: Vec<f64> = if mode.is_full() {
            let e_ref: Vec<Complex64> = match mode {
                SensingMode::Homodyne => shot.e_r.clone().unwrap(),
                SensingMode::PhaseConjecture(strategy) => {
                    conjecture_field(&shot.i_r, geometry, strategy)?
                }
                SensingMode::DiagonalOnly => unreachable!(),
            };
            let coeffs = complex_sensing_row(&e_ref, geometry)?;
            pack_row(&coeffs, &shot.i_r, convention)?
        } else {
            shot.i_r
                .iter()
                .map(|&i| match convention {
                    DiagonalConvention::ExactIntensity => i,
                    DiagonalConvention::SqrtIntensity => i.sqrt(),
                })
                .collect()
        };

        for (&q, &shift) in r2_pixels.iter().zip(&shifts) {
            let row = &mut a[k * cols..(k + 1) * cols];
            if mode.is_full() {
                let packing = HermitianPacking::new(n);
                for i in 0..n {
                    let base = (i + shift) * union_len + shift;
                    for j in 0..n {
                        row[base + j] = block[packing.flat(i, j)] * scale;
                    }
                }
            } else {
                for i in 0..n {
                    row[i + shift] = block[i] * scale;
                }
            }
            let mut rhs = shot.i_w[q];
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for v in row.iter_mut() {
                    *v /= norm;
                }
                rhs /= norm;
            }
            y[k] = rhs;
            k += 1;
        }
    }

    Ok(SensingSystem {
        a,
        y,
        rows,
        cols,
        n_det: n,
        freq_axis,
        mode,
        convention,
        r2_pixels: r2_pixels.to_vec(),
    })
}
