//! Correlation ghost-imaging baseline and the comparison harness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objects::{spectrum_oracle, PhaseObject};
use crate::scheme::{SchemeGeometry, ShotRecord, ShotSimulator};
use crate::sensing::{
    build_system, union_frequency_axis, DiagonalConvention, SensingMode, SensingSystem,
};
use crate::solver::{extract_spectrum, solve_l1, SolverConfig};
use crate::spectrum::{Provenance, SpectrumEstimate};

/// Intensity-fluctuation correlation reconstruction.
///
/// Estimates `G(r1, r2) = <dI_r(r1) dI_w(r2)>` over the shot ensemble (with
/// `d` the deviation from the per-pixel mean), averages the aligned curves of
/// the supplied test pixels on the shared frequency axis, and returns
/// `sqrt(max(G, 0))` at unit peak. Negative excursions are finite-sample
/// noise and clamp to zero.
pub fn cgi_reconstruct(
    shots: &[ShotRecord],
    geometry: &SchemeGeometry,
    r2_pixels: &[usize],
) -> Result<SpectrumEstimate> {
    if shots.len() < 2 {
        return Err(Error::Statistics(format!(
            "correlation needs at least 2 shots, got {}",
            shots.len()
        )));
    }
    let n = geometry.d1_grid.n_points();
    let m = geometry.d2_grid.n_points();
    for s in shots {
        if s.i_r.len() != n || s.i_w.len() != m {
            return Err(Error::Shape(format!(
                "shot {} does not match the geometry's detector sizes",
                s.shot_index
            )));
        }
    }
    let (freq_axis, shifts) =
        union_frequency_axis(&geometry.d1_grid, &geometry.d2_grid, r2_pixels, geometry.lambda_d22())?;
    let count = shots.len() as f64;

    let mut mean_r = vec![0.0; n];
    let mut mean_w = vec![0.0; m];
    for s in shots {
        for (acc, v) in mean_r.iter_mut().zip(&s.i_r) {
            *acc += v;
        }
        for (acc, v) in mean_w.iter_mut().zip(&s.i_w) {
            *acc += v;
        }
    }
    for v in mean_r.iter_mut() {
        *v /= count;
    }
    for v in mean_w.iter_mut() {
        *v /= count;
    }

    let union_len = freq_axis.len();
    let mut g = vec![0.0; union_len];
    let mut hits = vec![0usize; union_len];
    for (&q, &shift) in r2_pixels.iter().zip(&shifts) {
        for i in 0..n {
            let mut acc = 0.0;
            for s in shots {
                acc += (s.i_r[i] - mean_r[i]) * (s.i_w[q] - mean_w[q]);
            }
            g[i + shift] += acc / count;
            hits[i + shift] += 1;
        }
    }
    let magnitude: Vec<f64> = g
        .iter()
        .zip(&hits)
        .map(|(v, &h)| if h > 0 { (v / h as f64).max(0.0).sqrt() } else { 0.0 })
        .collect();
    Ok(SpectrumEstimate::unit_peak(freq_axis, magnitude, Provenance::Cgi))
}

/// Agreement metrics between a unit-peak estimate and the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub pearson_correlation: f64,
    pub normalized_mse: f64,
    /// `|argmax(estimate) - argmax(oracle)|` in frequency bins.
    pub peak_position_error: f64,
}

/// Computes the metrics of `estimate` against `oracle` (both re-normalized to
/// unit peak first, so any positive rescaling of either input is invisible).
pub fn metrics_against(estimate: &SpectrumEstimate, oracle: &SpectrumEstimate) -> Result<Metrics> {
    check_common_axis(&estimate.freqs, &oracle.freqs)?;
    let e = renormalize(&estimate.magnitude);
    let o = renormalize(&oracle.magnitude);
    let n = e.len() as f64;
    let mean_e = e.iter().sum::<f64>() / n;
    let mean_o = o.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_e = 0.0;
    let mut var_o = 0.0;
    let mut sq_err = 0.0;
    let mut sq_o = 0.0;
    for (x, y) in e.iter().zip(&o) {
        let dx = x - mean_e;
        let dy = y - mean_o;
        cov += dx * dy;
        var_e += dx * dx;
        var_o += dy * dy;
        sq_err += (x - y) * (x - y);
        sq_o += y * y;
    }
    let denom = (var_e * var_o).sqrt();
    let pearson = if denom > 0.0 { (cov / denom).clamp(-1.0, 1.0) } else { 0.0 };
    let nmse = if sq_o > 0.0 { sq_err / sq_o } else { 0.0 };
    let peak_e = argmax(&e);
    let peak_o = argmax(&o);
    Ok(Metrics {
        pearson_correlation: pearson,
        normalized_mse: nmse,
        peak_position_error: (peak_e as f64 - peak_o as f64).abs(),
    })
}

fn renormalize(v: &[f64]) -> Vec<f64> {
    let peak = v.iter().cloned().fold(0.0_f64, f64::max);
    if peak > 0.0 {
        v.iter().map(|x| x / peak).collect()
    } else {
        v.to_vec()
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &x) in v.iter().enumerate() {
        if x > best_v {
            best_v = x;
            best = i;
        }
    }
    best
}

fn check_common_axis(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "frequency axes differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let scale = a.iter().map(|v| v.abs()).fold(1.0_f64, f64::max);
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-9 * scale {
            return Err(Error::Shape(format!("frequency axes differ: {x} vs {y}")));
        }
    }
    Ok(())
}

/// Side-by-side comparison of the compressive and correlation estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconComparison {
    pub gics: SpectrumEstimate,
    pub cgi: SpectrumEstimate,
    pub oracle: SpectrumEstimate,
    pub gics_metrics: Metrics,
    pub cgi_metrics: Metrics,
}

pub fn compare_spectra(
    gics: SpectrumEstimate,
    cgi: SpectrumEstimate,
    oracle: SpectrumEstimate,
) -> Result<ReconComparison> {
    check_common_axis(&gics.freqs, &oracle.freqs)?;
    check_common_axis(&cgi.freqs, &oracle.freqs)?;
    let gics_metrics = metrics_against(&gics, &oracle)?;
    let cgi_metrics = metrics_against(&cgi, &oracle)?;
    Ok(ReconComparison { gics, cgi, oracle, gics_metrics, cgi_metrics })
}

/// One reconstruction route in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RunMode {
    Gics(SensingMode),
    Cgi,
}

impl RunMode {
    pub fn label(&self) -> String {
        match self {
            RunMode::Gics(mode) => mode.label(),
            RunMode::Cgi => "cgi".into(),
        }
    }
}

/// Builds the sensing system for `mode`, solves it at
/// `lambda = lambda_rel * ||A'^T y||_inf`, and extracts the spectrum.
pub fn gics_reconstruct(
    shots: &[ShotRecord],
    geometry: &SchemeGeometry,
    mode: SensingMode,
    r2_pixels: &[usize],
    convention: DiagonalConvention,
    solver: &SolverConfig,
    lambda_rel: f64,
) -> Result<(SensingSystem, crate::solver::SolveResult, SpectrumEstimate)> {
    let system = build_system(shots, geometry, mode, r2_pixels, convention)?;
    let lambda_max = system
        .matvec_t(&system.y)
        .iter()
        .map(|v| v.abs())
        .fold(0.0_f64, f64::max);
    let config = SolverConfig { lambda_reg: lambda_rel * lambda_max, ..*solver };
    let result = solve_l1(&system, &config)?;
    let packing = system
        .packing()
        .unwrap_or_else(|| crate::sensing::HermitianPacking::new(system.union_len()));
    let extracted = extract_spectrum(
        &result.x,
        &packing,
        convention,
        &system.freq_axis,
        Provenance::Gics { mode: mode.label() },
    )?;
    Ok((system, result, extracted.estimate))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Shot counts, ascending.
    pub k_values: Vec<usize>,
    pub modes: Vec<RunMode>,
    pub n_seeds: u64,
    /// Per-cell source seed is `base_seed + seed_index`.
    pub base_seed: u64,
    pub r2_pixels: Vec<usize>,
    pub convention: DiagonalConvention,
    pub solver: SolverConfig,
    /// l1 weight relative to `||A'^T y||_inf` of each system.
    pub lambda_rel: f64,
}

/// Mean and standard deviation of each metric for one `(K, mode)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub mode: String,
    pub seeds_used: u64,
    pub failures: u64,
    pub pearson_mean: f64,
    pub pearson_std: f64,
    pub nmse_mean: f64,
    pub nmse_std: f64,
    pub peak_err_mean: f64,
    pub peak_err_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub const CSV_HEADER: &'static str =
        "k,mode,seeds,failures,pearson_mean,pearson_std,nmse_mean,nmse_std,peak_err_mean,peak_err_std";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.k,
                r.mode,
                r.seeds_used,
                r.failures,
                r.pearson_mean,
                r.pearson_std,
                r.nmse_mean,
                r.nmse_std,
                r.peak_err_mean,
                r.peak_err_std
            ));
        }
        out
    }
}

/// Runs acquisition, reconstruction and comparison for every
/// `(K, mode, seed)` cell and aggregates per-cell metric statistics.
///
/// Within one seed, the shot ensemble is simulated once at `max(k_values)`
/// and reused as prefixes, so modes and shot counts see identical speckle.
/// Individual cell failures are counted, not fatal.
pub fn efficiency_sweep(
    geometry: &SchemeGeometry,
    object: &PhaseObject,
    config: &SweepConfig,
) -> Result<SweepTable> {
    if config.k_values.is_empty() || config.k_values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("k_values must be non-empty and ascending".into()));
    }
    if config.n_seeds < 1 {
        return Err(Error::Config("need at least one seed".into()));
    }
    let k_max = *config.k_values.last().unwrap();
    let oracle_axis = union_frequency_axis(
        &geometry.d1_grid,
        &geometry.d2_grid,
        &config.r2_pixels,
        geometry.lambda_d22(),
    )?
    .0;
    let oracle = spectrum_oracle(object, &oracle_axis);

    let mut cells: Vec<Vec<Vec<Metrics>>> =
        vec![vec![Vec::new(); config.modes.len()]; config.k_values.len()];
    let mut failures = vec![vec![0u64; config.modes.len()]; config.k_values.len()];

    for seed_index in 0..config.n_seeds {
        let mut seeded = geometry.clone();
        seeded.source.seed = config.base_seed.wrapping_add(seed_index);
        let sim = ShotSimulator::new(&seeded)?;
        let needs_fields = config
            .modes
            .iter()
            .any(|m| matches!(m, RunMode::Gics(SensingMode::Homodyne)));
        let shots = sim.simulate_batch(object, k_max, needs_fields, 0.0)?;

        for (ki, &k) in config.k_values.iter().enumerate() {
            let prefix = &shots[..k];
            for (mi, mode) in config.modes.iter().enumerate() {
                let estimate = match mode {
                    RunMode::Cgi => cgi_reconstruct(prefix, &seeded, &config.r2_pixels),
                    RunMode::Gics(mode) => gics_reconstruct(
                        prefix,
                        &seeded,
                        *mode,
                        &config.r2_pixels,
                        config.convention,
                        &config.solver,
                        config.lambda_rel,
                    )
                    .map(|(_, _, est)| est),
                };
                match estimate.and_then(|est| metrics_against(&est, &oracle)) {
                    Ok(metrics) => cells[ki][mi].push(metrics),
                    Err(_) => failures[ki][mi] += 1,
                }
            }
        }
    }

    let mut rows = Vec::new();
    for (ki, &k) in config.k_values.iter().enumerate() {
        for (mi, mode) in config.modes.iter().enumerate() {
            let ms = &cells[ki][mi];
            let stat = |f: fn(&Metrics) -> f64| -> (f64, f64) {
                if ms.is_empty() {
                    return (f64::NAN, f64::NAN);
                }
                let n = ms.len() as f64;
                let mean = ms.iter().map(|m| f(m)).sum::<f64>() / n;
                let var = ms.iter().map(|m| (f(m) - mean) * (f(m) - mean)).sum::<f64>() / n;
                (mean, var.sqrt())
            };
            let (p_mean, p_std) = stat(|m| m.pearson_correlation);
            let (n_mean, n_std) = stat(|m| m.normalized_mse);
            let (e_mean, e_std) = stat(|m| m.peak_position_error);
            rows.push(SweepRow {
                k,
                mode: mode.label(),
                seeds_used: ms.len() as u64,
                failures: failures[ki][mi],
                pearson_mean: p_mean,
                pearson_std: p_std,
                nmse_mean: n_mean,
                nmse_std: n_std,
                peak_err_mean: e_mean,
                peak_err_std: e_std,
            });
        }
    }
    Ok(SweepTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::PhaseStrategy;
    use crate::testkit;

    #[test]
    fn constant_test_intensities_give_a_zero_estimate() {
        let geometry = testkit::small_geometry(41);
        let n = geometry.d1_grid.n_points();
        let m = geometry.d2_grid.n_points();
        let shots: Vec<ShotRecord> = (0..4)
            .map(|k| ShotRecord {
                shot_index: k,
                i_r: (0..n).map(|i| (i as f64 + k as f64).sin().powi(2)).collect(),
                e_r: None,
                i_w: vec![3.0; m],
            })
            .collect();
        let est = cgi_reconstruct(&shots, &geometry, &[m / 2]).unwrap();
        assert!(est.magnitude.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn needs_two_shots() {
        let geometry = testkit::small_geometry(42);
        let object = testkit::small_object(&geometry);
        let shots = ShotSimulator::new(&geometry)
            .unwrap()
            .simulate_batch(&object, 1, false, 0.0)
            .unwrap();
        assert!(matches!(
            cgi_reconstruct(&shots, &geometry, &[3]),
            Err(Error::Statistics(_))
        ));
    }

    #[test]
    fn duplicated_and_reordered_ensembles_agree() {
        let geometry = testkit::small_geometry(43);
        let object = testkit::small_object(&geometry);
        let shots = ShotSimulator::new(&geometry)
            .unwrap()
            .simulate_batch(&object, 16, false, 0.0)
            .unwrap();
        let center = geometry.d2_grid.n_points() / 2;
        let pixels = [center - 1, center, center + 1];
        let base = cgi_reconstruct(&shots, &geometry, &pixels).unwrap();

        let mut doubled = shots.clone();
        doubled.extend(shots.iter().cloned());
        let twice = cgi_reconstruct(&doubled, &geometry, &pixels).unwrap();
        for (a, b) in base.magnitude.iter().zip(&twice.magnitude) {
            assert!((a - b).abs() < 1e-12);
        }

        let mut reversed = shots.clone();
        reversed.reverse();
        let rev = cgi_reconstruct(&reversed, &geometry, &pixels).unwrap();
        for (a, b) in base.magnitude.iter().zip(&rev.magnitude) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn correlation_peaks_match_the_oracle_with_many_shots() {
        let geometry = testkit::wide_source_geometry(44);
        let object = testkit::small_object(&geometry);
        let shots = ShotSimulator::new(&geometry)
            .unwrap()
            .simulate_batch(&object, 5000, false, 0.0)
            .unwrap();
        let center = geometry.d2_grid.n_points() / 2;
        let pixels: Vec<usize> = (center - 2..=center + 2).collect();
        let est = cgi_reconstruct(&shots, &geometry, &pixels).unwrap();
        let oracle = spectrum_oracle(&object, &est.freqs);
        // compare peak positions away from any clamped edge bins
        let metrics = metrics_against(&est, &oracle).unwrap();
        assert!(
            metrics.peak_position_error <= 1.0,
            "peak error {} bins",
            metrics.peak_position_error
        );
        assert!(metrics.pearson_correlation > 0.5, "correlation {}", metrics.pearson_correlation);
    }

    #[test]
    fn metrics_are_normalization_invariant() {
        let freqs: Vec<f64> = (0..32).map(|i| i as f64).collect();
        let mag: Vec<f64> = (0..32).map(|i| ((i as f64 * 0.3).sin().abs() + 0.01) * 2.0).collect();
        let oracle = SpectrumEstimate::unit_peak(freqs.clone(), mag.clone(), Provenance::Oracle);
        let same = SpectrumEstimate::unit_peak(freqs.clone(), mag.clone(), Provenance::Cgi);
        let m = metrics_against(&same, &oracle).unwrap();
        assert!((m.pearson_correlation - 1.0).abs() < 1e-12);
        assert!(m.normalized_mse < 1e-24);
        assert_eq!(m.peak_position_error, 0.0);

        // power-of-two factor keeps the renormalization division exact
        let scaled = SpectrumEstimate {
            freqs: freqs.clone(),
            magnitude: mag.iter().map(|v| v * 4.0).collect(),
            provenance: Provenance::Cgi,
        };
        let ms = metrics_against(&scaled, &oracle).unwrap();
        assert_eq!(m, ms);
    }

    #[test]
    fn reversed_asymmetric_spectrum_scores_worse() {
        let freqs: Vec<f64> = (0..64).map(|i| i as f64).collect();
        // asymmetric single-sided ramp with a sharp peak
        let mut mag = vec![0.0; 64];
        for (i, v) in mag.iter_mut().enumerate() {
            *v = (i as f64 / 64.0).powi(2);
        }
        mag[50] = 2.0;
        let oracle = SpectrumEstimate::unit_peak(freqs.clone(), mag.clone(), Provenance::Oracle);
        let mut rev = mag.clone();
        rev.reverse();
        let reversed = SpectrumEstimate::unit_peak(freqs, rev, Provenance::Cgi);
        let m = metrics_against(&reversed, &oracle).unwrap();
        assert!(m.pearson_correlation < 1.0);
        assert!(m.peak_position_error > 0.0);
    }

    #[test]
    fn mismatched_axes_are_rejected() {
        let a = SpectrumEstimate::unit_peak(vec![0.0, 1.0], vec![1.0, 0.5], Provenance::Oracle);
        let b = SpectrumEstimate::unit_peak(vec![0.0, 2.0], vec![1.0, 0.5], Provenance::Cgi);
        assert!(matches!(
            compare_spectra(b.clone(), b.clone(), a),
            Err(Error::Shape(_))
        ));
    }

    fn sweep_config(modes: Vec<RunMode>, k_values: Vec<usize>, n_seeds: u64) -> SweepConfig {
        SweepConfig {
            k_values,
            modes,
            n_seeds,
            base_seed: 900,
            r2_pixels: vec![22, 23, 24, 25, 26],
            convention: DiagonalConvention::ExactIntensity,
            solver: SolverConfig { max_iters: 600, tol: 1e-9, ..SolverConfig::new(0.0) },
            lambda_rel: 0.02,
        }
    }

    #[test]
    fn sweep_has_one_row_per_cell_and_is_reproducible() {
        let geometry = testkit::small_geometry(45);
        let object = testkit::small_object(&geometry);
        let config = sweep_config(
            vec![RunMode::Gics(SensingMode::Homodyne), RunMode::Cgi],
            vec![8, 16],
            2,
        );
        let a = efficiency_sweep(&geometry, &object, &config).unwrap();
        assert_eq!(a.rows.len(), 4);
        assert!(a.rows.iter().all(|r| r.seeds_used == 2 && r.failures == 0));
        let b = efficiency_sweep(&geometry, &object, &config).unwrap();
        assert_eq!(a, b);
        let csv = a.to_csv();
        assert!(csv.starts_with(SweepTable::CSV_HEADER));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn single_cell_sweep_shape() {
        let geometry = testkit::small_geometry(46);
        let object = testkit::small_object(&geometry);
        let config = sweep_config(
            vec![RunMode::Gics(SensingMode::PhaseConjecture(PhaseStrategy::SphericalWave))],
            vec![10],
            1,
        );
        let table = efficiency_sweep(&geometry, &object, &config).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].k, 10);
    }
}
