//! l1-regularized recovery of the packed spectrum unknown:
//!
//! ```text
//! min_x  1/2 ||A' x - y||^2 + lambda ||x||_1
//! ```
//!
//! solved by a monotone accelerated proximal-gradient iteration with
//! backtracking step size. The accepted objective sequence never increases.
//! Optional extras: projection of diagonal slots onto `x >= 0` (they hold
//! `|T|^2`), and a least-squares refit on the recovered support.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensing::{DiagonalConvention, HermitianPacking, HermitianSpectrum, SensingSystem};
use crate::spectrum::{Provenance, SpectrumEstimate};

/// Row-shuffle seed for the 80/20 train/holdout split in [`select_lambda`].
pub const LAMBDA_SPLIT_SEED: u64 = 0x11a5_e1ec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// l1 weight; `0` reduces the solve to plain least squares.
    pub lambda_reg: f64,
    pub max_iters: usize,
    /// Stop when the relative objective change drops below this.
    pub tol: f64,
    /// Project diagonal slots (which hold `|T|^2` or `|T|`) onto `>= 0`.
    pub nonneg_diagonal: bool,
    /// Least-squares refit on the recovered support after the l1 solve.
    pub debias: bool,
}

impl SolverConfig {
    pub fn new(lambda_reg: f64) -> Self {
        Self { lambda_reg, max_iters: 2000, tol: 1e-9, nonneg_diagonal: true, debias: true }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda_reg >= 0.0) || !self.lambda_reg.is_finite() {
            return Err(Error::Config(format!(
                "l1 weight must be non-negative, got {}",
                self.lambda_reg
            )));
        }
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x: Vec<f64>,
    /// Objective value of every accepted iterate, starting with the initial
    /// point; non-increasing.
    pub objective_trace: Vec<f64>,
    /// `||A' x - y||` at the returned solution.
    pub residual: f64,
    pub iterations_used: usize,
    pub converged: bool,
}

fn l1_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[inline]
fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn prox(v: &[f64], t: f64, nonneg: Option<&[bool]>, out: &mut Vec<f64>) {
    out.clear();
    match nonneg {
        None => out.extend(v.iter().map(|&x| soft_threshold(x, t))),
        Some(mask) => out.extend(v.iter().zip(mask).map(|(&x, &m)| {
            if m {
                (x - t).max(0.0)
            } else {
                soft_threshold(x, t)
            }
        })),
    }
}

/// Largest squared singular value of `A`, by power iteration on `A^T A`.
fn operator_norm_sq(system: &SensingSystem, iters: usize) -> f64 {
    let n = system.cols;
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut estimate = 0.0;
    for _ in 0..iters {
        let av = system.matvec(&v);
        let atav = system.matvec_t(&av);
        let nrm = norm2(&atav);
        if nrm == 0.0 {
            return 0.0;
        }
        estimate = nrm;
        for (x, w) in v.iter_mut().zip(&atav) {
            *x = w / nrm;
        }
    }
    estimate
}

fn diagonal_mask(system: &SensingSystem) -> Vec<bool> {
    match system.packing() {
        Some(packing) => {
            let mut mask = vec![false; system.cols];
            for d in packing.diagonal_indices() {
                mask[d] = true;
            }
            mask
        }
        // diagonal-only systems: every unknown is a diagonal slot
        None => vec![true; system.cols],
    }
}

pub fn solve_l1(system: &SensingSystem, config: &SolverConfig) -> Result<SolveResult> {
    solve_l1_from(system, config, None)
}

/// Same as [`solve_l1`] but warm-started from `x0` when given.
pub fn solve_l1_from(
    system: &SensingSystem,
    config: &SolverConfig,
    x0: Option<&[f64]>,
) -> Result<SolveResult> {
    config.validate()?;
    if system.rows == 0 || system.cols == 0 {
        return Err(Error::Config("empty sensing system".into()));
    }
    if let Some(x0) = x0 {
        if x0.len() != system.cols {
            return Err(Error::Shape(format!(
                "warm start has {} entries, system has {} columns",
                x0.len(),
                system.cols
            )));
        }
    }
    let lambda = config.lambda_reg;
    let mask = config.nonneg_diagonal.then(|| diagonal_mask(system));
    let mask = mask.as_deref();

    let objective = |x: &[f64], ax: &[f64]| -> f64 {
        let data: f64 = ax.iter().zip(&system.y).map(|(a, b)| (a - b) * (a - b)).sum();
        0.5 * data + lambda * l1_norm(x)
    };

    let mut x: Vec<f64> = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; system.cols]);
    let mut ax = system.matvec(&x);
    let mut f_x = objective(&x, &ax);

    let mut lip = operator_norm_sq(system, 25).max(1e-12);
    let mut momentum = x.clone();
    let mut t_k = 1.0_f64;

    let mut trace = vec![f_x];
    let mut converged = false;
    let mut iterations_used = 0;

    let mut candidate = Vec::with_capacity(system.cols);
    for iter in 0..config.max_iters {
        iterations_used = iter + 1;
        let a_mom = system.matvec(&momentum);
        let resid: Vec<f64> = a_mom.iter().zip(&system.y).map(|(a, b)| a - b).collect();
        let f_mom_data: f64 = 0.5 * resid.iter().map(|r| r * r).sum::<f64>();
        let grad = system.matvec_t(&resid);
        let mut accepted;

        // backtracking on the smoothness constant
        loop {
            let step = 1.0 / lip;
            let shifted: Vec<f64> = momentum
                .iter()
                .zip(&grad)
                .map(|(m, g)| m - step * g)
                .collect();
            prox(&shifted, lambda * step, mask, &mut candidate);
            let a_cand = system.matvec(&candidate);
            let data: f64 = 0.5
                * a_cand
                    .iter()
                    .zip(&system.y)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
            let mut quad = f_mom_data;
            let mut dist_sq = 0.0;
            for ((c, m), g) in candidate.iter().zip(&momentum).zip(&grad) {
                let d = c - m;
                quad += g * d;
                dist_sq += d * d;
            }
            quad += 0.5 * lip * dist_sq;
            if data <= quad + 1e-12 * quad.abs().max(1.0) {
                let f_cand = data + lambda * l1_norm(&candidate);
                if f_cand <= f_x {
                    // accelerated candidate improves the objective
                    let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt());
                    momentum = candidate
                        .iter()
                        .zip(&x)
                        .map(|(&z, &prev)| z + ((t_k - 1.0) / t_next) * (z - prev))
                        .collect();
                    x = candidate.clone();
                    f_x = f_cand;
                    t_k = t_next;
                    accepted = true;
                } else {
                    // overshoot: keep the iterate and restart the momentum,
                    // the next step is then a plain (descending) prox step
                    momentum = x.clone();
                    t_k = 1.0;
                    accepted = false;
                }
                break;
            }
            lip *= 2.0;
            if !lip.is_finite() || lip > 1e300 {
                return Err(Error::Solver {
                    message: "backtracking failed to find a descent step".into(),
                    trace,
                });
            }
        }

        let f_prev = *trace.last().unwrap();
        trace.push(f_x);
        // rejected steps leave the objective unchanged by construction and
        // say nothing about convergence
        if accepted && (f_prev - f_x).abs() <= config.tol * f_prev.abs().max(1e-300) {
            converged = true;
            break;
        }
    }

    if config.debias {
        debias_on_support(system, &mut x);
    }
    ax = system.matvec(&x);
    let residual = ax
        .iter()
        .zip(&system.y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();

    Ok(SolveResult { x, objective_trace: trace, residual, iterations_used, converged })
}

/// Least-squares refit restricted to the nonzero entries of `x`, by conjugate
/// gradients on the normal equations (CGLS). No-op for an empty support.
fn debias_on_support(system: &SensingSystem, x: &mut [f64]) {
    let support: Vec<usize> = x
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, _)| i)
        .collect();
    if support.is_empty() {
        return;
    }
    let a_s = |z: &[f64]| -> Vec<f64> {
        (0..system.rows)
            .map(|k| {
                let row = system.row(k);
                support.iter().zip(z).map(|(&idx, v)| row[idx] * v).sum()
            })
            .collect()
    };
    let a_s_t = |r: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; support.len()];
        for (k, &rk) in r.iter().enumerate() {
            if rk == 0.0 {
                continue;
            }
            let row = system.row(k);
            for (o, &idx) in out.iter_mut().zip(&support) {
                *o += rk * row[idx];
            }
        }
        out
    };

    let mut z: Vec<f64> = support.iter().map(|&i| x[i]).collect();
    let mut r: Vec<f64> = a_s(&z)
        .iter()
        .zip(&system.y)
        .map(|(az, y)| y - az)
        .collect();
    let mut s = a_s_t(&r);
    let mut p = s.clone();
    let mut gamma: f64 = s.iter().map(|v| v * v).sum();
    let gamma0 = gamma;
    let max_iters = (2 * support.len()).clamp(10, 500);
    for _ in 0..max_iters {
        if gamma <= 1e-28 * gamma0 || gamma == 0.0 {
            break;
        }
        let q = a_s(&p);
        let qq: f64 = q.iter().map(|v| v * v).sum();
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        for (zi, pi) in z.iter_mut().zip(&p) {
            *zi += alpha * pi;
        }
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri -= alpha * qi;
        }
        s = a_s_t(&r);
        let gamma_next: f64 = s.iter().map(|v| v * v).sum();
        let beta = gamma_next / gamma;
        for (pi, si) in p.iter_mut().zip(&s) {
            *pi = si + beta * *pi;
        }
        gamma = gamma_next;
    }
    for (&idx, zi) in support.iter().zip(&z) {
        x[idx] = *zi;
    }
}

/// Outcome of the holdout search over an l1-weight grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSelection {
    pub chosen: f64,
    /// `(lambda, holdout residual)` in evaluation order (descending lambda).
    pub evaluations: Vec<(f64, f64)>,
}

/// Picks the l1 weight from `grid` by an 80/20 row split: solves on the
/// training rows from large to small lambda with warm starts, and returns the
/// lambda with the smallest holdout residual (ties keep the larger lambda).
/// The split is a deterministic shuffle seeded by [`LAMBDA_SPLIT_SEED`].
pub fn select_lambda(
    system: &SensingSystem,
    grid: &[f64],
    base: &SolverConfig,
) -> Result<LambdaSelection> {
    if grid.is_empty() {
        return Err(Error::Config("lambda grid is empty".into()));
    }
    if grid.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
        return Err(Error::Config("lambda grid entries must be positive".into()));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("lambda grid must be sorted ascending".into()));
    }
    if system.rows < 2 {
        return Err(Error::Statistics("need at least 2 rows for a holdout split".into()));
    }

    let mut indices: Vec<usize> = (0..system.rows).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(LAMBDA_SPLIT_SEED);
    indices.shuffle(&mut rng);
    let n_hold = (system.rows / 5).max(1);
    let (hold_idx, train_idx) = indices.split_at(n_hold);

    let subset = |idx: &[usize]| -> SensingSystem {
        let mut a = Vec::with_capacity(idx.len() * system.cols);
        let mut y = Vec::with_capacity(idx.len());
        for &k in idx {
            a.extend_from_slice(system.row(k));
            y.push(system.y[k]);
        }
        SensingSystem { a, y, rows: idx.len(), ..clone_meta(system) }
    };
    let train = subset(train_idx);
    let hold = subset(hold_idx);

    let mut warm: Option<Vec<f64>> = None;
    let mut evaluations = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64)> = None;
    for &lambda in grid.iter().rev() {
        let config = SolverConfig { lambda_reg: lambda, ..*base };
        let result = solve_l1_from(&train, &config, warm.as_deref())?;
        let holdout_residual = hold.residual_norm(&result.x);
        evaluations.push((lambda, holdout_residual));
        if best.map_or(true, |(_, r)| holdout_residual < r) {
            best = Some((lambda, holdout_residual));
        }
        warm = Some(result.x);
    }
    Ok(LambdaSelection { chosen: best.unwrap().0, evaluations })
}

fn clone_meta(system: &SensingSystem) -> SensingSystem {
    SensingSystem {
        a: Vec::new(),
        y: Vec::new(),
        rows: 0,
        cols: system.cols,
        n_det: system.n_det,
        freq_axis: system.freq_axis.clone(),
        mode: system.mode,
        convention: system.convention,
        r2_pixels: system.r2_pixels.clone(),
    }
}

/// Spectrum magnitude recovered from a solution vector, plus, for full-mode
/// solutions, the Hermitian off-diagonal estimate for phase inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedSpectrum {
    pub estimate: SpectrumEstimate,
    pub hermitian: Option<HermitianSpectrum>,
}

/// Reads `|T(f)|` off the diagonal slots of a solution.
///
/// `x` may be a full packed unknown (`n^2` entries) or a diagonal-only one
/// (`n` entries). Diagonal slots hold `|T|^2` under
/// [`DiagonalConvention::ExactIntensity`] and `|T|` under
/// [`DiagonalConvention::SqrtIntensity`]; negative values clamp to zero and
/// the output is unit-peak normalized.
pub fn extract_spectrum(
    x: &[f64],
    packing: &HermitianPacking,
    convention: DiagonalConvention,
    freq_axis: &[f64],
    provenance: Provenance,
) -> Result<ExtractedSpectrum> {
    let n = packing.n;
    if freq_axis.len() != n {
        return Err(Error::Shape(format!(
            "frequency axis has {} entries, packing expects {n}",
            freq_axis.len()
        )));
    }
    let (diag, hermitian): (Vec<f64>, Option<HermitianSpectrum>) = if x.len() == packing.len() {
        let herm = HermitianSpectrum::from_packed(*packing, x)?;
        let diag = (0..n).map(|i| herm.b[(i, i)].re).collect();
        (diag, Some(herm))
    } else if x.len() == n {
        (x.to_vec(), None)
    } else {
        return Err(Error::Shape(format!(
            "solution length {} is neither n = {n} nor n^2 = {}",
            x.len(),
            packing.len()
        )));
    };
    let magnitude: Vec<f64> = diag
        .iter()
        .map(|&d| match convention {
            DiagonalConvention::ExactIntensity => d.max(0.0).sqrt(),
            DiagonalConvention::SqrtIntensity => d.max(0.0),
        })
        .collect();
    Ok(ExtractedSpectrum {
        estimate: SpectrumEstimate::unit_peak(freq_axis.to_vec(), magnitude, provenance),
        hermitian,
    })
}
