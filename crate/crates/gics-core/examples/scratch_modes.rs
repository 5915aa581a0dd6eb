// Scratch harness: per-mode recovery quality across seeds. Not part of the build.

use gics_core::*;
use std::time::Instant;

fn geometry(seed: u64) -> SchemeGeometry {
    let lambda = 632.8e-9;
    let source_grid = Grid1D::centered(512, 6.25e-6).unwrap();
    let source = SourceModel::new(3.0e-3, source_grid, 1.0, seed).unwrap();
    let object_grid = Grid1D::centered(80, 75e-6).unwrap();
    let det_pitch = SchemeGeometry::conjugate_detector_pitch(&object_grid, lambda, 0.2);
    let det = Grid1D::centered(80, det_pitch).unwrap();
    SchemeGeometry::fourier(lambda, 0.2, 0.2, source, object_grid, det, det).unwrap()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_seeds: u64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(10);
    let mode_arg = args.get(2).map(|s| s.as_str()).unwrap_or("all");
    let lambdas: Vec<f64> = args
        .get(3)
        .map(|s| s.split(',').map(|v| v.parse().unwrap()).collect())
        .unwrap_or_else(|| vec![0.005]);
    let all_modes: Vec<(&str, SensingMode)> = vec![
        ("homodyne", SensingMode::Homodyne),
        ("conj-zero", SensingMode::PhaseConjecture(PhaseStrategy::ZeroPhase)),
        ("conj-sphere", SensingMode::PhaseConjecture(PhaseStrategy::SphericalWave)),
        ("conj-random", SensingMode::PhaseConjecture(PhaseStrategy::SeededRandomPhase { seed: 7 })),
        ("diag-only", SensingMode::DiagonalOnly),
    ];
    let modes: Vec<(&str, SensingMode)> = all_modes
        .into_iter()
        .filter(|(n, _)| mode_arg == "all" || *n == mode_arg)
        .collect();
    let solver = SolverConfig { max_iters: 800, tol: 1e-8, ..SolverConfig::new(0.0) };

    let t_all = Instant::now();
    let mut sums = vec![vec![(0.0, 0.0); lambdas.len()]; modes.len()];
    let mut cgi_sum = (0.0, 0.0);
    for seed in 0..n_seeds {
        let geo = geometry(1000 + seed);
        let object =
            phase_slits(5, 600e-6, 600e-6, std::f64::consts::PI, &geo.object_grid).unwrap();
        let sim = ShotSimulator::new(&geo).unwrap();
        let shots = sim.simulate_batch(&object, 50, true, 0.0).unwrap();
        let c = geo.d2_grid.n_points() / 2;
        let r2: Vec<usize> = (c - 8..c + 8).collect();
        for (i, (name, mode)) in modes.iter().enumerate() {
            for (j, &lambda_rel) in lambdas.iter().enumerate() {
                let t0 = Instant::now();
                let (system, result, est) = gics_reconstruct(
                    &shots,
                    &geo,
                    *mode,
                    &r2,
                    DiagonalConvention::ExactIntensity,
                    &solver,
                    lambda_rel,
                )
                .unwrap();
                let oracle = spectrum_oracle(&object, &system.freq_axis);
                let m = metrics_against(&est, &oracle).unwrap();
                sums[i][j].0 += m.pearson_correlation;
                sums[i][j].1 += m.normalized_mse;
                if seed == 0 {
                    println!(
                        "  seed0 {name} l={lambda_rel}: pearson={:.4} nmse={:.4} iters={} {:?}",
                        m.pearson_correlation,
                        m.normalized_mse,
                        result.iterations_used,
                        t0.elapsed()
                    );
                }
            }
        }
        let cgi = cgi_reconstruct(&shots, &geo, &r2).unwrap();
        let oracle = spectrum_oracle(&object, &cgi.freqs);
        let m = metrics_against(&cgi, &oracle).unwrap();
        cgi_sum.0 += m.pearson_correlation;
        cgi_sum.1 += m.normalized_mse;
    }
    let n = n_seeds as f64;
    println!("--- means over {n_seeds} seeds ---");
    for (i, (name, _)) in modes.iter().enumerate() {
        for (j, &l) in lambdas.iter().enumerate() {
            println!(
                "{name} l={l}: pearson={:.4} nmse={:.4}",
                sums[i][j].0 / n,
                sums[i][j].1 / n
            );
        }
    }
    println!("cgi: pearson={:.4} nmse={:.4}", cgi_sum.0 / n, cgi_sum.1 / n);
    println!("total {:?}", t_all.elapsed());
}
