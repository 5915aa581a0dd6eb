// Scratch harness for sizing the simulation preset. Not part of the build.

use gics_core::*;
use std::time::Instant;

fn paper_sim_geometry(seed: u64, n: usize, pitch: f64) -> SchemeGeometry {
    let lambda = 632.8e-9;
    let source_grid = Grid1D::centered(512, 6.25e-6).unwrap();
    let source = SourceModel::new(3.0e-3, source_grid, 1.0, seed).unwrap();
    let object_grid = Grid1D::centered(n, pitch).unwrap();
    let det_pitch = SchemeGeometry::conjugate_detector_pitch(&object_grid, lambda, 0.2);
    let det = Grid1D::centered(n, det_pitch).unwrap();
    SchemeGeometry::fourier(lambda, 0.2, 0.2, source, object_grid, det, det).unwrap()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(96);
    let pitch: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(75e-6);
    let n_r2: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(16);
    let t0 = Instant::now();
    let geometry = paper_sim_geometry(1, n, pitch);
    let object = phase_slits(5, 600e-6, 600e-6, std::f64::consts::PI, &geometry.object_grid).unwrap();
    let sim = ShotSimulator::new(&geometry).unwrap();
    println!("setup: {:?}", t0.elapsed());

    let t0 = Instant::now();
    let shots = sim.simulate_batch(&object, 50, true, 0.0).unwrap();
    println!("50 shots: {:?}", t0.elapsed());

    let c = geometry.d2_grid.n_points() / 2;
    let r2: Vec<usize> = (c - n_r2 / 2..c + n_r2 - n_r2 / 2).collect();
    let t0 = Instant::now();
    let system = build_system(
        &shots,
        &geometry,
        SensingMode::Homodyne,
        &r2,
        DiagonalConvention::ExactIntensity,
    )
    .unwrap();
    println!(
        "build: {:?} rows={} cols={} union={}",
        t0.elapsed(),
        system.rows,
        system.cols,
        system.union_len()
    );

    // forward-model residual against the oracle unknown
    let t = object_spectrum(&object, &system.freq_axis);
    let b_true = HermitianSpectrum::from_spectrum(&t);
    let resid = system.residual_norm(&b_true.packed)
        / system.y.iter().map(|v| v * v).sum::<f64>().sqrt();
    println!("forward-model residual: {resid:.3e}");

    // recovery at a few lambda values
    let oracle = spectrum_oracle(&object, &system.freq_axis);
    let lambda_max = system
        .matvec_t(&system.y)
        .iter()
        .map(|v| v.abs())
        .fold(0.0_f64, f64::max);
    for lambda_rel in [0.1, 0.05, 0.02, 0.01, 0.005] {
        let t0 = Instant::now();
        let config = SolverConfig {
            lambda_reg: lambda_rel * lambda_max,
            max_iters: 2000,
            tol: 1e-9,
            nonneg_diagonal: true,
            debias: true,
        };
        let result = solve_l1(&system, &config).unwrap();
        let packing = system.packing().unwrap();
        let extracted = extract_spectrum(
            &result.x,
            &packing,
            DiagonalConvention::ExactIntensity,
            &system.freq_axis,
            Provenance::Gics { mode: "homodyne".into() },
        )
        .unwrap();
        let m = metrics_against(&extracted.estimate, &oracle).unwrap();
        println!(
            "lambda_rel={lambda_rel}: pearson={:.4} nmse={:.4} peak_err={} iters={} conv={} time={:?}",
            m.pearson_correlation,
            m.normalized_mse,
            m.peak_position_error,
            result.iterations_used,
            result.converged,
            t0.elapsed()
        );
    }

    // CGI baseline at K=50 on the same shots
    let cgi = cgi_reconstruct(&shots, &geometry, &r2).unwrap();
    let m = metrics_against(&cgi, &oracle).unwrap();
    println!("cgi K=50: pearson={:.4} nmse={:.4}", m.pearson_correlation, m.normalized_mse);
}
