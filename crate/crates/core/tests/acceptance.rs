//! Acceptance suite: one test per shipping criterion, each printing a
//! single PASS/FAIL line with the measured quantities.  These are the
//! checks a release is gated on; tolerances are pinned here and must not
//! be loosened without revisiting the underlying analysis.

use rayon::prelude::*;

use contcount::binning::{
    bin_factor, build_rhat, perturbation_params, validate_perturbation, PerturbationMode,
};
use contcount::coeffs::{bf_all_dft, bf_closed, GroupAlgebraFactors};
use contcount::factorization::{
    build_c, error_metrics, materialize_l, materialize_r, norm_formula, sqrt_baseline,
};
use contcount::linalg::spectral_norm;
use contcount::matrix::{exact_norms, DenseMatrix};
use contcount::streaming::{
    mechanism_init, run_stream, MechanismConfig, MechanismPlan, NoiseMode, SensitivityMode,
};
use contcount::verify::{
    block_inverse_norms, check_default, toeplitz_inverse, LemmaId,
};

fn report(criterion: u32, name: &str, passed: bool, details: &str) {
    println!(
        "acceptance {criterion:>2} [{}] {name}: {details}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {criterion} ({name}) failed: {details}");
}

const POW2_GRID: [usize; 9] = [1, 2, 4, 8, 16, 32, 64, 128, 256];

#[test]
fn criterion_01_factorization_exactness() {
    let worst = POW2_GRID
        .par_iter()
        .map(|&n| {
            let factors = GroupAlgebraFactors::closed_form(n).unwrap();
            let l = materialize_l(&factors).unwrap();
            let r = materialize_r(&factors).unwrap();
            let m = DenseMatrix::prefix_target(n);
            let frob = l.matmul(&r).unwrap().sub(&m).unwrap().frobenius_norm();
            (frob / n as f64, n)
        })
        .reduce(|| (0.0, 0), |a, b| if a.0 >= b.0 { a } else { b });
    report(
        1,
        "factorization exactness",
        worst.0 < 1e-9,
        &format!("max ||L*R - M||_F / n = {:.3e} at n = {}", worst.0, worst.1),
    );
}

#[test]
fn criterion_02_norm_formula_agreement() {
    // Dense agreement on the power-of-two grid, with the two exact anchors.
    let mut worst_diff = (0.0f64, 0usize);
    for &n in &POW2_GRID {
        let factors = GroupAlgebraFactors::closed_form(n).unwrap();
        let l = materialize_l(&factors).unwrap();
        let r = materialize_r(&factors).unwrap();
        let formula = norm_formula(n);
        let d = (exact_norms(&l).max_row_sq - formula)
            .abs()
            .max((exact_norms(&r).max_col_sq - formula).abs());
        if d > worst_diff.0 {
            worst_diff = (d, n);
        }
    }
    let anchors_ok = norm_formula(1) == 1.0
        && (norm_formula(2) - (0.5 + std::f64::consts::SQRT_2 / 2.0)).abs() < 1e-15;

    // Formula-only logarithmic bound: exhaustive to 4096, then all powers
    // of two plus a geometric sample up to 2^20 (the formula varies
    // smoothly, so the sample covers the range).
    let mut ns: Vec<usize> = (2..=4096).collect();
    ns.extend((13..=20).map(|k| 1usize << k));
    let mut g = 4096.0f64;
    while g < (1 << 20) as f64 {
        g *= 1.0187;
        ns.push(g as usize);
    }
    ns.sort_unstable();
    ns.dedup();
    let bound_worst = ns
        .par_iter()
        .map(|&n| {
            let margin = norm_formula(n) - (1.0 + (n as f64).ln() / std::f64::consts::PI);
            (margin, n)
        })
        .reduce(|| (f64::NEG_INFINITY, 0), |a, b| if a.0 >= b.0 { a } else { b });
    let passed = worst_diff.0 < 1e-9 && anchors_ok && bound_worst.0 < 0.0;
    report(
        2,
        "norm formula agreement",
        passed,
        &format!(
            "max |exact - formula| = {:.3e} at n = {}; anchors ok = {anchors_ok}; \
             max formula - (1 + ln(n)/pi) = {:.3e} at n = {} over {} values",
            worst_diff.0,
            worst_diff.1,
            bound_worst.0,
            bound_worst.1,
            ns.len()
        ),
    );
}

#[test]
fn criterion_03_cross_route_agreement() {
    let worst = (1usize..=512)
        .into_par_iter()
        .map(|n| {
            let factors = bf_all_dft(n).unwrap();
            let b = factors.b();
            let wrap = 2 * n;
            let mut cross = 0.0f64;
            for t in -(n as i64)..n as i64 {
                let closed = bf_closed(n, t).unwrap();
                let spectral = b[(-t).rem_euclid(wrap as i64) as usize];
                cross = cross.max((closed - spectral).abs());
            }
            (cross, factors.max_imag_residue(), n)
        })
        .reduce(
            || (0.0, 0.0, 0),
            |a, b| (a.0.max(b.0), a.1.max(b.1), if a.0 >= b.0 { a.2 } else { b.2 }),
        );
    report(
        3,
        "cross-route agreement",
        worst.0 < 1e-9 && worst.1 < 1e-9,
        &format!(
            "max |closed - spectral| = {:.3e} (worst n = {}), max imag residue = {:.3e}, n <= 512",
            worst.0, worst.2, worst.1
        ),
    );
}

#[test]
fn criterion_04_coefficient_structure() {
    let worst = (1usize..=512)
        .into_par_iter()
        .map(|n| {
            [LemmaId::L3, LemmaId::L4, LemmaId::L5]
                .iter()
                .map(|&l| {
                    let r = check_default(l, n).unwrap();
                    assert!(r.passed, "{l} at n = {n}: margin {}", r.worst_margin);
                    r.worst_margin
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    report(
        4,
        "monotonicity / bounds / last-row structure",
        worst <= 1e-12,
        &format!("zero violations for n <= 512; worst margin {worst:.3e}"),
    );
}

#[test]
fn criterion_05_square_root_equivalence() {
    let worst = (1usize..=128)
        .into_par_iter()
        .map(|n| {
            let factors = GroupAlgebraFactors::closed_form(n).unwrap();
            let l = materialize_l(&factors).unwrap();
            let c = build_c(n).unwrap();
            let e = DenseMatrix::ones(n, n);
            let two_m_minus_e = DenseMatrix::prefix_target(n).scale(2.0).sub(&e).unwrap();
            let cc = c.matmul(&c).unwrap().sub(&two_m_minus_e).unwrap().frobenius_norm();
            let half_e = e.scale(0.5 / (n as f64).sqrt());
            let b1 = l
                .block(0, n, 0, n)
                .sub(&half_e.add(&c.scale(0.5)).unwrap())
                .unwrap()
                .max_abs();
            let b2 = l
                .block(0, n, n, 2 * n)
                .sub(&half_e.sub(&c.scale(0.5)).unwrap())
                .unwrap()
                .max_abs();
            (cc, b1.max(b2))
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    report(
        5,
        "square-root equivalence",
        worst.0 < 1e-8 && worst.1 < 1e-10,
        &format!(
            "max ||C*C - (2M - E)||_F = {:.3e}, max block deviation = {:.3e}, n <= 128",
            worst.0, worst.1
        ),
    );
}

#[test]
fn criterion_06_inverse_norm_facts() {
    let results: Vec<(f64, f64, f64)> = (2usize..=256)
        .into_par_iter()
        .map(|n| {
            let (inv1, inv2) = block_inverse_norms(n).unwrap();
            let ti = toeplitz_inverse(n).unwrap();
            let q = ti.matrix();
            let c_inv_norm = spectral_norm(&q);
            let total: f64 = (0..n).map(|i| q.row(i).iter().sum::<f64>()).sum();
            let quad_margin = 1.02 * (n as f64).sqrt() - total;
            (inv1.max(inv2), c_inv_norm, quad_margin)
        })
        .collect();
    let chi_max = results.iter().fold(0.0f64, |m, r| m.max(r.0));
    let c_inv_max = results.iter().fold(0.0f64, |m, r| m.max(r.1));
    let quad_worst = results.iter().fold(f64::NEG_INFINITY, |m, r| m.max(r.2));
    if chi_max > 19.0 {
        // Informally observed ceiling; flag, don't fail.
        println!("acceptance  6 [NOTE] empirical block inverse norm {chi_max:.3} exceeds 19");
    }
    let f0 = check_default(LemmaId::F0, 256).unwrap();
    let passed = chi_max <= 250.0 && c_inv_max <= 3.0 && quad_worst <= 0.0 && f0.worst_margin <= 1e-14;
    report(
        6,
        "inverse-norm facts",
        passed,
        &format!(
            "max ||L_i^-1||_2 = {chi_max:.3} (bound 250), max ||C^-1||_2 = {c_inv_max:.3} \
             (bound 3), worst 1.02*sqrt(n) - e^T C^-1 e = {quad_worst:.3e}, \
             partial-sum identity margin = {:.1e}, n in [2, 256]",
            f0.worst_margin
        ),
    );
}

#[test]
fn criterion_07_error_inflation() {
    let cases: Vec<(usize, f64)> = [8usize, 16, 32, 64, 128]
        .iter()
        .flat_map(|&n| [0.1, 0.5, 1.0].iter().map(move |&z| (n, z)))
        .collect();
    let worst = cases
        .par_iter()
        .map(|&(n, zeta)| {
            let factors = GroupAlgebraFactors::closed_form(n).unwrap();
            let params = perturbation_params(&factors, zeta, PerturbationMode::Exact).unwrap();
            let binned = bin_factor(&factors, &params).unwrap();
            let l = materialize_l(&factors).unwrap();
            let r = materialize_r(&factors).unwrap();
            let lhat = binned.dense().unwrap();
            let rhat = build_rhat(&l, &lhat, &r).unwrap();
            let perturb = validate_perturbation(&l, &lhat, params.eta, params.mu).unwrap();
            let base = error_metrics(&l, &r).unwrap();
            let got = error_metrics(&lhat, &rhat).unwrap();
            let ratio_margin = (got.max_se / base.max_se - (1.0 + zeta))
                .max(got.mean_se / base.mean_se - (1.0 + zeta));
            (ratio_margin, perturb.max_violation)
        })
        .reduce(
            || (f64::NEG_INFINITY, f64::NEG_INFINITY),
            |a, b| (a.0.max(b.0), a.1.max(b.1)),
        );
    report(
        7,
        "error inflation within 1 + zeta",
        worst.0 <= 0.0 && worst.1 <= 0.0,
        &format!(
            "worst ratio - (1 + zeta) = {:.3e}, worst perturbation violation = {:.3e}, \
             zeta in {{0.1, 0.5, 1.0}}, n in {{8..128}}",
            worst.0, worst.1
        ),
    );
}

#[test]
fn criterion_08_bin_count_scaling() {
    let mut all_ok = true;
    let mut max_const = 0.0f64;
    let mut counts = Vec::new();
    for k in 8..=14 {
        let n = 1usize << k;
        let zeta = 0.5;
        let factors = GroupAlgebraFactors::closed_form(n).unwrap();
        let params = perturbation_params(&factors, zeta, PerturbationMode::Bound).unwrap();
        let binned = bin_factor(&factors, &params).unwrap();
        let count = binned.segment_count();
        let budget = (1.0 / params.mu).ln() / (1.0 + 2.0 * params.eta).ln();
        let allowed = 3.0 * (budget + 1.0);
        all_ok &= (count as f64) <= allowed;
        let scale = (n as f64).sqrt() * (n as f64).ln().powf(1.5);
        max_const = max_const.max(count as f64 / scale);
        counts.push(format!("n=2^{k}:{count}"));
    }
    report(
        8,
        "bin-count scaling (bound mode)",
        all_ok,
        &format!(
            "per-row counts within 3(log(1/mu)/log(1+2eta)+1); count/(sqrt(n) ln(n)^1.5) \
             <= {max_const:.3}; {}",
            counts.join(" ")
        ),
    );
}

#[test]
fn criterion_09_streaming_correctness() {
    // (a) zero noise reproduces exact prefix sums, both noise sources.
    let mut exact_ok = true;
    for n in [1usize, 2, 3, 4, 8, 16] {
        let inputs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.61).cos()).collect();
        let mut truth = Vec::with_capacity(n);
        let mut acc = 0.0;
        for &x in &inputs {
            acc += x;
            truth.push(acc);
        }
        for mode in [NoiseMode::Reference, NoiseMode::Streaming] {
            let config = MechanismConfig {
                n,
                zeta: 0.5,
                noise_multiplier: 0.0,
                sensitivity_mode: SensitivityMode::ExactRhat,
                noise_mode: mode,
                seed: 1,
            };
            exact_ok &= run_stream(&inputs, &config).unwrap() == truth;
        }
    }

    // (b) reference and streaming noise sources agree step by step.
    let mut ns: Vec<usize> = (1..=16).collect();
    ns.extend([31, 32, 33, 63, 64, 65, 100, 127, 128, 129, 255, 256, 257, 511, 512, 513,
        1000, 1023, 1024, 1025, 2048, 4095, 4096]);
    let mode_worst = ns
        .par_iter()
        .map(|&n| {
            // Dense sensitivity only at desk scale; the closed-form bound
            // covers the larger lengths without dense matrices.
            let sens = if n <= 512 {
                SensitivityMode::ExactRhat
            } else {
                SensitivityMode::NormBound
            };
            let inputs: Vec<f64> = (0..n).map(|i| ((i % 3) as f64) - 1.0).collect();
            let config = MechanismConfig {
                n,
                zeta: 0.5,
                noise_multiplier: 2.0,
                sensitivity_mode: sens,
                noise_mode: NoiseMode::Streaming,
                seed: 99,
            };
            let plan = MechanismPlan::new(&config).unwrap();
            let mut reference = plan.stream(NoiseMode::Reference, config.seed);
            let mut streaming = plan.stream(NoiseMode::Streaming, config.seed);
            inputs
                .iter()
                .map(|&x| {
                    let a = reference.step(x).unwrap();
                    let b = streaming.step(x).unwrap();
                    (a - b).abs()
                })
                .fold(0.0f64, f64::max)
        })
        .reduce(|| 0.0, f64::max);

    // (c) empirical per-step RMSE against the dense per-row noise std.
    let n = 32;
    let config = MechanismConfig {
        n,
        zeta: 0.5,
        noise_multiplier: 1.0,
        sensitivity_mode: SensitivityMode::ExactRhat,
        noise_mode: NoiseMode::Streaming,
        seed: 2024,
    };
    let plan = MechanismPlan::new(&config).unwrap();
    let factors = GroupAlgebraFactors::closed_form(n).unwrap();
    let params = perturbation_params(&factors, config.zeta, PerturbationMode::Exact).unwrap();
    let binned = bin_factor(&factors, &params).unwrap();
    let scale = config.noise_multiplier * plan.sensitivity();
    let trials = 10_000usize;
    let inputs = vec![1.0; n];
    let result = contcount::streaming::empirical_error(&config, trials, &inputs).unwrap();
    let mut rmse_worst = 0.0f64;
    for i in 0..n {
        let row = binned.row_dense(i);
        let expected = scale * row.iter().map(|x| x * x).sum::<f64>().sqrt();
        let got = result.per_step_mse[i].sqrt();
        rmse_worst = rmse_worst.max((got / expected - 1.0).abs());
    }

    report(
        9,
        "streaming correctness",
        exact_ok && mode_worst <= 1e-9 && rmse_worst <= 0.05,
        &format!(
            "zero-noise exact = {exact_ok}; max |reference - streaming| = {mode_worst:.3e} \
             (n <= 4096); worst relative RMSE error = {rmse_worst:.4} over {trials} trials"
        ),
    );
}

#[test]
fn criterion_10_streaming_resources() {
    let mut reals_ok = true;
    let mut regen_ok = true;
    let mut detail = String::new();
    for n in [2usize, 16, 64, 256, 1024] {
        let config = MechanismConfig {
            n,
            zeta: 0.5,
            noise_multiplier: 1.0,
            sensitivity_mode: if n <= 256 {
                SensitivityMode::ExactRhat
            } else {
                SensitivityMode::NormBound
            },
            noise_mode: NoiseMode::Streaming,
            seed: 5,
        };
        let mut state = mechanism_init(&config).unwrap();
        let segments = state.segment_count();
        reals_ok &= state.resident_reals() <= 4 * segments;
        for _ in 0..n {
            state.step(1.0).unwrap();
            regen_ok &= state.regens_last_step() <= 2 * segments + 1;
        }
        if n == 1024 {
            detail = format!(
                "n=1024: {} resident reals for {} segments, <= {} regens/step",
                state.resident_reals(),
                segments,
                2 * segments + 1
            );
        }
    }
    report(
        10,
        "streaming resource contract",
        reals_ok && regen_ok,
        &format!("resident reals <= 4*segments and regens <= 2*segments + 1; {detail}"),
    );
}

#[test]
fn criterion_11_baseline_comparison() {
    let n = 1024;
    let factors = GroupAlgebraFactors::closed_form(n).unwrap();
    let l = materialize_l(&factors).unwrap();
    let r = materialize_r(&factors).unwrap();
    let group = error_metrics(&l, &r).unwrap().max_se;
    let c = sqrt_baseline(n).unwrap();
    let square_root = error_metrics(&c, &c).unwrap().max_se;
    let trivial = (n as f64).sqrt();
    report(
        11,
        "baseline ordering",
        group < square_root && square_root < trivial,
        &format!(
            "n = 1024: MaxSE group-algebra {group:.6} < square-root {square_root:.6} \
             < trivial sqrt(n) {trivial:.4}"
        ),
    );
}
