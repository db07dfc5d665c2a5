//! Statistical validation of the path engine against exact finite-n moments.
//!
//! Everything here is seeded; tolerances are 4 standard errors unless the
//! quantity is exact. These finite-n identities hold at every dimension, so
//! they catch normalization and drift mistakes that limit-law comparisons
//! would blur.

use num_complex::Complex64;
use ubm_core::engine::{rescaled_grid, InitialLaw, ObservableFamily, TimeGrid};
use ubm_core::linalg::{trace_product, ComplexMatrix};
use ubm_core::oracles::{mixed_moment, statistic_hermitian_exact, statistic_pseudo_exact};
use ubm_core::stats::{
    estimate_covariances, generate_ensemble, generate_path_ensemble, mean_estimate,
    EnsembleInputs, PathEnsembleSpec,
};

const SIGMA: f64 = 4.0;

fn spec(n: usize, grid: TimeGrid, replications: usize, seed: u64) -> PathEnsembleSpec {
    PathEnsembleSpec {
        n,
        initial_law: InitialLaw::Identity,
        grid,
        replications,
        seed,
        unitarity_tol: 1e-10,
    }
}

#[test]
fn scalar_case_has_exact_heat_kernel_mean() {
    // n = 1: U_t = e^{iB_t}, so E[Tr U_t] = e^{-t/2}. The scheme composes
    // exact Gaussian phases, so only Monte Carlo noise remains.
    let t = 1.0;
    let grid = TimeGrid::new(vec![0.0, t], 0.05).unwrap();
    let ens = generate_path_ensemble(&spec(1, grid, 40_000, 31), vec![0.0, t], 1, |path| {
        Ok(vec![
            path.states[0].as_matrix().trace(),
            path.states[1].as_matrix().trace(),
        ])
    })
    .unwrap();
    let est = mean_estimate(&ens.column(1, 0), 20).unwrap();
    let oracle = (-t / 2.0).exp();
    assert!(
        (est.value.re - oracle).abs() <= SIGMA * est.se_re,
        "E[U_t] = {} vs {oracle} (se {})",
        est.value.re,
        est.se_re
    );
    assert!(est.value.im.abs() <= SIGMA * est.se_im);
}

#[test]
fn mixed_moment_matches_closed_form_at_n4() {
    let n = 4;
    let a = ComplexMatrix::identity(n);
    let t = 1.0;
    let grid = TimeGrid::new(vec![0.0, t], 0.04).unwrap();
    let aa = a.clone();
    let ens = generate_path_ensemble(&spec(n, grid, 30_000, 32), vec![0.0, t], 1, move |path| {
        let mut out = Vec::with_capacity(2);
        for (j, state) in path.states.iter().enumerate() {
            let growth = (0.5 * path.grid.times()[j]).exp();
            let v = state.as_matrix().scale(Complex64::new(growth, 0.0));
            let av = aa.mul(&v)?;
            out.push(trace_product(&av, &av)?);
        }
        Ok(out)
    })
    .unwrap();
    let est = mean_estimate(&ens.column(1, 0), 20).unwrap();
    // 4 cosh(1/4) - 16 sinh(1/4).
    let oracle = mixed_moment(&a, n, t);
    assert!(
        (est.value - oracle).norm() <= SIGMA * est.se(),
        "{} vs {oracle} (se {})",
        est.value,
        est.se()
    );
}

#[test]
fn linear_statistic_covariances_match_exact_values() {
    // Identity start: E|X_t|^2 = t Tr(AA*)/n exactly and E[X_t^2] follows
    // the companion moment at s = log(alpha t + 1).
    let n = 8;
    let alpha = 1.0;
    let t = 0.7;
    let a = ComplexMatrix::elementary(n, 0, 0).scale(Complex64::new((n as f64).sqrt(), 0.0));
    let grid = rescaled_grid(alpha, &[0.0, t], 0.05).unwrap();
    let observables = ObservableFamily::new(vec![a.clone()], alpha).unwrap();
    let inputs = EnsembleInputs {
        n,
        initial_law: InitialLaw::Identity,
        grid,
        observables,
        centered: true,
        replications: 20_000,
        seed: 33,
        unitarity_tol: 1e-10,
    };
    let ens = generate_ensemble(&inputs).unwrap();
    let stats = ens.stats(20).unwrap();
    let herm = stats.hermitian_cov[1][0][0];
    let herm_exact = statistic_hermitian_exact(&a, t).unwrap();
    assert!(
        (herm.value.re - herm_exact).abs() <= SIGMA * herm.se_re.max(1e-12),
        "herm {} vs {herm_exact}",
        herm.value.re
    );
    let pseudo = stats.pseudo_cov[1][0][0];
    let pseudo_exact = statistic_pseudo_exact(&a, n, alpha, t);
    assert!(
        (pseudo.value - pseudo_exact).norm() <= SIGMA * pseudo.se(),
        "pseudo {} vs {pseudo_exact}",
        pseudo.value
    );
}

#[test]
fn corner_entry_covariances_match_exact_values() {
    // Corner entry (0,1): Hermitian variance t exactly; the (0,1)x(1,0)
    // pseudo-covariance is -(n/alpha) sinh(s/n) at s = log(alpha t + 1).
    let n = 8;
    let p = 2;
    let alpha = 1.0;
    let t = 0.8;
    let sqrt_n = (n as f64).sqrt();
    let mats = vec![
        ComplexMatrix::elementary(n, 0, 0).scale(Complex64::new(sqrt_n, 0.0)),
        ComplexMatrix::elementary(n, 1, 0).scale(Complex64::new(sqrt_n, 0.0)),
        ComplexMatrix::elementary(n, 0, 1).scale(Complex64::new(sqrt_n, 0.0)),
        ComplexMatrix::elementary(n, 1, 1).scale(Complex64::new(sqrt_n, 0.0)),
    ];
    let grid = rescaled_grid(alpha, &[0.0, t], 0.05).unwrap();
    let observables = ObservableFamily::new(mats, alpha).unwrap();
    let inputs = EnsembleInputs {
        n,
        initial_law: InitialLaw::Identity,
        grid,
        observables,
        centered: true,
        replications: 20_000,
        seed: 34,
        unitarity_tol: 1e-10,
    };
    let ens = generate_ensemble(&inputs).unwrap();
    let stats = ens.stats(20).unwrap();
    let _ = p;
    // Statistic order (a,b): index 1 reads entry (0,1), index 2 reads (1,0).
    let herm = stats.hermitian_cov[1][1][1];
    assert!(
        (herm.value.re - t).abs() <= SIGMA * herm.se_re,
        "corner herm {} vs {t}",
        herm.value.re
    );
    let pseudo = stats.pseudo_cov[1][1][2];
    let s = (alpha * t).ln_1p();
    let pseudo_exact = -(n as f64 / alpha) * (s / n as f64).sinh();
    assert!(
        (pseudo.value - Complex64::new(pseudo_exact, 0.0)).norm() <= SIGMA * pseudo.se(),
        "corner pseudo {} vs {pseudo_exact}",
        pseudo.value
    );
}

#[test]
fn multiplicative_increments_are_stationary() {
    // For identity start, U_{t+s} U_t^* has the law of U_s:
    // E[Tr(U_{t+s} U_t^*)] = n e^{-s/2}.
    let n = 4;
    let (t, s) = (0.5, 0.75);
    let grid = TimeGrid::new(vec![0.0, t, t + s], 0.05).unwrap();
    let ens = generate_path_ensemble(
        &spec(n, grid, 40_000, 35),
        vec![0.0, t, t + s],
        1,
        move |path| {
            let u_t = path.states[1].as_matrix();
            let u_ts = path.states[2].as_matrix();
            let prod = u_ts.mul(&u_t.adjoint())?;
            Ok(vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                prod.trace(),
            ])
        },
    )
    .unwrap();
    let est = mean_estimate(&ens.column(2, 0), 20).unwrap();
    let oracle = n as f64 * (-s / 2.0).exp();
    assert!(
        (est.value.re - oracle).abs() <= SIGMA * est.se_re,
        "{} vs {oracle} (se {})",
        est.value.re,
        est.se_re
    );
    assert!(est.value.im.abs() <= SIGMA * est.se_im.max(1e-12));

    // Second moment: E|Tr(U_{t+s}U_t^*)|^2 matches E|Tr(U_s)|^2, i.e.
    // the v-moment at time s scaled by e^{-s}.
    let sq: Vec<Complex64> = ens
        .column(2, 0)
        .iter()
        .map(|z| Complex64::new(z.norm_sqr(), 0.0))
        .collect();
    let est2 = mean_estimate(&sq, 20).unwrap();
    let id = ComplexMatrix::identity(n);
    let oracle2 = (-s).exp()
        * ubm_core::oracles::v_cd(&id, &id, n, s).unwrap().re;
    assert!(
        (est2.value.re - oracle2).abs() <= SIGMA * est2.se_re,
        "{} vs {oracle2}",
        est2.value.re
    );
}

#[test]
fn weak_error_shrinks_roughly_linearly_in_the_step() {
    // At n = 8, t = 1 the statistic variance E|X_t|^2 = t picks up a
    // measurable positive bias at coarse steps (about 3.4% with two inner
    // steps); halving the step should roughly halve it.
    let n = 8;
    let t = 1.0;
    let alpha = 1.0;
    let a = ComplexMatrix::elementary(n, 0, 0).scale(Complex64::new((n as f64).sqrt(), 0.0));
    let run = |step: f64, seed: u64| {
        let grid = rescaled_grid(alpha, &[0.0, t], step).unwrap();
        let observables = ObservableFamily::new(vec![a.clone()], alpha).unwrap();
        let inputs = EnsembleInputs {
            n,
            initial_law: InitialLaw::Identity,
            grid,
            observables,
            centered: true,
            replications: 40_000,
            seed,
            unitarity_tol: 1e-10,
        };
        let ens = generate_ensemble(&inputs).unwrap();
        let stats = ens.stats(20).unwrap();
        stats.hermitian_cov[1][0][0]
    };
    let coarse = run(0.35, 36);
    let fine = run(0.175, 37);
    let bias_coarse = (coarse.value.re - t).abs();
    let bias_fine = (fine.value.re - t).abs();
    let noise = (coarse.se_re.powi(2) + fine.se_re.powi(2)).sqrt();
    // The coarse bias must be clearly visible ...
    assert!(
        bias_coarse > 3.0 * coarse.se_re,
        "calibration lost: coarse bias {bias_coarse} vs se {}",
        coarse.se_re
    );
    // ... and halving the step must reduce it by roughly half, up to noise.
    assert!(
        bias_fine <= 0.75 * bias_coarse + 2.0 * noise,
        "bias did not shrink: coarse {bias_coarse}, fine {bias_fine}, noise {noise}"
    );
}

#[test]
fn statistic_increments_are_uncorrelated() {
    // For identity start the increments of X over disjoint intervals are
    // uncorrelated in both brackets at every finite n.
    let n = 16;
    let alpha = 1.0;
    let a = ComplexMatrix::elementary(n, 0, 0).scale(Complex64::new((n as f64).sqrt(), 0.0));
    let grid = rescaled_grid(alpha, &[0.0, 0.4, 0.9, 1.6], 0.05).unwrap();
    let observables = ObservableFamily::new(vec![a], alpha).unwrap();
    let inputs = EnsembleInputs {
        n,
        initial_law: InitialLaw::Identity,
        grid,
        observables,
        centered: true,
        replications: 20_000,
        seed: 40,
        unitarity_tol: 1e-10,
    };
    let ens = generate_ensemble(&inputs).unwrap();
    let report = ubm_core::stats::increment_independence_check(&ens, 0, (1, 2, 3)).unwrap();
    assert!(report.passes(), "{report:?}");
}

#[test]
fn haar_start_is_stationary_for_linear_statistics() {
    // Under a Haar start, E|Tr(A U_t)|^2 = Tr(A A*)/n for every t.
    let n = 16;
    let t = 0.5;
    let a = ComplexMatrix::elementary(n, 0, 0).scale(Complex64::new((n as f64).sqrt(), 0.0));
    let grid = TimeGrid::new(vec![0.0, t], 0.05).unwrap();
    let mut sp = spec(n, grid, 20_000, 38);
    sp.initial_law = InitialLaw::Haar;
    let aa = a.clone();
    let ens = generate_path_ensemble(&sp, vec![0.0, t], 1, move |path| {
        let tr0 = trace_product(&aa, path.states[0].as_matrix())?;
        let tr1 = trace_product(&aa, path.states[1].as_matrix())?;
        Ok(vec![tr0, tr1])
    })
    .unwrap();
    let q = trace_product(&a, &a.adjoint()).unwrap().re / n as f64;
    for j in 0..2 {
        let rows: Vec<Vec<Complex64>> = ens.column(j, 0).iter().map(|&z| vec![z]).collect();
        let cov = estimate_covariances(&rows, 20).unwrap();
        let h = cov.hermitian[0][0];
        assert!(
            (h.value.re - q).abs() <= SIGMA * h.se_re,
            "time {j}: {} vs {q}",
            h.value.re
        );
    }
}

#[test]
fn long_path_states_stay_unitary_at_large_dimension() {
    let n = 200;
    let grid = TimeGrid::new(vec![0.0, 0.7], 0.1).unwrap();
    let mut rng = ubm_core::samplers::RngStream::new(39, 0);
    let path = ubm_core::engine::simulate_path(n, &InitialLaw::Permutation, &grid, &mut rng).unwrap();
    for state in &path.states {
        assert!(state.as_matrix().unitary_defect() <= 1e-10);
    }
}
