//! Named experiments: each preset runs one family of ensembles and compares
//! the estimates against the matching closed-form or limit oracles.
//!
//! Presets and what they check:
//! - `theorem-main`: covariance and pseudo-covariance of the rescaled linear
//!   statistic for identity start across the three time-scale regimes.
//! - `corner-regimes`: the Hermitian/skew split of principal corners across
//!   the same regimes.
//! - `permutation-corner`: corners under a uniform-permutation start become
//!   standard complex matrix Brownian motion.
//! - `poisson-trace`: fixed-point counts vs Poisson(1) plus the trace
//!   process around its start.
//! - `haar-gaussian`: joint Gaussianity of linear statistics of a Haar
//!   unitary.
//! - `haar-entries`: normality of sqrt(n)-scaled single entries under Haar.
//! - `moment-oracles`: Monte Carlo agreement with the exact finite-n moment
//!   formulas and the Haar/permutation moment bounds.

use std::time::Instant;

use num_complex::Complex64;

use crate::engine::{InitialLaw, ObservableFamily, TimeGrid};
use crate::error::{Result, UbmError};
use crate::linalg::{trace_product, ComplexMatrix};
use crate::oracles::{
    corner_limit_covariance, f_alpha, haar_moment_fourth_bound, haar_moment_second,
    limit_covariance, mixed_moment, permutation_trace_bounds, u_cd, v_cd, Alpha, LimitData,
};
use crate::report::{EstimateBlock, MomentReport, RunRecord};
use crate::samplers::{random_permutation, RngStream};
use crate::scenario::{
    InitialLawTag, ObservablePreset, PartialScenario, Scenario,
};
use crate::stats::{
    batch_estimate, estimate_covariances, gaussianity_test_with, generate_ensemble,
    generate_path_ensemble, mean_estimate, BatchEstimate, Ensemble, EnsembleInputs,
    EnsembleStats, PathEnsembleSpec,
};
use crate::tol;

pub const PRESET_NAMES: &[&str] = &[
    "theorem-main",
    "corner-regimes",
    "permutation-corner",
    "poisson-trace",
    "haar-gaussian",
    "haar-entries",
    "moment-oracles",
];

/// Sigma threshold for Monte Carlo verdicts; `UBM_TOL_SIGMA` overrides the
/// default.
pub fn sigma_threshold() -> f64 {
    std::env::var("UBM_TOL_SIGMA")
        .ok()
        .and_then(|v| v.parse::<f64>().ok())
        .filter(|v| *v > 0.0)
        .unwrap_or(tol::DEFAULT_SIGMA)
}

/// Runs a named preset with optional overrides of the base scenario
/// (dimension, replication count, seed, step cap, observation times).
/// Structural fields (initial law, observable family, the alpha sweep) are
/// fixed by the preset itself.
pub fn run_preset(name: &str, overrides: &PartialScenario) -> Result<RunRecord> {
    let started = Instant::now();
    let mut record = match name {
        "theorem-main" => theorem_main(overrides)?,
        "corner-regimes" => corner_regimes(overrides)?,
        "permutation-corner" => permutation_corner(overrides)?,
        "poisson-trace" => poisson_trace(overrides)?,
        "haar-gaussian" => haar_gaussian(overrides)?,
        "haar-entries" => haar_entries(overrides)?,
        "moment-oracles" => moment_oracles(overrides)?,
        other => return Err(UbmError::UnknownPreset(other.to_string())),
    };
    record.preset = name.to_string();
    record.artifact_version = env!("CARGO_PKG_VERSION").to_string();
    record.wall_clock_seconds = started.elapsed().as_secs_f64();
    Ok(record)
}

fn base_record(scenario: Scenario) -> RunRecord {
    RunRecord {
        preset: String::new(),
        artifact_version: String::new(),
        scenario,
        reports: Vec::new(),
        estimates: Vec::new(),
        wall_clock_seconds: 0.0,
    }
}

fn scenario_base(
    n: usize,
    law: InitialLawTag,
    alpha_n: f64,
    times: &[f64],
    step_cap: f64,
    replications: usize,
    observable: ObservablePreset,
    centered: bool,
    seed: u64,
) -> Scenario {
    Scenario {
        n,
        initial_law: law,
        alpha_n,
        outer_times: std::iter::once(0.0).chain(times.iter().copied()).collect(),
        step_cap,
        replications,
        observable_preset: observable,
        seed,
        centered,
        unitarity_tol: tol::UNITARY_FRO,
    }
}

fn inputs_with(
    scenario: &Scenario,
    alpha_n: f64,
    observables: ObservableFamily,
    seed_offset: u64,
) -> Result<EnsembleInputs> {
    let grid = crate::engine::rescaled_grid(alpha_n, &scenario.outer_times, scenario.step_cap)?;
    Ok(EnsembleInputs {
        n: scenario.n,
        initial_law: scenario.initial_law.to_law(),
        grid,
        observables,
        centered: scenario.centered,
        replications: scenario.replications,
        seed: scenario.seed.wrapping_add(seed_offset),
        unitarity_tol: scenario.unitarity_tol,
    })
}

/// The three time-scale regimes exercised by the sweep presets: the sequence
/// value alpha_n and the limit tag it converges to.
fn regime_sweep(n: usize) -> Vec<(f64, Alpha, &'static str)> {
    vec![
        (1.0 / n as f64, Alpha::Zero, "alpha=1/n"),
        (1.0, Alpha::Finite(1.0), "alpha=1"),
        (n as f64, Alpha::Infinity, "alpha=n"),
    ]
}

fn sqrt_n_elementary(n: usize, i: usize, j: usize) -> ComplexMatrix {
    ComplexMatrix::elementary(n, i, j).scale(Complex64::new((n as f64).sqrt(), 0.0))
}

// ---------------------------------------------------------------------------
// theorem-main
// ---------------------------------------------------------------------------

fn theorem_main(overrides: &PartialScenario) -> Result<RunRecord> {
    let base = scenario_base(
        128,
        InitialLawTag::Identity,
        1.0,
        &[0.5, 1.0, 2.0],
        0.05,
        10_000,
        ObservablePreset::Identity,
        true,
        1,
    );
    let scenario = overrides.apply_to(&base)?;
    let sigma = sigma_threshold();
    let n = scenario.n;
    let mut record = base_record(scenario.clone());

    // Observables with their limit data: (label, matrix, a, p).
    // q = 1 for all three.
    let families: Vec<(&str, ComplexMatrix, Complex64, Complex64)> = vec![
        (
            "A=sqrt(n)E11",
            sqrt_n_elementary(n, 0, 0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ),
        (
            "A=sqrt(n)E12",
            sqrt_n_elementary(n, 0, 1),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ),
        (
            "A=I",
            ComplexMatrix::identity(n),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ),
    ];

    for (sweep_idx, (alpha_n, alpha_tag, alpha_label)) in regime_sweep(n).into_iter().enumerate() {
        let matrices: Vec<ComplexMatrix> = families.iter().map(|f| f.1.clone()).collect();
        let observables = ObservableFamily::new(matrices, alpha_n)?;
        let inputs = inputs_with(&scenario, alpha_n, observables, sweep_idx as u64)?;
        let ens = generate_ensemble(&inputs)?;
        let stats = ens.stats(tol::DEFAULT_BATCHES)?;

        for (l, (label, _, a_lim, p_lim)) in families.iter().enumerate() {
            let data = LimitData::new(
                vec![*a_lim],
                ComplexMatrix::identity(1).scale(*p_lim),
                ComplexMatrix::identity(1),
                alpha_tag,
            )?;
            for (j, &t) in stats.times.iter().enumerate().skip(1) {
                let (herm_oracle, pseudo_oracle) = limit_covariance(&data, t, t)?;
                record.reports.push(MomentReport::limit_law(
                    format!("hermitian|{label}|{alpha_label}"),
                    t,
                    stats.hermitian_cov[j][l][l],
                    herm_oracle.get(0, 0),
                    sigma,
                    tol::LIMIT_LAW_REL,
                ));
                record.reports.push(MomentReport::limit_law(
                    format!("pseudo|{label}|{alpha_label}"),
                    t,
                    stats.pseudo_cov[j][l][l],
                    pseudo_oracle.get(0, 0),
                    sigma,
                    tol::LIMIT_LAW_REL,
                ));
            }
        }
        record.estimates.push(EstimateBlock {
            label: format!("theorem-main|{alpha_label}"),
            stats,
        });
    }
    Ok(record)
}

// ---------------------------------------------------------------------------
// corner-regimes
// ---------------------------------------------------------------------------

/// Per-replication squared Frobenius norms of the Hermitian and
/// skew-Hermitian parts of the p x p corner at one grid time.
fn corner_split_norms(
    ens: &Ensemble,
    p: usize,
    time_idx: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut herm = Vec::with_capacity(ens.replications);
    let mut skew = Vec::with_capacity(ens.replications);
    for r in 0..ens.replications {
        let m = |a: usize, b: usize| ens.value(r, time_idx, a * p + b);
        let mut h2 = 0.0;
        let mut s2 = 0.0;
        for a in 0..p {
            for b in 0..p {
                let x = m(a, b);
                let y = m(b, a).conj();
                h2 += ((x + y) * 0.5).norm_sqr();
                s2 += ((x - y) * 0.5).norm_sqr();
            }
        }
        herm.push(h2);
        skew.push(s2);
    }
    (herm, skew)
}

fn corner_regimes(overrides: &PartialScenario) -> Result<RunRecord> {
    let p = 2usize;
    let base = scenario_base(
        128,
        InitialLawTag::Identity,
        1.0,
        &[0.5, 1.0, 2.0],
        0.05,
        10_000,
        ObservablePreset::ElementaryCorner { p },
        true,
        2,
    );
    let scenario = overrides.apply_to(&base)?;
    let p = match scenario.observable_preset {
        ObservablePreset::ElementaryCorner { p } => p,
        _ => p,
    };
    let sigma = sigma_threshold();
    let n = scenario.n;
    let mut record = base_record(scenario.clone());

    for (sweep_idx, (alpha_n, alpha_tag, alpha_label)) in regime_sweep(n).into_iter().enumerate() {
        let observables = scenario.build_observables_with_alpha(alpha_n)?;
        let inputs = inputs_with(&scenario, alpha_n, observables, sweep_idx as u64)?;
        let ens = generate_ensemble(&inputs)?;
        let stats = ens.stats(tol::DEFAULT_BATCHES)?;

        // Entrywise covariances of entry (0,1) against the corner limit law.
        let l01 = 1usize; // statistic index of corner entry (0, 1)
        let l10 = p; // statistic index of corner entry (1, 0)
        for (j, &t) in stats.times.iter().enumerate().skip(1) {
            let (herm_oracle, _) = corner_limit_covariance(alpha_tag, t, (0, 1, 0, 1));
            record.reports.push(MomentReport::limit_law(
                format!("corner_entry_hermitian|(0,1)|{alpha_label}"),
                t,
                stats.hermitian_cov[j][l01][l01],
                herm_oracle,
                sigma,
                tol::LIMIT_LAW_REL,
            ));
            let (_, pseudo_oracle) = corner_limit_covariance(alpha_tag, t, (0, 1, 1, 0));
            record.reports.push(MomentReport::limit_law(
                format!("corner_entry_pseudo|(0,1)x(1,0)|{alpha_label}"),
                t,
                stats.pseudo_cov[j][l01][l10],
                pseudo_oracle,
                sigma,
                tol::LIMIT_LAW_REL,
            ));

            // Hermitian-to-skew variance ratio against (t - f)/(t + f),
            // with f evaluated at the finite sequence value alpha_n.
            let f_n = f_alpha(Alpha::Finite(alpha_n), t);
            let ratio_oracle = (t - f_n) / (t + f_n);
            let (h2, s2) = corner_split_norms(&ens, p, j);
            let ratio = batch_estimate(ens.replications, tol::DEFAULT_BATCHES, |range| {
                let hs: f64 = range.clone().map(|r| h2[r]).sum();
                let ss: f64 = range.map(|r| s2[r]).sum();
                Complex64::new(hs / ss.max(f64::MIN_POSITIVE), 0.0)
            })?;
            if matches!(alpha_tag, Alpha::Zero) {
                // Small-scale regime: the Hermitian part is a vanishing
                // fraction of the skew part.
                if (t - 1.0).abs() < 1e-12 {
                    record.reports.push(MomentReport::upper_bound(
                        format!("corner_herm_skew_ratio_bound|{alpha_label}"),
                        t,
                        ratio.value.re,
                        0.05,
                    ));
                }
            } else {
                record.reports.push(MomentReport::limit_law(
                    format!("corner_herm_skew_ratio|{alpha_label}"),
                    t,
                    ratio,
                    Complex64::new(ratio_oracle, 0.0),
                    sigma,
                    tol::LIMIT_LAW_REL,
                ));
            }
        }
        record.estimates.push(EstimateBlock {
            label: format!("corner-regimes|{alpha_label}"),
            stats,
        });
    }
    Ok(record)
}

// ---------------------------------------------------------------------------
// permutation-corner
// ---------------------------------------------------------------------------

fn permutation_corner(overrides: &PartialScenario) -> Result<RunRecord> {
    let p = 2usize;
    let base = scenario_base(
        128,
        InitialLawTag::Permutation,
        1.0,
        &[0.5, 1.0],
        0.05,
        10_000,
        ObservablePreset::ElementaryCorner { p },
        false,
        3,
    );
    let scenario = overrides.apply_to(&base)?;
    let sigma = sigma_threshold();
    let n = scenario.n;
    let mut record = base_record(scenario.clone());

    let inputs = scenario.to_inputs()?;
    let ens = generate_ensemble(&inputs)?;
    let stats = ens.stats(tol::DEFAULT_BATCHES)?;

    // The limit is an independent family of standard complex Brownian
    // motions started from the (vanishing) time-zero corner, so the
    // increments from t = 0 carry the law.
    let l01 = 1usize;
    let l10 = p;
    for (j, &t) in stats.times.iter().enumerate().skip(1) {
        let incr: Vec<Vec<Complex64>> = (0..ens.replications)
            .map(|r| {
                vec![
                    ens.value(r, j, l01) - ens.value(r, 0, l01),
                    ens.value(r, j, l10) - ens.value(r, 0, l10),
                ]
            })
            .collect();
        let cov = estimate_covariances(&incr, tol::DEFAULT_BATCHES)?;
        record.reports.push(MomentReport::limit_law(
            "corner_increment_hermitian|(0,1)",
            t,
            cov.hermitian[0][0],
            Complex64::new(t, 0.0),
            sigma,
            tol::LIMIT_LAW_REL,
        ));
        record.reports.push(MomentReport::monte_carlo(
            "corner_increment_pseudo|(0,1)",
            t,
            cov.pseudo[0][0],
            Complex64::new(0.0, 0.0),
            sigma,
        ));
        record.reports.push(MomentReport::monte_carlo(
            "corner_increment_cross_hermitian|(0,1)x(1,0)",
            t,
            cov.hermitian[0][1],
            Complex64::new(0.0, 0.0),
            sigma,
        ));
        record.reports.push(MomentReport::monte_carlo(
            "corner_increment_cross_pseudo|(0,1)x(1,0)",
            t,
            cov.pseudo[0][1],
            Complex64::new(0.0, 0.0),
            sigma,
        ));
    }

    // The time-zero corner entry vanishes in probability: it is nonzero
    // exactly when the sampled permutation hits that entry, probability 1/n.
    let nonzero: Vec<Complex64> = (0..ens.replications)
        .map(|r| {
            let x = ens.value(r, 0, l01);
            Complex64::new(f64::from(x.norm() > 0.0), 0.0)
        })
        .collect();
    let frac = mean_estimate(&nonzero, tol::DEFAULT_BATCHES)?;
    record.reports.push(MomentReport::monte_carlo(
        "corner_start_nonzero_fraction|(0,1)",
        0.0,
        frac,
        Complex64::new(1.0 / n as f64, 0.0),
        sigma,
    ));

    record.estimates.push(EstimateBlock {
        label: "permutation-corner".into(),
        stats,
    });
    Ok(record)
}

// ---------------------------------------------------------------------------
// poisson-trace
// ---------------------------------------------------------------------------

fn poisson_trace(overrides: &PartialScenario) -> Result<RunRecord> {
    let base = scenario_base(
        500,
        InitialLawTag::Permutation,
        1.0,
        &[0.5, 1.0],
        0.1,
        4_000,
        ObservablePreset::Identity,
        false,
        4,
    );
    let scenario = overrides.apply_to(&base)?;
    let sigma = sigma_threshold();
    let n = scenario.n;
    let mut record = base_record(scenario.clone());

    // Part one: fixed-point counts of uniform permutations against
    // Poisson(1) in total variation.
    const TV_SAMPLES: usize = 100_000;
    let counts: Vec<usize> = (0..TV_SAMPLES)
        .map(|rep| {
            let mut rng = RngStream::new(scenario.seed.wrapping_add(0x5eed), rep as u64);
            let perm = random_permutation(n, &mut rng);
            perm.iter().enumerate().filter(|(i, &v)| *i == v).count()
        })
        .collect();
    let fit = crate::stats::poisson_fit(&counts)?;
    record.reports.push(MomentReport::upper_bound(
        "fixed_point_tv_vs_poisson1",
        0.0,
        fit.tv_distance,
        0.02,
    ));

    // Part two: the centered trace process Tr(V_{log(t+1)}) - Tr(V_0).
    let inputs = scenario.to_inputs()?;
    let ens = generate_ensemble(&inputs)?;
    let stats = ens.stats(tol::DEFAULT_BATCHES)?;
    for (j, &t) in stats.times.iter().enumerate().skip(1) {
        let incr: Vec<Complex64> = (0..ens.replications)
            .map(|r| ens.value(r, j, 0) - ens.value(r, 0, 0))
            .collect();
        let rows: Vec<Vec<Complex64>> = incr.iter().map(|&z| vec![z]).collect();
        let cov = estimate_covariances(&rows, tol::DEFAULT_BATCHES)?;
        record.reports.push(MomentReport::limit_law(
            "trace_increment_variance",
            t,
            cov.hermitian[0][0],
            Complex64::new(t, 0.0),
            sigma,
            tol::LIMIT_LAW_REL,
        ));
        record.reports.push(MomentReport::monte_carlo(
            "trace_increment_pseudo",
            t,
            cov.pseudo[0][0],
            Complex64::new(0.0, 0.0),
            sigma,
        ));
        if (t - 1.0).abs() < 1e-12 {
            let g = gaussianity_test_with(&incr, tol::P_VALUE_THRESHOLD, sigma)?;
            record.reports.push(MomentReport::p_value(
                "trace_increment_ks_real",
                t,
                g.ks_real.p_value,
                tol::P_VALUE_THRESHOLD,
            ));
            record.reports.push(MomentReport::p_value(
                "trace_increment_ks_imag",
                t,
                g.ks_imag.p_value,
                tol::P_VALUE_THRESHOLD,
            ));
            record.reports.push(MomentReport::monte_carlo(
                "trace_increment_kurtosis",
                t,
                g.kurtosis_ratio,
                Complex64::new(2.0, 0.0),
                sigma,
            ));
        }
    }
    record.estimates.push(EstimateBlock {
        label: "poisson-trace".into(),
        stats,
    });
    Ok(record)
}

// ---------------------------------------------------------------------------
// haar-gaussian and haar-entries
// ---------------------------------------------------------------------------

fn haar_static(
    scenario: &Scenario,
    sigma: f64,
    entry_checks: bool,
) -> Result<(Vec<MomentReport>, EnsembleStats)> {
    if !matches!(
        scenario.observable_preset,
        ObservablePreset::ElementaryCorner { .. }
    ) {
        return Err(UbmError::InvalidScenario(
            "haar presets use the elementary-corner observable".into(),
        ));
    }
    let inputs = scenario.to_inputs()?;
    let ens = generate_ensemble(&inputs)?;
    let stats = ens.stats(tol::DEFAULT_BATCHES)?;
    let mut reports = Vec::new();

    // The statistics are sqrt(n) u_ab for the p x p corner entries; the limit
    // is an independent standard complex Gaussian family, and the Hermitian
    // covariance Tr(A_l A_l'*)/n is exact at finite n.
    let obs = inputs.observables.matrices();
    let nf = scenario.n as f64;
    for l in 0..ens.k {
        for lp in l..ens.k {
            let q_exact = trace_product(&obs[l], &obs[lp].adjoint())?.re / nf;
            let name = format!("hermitian|stat{l}x{lp}");
            reports.push(MomentReport::monte_carlo(
                name,
                0.0,
                stats.hermitian_cov[0][l][lp],
                Complex64::new(q_exact, 0.0),
                sigma,
            ));
            reports.push(MomentReport::monte_carlo(
                format!("pseudo|stat{l}x{lp}"),
                0.0,
                stats.pseudo_cov[0][l][lp],
                Complex64::new(0.0, 0.0),
                sigma,
            ));
        }
    }

    if entry_checks {
        // Marginal normality of the (0, 0) entry statistic.
        let col = ens.column(0, 0);
        let g = gaussianity_test_with(&col, tol::P_VALUE_THRESHOLD, sigma)?;
        reports.push(MomentReport::p_value(
            "entry_ks_real|(0,0)",
            0.0,
            g.ks_real.p_value,
            tol::P_VALUE_THRESHOLD,
        ));
        reports.push(MomentReport::p_value(
            "entry_ks_imag|(0,0)",
            0.0,
            g.ks_imag.p_value,
            tol::P_VALUE_THRESHOLD,
        ));
        reports.push(MomentReport::monte_carlo(
            "entry_kurtosis|(0,0)",
            0.0,
            g.kurtosis_ratio,
            Complex64::new(2.0, 0.0),
            sigma,
        ));
    }
    Ok((reports, stats))
}

fn haar_gaussian(overrides: &PartialScenario) -> Result<RunRecord> {
    let base = scenario_base(
        64,
        InitialLawTag::Haar,
        1.0,
        &[],
        0.05,
        20_000,
        ObservablePreset::ElementaryCorner { p: 2 },
        false,
        5,
    );
    let scenario = overrides.apply_to(&base)?;
    let sigma = sigma_threshold();
    let mut record = base_record(scenario.clone());
    let (reports, stats) = haar_static(&scenario, sigma, true)?;
    record.reports = reports;
    record.estimates.push(EstimateBlock {
        label: "haar-gaussian".into(),
        stats,
    });
    Ok(record)
}

fn haar_entries(overrides: &PartialScenario) -> Result<RunRecord> {
    let base = scenario_base(
        256,
        InitialLawTag::Haar,
        1.0,
        &[],
        0.05,
        100_000,
        ObservablePreset::ElementaryCorner { p: 2 },
        false,
        6,
    );
    let scenario = overrides.apply_to(&base)?;
    let sigma = sigma_threshold();
    let mut record = base_record(scenario.clone());
    let (reports, stats) = haar_static(&scenario, sigma, true)?;
    record.reports = reports;
    record.estimates.push(EstimateBlock {
        label: "haar-entries".into(),
        stats,
    });
    Ok(record)
}

// ---------------------------------------------------------------------------
// moment-oracles
// ---------------------------------------------------------------------------

/// Monte Carlo estimates of E[Tr(A V_t A V_t)] on a raw (unrescaled) time
/// grid at one step size.
fn mixed_moment_ensemble(
    n: usize,
    a: &ComplexMatrix,
    times: &[f64],
    step_cap: f64,
    replications: usize,
    seed: u64,
) -> Result<Vec<BatchEstimate>> {
    let grid = TimeGrid::new(times.to_vec(), step_cap)?;
    let spec = PathEnsembleSpec {
        n,
        initial_law: InitialLaw::Identity,
        grid: grid.clone(),
        replications,
        seed,
        unitarity_tol: tol::UNITARY_FRO,
    };
    let ens = generate_path_ensemble(&spec, times.to_vec(), 1, |path| {
        let mut out = Vec::with_capacity(times.len());
        for (j, state) in path.states.iter().enumerate() {
            let growth = (0.5 * path.grid.times()[j]).exp();
            let v = state.as_matrix().scale(Complex64::new(growth, 0.0));
            let av = a.mul(&v)?;
            out.push(trace_product(&av, &av)?);
        }
        Ok(out)
    })?;
    (0..times.len())
        .map(|j| mean_estimate(&ens.column(j, 0), tol::DEFAULT_BATCHES))
        .collect()
}

fn moment_oracles(overrides: &PartialScenario) -> Result<RunRecord> {
    let base = scenario_base(
        16,
        InitialLawTag::Identity,
        1.0,
        &[0.5, 1.0, 2.0],
        0.01,
        100_000,
        ObservablePreset::Identity,
        true,
        7,
    );
    let scenario = overrides.apply_to(&base)?;
    let sigma = sigma_threshold();
    let n = scenario.n;
    let mut record = base_record(scenario.clone());

    // (a) Mixed moment at two step sizes; the finer step must not increase
    // the bias beyond combined-noise slack.
    let a = sqrt_n_elementary(n, 0, 0);
    let times = scenario.outer_times.clone();
    let coarse = mixed_moment_ensemble(
        n,
        &a,
        &times,
        scenario.step_cap,
        scenario.replications,
        scenario.seed,
    )?;
    let fine = mixed_moment_ensemble(
        n,
        &a,
        &times,
        scenario.step_cap / 2.0,
        scenario.replications,
        scenario.seed.wrapping_add(1),
    )?;
    for (j, &t) in times.iter().enumerate().skip(1) {
        let oracle = mixed_moment(&a, n, t);
        record.reports.push(MomentReport::monte_carlo(
            format!("mixed_moment|step={}", scenario.step_cap),
            t,
            coarse[j],
            oracle,
            sigma,
        ));
        record.reports.push(MomentReport::monte_carlo(
            format!("mixed_moment|step={}", scenario.step_cap / 2.0),
            t,
            fine[j],
            oracle,
            sigma,
        ));
        let bias_coarse = (coarse[j].value - oracle).norm();
        let bias_fine = (fine[j].value - oracle).norm();
        let slack = 2.0 * coarse[j].se().hypot(fine[j].se());
        record.reports.push(MomentReport::upper_bound(
            "mixed_moment_bias_not_increased",
            t,
            bias_fine,
            bias_coarse + slack,
        ));
    }

    // (b) u/v formulas at n = 8, t = 0.7.
    {
        let n_uv = 8usize;
        let t = 0.7;
        let mut rng = RngStream::new(scenario.seed.wrapping_add(2), u64::MAX - 1);
        let c = ComplexMatrix::from_fn(n_uv, |_, _| {
            Complex64::new(rng.standard_normal(), rng.standard_normal())
        });
        let d = ComplexMatrix::from_fn(n_uv, |_, _| {
            Complex64::new(rng.standard_normal(), rng.standard_normal())
        });
        let grid = TimeGrid::new(vec![0.0, t], scenario.step_cap)?;
        let spec = PathEnsembleSpec {
            n: n_uv,
            initial_law: InitialLaw::Identity,
            grid,
            replications: scenario.replications,
            seed: scenario.seed.wrapping_add(3),
            unitarity_tol: tol::UNITARY_FRO,
        };
        let (cc, dd) = (c.clone(), d.clone());
        let ens = generate_path_ensemble(&spec, vec![0.0, t], 2, move |path| {
            let mut out = Vec::with_capacity(4);
            for (j, state) in path.states.iter().enumerate() {
                let growth = (0.5 * path.grid.times()[j]).exp();
                let v = state.as_matrix().scale(Complex64::new(growth, 0.0));
                let vc = v.mul(&cc)?;
                let vadj = v.adjoint();
                // Tr(V C V* D) and Tr(V C) Tr(V* D).
                let vcv = vc.mul(&vadj)?;
                out.push(trace_product(&vcv, &dd)?);
                out.push(vc.trace() * trace_product(&vadj, &dd)?);
            }
            Ok(out)
        })?;
        let u_est = mean_estimate(&ens.column(1, 0), tol::DEFAULT_BATCHES)?;
        let v_est = mean_estimate(&ens.column(1, 1), tol::DEFAULT_BATCHES)?;
        record.reports.push(MomentReport::monte_carlo(
            "u_cd",
            t,
            u_est,
            u_cd(&c, &d, n_uv, t)?,
            sigma,
        ));
        record.reports.push(MomentReport::monte_carlo(
            "v_cd",
            t,
            v_est,
            v_cd(&c, &d, n_uv, t)?,
            sigma,
        ));
    }

    // (c) Haar moments at n = 8.
    {
        let n_h = 8usize;
        let grid = TimeGrid::new(vec![0.0], 0.01)?;
        let spec = PathEnsembleSpec {
            n: n_h,
            initial_law: InitialLaw::Haar,
            grid,
            replications: scenario.replications,
            seed: scenario.seed.wrapping_add(4),
            unitarity_tol: tol::UNITARY_FRO,
        };
        let targets = [
            ("A=I", ComplexMatrix::identity(n_h)),
            ("A=sqrt(n)E11", sqrt_n_elementary(n_h, 0, 0)),
        ];
        let mats: Vec<ComplexMatrix> = targets.iter().map(|t| t.1.clone()).collect();
        let eval_mats = mats.clone();
        let ens = generate_path_ensemble(&spec, vec![0.0], 4, move |path| {
            let u = path.states[0].as_matrix();
            let mut out = Vec::with_capacity(4);
            for a in &eval_mats {
                let tr = trace_product(a, u)?;
                out.push(Complex64::new(tr.norm_sqr(), 0.0));
                let au = a.mul(u)?;
                let tr2 = trace_product(&au, &au)?;
                out.push(Complex64::new(tr2.norm_sqr(), 0.0));
            }
            Ok(out)
        })?;
        for (idx, (label, a)) in targets.iter().enumerate() {
            let second = mean_estimate(&ens.column(0, 2 * idx), tol::DEFAULT_BATCHES)?;
            record.reports.push(MomentReport::monte_carlo(
                format!("haar_second_moment|{label}"),
                0.0,
                second,
                Complex64::new(haar_moment_second(a)?, 0.0),
                sigma,
            ));
            let fourth = mean_estimate(&ens.column(0, 2 * idx + 1), tol::DEFAULT_BATCHES)?;
            record.reports.push(MomentReport::upper_bound(
                format!("haar_fourth_moment_bound|{label}"),
                0.0,
                fourth.value.re,
                haar_moment_fourth_bound(a)?,
            ));
        }
    }

    // (d) Permutation trace bounds at n = 50 on sparse matrices.
    {
        let n_p = 50usize;
        let mut rng = RngStream::new(scenario.seed.wrapping_add(5), u64::MAX - 2);
        let sparse = |rng: &mut RngStream| {
            ComplexMatrix::from_fn(n_p, |_, _| {
                if rng.uniform() < 0.06 {
                    Complex64::new(rng.standard_normal(), rng.standard_normal())
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        };
        let a = sparse(&mut rng);
        let b = sparse(&mut rng);
        let (bound1, bound2) = permutation_trace_bounds(&a, &b)?;
        let reps = 100_000usize;
        let mut sum1 = 0.0;
        let mut sum2 = 0.0;
        for rep in 0..reps {
            let mut prng = RngStream::new(scenario.seed.wrapping_add(6), rep as u64);
            let perm = random_permutation(n_p, &mut prng);
            // Tr(A S) = sum_j A_{perm(j), j}; Tr(A S B S) contracts both
            // sparse factors through the same permutation.
            let mut tr1 = Complex64::new(0.0, 0.0);
            for j in 0..n_p {
                tr1 += a.get(perm[j], j);
            }
            sum1 += tr1.norm();
            let mut tr2 = Complex64::new(0.0, 0.0);
            for j in 0..n_p {
                for l in 0..n_p {
                    tr2 += a.get(perm[j], l) * b.get(perm[l], j);
                }
            }
            sum2 += tr2.norm();
        }
        record.reports.push(MomentReport::upper_bound(
            "permutation_trace_bound|E|Tr(AS)|",
            0.0,
            sum1 / reps as f64,
            bound1,
        ));
        record.reports.push(MomentReport::upper_bound(
            "permutation_trace_bound|E|Tr(ASBS)|",
            0.0,
            sum2 / reps as f64,
            bound2,
        ));

        // Tight case: A = E_11 at n = 4 has E|Tr(AS)| = 1/4 = bound.
        let e11 = ComplexMatrix::elementary(4, 0, 0);
        let (tight, _) = permutation_trace_bounds(&e11, &e11)?;
        let hits = batch_estimate(reps, tol::DEFAULT_BATCHES, |range| {
            let len = range.len().max(1);
            let mut acc = 0.0;
            for rep in range {
                let mut prng = RngStream::new(scenario.seed.wrapping_add(7), rep as u64);
                let perm = random_permutation(4, &mut prng);
                if perm[0] == 0 {
                    acc += 1.0;
                }
            }
            Complex64::new(acc / len as f64, 0.0)
        })?;
        record.reports.push(MomentReport::monte_carlo(
            "permutation_trace_tight_case|A=E11,n=4",
            0.0,
            hits,
            Complex64::new(tight, 0.0),
            sigma,
        ));
    }

    Ok(record)
}
