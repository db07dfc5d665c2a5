//! Monte Carlo orchestration and estimation: ensemble generation over
//! independent RNG streams, (pseudo-)covariance estimates with batch-means
//! standard errors, Gaussianity and independence diagnostics, Poisson fit.
//!
//! Determinism contract: replication r always draws from stream (seed, r),
//! and aggregation is an ordered reduction over r, so results are identical
//! across runs and across worker counts.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{linear_statistic, InitialLaw, ObservableFamily, PathSimulator, TimeGrid};
use crate::error::{Result, UbmError};
use crate::linalg::ComplexMatrix;
use crate::samplers::RngStream;
use crate::tol;

pub mod ks;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Everything the runner needs to produce one ensemble of statistic paths.
#[derive(Debug, Clone)]
pub struct EnsembleInputs {
    pub n: usize,
    pub initial_law: InitialLaw,
    pub grid: TimeGrid,
    pub observables: ObservableFamily,
    pub centered: bool,
    pub replications: usize,
    pub seed: u64,
    pub unitarity_tol: f64,
}

/// Raw per-replication statistic values: `samples[rep]` is flattened over
/// (time, statistic index).
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub outer_times: Vec<f64>,
    pub k: usize,
    pub replications: usize,
    samples: Vec<Vec<Complex64>>,
}

impl Ensemble {
    #[inline]
    pub fn value(&self, rep: usize, time_idx: usize, l: usize) -> Complex64 {
        self.samples[rep][time_idx * self.k + l]
    }

    /// All replication values of statistic l at one grid time.
    pub fn column(&self, time_idx: usize, l: usize) -> Vec<Complex64> {
        (0..self.replications)
            .map(|r| self.value(r, time_idx, l))
            .collect()
    }

    /// Per-replication values of an arbitrary derived scalar.
    pub fn derived(&self, f: impl Fn(&dyn Fn(usize, usize) -> Complex64) -> Complex64) -> Vec<Complex64> {
        (0..self.replications)
            .map(|r| {
                let get = |time_idx: usize, l: usize| self.value(r, time_idx, l);
                f(&get)
            })
            .collect()
    }

    pub fn stats(&self, batches: usize) -> Result<EnsembleStats> {
        // Tiny ensembles still get finite SEs: never more batches than
        // replications.
        EnsembleStats::from_ensemble(self, batches.min(self.replications))
    }
}

/// Core of a path ensemble without the observable layer.
#[derive(Debug, Clone)]
pub struct PathEnsembleSpec {
    pub n: usize,
    pub initial_law: InitialLaw,
    pub grid: TimeGrid,
    pub replications: usize,
    pub seed: u64,
    pub unitarity_tol: f64,
}

/// Runs `eval` on one freshly simulated path per replication. `eval` returns
/// the statistic values flattened over (time, statistic index) with `k`
/// statistics per time. Replication r draws from stream (seed, r) and the
/// output order is the replication order regardless of scheduling.
pub fn generate_path_ensemble<F>(
    spec: &PathEnsembleSpec,
    reported_times: Vec<f64>,
    k: usize,
    eval: F,
) -> Result<Ensemble>
where
    F: Fn(&crate::engine::UnitaryPath) -> Result<Vec<Complex64>> + Sync,
{
    if spec.replications < 2 {
        return Err(UbmError::InvalidArgument(format!(
            "need at least 2 replications, got {}",
            spec.replications
        )));
    }
    let expected = reported_times.len() * k;
    let run_one = |sim: &mut PathSimulator, rep: usize| -> Result<Vec<Complex64>> {
        let mut rng = RngStream::new(spec.seed, rep as u64);
        let path = sim.simulate_path(&spec.initial_law, &spec.grid, &mut rng)?;
        let values = eval(&path)?;
        if values.len() != expected {
            return Err(UbmError::InvalidArgument(format!(
                "statistic evaluator returned {} values, expected {expected}",
                values.len()
            )));
        }
        Ok(values)
    };

    #[cfg(feature = "parallel")]
    let samples: Vec<Vec<Complex64>> = (0..spec.replications)
        .into_par_iter()
        .map_init(
            || PathSimulator::with_tolerance(spec.n, spec.unitarity_tol),
            |sim, rep| run_one(sim, rep),
        )
        .collect::<Result<Vec<_>>>()?;

    #[cfg(not(feature = "parallel"))]
    let samples: Vec<Vec<Complex64>> = {
        let mut sim = PathSimulator::with_tolerance(spec.n, spec.unitarity_tol);
        (0..spec.replications)
            .map(|rep| run_one(&mut sim, rep))
            .collect::<Result<Vec<_>>>()?
    };

    Ok(Ensemble {
        outer_times: reported_times,
        k,
        replications: spec.replications,
        samples,
    })
}

/// Generates the ensemble of rescaled linear statistics described by
/// `inputs`.
pub fn generate_ensemble(inputs: &EnsembleInputs) -> Result<Ensemble> {
    let alpha = inputs.observables.alpha_n();
    let outer_times: Vec<f64> = inputs
        .grid
        .times()
        .iter()
        .map(|&s| s.exp_m1() / alpha)
        .collect();
    let spec = PathEnsembleSpec {
        n: inputs.n,
        initial_law: inputs.initial_law.clone(),
        grid: inputs.grid.clone(),
        replications: inputs.replications,
        seed: inputs.seed,
        unitarity_tol: inputs.unitarity_tol,
    };
    let obs = &inputs.observables;
    let centered = inputs.centered;
    generate_path_ensemble(&spec, outer_times, obs.k(), move |path| {
        let stat = linear_statistic(path, obs, centered)?;
        Ok(stat.values.into_iter().flatten().collect())
    })
}

/// A scalar estimate with component-wise batch-means standard errors.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct BatchEstimate {
    pub value: Complex64,
    pub se_re: f64,
    pub se_im: f64,
}

impl BatchEstimate {
    /// Combined standard error used for sigma-distance verdicts.
    pub fn se(&self) -> f64 {
        self.se_re.hypot(self.se_im)
    }
}

/// Batch-means estimator: applies `stat` to the full sample for the value
/// and to each of `batches` contiguous blocks for the standard error.
pub fn batch_estimate(
    len: usize,
    batches: usize,
    stat: impl Fn(std::ops::Range<usize>) -> Complex64,
) -> Result<BatchEstimate> {
    if batches < 2 {
        return Err(UbmError::InvalidArgument(
            "need at least 2 batches".into(),
        ));
    }
    if len < batches {
        return Err(UbmError::InvalidArgument(format!(
            "need at least {batches} samples for {batches} batches, got {len}"
        )));
    }
    let value = stat(0..len);
    let base = len / batches;
    let rem = len % batches;
    let mut start = 0usize;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sq = Complex64::new(0.0, 0.0);
    for b in 0..batches {
        let size = base + usize::from(b < rem);
        let v = stat(start..start + size);
        sum += v;
        sq += Complex64::new(v.re * v.re, v.im * v.im);
        start += size;
    }
    let bf = batches as f64;
    let var_re = (sq.re / bf - (sum.re / bf).powi(2)).max(0.0);
    let var_im = (sq.im / bf - (sum.im / bf).powi(2)).max(0.0);
    // sd over batches / sqrt(batches - 1) estimates the SE of the full mean.
    Ok(BatchEstimate {
        value,
        se_re: (var_re / (bf - 1.0)).sqrt(),
        se_im: (var_im / (bf - 1.0)).sqrt(),
    })
}

fn mean_of(samples: &[Complex64], range: std::ops::Range<usize>) -> Complex64 {
    let len = range.len().max(1);
    samples[range].iter().sum::<Complex64>() / len as f64
}

/// Mean with batch-means SE.
pub fn mean_estimate(samples: &[Complex64], batches: usize) -> Result<BatchEstimate> {
    batch_estimate(samples.len(), batches, |r| mean_of(samples, r))
}

/// Covariance estimates of a vector sample: Hermitian part
/// E[(x_l - m_l) conj(x_l' - m_l')] and pseudo part without conjugation.
#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    pub hermitian: Vec<Vec<BatchEstimate>>,
    pub pseudo: Vec<Vec<BatchEstimate>>,
}

impl CovarianceEstimate {
    pub fn has_degenerate_se(&self) -> bool {
        self.hermitian
            .iter()
            .chain(self.pseudo.iter())
            .flatten()
            .any(|e| e.se_re == 0.0 && e.se_im == 0.0)
    }
}

/// Estimates both covariance matrices of `rows` (one k-vector per
/// replication), centering by the per-column sample means.
pub fn estimate_covariances(rows: &[Vec<Complex64>], batches: usize) -> Result<CovarianceEstimate> {
    if rows.len() < 2 {
        return Err(UbmError::InvalidArgument(
            "need at least 2 samples".into(),
        ));
    }
    let k = rows[0].len();
    let n = rows.len();
    let means: Vec<Complex64> = (0..k)
        .map(|l| rows.iter().map(|r| r[l]).sum::<Complex64>() / n as f64)
        .collect();
    let entry = |l: usize, lp: usize, conjugate: bool, range: std::ops::Range<usize>| {
        let len = range.len().max(1);
        let mut acc = Complex64::new(0.0, 0.0);
        for r in &rows[range] {
            let a = r[l] - means[l];
            let b = r[lp] - means[lp];
            acc += if conjugate { a * b.conj() } else { a * b };
        }
        acc / len as f64
    };
    let mut hermitian = Vec::with_capacity(k);
    let mut pseudo = Vec::with_capacity(k);
    for l in 0..k {
        let mut hrow = Vec::with_capacity(k);
        let mut prow = Vec::with_capacity(k);
        for lp in 0..k {
            hrow.push(batch_estimate(n, batches, |r| entry(l, lp, true, r))?);
            prow.push(batch_estimate(n, batches, |r| entry(l, lp, false, r))?);
        }
        hermitian.push(hrow);
        pseudo.push(prow);
    }
    Ok(CovarianceEstimate { hermitian, pseudo })
}

/// Pseudo-covariance (no conjugation) of a vector sample, with SEs.
pub fn estimate_pseudo_covariance(
    rows: &[Vec<Complex64>],
    batches: usize,
) -> Result<Vec<Vec<BatchEstimate>>> {
    Ok(estimate_covariances(rows, batches)?.pseudo)
}

/// Per-time summary of an ensemble: means, covariance matrices, SEs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnsembleStats {
    pub replication_count: usize,
    pub times: Vec<f64>,
    pub k: usize,
    pub mean: Vec<Vec<BatchEstimate>>,
    pub hermitian_cov: Vec<Vec<Vec<BatchEstimate>>>,
    pub pseudo_cov: Vec<Vec<Vec<BatchEstimate>>>,
}

impl EnsembleStats {
    fn from_ensemble(ens: &Ensemble, batches: usize) -> Result<Self> {
        let t_count = ens.outer_times.len();
        let mut mean = Vec::with_capacity(t_count);
        let mut herm = Vec::with_capacity(t_count);
        let mut pseudo = Vec::with_capacity(t_count);
        for j in 0..t_count {
            let rows: Vec<Vec<Complex64>> = (0..ens.replications)
                .map(|r| (0..ens.k).map(|l| ens.value(r, j, l)).collect())
                .collect();
            let mut mrow = Vec::with_capacity(ens.k);
            for l in 0..ens.k {
                let col: Vec<Complex64> = rows.iter().map(|r| r[l]).collect();
                mrow.push(mean_estimate(&col, batches)?);
            }
            let cov = estimate_covariances(&rows, batches)?;
            mean.push(mrow);
            herm.push(cov.hermitian);
            pseudo.push(cov.pseudo);
        }
        Ok(EnsembleStats {
            replication_count: ens.replications,
            times: ens.outer_times.clone(),
            k: ens.k,
            mean,
            hermitian_cov: herm,
            pseudo_cov: pseudo,
        })
    }

    /// The Hermitian covariance as a matrix at one time index.
    pub fn hermitian_matrix(&self, time_idx: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.k, |l, lp| self.hermitian_cov[time_idx][l][lp].value)
    }
}

/// Runs the full pipeline and summarizes with the default batch count.
pub fn run_ensemble(inputs: &EnsembleInputs) -> Result<EnsembleStats> {
    generate_ensemble(inputs)?.stats(tol::DEFAULT_BATCHES)
}

/// One-sample KS report against a moment-matched normal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
}

/// Gaussianity diagnostics of a complex sample: KS on both marginals against
/// normals with matched mean and variance, plus the complex kurtosis ratio
/// E|Z - m|^4 / (E|Z - m|^2)^2, which is 2 for a complex Gaussian.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianityReport {
    pub ks_real: KsReport,
    pub ks_imag: KsReport,
    pub kurtosis_ratio: BatchEstimate,
    pub p_threshold: f64,
    pub sigma_threshold: f64,
}

impl GaussianityReport {
    pub fn passes(&self) -> bool {
        let kurt_ok = (self.kurtosis_ratio.value.re - 2.0).abs()
            <= self.sigma_threshold * self.kurtosis_ratio.se_re.max(f64::MIN_POSITIVE);
        self.ks_real.p_value > self.p_threshold
            && self.ks_imag.p_value > self.p_threshold
            && kurt_ok
    }
}

pub fn gaussianity_test(samples: &[Complex64]) -> Result<GaussianityReport> {
    gaussianity_test_with(samples, tol::P_VALUE_THRESHOLD, tol::DEFAULT_SIGMA)
}

pub fn gaussianity_test_with(
    samples: &[Complex64],
    p_threshold: f64,
    sigma_threshold: f64,
) -> Result<GaussianityReport> {
    if samples.len() < 1000 {
        return Err(UbmError::InvalidArgument(format!(
            "gaussianity test needs at least 1000 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len();
    let marginal = |extract: &dyn Fn(&Complex64) -> f64| -> KsReport {
        let xs: Vec<f64> = samples.iter().map(extract).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let d = ks::ks_statistic_normal(&xs, mean, var.sqrt());
        KsReport {
            statistic: d,
            p_value: ks::ks_p_value(n, d),
        }
    };
    let ks_real = marginal(&|z| z.re);
    let ks_imag = marginal(&|z| z.im);

    let mean = samples.iter().sum::<Complex64>() / n as f64;
    let kurt = batch_estimate(n, tol::DEFAULT_BATCHES, |range| {
        let len = range.len().max(1);
        let mut m2 = 0.0;
        let mut m4 = 0.0;
        for z in &samples[range] {
            let d = (z - mean).norm_sqr();
            m2 += d;
            m4 += d * d;
        }
        m2 /= len as f64;
        m4 /= len as f64;
        Complex64::new(m4 / (m2 * m2), 0.0)
    })?;

    Ok(GaussianityReport {
        ks_real,
        ks_imag,
        kurtosis_ratio: kurt,
        p_threshold,
        sigma_threshold,
    })
}

/// Correlation diagnostics between the increments X_{t2}-X_{t1} and
/// X_{t3}-X_{t2} of one statistic across an ensemble.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub statistic_index: usize,
    pub hermitian_corr: BatchEstimate,
    pub pseudo_corr: BatchEstimate,
    pub sigma_threshold: f64,
}

impl IndependenceReport {
    pub fn passes(&self) -> bool {
        let ok = |e: &BatchEstimate| {
            e.value.re.abs() <= self.sigma_threshold * e.se_re.max(f64::MIN_POSITIVE)
                && e.value.im.abs() <= self.sigma_threshold * e.se_im.max(f64::MIN_POSITIVE)
        };
        ok(&self.hermitian_corr) && ok(&self.pseudo_corr)
    }
}

pub fn increment_independence_check(
    ens: &Ensemble,
    l: usize,
    time_indices: (usize, usize, usize),
) -> Result<IndependenceReport> {
    let (j1, j2, j3) = time_indices;
    let t_count = ens.outer_times.len();
    if !(j1 < j2 && j2 < j3 && j3 < t_count) {
        return Err(UbmError::InvalidArgument(format!(
            "need three grid indices j1 < j2 < j3 < {t_count}, got ({j1}, {j2}, {j3})"
        )));
    }
    let d1: Vec<Complex64> = (0..ens.replications)
        .map(|r| ens.value(r, j2, l) - ens.value(r, j1, l))
        .collect();
    let d2: Vec<Complex64> = (0..ens.replications)
        .map(|r| ens.value(r, j3, l) - ens.value(r, j2, l))
        .collect();
    let norm: f64 = {
        let v1: f64 = d1.iter().map(|z| z.norm_sqr()).sum::<f64>() / d1.len() as f64;
        let v2: f64 = d2.iter().map(|z| z.norm_sqr()).sum::<f64>() / d2.len() as f64;
        (v1 * v2).sqrt().max(f64::MIN_POSITIVE)
    };
    let corr = |conjugate: bool| {
        batch_estimate(ens.replications, tol::DEFAULT_BATCHES, |range| {
            let len = range.len().max(1);
            let mut acc = Complex64::new(0.0, 0.0);
            for r in range {
                acc += if conjugate {
                    d1[r] * d2[r].conj()
                } else {
                    d1[r] * d2[r]
                };
            }
            acc / (len as f64 * norm)
        })
    };
    Ok(IndependenceReport {
        statistic_index: l,
        hermitian_corr: corr(true)?,
        pseudo_corr: corr(false)?,
        sigma_threshold: tol::DEFAULT_SIGMA,
    })
}

/// Total-variation distance between the empirical law of `counts` and
/// Poisson(1), with counts above `PMF_CUTOFF` lumped into one tail bin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoissonFitReport {
    pub tv_distance: f64,
    pub samples: usize,
}

const PMF_CUTOFF: usize = 20;

pub fn poisson_fit(counts: &[usize]) -> Result<PoissonFitReport> {
    if counts.len() < 10_000 {
        return Err(UbmError::InvalidArgument(format!(
            "poisson fit needs at least 1e4 samples, got {}",
            counts.len()
        )));
    }
    let n = counts.len() as f64;
    let mut empirical = vec![0.0_f64; PMF_CUTOFF + 2];
    for &c in counts {
        let bin = c.min(PMF_CUTOFF + 1);
        empirical[bin] += 1.0 / n;
    }
    let mut tv = 0.0;
    let mut tail = 1.0;
    for (j, &e) in empirical.iter().enumerate().take(PMF_CUTOFF + 1) {
        let pmf = crate::oracles::poisson_pmf(j);
        tail -= pmf;
        tv += (e - pmf).abs();
    }
    tv += (empirical[PMF_CUTOFF + 1] - tail.max(0.0)).abs();
    Ok(PoissonFitReport {
        tv_distance: 0.5 * tv,
        samples: counts.len(),
    })
}
