//! Random generation of the stochastic primitives: Hermitian Brownian
//! increments, Haar unitaries, uniform permutation matrices, standard complex
//! Gaussians.
//!
//! All draws go through [`RngStream`], a counter-style stream: the pair
//! (seed, stream_id) fully determines the output, and distinct stream ids
//! give independent streams. Replications own one stream each, so parallel
//! ensembles are deterministic regardless of scheduling.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, UbmError};
use crate::linalg::{backend, ComplexMatrix, HermitianMatrix, UnitaryMatrix};

/// Seeded, stream-addressable random number generator.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
    seed: u64,
    stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            rng,
            seed,
            stream_id,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    #[inline]
    pub fn uniform_index(&mut self, bound: usize) -> usize {
        self.rng.gen_range(0..bound)
    }

    /// Uniform draw from [0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }
}

/// One increment of the Hermitian Brownian motion over a step of length `dt`.
///
/// Diagonal entries are real N(0, dt/n); strictly upper entries have
/// independent real and imaginary parts N(0, dt/(2n)) so E|H_ij|^2 = dt/n;
/// the lower triangle mirrors by conjugation. With this normalization
/// E[(dH)^2] = dt * I.
pub fn hermitian_increment(n: usize, dt: f64, rng: &mut RngStream) -> Result<HermitianMatrix> {
    if !(dt > 0.0) {
        return Err(UbmError::NonPositive {
            name: "dt",
            value: dt,
        });
    }
    let diag_sd = (dt / n as f64).sqrt();
    let off_sd = (dt / (2.0 * n as f64)).sqrt();
    let mut m = ComplexMatrix::zeros(n);
    for i in 0..n {
        m.set(i, i, Complex64::new(diag_sd * rng.standard_normal(), 0.0));
        for j in (i + 1)..n {
            let z = Complex64::new(
                off_sd * rng.standard_normal(),
                off_sd * rng.standard_normal(),
            );
            m.set(i, j, z);
            m.set(j, i, z.conj());
        }
    }
    HermitianMatrix::new(m)
}

/// Haar-distributed unitary matrix.
///
/// QR of a complex Ginibre matrix, with the R diagonal's phases folded into
/// Q. Without that correction plain QR is not Haar.
pub fn haar_unitary(n: usize, rng: &mut RngStream) -> Result<UnitaryMatrix> {
    let mut g = vec![Complex64::new(0.0, 0.0); n * n];
    let sd = 0.5_f64.sqrt();
    for z in g.iter_mut() {
        *z = Complex64::new(sd * rng.standard_normal(), sd * rng.standard_normal());
    }
    let (mut q, rdiag) = backend::qr_unitary(&g, n);
    for (j, r) in rdiag.iter().enumerate() {
        let phase = if r.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            r / r.norm()
        };
        for i in 0..n {
            q[i * n + j] *= phase;
        }
    }
    UnitaryMatrix::new(ComplexMatrix::new(n, q)?)
}

/// Uniform random permutation of 0..n by Fisher-Yates.
pub fn random_permutation(n: usize, rng: &mut RngStream) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.uniform_index(i + 1);
        perm.swap(i, j);
    }
    perm
}

/// Matrix of a uniform random permutation: exactly one 1 per row and column.
pub fn permutation_matrix(n: usize, rng: &mut RngStream) -> Result<UnitaryMatrix> {
    let perm = random_permutation(n, rng);
    let mut m = ComplexMatrix::zeros(n);
    // Column j carries a 1 at row perm[j], so the trace counts fixed points.
    for (j, &i) in perm.iter().enumerate() {
        m.set(i, j, Complex64::new(1.0, 0.0));
    }
    UnitaryMatrix::new(m)
}

/// k i.i.d. standard complex Gaussians: E Z = 0, E Z^2 = 0, E|Z|^2 = 1.
pub fn standard_complex_gaussian(k: usize, rng: &mut RngStream) -> Vec<Complex64> {
    let sd = 0.5_f64.sqrt();
    (0..k)
        .map(|_| Complex64::new(sd * rng.standard_normal(), sd * rng.standard_normal()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_stream_reproduces_bit_identical_draws() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        let ha = hermitian_increment(5, 0.3, &mut a).unwrap();
        let hb = hermitian_increment(5, 0.3, &mut b).unwrap();
        assert_eq!(ha.as_matrix().as_slice(), hb.as_matrix().as_slice());
        assert_eq!(
            standard_complex_gaussian(4, &mut a),
            standard_complex_gaussian(4, &mut b)
        );
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = RngStream::new(7, 0);
        let mut b = RngStream::new(7, 1);
        assert_ne!(a.standard_normal(), b.standard_normal());
    }

    #[test]
    fn increment_rejects_nonpositive_dt() {
        let mut rng = RngStream::new(1, 0);
        assert!(hermitian_increment(3, 0.0, &mut rng).is_err());
        assert!(hermitian_increment(3, -1.0, &mut rng).is_err());
    }

    #[test]
    fn permutation_matrix_is_exactly_unitary() {
        let mut rng = RngStream::new(11, 0);
        for _ in 0..20 {
            let p = permutation_matrix(8, &mut rng).unwrap();
            assert_eq!(p.as_matrix().unitary_defect(), 0.0);
            // Exactly one 1 per row and column.
            for i in 0..8 {
                let row: f64 = (0..8).map(|j| p.as_matrix().get(i, j).re).sum();
                let col: f64 = (0..8).map(|j| p.as_matrix().get(j, i).re).sum();
                assert_eq!(row, 1.0);
                assert_eq!(col, 1.0);
            }
        }
    }

    #[test]
    fn single_point_cases() {
        let mut rng = RngStream::new(2, 0);
        let u = haar_unitary(1, &mut rng).unwrap();
        assert!((u.as_matrix().get(0, 0).norm() - 1.0).abs() < 1e-12);
        let p = permutation_matrix(1, &mut rng).unwrap();
        assert_eq!(p.as_matrix().get(0, 0), Complex64::new(1.0, 0.0));
    }

    fn mean_and_se(samples: &[f64]) -> (f64, f64) {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        (mean, (var / n).sqrt())
    }

    #[test]
    fn increment_moments_match_the_normalization() {
        // n = 1, dt = 1: a standard real Gaussian.
        let mut rng = RngStream::new(21, 0);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| hermitian_increment(1, 1.0, &mut rng).unwrap().as_matrix().get(0, 0).re)
            .collect();
        let sq: Vec<f64> = draws.iter().map(|x| x * x).collect();
        let (mean, se) = mean_and_se(&draws);
        assert!(mean.abs() <= 4.0 * se);
        let (var, var_se) = mean_and_se(&sq);
        assert!((var - 1.0).abs() <= 4.0 * var_se, "var {var}");

        // n = 4, dt = 0.5: E[(dH)^2] = dt I entrywise, and
        // E[n Tr(dH^2)] = n^2 dt under the n Tr(AB) scalar product.
        let (n, dt) = (4usize, 0.5);
        let mut diag = vec![Vec::new(); n];
        let mut off_re = Vec::new();
        let mut off_im = Vec::new();
        let mut scaled_traces = Vec::new();
        let mut rng = RngStream::new(22, 0);
        for _ in 0..100_000 {
            let h = hermitian_increment(n, dt, &mut rng).unwrap();
            let m = h.as_matrix();
            let sq = m.mul(m).unwrap();
            for (i, d) in diag.iter_mut().enumerate() {
                d.push(sq.get(i, i).re);
            }
            off_re.push(sq.get(0, 1).re);
            off_im.push(sq.get(0, 1).im);
            scaled_traces.push(n as f64 * sq.trace().re);
        }
        for d in &diag {
            let (mean, se) = mean_and_se(d);
            assert!((mean - dt).abs() <= 4.0 * se, "diag {mean} vs {dt}");
        }
        let (ore, ose) = mean_and_se(&off_re);
        let (oim, oise) = mean_and_se(&off_im);
        assert!(ore.abs() <= 4.0 * ose, "Re E[(dH)^2]_01 = {ore}");
        assert!(oim.abs() <= 4.0 * oise, "Im E[(dH)^2]_01 = {oim}");
        let (tr_mean, tr_se) = mean_and_se(&scaled_traces);
        let expect = (n * n) as f64 * dt;
        assert!((tr_mean - expect).abs() <= 4.0 * tr_se, "{tr_mean} vs {expect}");
    }

    #[test]
    fn haar_moments_and_invariance() {
        use crate::linalg::trace_product;
        let n = 8usize;
        let reps = 30_000;
        let id = ComplexMatrix::identity(n);
        // A fixed unitary for the invariance comparison.
        let w = {
            let mut rng = RngStream::new(23, 999);
            haar_unitary(n, &mut rng).unwrap()
        };
        let mut tr_sq = Vec::with_capacity(reps);
        let mut tr_w_sq = Vec::with_capacity(reps);
        let mut u11 = Vec::with_capacity(reps);
        let mut rng = RngStream::new(23, 0);
        for _ in 0..reps {
            let u = haar_unitary(n, &mut rng).unwrap();
            tr_sq.push(trace_product(&id, u.as_matrix()).unwrap().norm_sqr());
            let wu = w.as_matrix().mul(u.as_matrix()).unwrap();
            tr_w_sq.push(trace_product(&id, &wu).unwrap().norm_sqr());
            u11.push(u.as_matrix().get(0, 0));
        }
        // E|Tr(U)|^2 = Tr(I I*)/n = 1.
        let (mean, se) = mean_and_se(&tr_sq);
        assert!((mean - 1.0).abs() <= 4.0 * se, "E|Tr U|^2 = {mean}");
        // Left invariance: Tr(WU) has the same second moment.
        let (mean_w, se_w) = mean_and_se(&tr_w_sq);
        assert!(
            (mean - mean_w).abs() <= 4.0 * se.hypot(se_w),
            "{mean} vs {mean_w}"
        );
        // Entry moments: E[u11] = 0 and E|u11|^2 = 1/n.
        let re: Vec<f64> = u11.iter().map(|z| z.re).collect();
        let im: Vec<f64> = u11.iter().map(|z| z.im).collect();
        let (mre, sre) = mean_and_se(&re);
        let (mim, sim) = mean_and_se(&im);
        assert!(mre.abs() <= 4.0 * sre && mim.abs() <= 4.0 * sim);
        let mag: Vec<f64> = u11.iter().map(|z| z.norm_sqr()).collect();
        let (mm, sm) = mean_and_se(&mag);
        assert!((mm - 1.0 / n as f64).abs() <= 4.0 * sm, "E|u11|^2 = {mm}");
    }

    #[test]
    fn permutation_entry_probability_and_fixed_points() {
        // P(entry (0, 1) = 1) = 1/n.
        let n = 16usize;
        let reps = 100_000;
        let mut hits = 0usize;
        let mut rng = RngStream::new(24, 0);
        for _ in 0..reps {
            let perm = random_permutation(n, &mut rng);
            if perm[1] == 0 {
                hits += 1;
            }
        }
        let p = hits as f64 / reps as f64;
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        assert!((p - 1.0 / n as f64).abs() <= 4.0 * se, "p = {p}");

        // Fixed-point counts at n = 500 sit close to Poisson(1) in total
        // variation (the acceptance suite runs the full-size version).
        let counts: Vec<usize> = (0..20_000)
            .map(|rep| {
                let mut rng = RngStream::new(25, rep as u64);
                random_permutation(500, &mut rng)
                    .iter()
                    .enumerate()
                    .filter(|(i, &v)| *i == v)
                    .count()
            })
            .collect();
        let fit = crate::stats::poisson_fit(&counts).unwrap();
        assert!(fit.tv_distance <= 0.02, "tv = {}", fit.tv_distance);
    }

    #[test]
    fn complex_gaussian_moments() {
        let mut rng = RngStream::new(26, 0);
        let zs = standard_complex_gaussian(100_000, &mut rng);
        let mag: Vec<f64> = zs.iter().map(|z| z.norm_sqr()).collect();
        let (m, s) = mean_and_se(&mag);
        assert!((m - 1.0).abs() <= 4.0 * s, "E|Z|^2 = {m}");
        let sq_re: Vec<f64> = zs.iter().map(|z| (z * z).re).collect();
        let sq_im: Vec<f64> = zs.iter().map(|z| (z * z).im).collect();
        let (mr, sr) = mean_and_se(&sq_re);
        let (mi, si) = mean_and_se(&sq_im);
        assert!(mr.abs() <= 4.0 * sr && mi.abs() <= 4.0 * si, "E Z^2 = ({mr}, {mi})");
        let re_sq: Vec<f64> = zs.iter().map(|z| z.re * z.re).collect();
        let (v, vs) = mean_and_se(&re_sq);
        assert!((v - 0.5).abs() <= 4.0 * vs, "Var(Re Z) = {v}");
    }
}
