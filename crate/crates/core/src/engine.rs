//! Simulation of the unitary process (U_t) from a given initial law, on raw
//! or log-rescaled time grids, and extraction of linear statistics.
//!
//! The integrator is the exact-unitary multiplicative scheme
//! U <- exp(i dH) U with dH one Hermitian Brownian increment. No explicit
//! drift is added: under the normalization E[(dH)^2] = dt I the expansion of
//! E[exp(i dH)] already carries the -U/2 dt drift term to O(dt^2), so the
//! scheme has weak order one while every iterate stays exactly on the group.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UbmError};
use crate::linalg::{backend, ComplexMatrix, EigWorkspace, UnitaryMatrix};
use crate::samplers::{haar_unitary, permutation_matrix, RngStream};
use crate::tol;

/// Initial distribution of the process.
#[derive(Debug, Clone)]
pub enum InitialLaw {
    Identity,
    Haar,
    Permutation,
    Fixed(UnitaryMatrix),
}

impl InitialLaw {
    pub fn tag(&self) -> &'static str {
        match self {
            InitialLaw::Identity => "identity",
            InitialLaw::Haar => "haar",
            InitialLaw::Permutation => "permutation",
            InitialLaw::Fixed(_) => "fixed",
        }
    }
}

/// Strictly increasing observation times starting at 0, plus the maximum
/// inner simulation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    times: Vec<f64>,
    step_cap: f64,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>, step_cap: f64) -> Result<Self> {
        if times.is_empty() {
            return Err(UbmError::InvalidGrid("grid must be nonempty".into()));
        }
        if times[0] != 0.0 {
            return Err(UbmError::InvalidGrid(format!(
                "grid must start at 0, got {}",
                times[0]
            )));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(UbmError::InvalidGrid(format!(
                    "grid times must be finite and strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if !(step_cap > 0.0) {
            return Err(UbmError::NonPositive {
                name: "step_cap",
                value: step_cap,
            });
        }
        Ok(TimeGrid { times, step_cap })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn step_cap(&self) -> f64 {
        self.step_cap
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Inner grid s_j = log(alpha_n t_j + 1) for outer observation times t_j.
pub fn rescaled_grid(alpha_n: f64, outer_times: &[f64], step_cap: f64) -> Result<TimeGrid> {
    if !(alpha_n > 0.0) || !alpha_n.is_finite() {
        return Err(UbmError::NonPositive {
            name: "alpha_n",
            value: alpha_n,
        });
    }
    let times: Vec<f64> = outer_times.iter().map(|&t| (alpha_n * t).ln_1p()).collect();
    TimeGrid::new(times, step_cap)
}

/// One simulated trajectory, stored at the grid times only.
#[derive(Debug, Clone)]
pub struct UnitaryPath {
    pub grid: TimeGrid,
    pub states: Vec<UnitaryMatrix>,
    pub initial: InitialLaw,
}

/// The observable matrices A_1..A_k together with the scale alpha_n.
#[derive(Debug, Clone)]
pub struct ObservableFamily {
    matrices: Vec<ComplexMatrix>,
    alpha_n: f64,
}

impl ObservableFamily {
    pub fn new(matrices: Vec<ComplexMatrix>, alpha_n: f64) -> Result<Self> {
        if matrices.is_empty() {
            return Err(UbmError::InvalidArgument(
                "observable family needs at least one matrix".into(),
            ));
        }
        if !(alpha_n > 0.0) || !alpha_n.is_finite() {
            return Err(UbmError::NonPositive {
                name: "alpha_n",
                value: alpha_n,
            });
        }
        let n = matrices[0].dim();
        for m in &matrices {
            if m.dim() != n {
                return Err(UbmError::DimensionMismatch {
                    left: n,
                    right: m.dim(),
                });
            }
        }
        Ok(ObservableFamily { matrices, alpha_n })
    }

    pub fn matrices(&self) -> &[ComplexMatrix] {
        &self.matrices
    }

    pub fn alpha_n(&self) -> f64 {
        self.alpha_n
    }

    pub fn k(&self) -> usize {
        self.matrices.len()
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }
}

/// Values of the k rescaled linear statistics along a path. The grid holds
/// the outer times t_j.
#[derive(Debug, Clone)]
pub struct LinearStatisticPath {
    pub grid: TimeGrid,
    pub values: Vec<Vec<Complex64>>,
}

/// Reusable per-worker simulation state: one eigensolver workspace and the
/// step buffers for dimension n.
pub struct PathSimulator {
    n: usize,
    eig: EigWorkspace,
    hbuf: Vec<Complex64>,
    evals: Vec<f64>,
    evecs: Vec<Complex64>,
    tmp: Vec<Complex64>,
    state: Vec<Complex64>,
    unitarity_tol: f64,
}

/// Steps between Newton-Schulz re-unitarization passes; keeps accumulated
/// roundoff well under the 1e-10 structural budget on long paths.
const POLISH_INTERVAL: usize = 64;

impl PathSimulator {
    pub fn new(n: usize) -> Self {
        Self::with_tolerance(n, tol::UNITARY_FRO)
    }

    pub fn with_tolerance(n: usize, unitarity_tol: f64) -> Self {
        PathSimulator {
            n,
            eig: EigWorkspace::new(n),
            hbuf: vec![Complex64::new(0.0, 0.0); n * n],
            evals: vec![0.0; n],
            evecs: vec![Complex64::new(0.0, 0.0); n * n],
            tmp: vec![Complex64::new(0.0, 0.0); n * n],
            state: vec![Complex64::new(0.0, 0.0); n * n],
            unitarity_tol,
        }
    }

    fn sample_initial(&mut self, init: &InitialLaw, rng: &mut RngStream) -> Result<UnitaryMatrix> {
        match init {
            InitialLaw::Identity => Ok(UnitaryMatrix::identity(self.n)),
            InitialLaw::Haar => haar_unitary(self.n, rng),
            InitialLaw::Permutation => permutation_matrix(self.n, rng),
            InitialLaw::Fixed(u) => {
                if u.dim() != self.n {
                    return Err(UbmError::DimensionMismatch {
                        left: self.n,
                        right: u.dim(),
                    });
                }
                Ok(u.clone())
            }
        }
    }

    fn sample_increment(&mut self, dt: f64, rng: &mut RngStream) {
        let n = self.n;
        let diag_sd = (dt / n as f64).sqrt();
        let off_sd = (dt / (2.0 * n as f64)).sqrt();
        for i in 0..n {
            self.hbuf[i * n + i] = Complex64::new(diag_sd * rng.standard_normal(), 0.0);
            for j in (i + 1)..n {
                let z = Complex64::new(
                    off_sd * rng.standard_normal(),
                    off_sd * rng.standard_normal(),
                );
                self.hbuf[i * n + j] = z;
                self.hbuf[j * n + i] = z.conj();
            }
        }
    }

    /// state <- exp(i hbuf) * state via the Hermitian eigendecomposition of
    /// the increment: Q e^{i diag} Q^* state.
    fn apply_exp_increment(&mut self) -> Result<()> {
        let n = self.n;
        self.eig
            .decompose(&self.hbuf, &mut self.evals, &mut self.evecs)?;
        backend::matmul_adjoint_lhs_into(&mut self.tmp, &self.evecs, &self.state, n);
        for (i, &l) in self.evals.iter().enumerate() {
            let phase = Complex64::new(0.0, l).exp();
            for v in &mut self.tmp[i * n..(i + 1) * n] {
                *v *= phase;
            }
        }
        backend::matmul_into(&mut self.state, &self.evecs, &self.tmp, n);
        Ok(())
    }

    /// One Newton-Schulz step toward the closest unitary:
    /// U <- U (3I - U^* U) / 2.
    fn polish(&mut self) {
        let n = self.n;
        backend::matmul_adjoint_lhs_into(&mut self.tmp, &self.state, &self.state, n);
        for i in 0..n {
            for j in 0..n {
                let mut v = -self.tmp[i * n + j];
                if i == j {
                    v += Complex64::new(3.0, 0.0);
                }
                self.tmp[i * n + j] = v * 0.5;
            }
        }
        let mut out = std::mem::take(&mut self.hbuf);
        backend::matmul_into(&mut out, &self.state, &self.tmp, n);
        std::mem::swap(&mut self.state, &mut out);
        self.hbuf = out;
    }

    /// Simulates one trajectory on `grid`, drawing everything from `rng`.
    pub fn simulate_path(
        &mut self,
        init: &InitialLaw,
        grid: &TimeGrid,
        rng: &mut RngStream,
    ) -> Result<UnitaryPath> {
        let n = self.n;
        let u0 = self.sample_initial(init, rng)?;
        self.state.copy_from_slice(u0.as_matrix().as_slice());
        let mut states = Vec::with_capacity(grid.len());
        states.push(u0);
        let mut steps_since_polish = 0usize;
        for w in grid.times().windows(2) {
            let span = w[1] - w[0];
            let substeps = ((span / grid.step_cap()) - 1e-12).ceil().max(1.0) as usize;
            let dt = span / substeps as f64;
            for _ in 0..substeps {
                self.sample_increment(dt, rng);
                self.apply_exp_increment()?;
                steps_since_polish += 1;
                if steps_since_polish >= POLISH_INTERVAL {
                    self.polish();
                    steps_since_polish = 0;
                }
            }
            let snapshot = ComplexMatrix::new(n, self.state.clone())?;
            states.push(UnitaryMatrix::with_tolerance(snapshot, self.unitarity_tol)?);
        }
        Ok(UnitaryPath {
            grid: grid.clone(),
            states,
            initial: init.clone(),
        })
    }
}

/// Convenience wrapper around [`PathSimulator`] for one-off paths.
pub fn simulate_path(
    n: usize,
    init: &InitialLaw,
    grid: &TimeGrid,
    rng: &mut RngStream,
) -> Result<UnitaryPath> {
    if n == 0 {
        return Err(UbmError::InvalidArgument("dimension must be >= 1".into()));
    }
    PathSimulator::new(n).simulate_path(init, grid, rng)
}

/// Rescaled linear statistics along a path simulated on
/// `rescaled_grid(obs.alpha_n(), outer_times, ..)`:
///
/// X_j[l] = alpha_n^{-1/2} Tr[A_l (V_{s_j} - centered * I)],
///
/// with V_s = e^{s/2} U_s recovered from the stored states. The returned grid
/// carries the outer times t_j = (e^{s_j} - 1) / alpha_n.
pub fn linear_statistic(
    path: &UnitaryPath,
    obs: &ObservableFamily,
    centered: bool,
) -> Result<LinearStatisticPath> {
    let n = path.states[0].dim();
    if obs.dim() != n {
        return Err(UbmError::DimensionMismatch {
            left: obs.dim(),
            right: n,
        });
    }
    let alpha = obs.alpha_n();
    let scale = alpha.powf(-0.5);
    let outer: Vec<f64> = path
        .grid
        .times()
        .iter()
        .map(|&s| s.exp_m1() / alpha)
        .collect();
    let mut values = Vec::with_capacity(path.states.len());
    for (j, state) in path.states.iter().enumerate() {
        let s = path.grid.times()[j];
        let growth = (0.5 * s).exp();
        let mut row = Vec::with_capacity(obs.k());
        for a in obs.matrices() {
            let mut tr = Complex64::new(0.0, 0.0);
            for i in 0..n {
                for l in 0..n {
                    tr += a.get(i, l) * state.as_matrix().get(l, i);
                }
            }
            let mut x = tr * growth;
            if centered {
                x -= a.trace();
            }
            row.push(x * scale);
        }
        values.push(row);
    }
    Ok(LinearStatisticPath {
        grid: TimeGrid::new(outer, path.grid.step_cap())?,
        values,
    })
}

/// Upper-left p x p corner of sqrt(n / alpha_n) (V_{s_j} - I) at each grid
/// point.
pub fn corner_process(
    path: &UnitaryPath,
    p: usize,
    alpha_n: f64,
) -> Result<Vec<ComplexMatrix>> {
    let n = path.states[0].dim();
    if p == 0 || p > n {
        return Err(UbmError::InvalidArgument(format!(
            "corner size p={p} must satisfy 1 <= p <= n={n}"
        )));
    }
    if !(alpha_n > 0.0) {
        return Err(UbmError::NonPositive {
            name: "alpha_n",
            value: alpha_n,
        });
    }
    let scale = (n as f64 / alpha_n).sqrt();
    let mut out = Vec::with_capacity(path.states.len());
    for (j, state) in path.states.iter().enumerate() {
        let growth = (0.5 * path.grid.times()[j]).exp();
        let corner = ComplexMatrix::from_fn(p, |a, b| {
            let mut v = state.as_matrix().get(a, b) * growth;
            if a == b {
                v -= Complex64::new(1.0, 0.0);
            }
            v * scale
        });
        out.push(corner);
    }
    Ok(out)
}
