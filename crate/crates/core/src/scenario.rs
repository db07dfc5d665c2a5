//! Experiment configuration: the [`Scenario`] document, strict TOML parsing,
//! validation of every engine precondition at parse time, and construction
//! of the observable family.
//!
//! Config keys (TOML, unknown keys rejected):
//!
//! ```toml
//! n = 64
//! initial_law = "identity"          # identity | haar | permutation
//! alpha_n = 1.0
//! outer_times = [0.5, 1.0, 2.0]     # 0 is prepended when absent
//! observable_preset = "identity"    # identity | elementary-corner |
//!                                   # sparse-real | custom
//! p = 2                             # required for elementary-corner
//! density = 0.05                    # required for sparse-real
//! file = "obs.txt"                  # required for custom
//! step_cap = 0.01                   # optional
//! replications = 10000              # optional
//! seed = 0                          # optional
//! centered = true                   # optional; default: identity start only
//! unitarity_tol = 1e-10             # optional
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{rescaled_grid, InitialLaw, ObservableFamily};
use crate::error::{Result, UbmError};
use crate::linalg::ComplexMatrix;
use crate::samplers::RngStream;
use crate::stats::EnsembleInputs;
use crate::tol;

/// Initial-law selector as it appears in config documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialLawTag {
    Identity,
    Haar,
    Permutation,
}

impl InitialLawTag {
    pub fn to_law(self) -> InitialLaw {
        match self {
            InitialLawTag::Identity => InitialLaw::Identity,
            InitialLawTag::Haar => InitialLaw::Haar,
            InitialLawTag::Permutation => InitialLaw::Permutation,
        }
    }
}

/// Observable family selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ObservablePreset {
    Identity,
    /// k = p^2 statistics reading the upper-left p x p corner entries
    /// through sqrt(n) x elementary matrices.
    ElementaryCorner { p: usize },
    /// One random real matrix: entries vanish with probability 1 - density
    /// and are N(0, 1/(n density)) otherwise, so Tr(A A*)/n concentrates
    /// at 1.
    SparseReal { density: f64 },
    /// Matrices read from a plain-text file (see [`read_matrix_file`]).
    Custom { file: String },
}

/// A fully validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub n: usize,
    pub initial_law: InitialLawTag,
    pub alpha_n: f64,
    pub outer_times: Vec<f64>,
    pub step_cap: f64,
    pub replications: usize,
    pub observable_preset: ObservablePreset,
    pub seed: u64,
    pub centered: bool,
    pub unitarity_tol: f64,
}

/// Raw config document; every field except the structural ones is optional
/// so the same shape doubles as an override set.
#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PartialScenario {
    pub n: Option<usize>,
    pub initial_law: Option<InitialLawTag>,
    pub alpha_n: Option<f64>,
    pub outer_times: Option<Vec<f64>>,
    pub step_cap: Option<f64>,
    pub replications: Option<usize>,
    pub observable_preset: Option<String>,
    pub p: Option<usize>,
    pub density: Option<f64>,
    pub file: Option<String>,
    pub seed: Option<u64>,
    pub centered: Option<bool>,
    pub unitarity_tol: Option<f64>,
}

impl PartialScenario {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| UbmError::InvalidScenario(e.to_string()))
    }

    pub fn is_empty(&self) -> bool {
        self == &PartialScenario::default()
    }

    /// Applies the overrides present in `self` on top of `base`.
    pub fn apply_to(&self, base: &Scenario) -> Result<Scenario> {
        let mut s = base.clone();
        if let Some(n) = self.n {
            s.n = n;
        }
        if let Some(law) = self.initial_law {
            s.initial_law = law;
        }
        if let Some(a) = self.alpha_n {
            s.alpha_n = a;
        }
        if let Some(ts) = &self.outer_times {
            s.outer_times = ts.clone();
            if s.outer_times.first() != Some(&0.0) {
                s.outer_times.insert(0, 0.0);
            }
        }
        if let Some(c) = self.step_cap {
            s.step_cap = c;
        }
        if let Some(r) = self.replications {
            s.replications = r;
        }
        if let Some(preset) = &self.observable_preset {
            s.observable_preset = build_observable_preset(preset, self.p, self.density, &self.file)?;
        } else if self.p.is_some() || self.density.is_some() || self.file.is_some() {
            // Parameter overrides for the preset already in place.
            s.observable_preset = match &s.observable_preset {
                ObservablePreset::ElementaryCorner { .. } if self.p.is_some() => {
                    ObservablePreset::ElementaryCorner {
                        p: self.p.unwrap(),
                    }
                }
                ObservablePreset::SparseReal { .. } if self.density.is_some() => {
                    ObservablePreset::SparseReal {
                        density: self.density.unwrap(),
                    }
                }
                ObservablePreset::Custom { .. } if self.file.is_some() => ObservablePreset::Custom {
                    file: self.file.clone().unwrap(),
                },
                other => other.clone(),
            };
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(c) = self.centered {
            s.centered = c;
        }
        if let Some(t) = self.unitarity_tol {
            s.unitarity_tol = t;
        }
        s.validate()?;
        Ok(s)
    }
}

fn build_observable_preset(
    name: &str,
    p: Option<usize>,
    density: Option<f64>,
    file: &Option<String>,
) -> Result<ObservablePreset> {
    match name {
        "identity" => Ok(ObservablePreset::Identity),
        "elementary-corner" => {
            let p = p.ok_or_else(|| {
                UbmError::InvalidScenario("observable_preset elementary-corner requires key `p`".into())
            })?;
            Ok(ObservablePreset::ElementaryCorner { p })
        }
        "sparse-real" => {
            let density = density.ok_or_else(|| {
                UbmError::InvalidScenario("observable_preset sparse-real requires key `density`".into())
            })?;
            Ok(ObservablePreset::SparseReal { density })
        }
        "custom" => {
            let file = file.clone().ok_or_else(|| {
                UbmError::InvalidScenario("observable_preset custom requires key `file`".into())
            })?;
            Ok(ObservablePreset::Custom { file })
        }
        other => Err(UbmError::InvalidScenario(format!(
            "unknown observable_preset `{other}` (expected identity, elementary-corner, sparse-real or custom)"
        ))),
    }
}

/// Parses and validates a full scenario document. Missing optional keys take
/// the documented defaults; every engine precondition is re-checked here so
/// invalid configurations are rejected before any simulation starts.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let raw = PartialScenario::parse(text)?;
    scenario_from_partial(&raw)
}

fn scenario_from_partial(raw: &PartialScenario) -> Result<Scenario> {
    let missing = |key: &str| UbmError::InvalidScenario(format!("missing required key `{key}`"));
    let n = raw.n.ok_or_else(|| missing("n"))?;
    let initial_law = raw.initial_law.ok_or_else(|| missing("initial_law"))?;
    let alpha_n = raw.alpha_n.ok_or_else(|| missing("alpha_n"))?;
    let mut outer_times = raw.outer_times.clone().ok_or_else(|| missing("outer_times"))?;
    if outer_times.first() != Some(&0.0) {
        outer_times.insert(0, 0.0);
    }
    let preset_name = raw
        .observable_preset
        .clone()
        .ok_or_else(|| missing("observable_preset"))?;
    let observable_preset = build_observable_preset(&preset_name, raw.p, raw.density, &raw.file)?;
    let scenario = Scenario {
        n,
        initial_law,
        alpha_n,
        outer_times,
        step_cap: raw.step_cap.unwrap_or(tol::DEFAULT_STEP_CAP),
        replications: raw.replications.unwrap_or(tol::DEFAULT_REPLICATIONS),
        observable_preset,
        seed: raw.seed.unwrap_or(0),
        centered: raw
            .centered
            .unwrap_or(initial_law == InitialLawTag::Identity),
        unitarity_tol: raw.unitarity_tol.unwrap_or(tol::UNITARY_FRO),
    };
    scenario.validate()?;
    Ok(scenario)
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(UbmError::InvalidScenario(msg));
        if self.n == 0 {
            return bad("key `n`: dimension must be >= 1".into());
        }
        if !(self.alpha_n > 0.0) || !self.alpha_n.is_finite() {
            return bad(format!(
                "key `alpha_n`: must be positive and finite, got {} (the alpha -> 0 regime is studied through sequences like 1/n)",
                self.alpha_n
            ));
        }
        if self.outer_times.is_empty() || self.outer_times[0] != 0.0 {
            return bad("key `outer_times`: must start at 0".into());
        }
        for w in self.outer_times.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return bad(format!(
                    "key `outer_times`: must be finite and strictly increasing ({} then {})",
                    w[0], w[1]
                ));
            }
        }
        if !(self.step_cap > 0.0) {
            return bad(format!("key `step_cap`: must be positive, got {}", self.step_cap));
        }
        if self.replications < 2 {
            return bad(format!(
                "key `replications`: need at least 2, got {}",
                self.replications
            ));
        }
        match &self.observable_preset {
            ObservablePreset::Identity => {}
            ObservablePreset::ElementaryCorner { p } => {
                if *p == 0 || *p > self.n {
                    return bad(format!(
                        "key `p`: corner size must satisfy 1 <= p <= n, got p={p} with n={}",
                        self.n
                    ));
                }
            }
            ObservablePreset::SparseReal { density } => {
                if !(*density > 0.0 && *density <= 1.0) {
                    return bad(format!(
                        "key `density`: must lie in (0, 1], got {density}"
                    ));
                }
            }
            ObservablePreset::Custom { file } => {
                if file.is_empty() {
                    return bad("key `file`: must be a nonempty path".into());
                }
            }
        }
        if !(self.unitarity_tol > 0.0) {
            return bad(format!(
                "key `unitarity_tol`: must be positive, got {}",
                self.unitarity_tol
            ));
        }
        Ok(())
    }

    /// Stream id reserved for observable sampling, disjoint from the
    /// replication streams 0..replications.
    const OBSERVABLE_STREAM: u64 = u64::MAX;

    /// Builds the observable matrices for this scenario.
    pub fn build_observables(&self) -> Result<ObservableFamily> {
        self.build_observables_with_alpha(self.alpha_n)
    }

    /// Same observable matrices, but paired with a different scale value
    /// (used by the regime-sweep presets).
    pub fn build_observables_with_alpha(&self, alpha_n: f64) -> Result<ObservableFamily> {
        let n = self.n;
        let sqrt_n = (n as f64).sqrt();
        let matrices = match &self.observable_preset {
            ObservablePreset::Identity => vec![ComplexMatrix::identity(n)],
            ObservablePreset::ElementaryCorner { p } => {
                let mut out = Vec::with_capacity(p * p);
                for a in 0..*p {
                    for b in 0..*p {
                        // Tr(sqrt(n) E_ba V) = sqrt(n) V_ab: statistic (a, b)
                        // reads corner entry (a, b).
                        out.push(
                            ComplexMatrix::elementary(n, b, a)
                                .scale(Complex64::new(sqrt_n, 0.0)),
                        );
                    }
                }
                out
            }
            ObservablePreset::SparseReal { density } => {
                let mut rng = RngStream::new(self.seed, Self::OBSERVABLE_STREAM);
                let sd = (1.0 / (n as f64 * density)).sqrt();
                let a = ComplexMatrix::from_fn(n, |_, _| {
                    if rng.uniform() < *density {
                        Complex64::new(sd * rng.standard_normal(), 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                vec![a]
            }
            ObservablePreset::Custom { file } => {
                let (file_n, matrices) = read_matrix_file(file)?;
                if file_n != n {
                    return Err(UbmError::InvalidScenario(format!(
                        "key `file`: matrices are {file_n}x{file_n} but the scenario has n={n}"
                    )));
                }
                matrices
            }
        };
        ObservableFamily::new(matrices, alpha_n)
    }

    /// Assembles everything the ensemble runner needs.
    pub fn to_inputs(&self) -> Result<EnsembleInputs> {
        let observables = self.build_observables()?;
        let grid = rescaled_grid(self.alpha_n, &self.outer_times, self.step_cap)?;
        Ok(EnsembleInputs {
            n: self.n,
            initial_law: self.initial_law.to_law(),
            grid,
            observables,
            centered: self.centered,
            replications: self.replications,
            seed: self.seed,
            unitarity_tol: self.unitarity_tol,
        })
    }
}

/// Runs the scenario end to end and summarizes it.
pub fn run_ensemble(scenario: &Scenario) -> Result<crate::stats::EnsembleStats> {
    crate::stats::run_ensemble(&scenario.to_inputs()?)
}

/// Reads observable matrices: first line `n k`, then k blocks of n rows of
/// n complex pairs `re im` separated by whitespace.
pub fn read_matrix_file(path: &str) -> Result<(usize, Vec<ComplexMatrix>)> {
    let text = std::fs::read_to_string(path).map_err(|source| UbmError::Io {
        path: path.to_string(),
        source,
    })?;
    parse_matrix_text(&text).map_err(|reason| UbmError::MatrixFile {
        path: path.to_string(),
        reason,
    })
}

fn parse_matrix_text(text: &str) -> std::result::Result<(usize, Vec<ComplexMatrix>), String> {
    let mut tokens = text.split_whitespace();
    let n: usize = tokens
        .next()
        .ok_or("empty file")?
        .parse()
        .map_err(|e| format!("bad n: {e}"))?;
    let k: usize = tokens
        .next()
        .ok_or("missing k on the first line")?
        .parse()
        .map_err(|e| format!("bad k: {e}"))?;
    if n == 0 || k == 0 {
        return Err("n and k must be >= 1".into());
    }
    let mut matrices = Vec::with_capacity(k);
    for block in 0..k {
        let mut data = Vec::with_capacity(n * n);
        for entry in 0..n * n {
            let re: f64 = tokens
                .next()
                .ok_or_else(|| format!("matrix {block}: missing re of entry {entry}"))?
                .parse()
                .map_err(|e| format!("matrix {block}, entry {entry}: {e}"))?;
            let im: f64 = tokens
                .next()
                .ok_or_else(|| format!("matrix {block}: missing im of entry {entry}"))?
                .parse()
                .map_err(|e| format!("matrix {block}, entry {entry}: {e}"))?;
            data.push(Complex64::new(re, im));
        }
        matrices.push(ComplexMatrix::new(n, data).map_err(|e| e.to_string())?);
    }
    if tokens.next().is_some() {
        return Err("trailing tokens after the last matrix".into());
    }
    Ok((n, matrices))
}

/// Writes matrices in the format accepted by [`read_matrix_file`].
pub fn write_matrix_file(path: &str, matrices: &[ComplexMatrix]) -> Result<()> {
    use std::fmt::Write as _;
    let n = matrices[0].dim();
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", n, matrices.len());
    for m in matrices {
        for i in 0..n {
            let mut row = String::new();
            for j in 0..n {
                let z = m.get(i, j);
                let _ = write!(row, "{} {} ", z.re, z.im);
            }
            let _ = writeln!(out, "{}", row.trim_end());
        }
    }
    std::fs::write(path, out).map_err(|source| UbmError::Io {
        path: path.to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
n = 8
initial_law = "identity"
alpha_n = 1.0
outer_times = [0.5, 1.0]
observable_preset = "identity"
"#;

    #[test]
    fn minimal_document_gets_documented_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.step_cap, tol::DEFAULT_STEP_CAP);
        assert_eq!(s.replications, tol::DEFAULT_REPLICATIONS);
        assert_eq!(s.seed, 0);
        assert!(s.centered);
        assert_eq!(s.outer_times, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn alpha_zero_is_rejected_with_message() {
        let text = MINIMAL.replace("alpha_n = 1.0", "alpha_n = 0.0");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("alpha_n"), "{err}");
    }

    #[test]
    fn oversized_corner_is_rejected() {
        let text = MINIMAL.replace(
            "observable_preset = \"identity\"",
            "observable_preset = \"elementary-corner\"\np = 9",
        );
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("`p`"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let text = format!("{MINIMAL}\nbogus_key = 3\n");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("bogus_key"), "{err}");
    }

    #[test]
    fn missing_required_key_is_named() {
        let text = MINIMAL.replace("n = 8\n", "");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("`n`"), "{err}");
    }

    #[test]
    fn permutation_default_is_uncentered() {
        let text = MINIMAL.replace("initial_law = \"identity\"", "initial_law = \"permutation\"");
        let s = parse_scenario(&text).unwrap();
        assert!(!s.centered);
    }

    #[test]
    fn corner_observables_read_corner_entries() {
        let text = MINIMAL.replace(
            "observable_preset = \"identity\"",
            "observable_preset = \"elementary-corner\"\np = 2",
        );
        let s = parse_scenario(&text).unwrap();
        let obs = s.build_observables().unwrap();
        assert_eq!(obs.k(), 4);
        // Statistic (a, b) = (0, 1) must read entry (0, 1): its matrix is
        // sqrt(n) E_{1,0}.
        let m = &obs.matrices()[1];
        assert!((m.get(1, 0).re - (8.0_f64).sqrt()).abs() < 1e-14);
        assert_eq!(crate::oracles::nonzero_count(m), 1);
    }

    #[test]
    fn sparse_real_concentrates_near_unit_q() {
        let text = MINIMAL
            .replace("n = 8", "n = 400")
            .replace(
                "observable_preset = \"identity\"",
                "observable_preset = \"sparse-real\"\ndensity = 0.05",
            );
        let s = parse_scenario(&text).unwrap();
        let obs = s.build_observables().unwrap();
        let a = &obs.matrices()[0];
        let q = crate::linalg::trace_product(a, &a.adjoint()).unwrap().re / 400.0;
        assert!((q - 1.0).abs() < 0.25, "q = {q}");
        // Sparse: far fewer nonzeros than n^2.
        let frac = crate::oracles::nonzero_count(a) as f64 / (400.0 * 400.0);
        assert!(frac < 0.08, "nonzero fraction {frac}");
    }

    #[test]
    fn matrix_file_round_trip() {
        let dir = std::env::temp_dir().join("ubm_scenario_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("obs.txt");
        let path = path.to_str().unwrap();
        let ms = vec![
            ComplexMatrix::from_fn(3, |i, j| Complex64::new(i as f64, -(j as f64) * 0.5)),
            ComplexMatrix::identity(3),
        ];
        write_matrix_file(path, &ms).unwrap();
        let (n, back) = read_matrix_file(path).unwrap();
        assert_eq!(n, 3);
        assert_eq!(back, ms);
        // Malformed: truncated file.
        std::fs::write(path, "3 1\n1 0 2 0").unwrap();
        assert!(read_matrix_file(path).is_err());
    }

    #[test]
    fn overrides_apply_and_revalidate() {
        let base = parse_scenario(MINIMAL).unwrap();
        let over = PartialScenario {
            replications: Some(64),
            seed: Some(9),
            ..Default::default()
        };
        let s = over.apply_to(&base).unwrap();
        assert_eq!((s.replications, s.seed), (64, 9));
        let bad = PartialScenario {
            alpha_n: Some(-2.0),
            ..Default::default()
        };
        assert!(bad.apply_to(&base).is_err());
    }
}
