//! Pass/fail reports and result persistence.
//!
//! A [`MomentReport`] compares an empirical quantity against its oracle.
//! Monte Carlo rows pass when |empirical - oracle| <= sigma * SE, optionally
//! widened by a relative term for limit-law comparisons at finite n;
//! deterministic rows use a pure relative tolerance; bound rows check
//! one-sided ceilings. [`RunRecord`] bundles everything a run produced and
//! serializes to CSV (one row per time and statistic) or JSON (round-trip).

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UbmError};
use crate::scenario::Scenario;
use crate::stats::{BatchEstimate, EnsembleStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub statistic: String,
    pub time: f64,
    pub empirical: Complex64,
    /// Combined standard error; zero for deterministic and bound rows.
    pub se: f64,
    pub oracle: Complex64,
    /// |empirical - oracle| in units of the allowed tolerance; <= 1 passes
    /// for deterministic and bound rows, <= sigma threshold for Monte Carlo
    /// rows.
    pub sigma_distance: f64,
    pub verdict: Verdict,
}

impl MomentReport {
    /// Monte Carlo comparison: pass iff |emp - oracle| <= sigma * SE.
    pub fn monte_carlo(
        statistic: impl Into<String>,
        time: f64,
        estimate: BatchEstimate,
        oracle: Complex64,
        sigma: f64,
    ) -> Self {
        Self::limit_law(statistic, time, estimate, oracle, sigma, 0.0)
    }

    /// Monte Carlo comparison with an extra relative allowance for finite-n
    /// bias: pass iff |emp - oracle| <= max(sigma * SE, rel * |oracle|).
    pub fn limit_law(
        statistic: impl Into<String>,
        time: f64,
        estimate: BatchEstimate,
        oracle: Complex64,
        sigma: f64,
        rel: f64,
    ) -> Self {
        let diff = (estimate.value - oracle).norm();
        let se = estimate.se();
        let tolerance = (sigma * se).max(rel * oracle.norm());
        let sigma_distance = if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        let verdict = if diff <= tolerance && tolerance > 0.0 {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        MomentReport {
            statistic: statistic.into(),
            time,
            empirical: estimate.value,
            se,
            oracle,
            sigma_distance,
            verdict,
        }
    }

    /// Deterministic oracle-vs-oracle comparison at relative tolerance:
    /// pass iff |emp - oracle| <= rel_tol (1 + |oracle|).
    pub fn deterministic(
        statistic: impl Into<String>,
        time: f64,
        empirical: Complex64,
        oracle: Complex64,
        rel_tol: f64,
    ) -> Self {
        let diff = (empirical - oracle).norm();
        let tolerance = rel_tol * (1.0 + oracle.norm());
        MomentReport {
            statistic: statistic.into(),
            time,
            empirical,
            se: 0.0,
            oracle,
            sigma_distance: diff / tolerance,
            verdict: if diff <= tolerance {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
        }
    }

    /// One-sided ceiling: pass iff empirical <= bound.
    pub fn upper_bound(
        statistic: impl Into<String>,
        time: f64,
        empirical: f64,
        bound: f64,
    ) -> Self {
        MomentReport {
            statistic: statistic.into(),
            time,
            empirical: Complex64::new(empirical, 0.0),
            se: 0.0,
            oracle: Complex64::new(bound, 0.0),
            sigma_distance: if bound != 0.0 {
                empirical / bound
            } else if empirical == 0.0 {
                0.0
            } else {
                f64::INFINITY
            },
            verdict: if empirical <= bound {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
        }
    }

    /// p-value floor: pass iff p > threshold.
    pub fn p_value(statistic: impl Into<String>, time: f64, p: f64, threshold: f64) -> Self {
        MomentReport {
            statistic: statistic.into(),
            time,
            empirical: Complex64::new(p, 0.0),
            se: 0.0,
            oracle: Complex64::new(threshold, 0.0),
            sigma_distance: if p > 0.0 { threshold / p } else { f64::INFINITY },
            verdict: if p > threshold {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Labelled per-time estimates retained alongside the verdict rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateBlock {
    pub label: String,
    pub stats: EnsembleStats,
}

/// Everything one preset run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub preset: String,
    pub artifact_version: String,
    pub scenario: Scenario,
    pub reports: Vec<MomentReport>,
    pub estimates: Vec<EstimateBlock>,
    pub wall_clock_seconds: f64,
}

impl RunRecord {
    pub fn all_passed(&self) -> bool {
        self.reports.iter().all(MomentReport::passed)
    }

    pub fn failed_count(&self) -> usize {
        self.reports.iter().filter(|r| !r.passed()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "time,statistic,empirical_re,empirical_im,se,oracle_re,oracle_im,sigma_distance,verdict\n",
        );
        for r in &self.reports {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.time,
                r.statistic,
                r.empirical.re,
                r.empirical.im,
                r.se,
                r.oracle.re,
                r.oracle.im,
                r.sigma_distance,
                match r.verdict {
                    Verdict::Pass => "pass",
                    Verdict::Fail => "fail",
                }
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| UbmError::InvalidArgument(format!("serialization failed: {e}")))
    }

    pub fn from_json(text: &str) -> Result<RunRecord> {
        serde_json::from_str(text)
            .map_err(|e| UbmError::InvalidArgument(format!("deserialization failed: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Writes the record under `out_dir` as `<preset>.csv` or `<preset>.json`;
/// returns the paths written.
pub fn emit_report(
    record: &RunRecord,
    format: ReportFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|source| UbmError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let write = |path: PathBuf, contents: String| -> Result<PathBuf> {
        std::fs::write(&path, contents).map_err(|source| UbmError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(path)
    };
    let mut written = Vec::new();
    match format {
        ReportFormat::Csv => {
            written.push(write(
                out_dir.join(format!("{}.csv", record.preset)),
                record.to_csv(),
            )?);
        }
        ReportFormat::Json => {
            written.push(write(
                out_dir.join(format!("{}.json", record.preset)),
                record.to_json()?,
            )?);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    fn record() -> RunRecord {
        let scenario = parse_scenario(
            r#"
n = 4
initial_law = "identity"
alpha_n = 1.0
outer_times = [1.0]
observable_preset = "identity"
replications = 16
"#,
        )
        .unwrap();
        RunRecord {
            preset: "unit-test".into(),
            artifact_version: "0.0.0".into(),
            scenario,
            reports: vec![
                MomentReport::monte_carlo(
                    "x",
                    1.0,
                    BatchEstimate {
                        value: Complex64::new(1.01, 0.0),
                        se_re: 0.01,
                        se_im: 0.01,
                    },
                    Complex64::new(1.0, 0.0),
                    4.0,
                ),
                MomentReport::deterministic("y", 0.5, Complex64::new(2.0, 0.0), Complex64::new(2.0, 0.0), 1e-8),
            ],
            estimates: vec![],
            wall_clock_seconds: 0.25,
        }
    }

    #[test]
    fn verdict_rules() {
        let est = |v: f64, se: f64| BatchEstimate {
            value: Complex64::new(v, 0.0),
            se_re: se,
            se_im: 0.0,
        };
        let pass = MomentReport::monte_carlo("a", 0.0, est(1.03, 0.01), Complex64::new(1.0, 0.0), 4.0);
        assert!(pass.passed());
        let fail = MomentReport::monte_carlo("a", 0.0, est(1.05, 0.01), Complex64::new(1.0, 0.0), 4.0);
        assert!(!fail.passed());
        // The relative allowance rescues finite-n bias.
        let saved = MomentReport::limit_law("a", 0.0, est(1.05, 0.01), Complex64::new(1.0, 0.0), 4.0, 0.10);
        assert!(saved.passed());
        // Degenerate SE with a nonzero difference fails.
        let degenerate = MomentReport::monte_carlo("a", 0.0, est(1.0, 0.0), Complex64::new(2.0, 0.0), 4.0);
        assert!(!degenerate.passed());
        assert!(degenerate.sigma_distance.is_infinite());

        assert!(MomentReport::upper_bound("b", 0.0, 0.9, 1.0).passed());
        assert!(!MomentReport::upper_bound("b", 0.0, 1.1, 1.0).passed());
        assert!(MomentReport::p_value("c", 0.0, 0.2, 0.01).passed());
        assert!(!MomentReport::p_value("c", 0.0, 0.005, 0.01).passed());
    }

    #[test]
    fn csv_shape() {
        let rec = record();
        let csv = rec.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + rec.reports.len());
        assert!(lines[0].starts_with("time,statistic,"));
        // Header-only output for an empty record.
        let mut empty = rec.clone();
        empty.reports.clear();
        assert_eq!(empty.to_csv().lines().count(), 1);
    }

    #[test]
    fn json_round_trip() {
        let rec = record();
        let text = rec.to_json().unwrap();
        let back = RunRecord::from_json(&text).unwrap();
        assert_eq!(rec, back);
    }

    #[test]
    fn emit_writes_files() {
        let rec = record();
        let dir = std::env::temp_dir().join("ubm_report_test");
        let paths = emit_report(&rec, ReportFormat::Csv, &dir).unwrap();
        assert!(paths[0].exists());
        let paths = emit_report(&rec, ReportFormat::Json, &dir).unwrap();
        let back = RunRecord::from_json(&std::fs::read_to_string(&paths[0]).unwrap()).unwrap();
        assert_eq!(back, rec);
    }
}
