//! Machine-readable results: one JSON document per run and one CSV file
//! per Wolff profile.

use crate::capacity::{CapacityBound, PolarityCertificate};
use crate::error::Result;
use crate::metric::{CompletenessReport, Verdict};
use crate::potential::WolffProfile;
use crate::scenario::{Scenario, ScenarioConfig};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Wolff,
    Capacity,
    Probe,
    Verify,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Wolff => "wolff",
            Command::Capacity => "capacity",
            Command::Probe => "probe",
            Command::Verify => "verify",
            Command::Report => "report",
        }
    }
}

/// The scenario as run: file values after overrides, plus normalization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioEcho {
    pub config: ScenarioConfig,
    pub r_min: f64,
    pub shift: Vec<f64>,
    pub scale: f64,
    pub dimension: f64,
    pub expected_polar: bool,
    pub samples: Vec<Vec<f64>>,
    pub spacing: f64,
    pub measure_id: String,
    pub atoms: usize,
}

impl ScenarioEcho {
    pub fn new(s: &Scenario) -> Self {
        Self {
            config: s.config.clone(),
            r_min: s.config.r_min(),
            shift: s.shift.clone(),
            scale: s.scale,
            dimension: s.dimension,
            expected_polar: s.expected_polar(),
            samples: s.samples.samples.clone(),
            spacing: s.samples.spacing,
            measure_id: s.measure_id.clone(),
            atoms: s.measure.len(),
        }
    }
}

/// Truncated Wolff potential at one sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WolffSample {
    pub sample: Vec<f64>,
    pub value: f64,
    pub r_min: f64,
    pub dyadic_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedRatio {
    pub name: String,
    pub value: f64,
}

/// Outcome of one property suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub metrics: BTreeMap<String, f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub version: String,
    pub seed: u64,
    /// Wall-clock seconds per phase; the only fields that vary between runs.
    pub timings: BTreeMap<String, f64>,
}

/// Every key is always present; parts a command does not compute are null
/// or empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: Command,
    pub scenario: ScenarioEcho,
    pub verdict: Option<Verdict>,
    pub profiles: Vec<WolffProfile>,
    pub wolff: Vec<WolffSample>,
    pub bounds: Option<CapacityBound>,
    pub certificate: Option<PolarityCertificate>,
    pub completeness: Option<CompletenessReport>,
    pub ratios: Vec<NamedRatio>,
    pub properties: Vec<PropertyCheck>,
    pub provenance: Provenance,
}

impl Report {
    pub fn new(command: Command, s: &Scenario) -> Self {
        Self {
            command,
            scenario: ScenarioEcho::new(s),
            verdict: None,
            profiles: Vec::new(),
            wolff: Vec::new(),
            bounds: None,
            certificate: None,
            completeness: None,
            ratios: Vec::new(),
            properties: Vec::new(),
            provenance: Provenance {
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed: s.config.seed,
                timings: BTreeMap::new(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Properties that failed, by name.
    pub fn failed_properties(&self) -> Vec<&str> {
        self.properties
            .iter()
            .filter(|p| !p.passed)
            .map(|p| p.name.as_str())
            .collect()
    }
}

/// `k,rho_k,ball_mass,term,partial_sum`, one row per level; numbers in
/// shortest round-trip form.
pub fn profile_csv(p: &WolffProfile) -> String {
    let mut out = String::from("k,rho_k,ball_mass,term,partial_sum\n");
    for k in 0..p.terms.len() {
        writeln!(
            out,
            "{k},{},{},{},{}",
            p.rho[k], p.ball_mass[k], p.terms[k], p.partial_sums[k]
        )
        .expect("writing to a String cannot fail");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// Writes `report.json` or one `profile-<i>.csv` per profile into `dir`;
/// returns the written paths.
pub fn emit(report: &Report, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    match format {
        Format::Json => {
            let path = dir.join("report.json");
            std::fs::write(&path, report.to_json())?;
            written.push(path);
        }
        Format::Csv => {
            for (i, p) in report.profiles.iter().enumerate() {
                let path = dir.join(format!("profile-{i}.csv"));
                std::fs::write(&path, profile_csv(p))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Measure;
    use crate::potential::dyadic_wolff_profile;

    #[test]
    fn dirac_profile_csv_rows() {
        let mu = Measure::dirac(&[0.0; 3], 1.0).unwrap();
        let p = dyadic_wolff_profile(&mu, &[0.0; 3], 6).unwrap();
        let csv = profile_csv(&p);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "k,rho_k,ball_mass,term,partial_sum");
        assert_eq!(lines[1], "0,1,1,1,1");
        assert_eq!(lines[4], "3,0.125,1,8,15");
        assert_eq!(lines.len(), 8);
    }
}
