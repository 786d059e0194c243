//! Experiment configuration: `key = value` files, flag overrides, and the
//! reproducibility header embedded in every output artifact.

use crate::error::{Error, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

/// Output format for artifacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown format '{other}'"))),
        }
    }
}

/// Fully resolved experiment settings. All numeric fields are validated
/// against module preconditions before dispatch; keys absent from both the
/// config file and the flags fall back to these defaults.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub ell: u32,
    pub ells: Vec<u32>,
    pub psi_min: f64,
    pub psi_max: f64,
    pub points: usize,
    pub nodes: usize,
    pub excision: f64,
    pub eps0: f64,
    pub far_c: f64,
    pub psi_switch: f64,
    pub replicates: u64,
    pub n_theta: usize,
    pub n_phi: usize,
    pub seed: u64,
    pub mode: String,
    pub format: OutputFormat,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            ell: 20,
            ells: vec![50, 100, 200, 400, 800],
            psi_min: 0.01,
            psi_max: 30.0,
            points: 200,
            nodes: crate::kac_rice::DEFAULT_NODES,
            excision: crate::kac_rice::DEFAULT_EXCISION_PSI,
            eps0: crate::kac_rice::REGION_EPS0,
            far_c: crate::density::FAR_REGIME_C,
            psi_switch: crate::covariance::PSI_SWITCH,
            replicates: 100,
            n_theta: 0, // 0: derive from the resolution rule
            n_phi: 0,
            seed: 1,
            mode: "boundary-adapted".into(),
            format: OutputFormat::Csv,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |e: &dyn std::fmt::Display| Error::Config(format!("{key} = {value}: {e}"));
        match key {
            "ell" => self.ell = value.parse().map_err(|e| bad(&e))?,
            "ells" => {
                self.ells = value
                    .split(',')
                    .map(|s| s.trim().parse::<u32>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| bad(&e))?
            }
            "psi_min" => self.psi_min = value.parse().map_err(|e| bad(&e))?,
            "psi_max" => self.psi_max = value.parse().map_err(|e| bad(&e))?,
            "points" => self.points = value.parse().map_err(|e| bad(&e))?,
            "nodes" => self.nodes = value.parse().map_err(|e| bad(&e))?,
            "excision" => self.excision = value.parse().map_err(|e| bad(&e))?,
            "eps0" => self.eps0 = value.parse().map_err(|e| bad(&e))?,
            "far_c" => self.far_c = value.parse().map_err(|e| bad(&e))?,
            "psi_switch" => self.psi_switch = value.parse().map_err(|e| bad(&e))?,
            "replicates" => self.replicates = value.parse().map_err(|e| bad(&e))?,
            "n_theta" => self.n_theta = value.parse().map_err(|e| bad(&e))?,
            "n_phi" => self.n_phi = value.parse().map_err(|e| bad(&e))?,
            "seed" => self.seed = value.parse().map_err(|e| bad(&e))?,
            "mode" => {
                if value != "boundary-adapted" && value != "full-sphere" {
                    return Err(Error::Config(format!("unknown mode '{value}'")));
                }
                self.mode = value.to_string();
            }
            "format" => self.format = value.parse()?,
            "threads" => self.threads = Some(value.parse().map_err(|e| bad(&e))?),
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Loads assignments from a file of `key = value` lines. Blank lines
    /// and lines starting with '#' are ignored.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{}:{}: expected 'key = value'", path.display(), no + 1))
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Validates cross-field constraints shared by all subcommands.
    pub fn validate(&self) -> Result<()> {
        if self.ell < 1 {
            return Err(Error::Config("ell must be >= 1".into()));
        }
        if !(self.psi_min > 0.0 && self.psi_max > self.psi_min) {
            return Err(Error::Config("need 0 < psi_min < psi_max".into()));
        }
        if !(self.eps0 > 0.0 && self.far_c > self.eps0) {
            return Err(Error::Config("need 0 < eps0 < far_c".into()));
        }
        if self.points < 2 || self.nodes < 2 {
            return Err(Error::Config("points and nodes must be >= 2".into()));
        }
        Ok(())
    }

    /// Grid dimensions: explicit values if set, otherwise the resolution
    /// rule (10 ell rows on the hemisphere, 20 ell columns).
    pub fn grid_dims(&self) -> (usize, usize) {
        let nt = if self.n_theta > 0 { self.n_theta } else { 10 * self.ell as usize };
        let np = if self.n_phi > 0 { self.n_phi } else { 20 * self.ell as usize };
        (nt, np)
    }

    /// One-line `key=value` rendering for artifact headers, in stable
    /// (sorted) key order.
    pub fn header_line(&self) -> String {
        let mut kv = BTreeMap::new();
        kv.insert("ell", self.ell.to_string());
        kv.insert(
            "ells",
            self.ells.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(","),
        );
        kv.insert("psi_min", self.psi_min.to_string());
        kv.insert("psi_max", self.psi_max.to_string());
        kv.insert("points", self.points.to_string());
        kv.insert("nodes", self.nodes.to_string());
        kv.insert("excision", self.excision.to_string());
        kv.insert("eps0", self.eps0.to_string());
        kv.insert("far_c", self.far_c.to_string());
        kv.insert("psi_switch", self.psi_switch.to_string());
        kv.insert("replicates", self.replicates.to_string());
        kv.insert("n_theta", self.n_theta.to_string());
        kv.insert("n_phi", self.n_phi.to_string());
        kv.insert("seed", self.seed.to_string());
        kv.insert("mode", self.mode.clone());
        kv.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn file_then_override() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# comment\nell = 40\nseed = 9\n\npsi_max = 50").unwrap();
        let mut cfg = ExperimentConfig::default();
        cfg.load_file(f.path()).unwrap();
        assert_eq!(cfg.ell, 40);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.psi_max, 50.0);
        // flag-style override wins
        cfg.set("ell", "80").unwrap();
        assert_eq!(cfg.ell, 80);
    }

    #[test]
    fn rejects_bad_input() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.set("nope", "1").is_err());
        assert!(cfg.set("ell", "abc").is_err());
        assert!(cfg.set("mode", "sideways").is_err());
        cfg.psi_min = 5.0;
        cfg.psi_max = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn header_is_stable() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.header_line(), cfg.header_line());
        assert!(cfg.header_line().contains("seed=1"));
    }
}
