//! Run configuration: a JSON file plus `key.path=value` overrides.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::hbar::DEFAULT_HBAR_WINDOW;
use crate::report::Tolerances;

pub const SUITES: [&str; 7] = ["S", "T1", "Z", "SD", "hammerstein", "deformation", "hbar"];
pub const MAX_LAMBDA_ORDER: usize = 6;
pub const MAX_DEGREE: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    pub nt: usize,
    pub nx: usize,
    pub mass: f64,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self { nt: 12, nx: 16, mass: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    pub lambda_order: usize,
    pub degree: usize,
    pub hbar_window: (i32, i32),
}

impl Default for Caps {
    fn default() -> Self {
        Self { lambda_order: 4, degree: 4, hbar_window: DEFAULT_HBAR_WINDOW }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HadamardMode {
    ExactBisolution,
    Perturbed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct HadamardConfig {
    pub mode: HadamardMode,
    pub perturbation_seed: u64,
    pub perturbation_scale: f64,
}

impl Default for HadamardConfig {
    fn default() -> Self {
        Self { mode: HadamardMode::ExactBisolution, perturbation_seed: 1, perturbation_scale: 1e-2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplesConfig {
    pub count: usize,
    pub seed: u64,
}

impl Default for SamplesConfig {
    fn default() -> Self {
        Self { count: 10, seed: 2024 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractionMode {
    Roundtrip,
    TwoHadamard,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    pub mode: ExtractionMode,
    /// Coupling of the handcrafted `Z_2` used by the round trip.
    pub kappa: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self { mode: ExtractionMode::Roundtrip, kappa: 0.3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default)]
    pub hadamard: HadamardConfig,
    #[serde(default = "default_suites")]
    pub suites: Vec<String>,
    #[serde(default)]
    pub samples: SamplesConfig,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub extraction: ExtractionConfig,
    /// Interaction `V` in functional JSON; `None` picks `φ(a)⁴` at the lattice centre.
    #[serde(default)]
    pub interaction: Option<Value>,
    /// Observables in functional JSON; empty picks two field values.
    #[serde(default)]
    pub observables: Vec<Value>,
}

fn default_suites() -> Vec<String> {
    vec!["S".into()]
}

fn default_output() -> PathBuf {
    PathBuf::from("paqft-report.json")
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_value(Value::Object(Default::default())).expect("defaults deserialize")
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig { field: field.into(), reason: reason.into() }
}

/// Sets `path` (dot-separated) in `root` to `raw`, parsed as JSON when
/// possible and kept as a string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| invalid(assignment, "override must look like key=value"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.into()));
    let keys: Vec<&str> = path.split('.').collect();
    let mut node = root;
    for (i, key) in keys.iter().enumerate() {
        if key.is_empty() {
            return Err(invalid(path, "empty key segment"));
        }
        let obj = node.as_object_mut().ok_or_else(|| invalid(path, format!("`{}` is not an object", keys[..i].join("."))))?;
        if i + 1 == keys.len() {
            obj.insert((*key).into(), value);
            return Ok(());
        }
        node = obj.entry(*key).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!()
}

impl RunConfig {
    /// Parses JSON text, applies overrides in order, then validates.
    pub fn from_json_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut root: Value = serde_json::from_str(text).map_err(|e| invalid("config", e.to_string()))?;
        if !root.is_object() {
            return Err(invalid("config", "top level must be an object"));
        }
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        let cfg: RunConfig = serde_json::from_value(root).map_err(|e| invalid("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let l = &self.lattice;
        if l.nt < 4 {
            return Err(invalid("lattice.nt", format!("needs at least 4 time slices, got {}", l.nt)));
        }
        if l.nx < 4 {
            return Err(invalid("lattice.nx", format!("needs at least 4 sites, got {}", l.nx)));
        }
        if !l.mass.is_finite() || l.mass < 0.0 {
            return Err(invalid("lattice.mass", "must be finite and non-negative"));
        }
        let c = &self.caps;
        if c.lambda_order == 0 || c.lambda_order > MAX_LAMBDA_ORDER {
            return Err(invalid("caps.lambda_order", format!("must be in 1..={MAX_LAMBDA_ORDER}")));
        }
        if c.degree == 0 || c.degree > MAX_DEGREE {
            return Err(invalid("caps.degree", format!("must be in 1..={MAX_DEGREE}")));
        }
        if c.hbar_window.0 > c.hbar_window.1 {
            return Err(invalid("caps.hbar_window", "lower end exceeds upper end"));
        }
        let h = &self.hadamard;
        if !h.perturbation_scale.is_finite() || h.perturbation_scale < 0.0 {
            return Err(invalid("hadamard.perturbation-scale", "must be finite and non-negative"));
        }
        if self.suites.is_empty() {
            return Err(invalid("suites", "at least one suite is required"));
        }
        if let Some(s) = self.suites.iter().find(|s| !SUITES.contains(&s.as_str())) {
            return Err(Error::UnknownSuite(s.clone()));
        }
        if self.samples.count == 0 {
            return Err(invalid("samples.count", "must be positive"));
        }
        let t = &self.tolerances;
        if [t.kernel, t.series, t.extraction].iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return Err(invalid("tolerances", "must be finite and positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = RunConfig::from_json_with_overrides("{}", &[]).unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!((cfg.lattice.nt, cfg.lattice.nx, cfg.caps.lambda_order), (12, 16, 4));
        let cfg = RunConfig::from_json_with_overrides(
            r#"{"lattice": {"nt": 8, "nx": 8, "mass": 1.0}}"#,
            &["lattice.mass=0.25".into(), "suites=[\"S\",\"SD\"]".into(), "hadamard.mode=perturbed".into()],
        )
        .unwrap();
        assert_eq!(cfg.lattice.mass, 0.25);
        assert_eq!(cfg.suites, vec!["S", "SD"]);
        assert_eq!(cfg.hadamard.mode, HadamardMode::Perturbed);
        let cfg = RunConfig::from_json_with_overrides("{}", &["hadamard.perturbation-seed=9".into()]).unwrap();
        assert_eq!(cfg.hadamard.perturbation_seed, 9);
    }

    #[test]
    fn validation_names_the_field() {
        let err = RunConfig::from_json_with_overrides("{}", &["lattice.nt=3".into()]).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { ref field, .. } if field == "lattice.nt"));
        let err = RunConfig::from_json_with_overrides("{}", &["suites=[]".into()]).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { ref field, .. } if field == "suites"));
        let err = RunConfig::from_json_with_overrides("{}", &["suites=[\"nope\"]".into()]).unwrap_err();
        assert!(matches!(err, Error::UnknownSuite(ref s) if s == "nope"));
        assert!(RunConfig::from_json_with_overrides(r#"{"bogus": 1}"#, &[]).is_err());
        assert!(RunConfig::from_json_with_overrides("{}", &["novalue".into()]).is_err());
    }
}
