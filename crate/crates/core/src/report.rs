//! Machine-readable check reports.

use serde::{Deserialize, Serialize};

/// Default tolerances, one per kind of identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Pure kernel identities.
    pub kernel: f64,
    /// Series identities through order 3.
    pub series: f64,
    /// Order-4 series identities and extraction results.
    pub extraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { kernel: 1e-10, series: 1e-9, extraction: 1e-8 }
    }
}

impl Tolerances {
    /// Series tolerance for a given λ-order.
    pub fn for_order(&self, order: usize) -> f64 {
        if order <= 3 {
            self.series
        } else {
            self.extraction
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub suite: String,
    pub axiom: String,
    pub order: Option<usize>,
    #[serde(rename = "sample-id")]
    pub sample_id: String,
    pub residual: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub entries: Vec<Entry>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a residual; passes iff it is finite and `<= tol`.
    pub fn residual(
        &mut self,
        suite: &str,
        axiom: &str,
        order: Option<usize>,
        sample_id: impl Into<String>,
        residual: f64,
        tol: f64,
    ) {
        self.entries.push(Entry {
            suite: suite.into(),
            axiom: axiom.into(),
            order,
            sample_id: sample_id.into(),
            residual,
            pass: residual.is_finite() && residual <= tol,
            detail: None,
        });
    }

    /// Records a boolean verdict with an explanation.
    pub fn verdict(&mut self, suite: &str, axiom: &str, sample_id: impl Into<String>, ok: bool, detail: impl Into<String>) {
        let detail = detail.into();
        self.entries.push(Entry {
            suite: suite.into(),
            axiom: axiom.into(),
            order: None,
            sample_id: sample_id.into(),
            residual: if ok { 0.0 } else { 1.0 },
            pass: ok,
            detail: (!detail.is_empty()).then_some(detail),
        });
    }

    pub fn push(&mut self, entry: Entry) {
        self.entries.push(entry);
    }

    pub fn extend(&mut self, other: Report) {
        self.entries.extend(other.entries);
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(|e| !e.pass)
    }

    pub fn for_axiom<'a>(&'a self, axiom: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.axiom == axiom)
    }

    /// Largest residual among entries of `axiom` (0 if none).
    pub fn max_residual(&self, axiom: &str) -> f64 {
        self.for_axiom(axiom).map(|e| e.residual).fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One line per (suite, axiom): count, failures, worst residual.
    pub fn summary(&self) -> String {
        let mut keys: Vec<(String, String)> = Vec::new();
        for e in &self.entries {
            let k = (e.suite.clone(), e.axiom.clone());
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        let mut out = String::new();
        for (suite, axiom) in keys {
            let es: Vec<&Entry> = self.entries.iter().filter(|e| e.suite == suite && e.axiom == axiom).collect();
            let failed = es.iter().filter(|e| !e.pass).count();
            let worst = es.iter().map(|e| e.residual).fold(0.0, f64::max);
            out.push_str(&format!(
                "{:<6} {:<10} {:<28} checks={:<4} failed={:<3} max-residual={:.3e}\n",
                if failed == 0 { "PASS" } else { "FAIL" },
                suite,
                axiom,
                es.len(),
                failed,
                worst
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_pass_rule() {
        let mut r = Report::new();
        r.residual("S", "S1", Some(0), "0", 0.0, 1e-10);
        assert!(r.passed());
        r.residual("S", "S2", Some(1), "0", f64::NAN, 1e-10);
        assert!(!r.passed());
        assert_eq!(r.failures().count(), 1);
    }

    #[test]
    fn json_field_names() {
        let mut r = Report::new();
        r.residual("S", "S2", Some(2), "triple-3", 1e-12, 1e-9);
        let v = serde_json::to_value(&r.entries[0]).unwrap();
        assert_eq!(v["sample-id"], "triple-3");
        assert_eq!(v["order"], 2);
        assert_eq!(v["pass"], true);
        assert!(v.get("detail").is_none());
    }
}
