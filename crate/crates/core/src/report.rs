//! Command reports: deterministic JSON plus a plain-text rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::smallnum::SampleDomain;
use crate::verdict::{Verdict, WorstSample};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerdictEntry {
    pub name: String,
    pub outcome: bool,
    pub residual: f64,
    pub tolerance: f64,
    pub worst_sample: Option<WorstSample>,
}

impl VerdictEntry {
    pub fn from_verdict(name: &str, v: &Verdict) -> Self {
        VerdictEntry {
            name: name.into(),
            outcome: v.outcome,
            residual: v.residual,
            tolerance: v.tolerance,
            worst_sample: v.worst.clone(),
        }
    }

    pub fn plain(name: &str, outcome: bool, residual: f64, tolerance: f64) -> Self {
        VerdictEntry {
            name: name.into(),
            outcome,
            residual,
            tolerance,
            worst_sample: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub version: String,
    pub command: String,
    pub spec_digest: Option<String>,
    pub seed: u64,
    pub tol: f64,
    pub samples: usize,
    pub domain: Vec<(f64, f64)>,
    pub verdicts: Vec<VerdictEntry>,
    pub notes: Vec<String>,
    pub details: BTreeMap<String, Value>,
}

impl Report {
    pub fn new(command: &str, spec_digest: Option<&str>, d: &SampleDomain) -> Self {
        Report {
            version: VERSION.into(),
            command: command.into(),
            spec_digest: spec_digest.map(str::to_string),
            seed: d.seed,
            tol: d.tol,
            samples: d.count,
            domain: d.bounds.clone(),
            verdicts: Vec::new(),
            notes: Vec::new(),
            details: BTreeMap::new(),
        }
    }

    pub fn verdict(&mut self, name: &str, v: &Verdict) -> &mut Self {
        self.verdicts.push(VerdictEntry::from_verdict(name, v));
        self
    }

    pub fn push(&mut self, entry: VerdictEntry) -> &mut Self {
        self.verdicts.push(entry);
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).expect("detail serializes");
        self.details.insert(key.into(), v);
        self
    }

    pub fn find(&self, name: &str) -> Option<&VerdictEntry> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "szabo-forge {}  {}", self.version, self.command);
        if let Some(d) = &self.spec_digest {
            let _ = writeln!(out, "spec     {d}");
        }
        let boxes: Vec<String> = self
            .domain
            .iter()
            .map(|(lo, hi)| format!("[{lo}, {hi}]"))
            .collect();
        let _ = writeln!(
            out,
            "domain   {}  samples {}  seed {:#x}  tol {:e}",
            boxes.join(" x "),
            self.samples,
            self.seed,
            self.tol
        );
        for v in &self.verdicts {
            let _ = write!(
                out,
                "{}  {:<32} residual {:.3e}  (tol {:.1e})",
                if v.outcome { "PASS" } else { "FAIL" },
                v.name,
                v.residual,
                v.tolerance
            );
            if let (false, Some(w)) = (v.outcome, &v.worst_sample) {
                let _ = write!(out, "  worst at {:?}", w.point);
                if let Some(dir) = &w.direction {
                    let _ = write!(out, " dir {dir:?}");
                }
            }
            out.push('\n');
        }
        for (k, v) in &self.details {
            let _ = writeln!(out, "{k}: {v}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }
}
