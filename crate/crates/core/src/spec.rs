//! JSON manifold spec files.
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "coordinates": ["u1", "u2"],
//!   "christoffel": { "1_11": "-u2", "2_22": "u1" },
//!   "phi": { "12": "u1*u2" },
//!   "domain": { "box": [-1, 1], "fiber_box": [-1, 1], "samples": 200, "seed": 12648430, "tol": 1e-8 }
//! }
//! ```
//!
//! Christoffel keys are `k_ij` for Γᵏᵢⱼ and φ keys are `ij` with i ≤ j,
//! all 1-based.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::affine::AffineConnection;
use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::extension::SymmetricBilinearSpec;
use crate::smallnum::{SampleDomain, DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_TOL};

/// Either one interval for every coordinate or one per coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoxSpec {
    Uniform([f64; 2]),
    PerAxis(Vec<[f64; 2]>),
}

impl BoxSpec {
    pub fn bounds(&self, n: usize) -> Result<Vec<(f64, f64)>> {
        match self {
            BoxSpec::Uniform([lo, hi]) => Ok(vec![(*lo, *hi); n]),
            BoxSpec::PerAxis(v) if v.len() == n => {
                Ok(v.iter().map(|[lo, hi]| (*lo, *hi)).collect())
            }
            BoxSpec::PerAxis(v) => Err(Error::Dimension {
                expected: n,
                found: v.len(),
            }),
        }
    }
}

impl Default for BoxSpec {
    fn default() -> Self {
        BoxSpec::Uniform([-1.0, 1.0])
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub base_box: Option<BoxSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_box: Option<BoxSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

/// Command-line overrides applied on top of the spec's domain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DomainOverrides {
    pub base_box: Option<[f64; 2]>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

impl DomainSpec {
    pub fn with_overrides(&self, o: &DomainOverrides) -> DomainSpec {
        DomainSpec {
            base_box: o
                .base_box
                .map(BoxSpec::Uniform)
                .or_else(|| self.base_box.clone()),
            fiber_box: self.fiber_box.clone(),
            samples: o.samples.or(self.samples),
            seed: o.seed.or(self.seed),
            tol: o.tol.or(self.tol),
        }
    }

    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(DEFAULT_SAMPLES)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }

    pub fn base_domain(&self, n: usize) -> Result<SampleDomain> {
        let bounds = self.base_box.clone().unwrap_or_default().bounds(n)?;
        SampleDomain::new(bounds, self.samples(), self.seed(), self.tol())
    }

    /// Base box × fiber box.
    pub fn extension_domain(&self, n: usize) -> Result<SampleDomain> {
        let mut bounds = self.base_box.clone().unwrap_or_default().bounds(n)?;
        bounds.extend(self.fiber_box.clone().unwrap_or_default().bounds(n)?);
        SampleDomain::new(bounds, self.samples(), self.seed(), self.tol())
    }
}

/// Serialized form of a manifold spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Vec<String>>,
    #[serde(default)]
    pub christoffel: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub phi: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "is_default_domain")]
    pub domain: DomainSpec,
}

fn is_default_domain(d: &DomainSpec) -> bool {
    *d == DomainSpec::default()
}

/// A validated spec: parsed connection, φ and sampling domain.
#[derive(Clone, Debug)]
pub struct ManifoldSpec {
    pub document: SpecDocument,
    pub coordinates: Vec<String>,
    pub connection: AffineConnection,
    pub phi: SymmetricBilinearSpec,
    pub digest: String,
}

pub fn default_coordinates(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("u{i}")).collect()
}

/// Names for the fiber coordinates: u(n+1)..u(2n) when the base uses the
/// default names, otherwise `p1..pn`.
pub fn fiber_coordinates(base: &[String]) -> Vec<String> {
    let n = base.len();
    if base == default_coordinates(n).as_slice() {
        (n + 1..=2 * n).map(|i| format!("u{i}")).collect()
    } else {
        (1..=n).map(|i| format!("p{i}")).collect()
    }
}

fn parse_index(c: char, n: usize, key: &str) -> Result<usize> {
    match c.to_digit(10) {
        Some(d) if d >= 1 && (d as usize) <= n => Ok(d as usize - 1),
        _ => Err(Error::InvalidInput(format!(
            "key `{key}`: index `{c}` is not in 1..={n}"
        ))),
    }
}

fn parse_christoffel_key(key: &str, n: usize) -> Result<(usize, usize, usize)> {
    let chars: Vec<char> = key.chars().collect();
    if chars.len() != 4 || chars[1] != '_' {
        return Err(Error::InvalidInput(format!(
            "Christoffel key `{key}` must look like `k_ij`"
        )));
    }
    Ok((
        parse_index(chars[0], n, key)?,
        parse_index(chars[2], n, key)?,
        parse_index(chars[3], n, key)?,
    ))
}

fn parse_phi_key(key: &str, n: usize) -> Result<(usize, usize)> {
    let chars: Vec<char> = key.chars().collect();
    if chars.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "φ key `{key}` must look like `ij`"
        )));
    }
    let (i, j) = (
        parse_index(chars[0], n, key)?,
        parse_index(chars[1], n, key)?,
    );
    if i > j {
        return Err(Error::InvalidInput(format!(
            "φ key `{key}` must have i ≤ j"
        )));
    }
    Ok((i, j))
}

fn parse_field(field: String, text: &str, coords: &[String]) -> Result<Expr> {
    parse(text, coords).map_err(|source| Error::SpecField { field, source })
}

impl SpecDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Stable rendering with sorted keys; the digest is taken over it.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("spec serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    pub fn to_pretty_json(&self) -> String {
        let value = serde_json::to_value(self).expect("spec serializes");
        serde_json::to_string_pretty(&value).expect("value serializes")
    }

    pub fn validate(self) -> Result<ManifoldSpec> {
        let n = self.dimension;
        if !(1..=9).contains(&n) {
            return Err(Error::InvalidInput(format!(
                "dimension {n} is not in 1..=9"
            )));
        }
        let coordinates = self
            .coordinates
            .clone()
            .unwrap_or_else(|| default_coordinates(n));
        if coordinates.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: coordinates.len(),
            });
        }
        // validates the names once, even without entries
        parse("0", &coordinates).map_err(|source| Error::SpecField {
            field: "coordinates".into(),
            source,
        })?;
        let mut entries = Vec::new();
        for (key, text) in &self.christoffel {
            let idx = parse_christoffel_key(key, n)?;
            entries.push((
                idx,
                parse_field(format!("christoffel[{key}]"), text, &coordinates)?,
            ));
        }
        let connection = AffineConnection::from_entries(n, entries)?;
        let mut phi_entries = Vec::new();
        for (key, text) in &self.phi {
            let idx = parse_phi_key(key, n)?;
            phi_entries.push((idx, parse_field(format!("phi[{key}]"), text, &coordinates)?));
        }
        let phi = SymmetricBilinearSpec::from_entries(n, phi_entries)?;
        let digest = hex::encode(Sha256::digest(self.canonical_json().as_bytes()));
        Ok(ManifoldSpec {
            document: self,
            coordinates,
            connection,
            phi,
            digest,
        })
    }
}

impl ManifoldSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        SpecDocument::from_json(text)?.validate()
    }

    pub fn load(path: &Path) -> Result<Self> {
        ManifoldSpec::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn dim(&self) -> usize {
        self.document.dimension
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.document.domain
    }

    /// Coordinate names of the 2n-chart.
    pub fn extension_coordinates(&self) -> Vec<String> {
        let mut names = self.coordinates.clone();
        names.extend(fiber_coordinates(&self.coordinates));
        names
    }
}

/// Spec document for the Wong connection of a potential φ(u1, u2).
pub fn wong_document(phi_text: &str, domain: DomainSpec) -> Result<SpecDocument> {
    let coords = default_coordinates(2);
    let phi = parse_field("phi".into(), phi_text, &coords)?;
    let conn = crate::affine::wong_connection(&phi)?;
    let mut christoffel = BTreeMap::new();
    for (key, (k, i, j)) in [("1_11", (0, 0, 0)), ("2_22", (1, 1, 1))] {
        let e = conn.symbol(k, i, j);
        if !e.is_zero() {
            christoffel.insert(key.to_string(), e.named(&coords).to_string());
        }
    }
    Ok(SpecDocument {
        dimension: 2,
        coordinates: None,
        christoffel,
        phi: BTreeMap::new(),
        domain,
    })
}
