//! Command implementations behind the `szabo-forge` binary.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::affine::{AffineConnection, RecurrenceKind, RicciClassification, RicciSymmetry};
use crate::error::{Error, Result};
use crate::extension::{deformed_extension, DisplayReading, ExtensionMetric};
use crate::metric::{
    block_structure_survey, christoffel_cross_check, compatibility_verdict,
    curvature_identities_at, metric_szabo_survey, FamilyResidual,
};
use crate::report::{Report, VerdictEntry};
use crate::smallnum::{sample_points, SampleDomain};
use crate::spec::{wong_document, DomainOverrides, DomainSpec, ManifoldSpec, SpecDocument};
use crate::verdict::Verdict;

/// Tolerance of the Levi-Civita compatibility check.
pub const COMPATIBILITY_TOL: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Theorem {
    SurfaceSzabo,
    CyclicParallel,
    Extension,
    Recurrence,
}

impl Theorem {
    pub const ALL: [Theorem; 4] = [
        Theorem::SurfaceSzabo,
        Theorem::CyclicParallel,
        Theorem::Extension,
        Theorem::Recurrence,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Theorem::SurfaceSzabo => "surface-szabo",
            Theorem::CyclicParallel => "cyclic-parallel",
            Theorem::Extension => "extension",
            Theorem::Recurrence => "recurrence",
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Theorem::ALL
            .into_iter()
            .find(|t| t.id() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown theorem `{s}`")))
    }
}

fn base_domain(spec: &ManifoldSpec, o: &DomainOverrides) -> Result<SampleDomain> {
    spec.domain().with_overrides(o).base_domain(spec.dim())
}

fn require_surface(spec: &ManifoldSpec, what: &str) -> Result<()> {
    if spec.dim() != 2 {
        return Err(Error::InvalidInput(format!(
            "{what} needs a 2-dimensional spec"
        )));
    }
    Ok(())
}

fn ricci_verdicts(report: &mut Report, class: &RicciClassification) {
    report
        .verdict("ricci-skew", &class.skew)
        .verdict("ricci-symmetric", &class.symmetric)
        .detail("ricci_class", class.symmetry.as_str())
        .detail("ricci_nonzero_everywhere", class.nonzero_everywhere);
}

/// Diagnostics for the skew-Ricci statement; only skew ∧ nonzero ⇒ Szabó
/// is treated as a claim.
fn skew_ricci_notes(report: &mut Report, szabo: &Verdict, class: &RicciClassification) {
    if szabo.outcome && !class.is_skew_nonzero() {
        report.note(format!(
            "Ricci tensor is {} (nonzero on samples: {}) yet the connection is affine Szabó; \
             skew-symmetric nonzero Ricci is sufficient but not necessary here",
            class.symmetry.as_str(),
            class.nonzero_everywhere
        ));
    }
    if class.is_skew_nonzero() && !szabo.outcome {
        report.note("skew-symmetric nonzero Ricci tensor without the Szabó property");
    }
}

fn equivalence_entry(name: &str, a: &Verdict, b: &Verdict) -> VerdictEntry {
    let agree = a.outcome == b.outcome;
    VerdictEntry::plain(name, agree, if agree { 0.0 } else { 1.0 }, 0.0)
}

/// ρ at a point plus the sampled symmetry classification.
pub fn cmd_ricci(spec: &ManifoldSpec, point: &[f64], o: &DomainOverrides) -> Result<Report> {
    let d = base_domain(spec, o)?;
    let rho = spec.connection.ricci_at(point)?;
    let mut report = Report::new("ricci", Some(&spec.digest), &d);
    report
        .detail("point", point)
        .detail("ricci", rho.to_matrix().rows());
    if spec.dim() == 2 {
        let class = spec.connection.ricci_symmetry_classify(&d)?;
        ricci_verdicts(&mut report, &class);
    }
    Ok(report)
}

/// Affine Szabó, cyclic-parallel and Ricci-symmetry verdicts.
pub fn cmd_check(spec: &ManifoldSpec, o: &DomainOverrides) -> Result<Report> {
    let d = base_domain(spec, o)?;
    let c = &spec.connection;
    let mut report = Report::new("check", Some(&spec.digest), &d);
    let szabo = c.is_affine_szabo(&d)?;
    let cyclic = c.is_cyclic_parallel(&d)?;
    report
        .verdict("affine-szabo", &szabo)
        .verdict("cyclic-parallel", &cyclic);
    if spec.dim() == 2 {
        let class = c.ricci_symmetry_classify(&d)?;
        ricci_verdicts(&mut report, &class);
        skew_ricci_notes(&mut report, &szabo, &class);
    }
    if szabo.outcome != cyclic.outcome {
        report.note("cyclic-parallel and affine Szabó verdicts disagree");
    }
    Ok(report)
}

fn family_table(rows: &[FamilyResidual]) -> BTreeMap<&'static str, f64> {
    rows.iter()
        .map(|r| (r.family.as_str(), r.residual))
        .collect()
}

#[derive(Serialize)]
struct CrossCheck {
    point: Vec<f64>,
    literal: BTreeMap<&'static str, f64>,
    indexed: BTreeMap<&'static str, f64>,
}

fn extension_of(spec: &ManifoldSpec) -> Result<ExtensionMetric> {
    deformed_extension(&spec.connection, &spec.phi)
}

fn metric_rows(spec: &ManifoldSpec, m: &ExtensionMetric) -> Vec<Vec<String>> {
    let names = spec.extension_coordinates();
    (0..m.dim())
        .map(|a| {
            (0..m.dim())
                .map(|b| m.entry(a, b).named(&names).to_string())
                .collect()
        })
        .collect()
}

/// Builds the deformed extension and runs the metric-side suite.
pub fn cmd_extend(spec: &ManifoldSpec, o: &DomainOverrides) -> Result<Report> {
    let dom = spec.domain().with_overrides(o);
    let d = dom.extension_domain(spec.dim())?;
    let base_d = dom.base_domain(spec.dim())?;
    let m = extension_of(spec)?;
    let mut report = Report::new("extend", Some(&spec.digest), &d);
    report.detail("metric", metric_rows(spec, &m));

    let base = spec.connection.is_affine_szabo(&base_d)?;
    let survey = metric_szabo_survey(&m, &d)?;
    report
        .verdict("affine-szabo", &base)
        .verdict("metric-szabo-nilpotent", &survey.nilpotent)
        .push(equivalence_entry("equivalence", &base, &survey.nilpotent));
    let compat = compatibility_verdict(&m, &d.clone().with_tol(COMPATIBILITY_TOL))?;
    report.verdict("levi-civita-compatibility", &compat);
    let blocks = block_structure_survey(&m, &d)?;
    report
        .verdict("block-structure-zero-section", &blocks.zero_section)
        .detail("block_structure_off_section_max", blocks.off_section_max)
        .detail("self_annihilation_max", survey.self_annihilation)
        .detail("trace_max", survey.max_trace);
    if !blocks.zero_section.outcome || blocks.off_section_max > d.tol {
        report.note(format!(
            "off the zero section the block residual reaches {:.3e} (measured, not asserted)",
            blocks.off_section_max
        ));
    }

    let p0 = sample_points(&d.clone().with_count(1))?.remove(0);
    report.detail("curvature_identities", curvature_identities_at(&m, &p0)?);
    if spec.dim() == 2 {
        let literal = christoffel_cross_check(&m, &p0, DisplayReading::Literal)?;
        let indexed = christoffel_cross_check(&m, &p0, DisplayReading::Indexed)?;
        let off = literal.iter().filter(|r| r.residual > d.tol).count();
        if off > 0 {
            report.note(format!(
                "literal closed-form Christoffel display disagrees with the metric in {off} index famil{}",
                if off == 1 { "y" } else { "ies" }
            ));
        }
        report.detail(
            "christoffel_cross_check",
            CrossCheck {
                point: p0,
                literal: family_table(&literal),
                indexed: family_table(&indexed),
            },
        );
    }
    Ok(report)
}

fn verify_recurrence(c: &AffineConnection, d: &SampleDomain, report: &mut Report) -> Result<()> {
    let rec = c.recurrence_covector(d)?;
    report.push(VerdictEntry {
        name: "recurrent".into(),
        outcome: rec.kind == RecurrenceKind::Recurrent,
        residual: rec.residual,
        tolerance: d.tol,
        worst_sample: None,
    });
    report
        .detail("recurrence_kind", rec.kind)
        .detail("recurrence_skipped_points", rec.skipped.len())
        .detail(
            "covector_samples",
            &rec.covectors[..rec.covectors.len().min(5)],
        );
    if rec.kind != RecurrenceKind::Recurrent {
        report.note(format!("no recurrence covector: {:?}", rec.kind));
        return Ok(());
    }
    let curl = c.covector_closedness(d)?;
    let mean = curl.samples.iter().map(|s| s.curl).sum::<f64>() / curl.samples.len().max(1) as f64;
    report
        .push(VerdictEntry::plain(
            "not-gradient",
            curl.not_gradient,
            curl.min_abs_curl,
            10.0 * d.tol,
        ))
        .detail("curl_mean", mean)
        .detail("curl_abs_range", [curl.min_abs_curl, curl.max_abs_curl])
        .note("not-gradient passes when |curl| ≥ 10·tol at every sample; its residual is the smallest |curl|");
    Ok(())
}

/// Runs the suite for one theorem.
pub fn cmd_verify(spec: &ManifoldSpec, theorem: Theorem, o: &DomainOverrides) -> Result<Report> {
    let dom = spec.domain().with_overrides(o);
    let d = dom.base_domain(spec.dim())?;
    let c = &spec.connection;
    let command = format!("verify {theorem}");
    match theorem {
        Theorem::SurfaceSzabo => {
            require_surface(spec, "surface-szabo")?;
            let mut report = Report::new(&command, Some(&spec.digest), &d);
            report
                .verdict("affine-szabo", &c.is_affine_szabo(&d)?)
                .verdict("closed-form-route", &c.closed_form_agreement(&d)?);
            Ok(report)
        }
        Theorem::CyclicParallel => {
            let mut report = Report::new(&command, Some(&spec.digest), &d);
            let szabo = c.is_affine_szabo(&d)?;
            let cyclic = c.is_cyclic_parallel(&d)?;
            report
                .verdict("cyclic-parallel", &cyclic)
                .verdict("affine-szabo", &szabo)
                .push(equivalence_entry("equivalence", &cyclic, &szabo));
            if spec.dim() == 2 {
                let class = c.ricci_symmetry_classify(&d)?;
                report.detail("ricci_class", class.symmetry.as_str());
                skew_ricci_notes(&mut report, &szabo, &class);
                if class.symmetry == RicciSymmetry::Symmetric {
                    report.note("Ricci tensor is symmetric on the samples");
                }
            }
            Ok(report)
        }
        Theorem::Extension => {
            let ed = dom.extension_domain(spec.dim())?;
            let m = extension_of(spec)?;
            let mut report = Report::new(&command, Some(&spec.digest), &ed);
            let base = c.is_affine_szabo(&d)?;
            let ext = metric_szabo_survey(&m, &ed)?.nilpotent;
            report
                .verdict("affine-szabo", &base)
                .verdict("metric-szabo-nilpotent", &ext)
                .push(equivalence_entry("equivalence", &base, &ext));
            Ok(report)
        }
        Theorem::Recurrence => {
            require_surface(spec, "recurrence")?;
            let mut report = Report::new(&command, Some(&spec.digest), &d);
            verify_recurrence(c, &d, &mut report)?;
            Ok(report)
        }
    }
}

/// Spec document for the Wong connection of φ.
pub fn cmd_wong(phi_text: &str, o: &DomainOverrides) -> Result<SpecDocument> {
    wong_document(phi_text, DomainSpec::default().with_overrides(o))
}
