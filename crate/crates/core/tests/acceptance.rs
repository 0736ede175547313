//! Acceptance suite: one pass/fail line per criterion. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines.

mod common;

use common::{e, family, fd_ricci, gallery, poly_phi};
use szabo_forge::affine::{Direction, RicciSymmetry};
use szabo_forge::commands::{cmd_check, cmd_extend};
use szabo_forge::extension::{deformed_extension, riemannian_extension};
use szabo_forge::metric::{
    block_structure_check, levi_civita_at, metric_compatibility_at, metric_szabo_survey,
    LiftedVector,
};
use szabo_forge::smallnum::{char_poly, is_nilpotent, sample_points, SampleDomain, Sampler};
use szabo_forge::spec::{DomainOverrides, ManifoldSpec};
use szabo_forge::{Matrix, Result};

type Criterion = fn() -> Result<Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn c1_ricci_fidelity() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for g in gallery() {
        for p in sample_points(&g.domain.clone().with_count(100))? {
            let rho = g.connection.ricci_at(&p)?;
            let oracle = fd_ricci(&g.connection, &p);
            let scale = rho.max_abs().max(1.0);
            for (j, row) in oracle.iter().enumerate() {
                for (k, o) in row.iter().enumerate() {
                    worst = worst.max((rho.get(&[j, k]) - o).abs() / scale);
                }
            }
        }
    }
    outcome(
        worst <= 1e-6,
        format!("max scaled residual {worst:.3e} (tol 1e-6)"),
    )
}

fn c2_route_equivalence() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for g in gallery() {
        let v = g
            .connection
            .closed_form_agreement(&g.domain.clone().with_count(100).with_tol(1e-9))?;
        worst = worst.max(v.residual);
    }
    outcome(
        worst <= 1e-9,
        format!("max scaled residual {worst:.3e} (tol 1e-9)"),
    )
}

fn c3_szabo_verdicts() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for g in gallery() {
        let v = g.connection.is_affine_szabo(&g.domain)?;
        pass &= v.outcome == g.szabo;
        if g.name == "flat" {
            pass &= v.residual == 0.0;
        }
        parts.push(format!("{}: {}", g.name, v.outcome));
    }
    // negative control at u₂ = 1
    let neg = &gallery()[4].connection;
    let mut largest: f64 = 0.0;
    let mut sampler = Sampler::new(1);
    for _ in 0..50 {
        let p = [sampler.uniform(-1.0, 1.0), 1.0];
        let dir = Direction::new(sampler.unit_direction(2));
        let s = neg.szabo_operator(&p, &dir)?;
        largest = largest.max(is_nilpotent(&s, 1e-8).residual);
    }
    pass &= largest > 1e-2;
    parts.push(format!("largest coefficient at u2 = 1: {largest:.3}"));
    outcome(pass, parts.join(", "))
}

fn c4_cyclic_parallel() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for g in gallery() {
        let s = g.connection.is_affine_szabo(&g.domain)?.outcome;
        let c = g.connection.is_cyclic_parallel(&g.domain)?.outcome;
        pass &= s == c;
        parts.push(format!("{}: {c}/{s}", g.name));
    }
    outcome(pass, format!("cyclic/szabo {}", parts.join(", ")))
}

fn c5_skew_ricci() -> Result<Outcome> {
    let mut pass = true;
    let mut skew = Vec::new();
    for g in gallery() {
        let class = g.connection.ricci_symmetry_classify(&g.domain)?;
        if class.is_skew_nonzero() {
            skew.push(g.name);
            pass &= g.connection.is_affine_szabo(&g.domain)?.outcome;
        }
        if g.name.starts_with("family") {
            pass &= class.symmetry == RicciSymmetry::Symmetric;
        }
    }
    let spec = ManifoldSpec::from_json(
        r#"{"dimension": 2, "christoffel": {"2_11": "sin(u1)", "2_12": "1"}}"#,
    )?;
    let report = cmd_check(&spec, &DomainOverrides::default())?;
    let noted = report
        .notes
        .iter()
        .any(|n| n.contains("symmetric") && n.contains("Szabó"));
    pass &= noted;
    outcome(
        pass,
        format!(
            "skew nonzero: [{}]; family note present: {noted}",
            skew.join(", ")
        ),
    )
}

fn c6_recurrence() -> Result<Outcome> {
    let c = szabo_forge::affine::wong_connection(&e("u1*u2"))?;
    let d = SampleDomain::cube(2, -1.0, 1.0)?;
    let rec = c.recurrence_covector(&d)?;
    let mut gap: f64 = 0.0;
    for s in &rec.covectors {
        gap = gap
            .max((s.alpha[0] - s.point[1]).abs())
            .max((s.alpha[1] + s.point[0]).abs());
    }
    let curl = c.covector_closedness(&d)?;
    let mut rel: f64 = 0.0;
    for s in &curl.samples {
        rel = rel.max((s.curl + 2.0).abs() / 2.0);
    }
    let pass = gap <= 1e-8 && rel <= 0.05 && curl.not_gradient && !curl.samples.is_empty();
    outcome(
        pass,
        format!(
            "covector gap {gap:.3e}, curl relative error {rel:.3e} over {} samples, gradient: {}",
            curl.samples.len(),
            !curl.not_gradient
        ),
    )
}

fn c7_extension_construction() -> Result<Outcome> {
    let m = deformed_extension(&family(), &poly_phi())?;
    let displayed = [
        [
            e("u1^2 - 2*u4*sin(u1)"),
            e("u1*u2 - 2*u4*1"),
            e("1"),
            e("0"),
        ],
        [e("u1*u2 - 2*u4*1"), e("u2^2"), e("0"), e("1")],
        [e("1"), e("0"), e("0"), e("0")],
        [e("0"), e("1"), e("0"), e("0")],
    ];
    let d = SampleDomain::cube(4, -2.0, 2.0)?.with_count(25);
    let (mut entry_gap, mut inverse_gap): (f64, f64) = (0.0, 0.0);
    let mut signature_ok = true;
    for p in sample_points(&d)? {
        let g = m.metric_at(&p)?;
        for (a, row) in displayed.iter().enumerate() {
            for (b, x) in row.iter().enumerate() {
                entry_gap = entry_gap.max((g[(a, b)] - x.eval(&p)?).abs());
            }
        }
        inverse_gap = inverse_gap.max(
            g.mul(&m.inverse_metric_at(&p)?)
                .sub(&Matrix::identity(4))
                .max_abs(),
        );
        signature_ok &= m.signature_at(&p)? == (2, 2);
    }
    outcome(
        entry_gap <= 1e-13 && inverse_gap <= 1e-13 && signature_ok,
        format!("entry gap {entry_gap:.3e}, g·g⁻¹ gap {inverse_gap:.3e}, signature (2,2): {signature_ok}"),
    )
}

fn c8_levi_civita() -> Result<Outcome> {
    let d = SampleDomain::cube(4, -1.0, 1.0)?.with_count(50);
    let mut worst: f64 = 0.0;
    let mut base_exact = true;
    for g in gallery() {
        for m in [
            riemannian_extension(&g.connection),
            deformed_extension(&g.connection, &poly_phi())?,
        ] {
            for p in sample_points(&d)? {
                worst = worst.max(metric_compatibility_at(&m, &p)?);
                let lc = levi_civita_at(&m, &p)?;
                for k in 0..2 {
                    for i in 0..2 {
                        for j in 0..2 {
                            base_exact &=
                                lc.get(&[k, i, j]) == g.connection.symbol(k, i, j).eval(&p[..2])?;
                        }
                    }
                }
            }
        }
    }
    outcome(
        worst <= 1e-11 && base_exact,
        format!("max scaled ∇g residual {worst:.3e} (tol 1e-11), base symbols exact: {base_exact}"),
    )
}

fn c9_extension_equivalence() -> Result<Outcome> {
    let d = SampleDomain::cube(4, -1.0, 1.0)?;
    let mut pass = true;
    let mut parts = Vec::new();
    let mut worst_positive: f64 = 0.0;
    for g in gallery() {
        let mut d = d.clone();
        d.bounds[..2].copy_from_slice(&g.domain.bounds);
        let base = g.connection.is_affine_szabo(&g.domain)?.outcome;
        let ext =
            metric_szabo_survey(&deformed_extension(&g.connection, &poly_phi())?, &d)?.nilpotent;
        pass &= base == ext.outcome && base == g.szabo;
        if g.szabo {
            worst_positive = worst_positive.max(ext.residual);
        }
        parts.push(format!("{}: {base}/{}", g.name, ext.outcome));
    }
    pass &= worst_positive <= 1e-8;
    outcome(
        pass,
        format!(
            "base/extension {}; positive-case residual {worst_positive:.3e}",
            parts.join(", ")
        ),
    )
}

fn c10_block_structure() -> Result<Outcome> {
    let m = riemannian_extension(&szabo_forge::affine::wong_connection(&e("u1*u2"))?);
    let d = SampleDomain::cube(2, -1.0, 1.0)?.with_count(100);
    let mut sampler = Sampler::new(7);
    let (mut blocks, mut square): (f64, f64) = (0.0, 0.0);
    for base in sample_points(&d)? {
        let p = [base[0], base[1], 0.0, 0.0];
        let x = LiftedVector::new(&m, &p, sampler.unit_direction(2), vec![0.0, 0.0])?;
        let r = block_structure_check(&m, &p, &x)?;
        blocks = blocks.max(r.max());
        let big = char_poly(&szabo_forge::metric::metric_szabo_operator(&m, &p, &x)?);
        let small = char_poly(
            &m.base()
                .szabo_operator(&base, &Direction::new(x.alpha.clone()))?,
        );
        let sq = small.product(&small);
        for (a, b) in big.coefficients().iter().zip(sq.coefficients()) {
            square = square.max((a - b).abs());
        }
    }
    outcome(
        blocks <= 1e-8 && square <= 1e-8,
        format!("block residual {blocks:.3e}, P[S̃] − P[S]² gap {square:.3e} (tol 1e-8)"),
    )
}

fn c11_determinism() -> Result<Outcome> {
    let text =
        r#"{"dimension": 2, "christoffel": {"1_11": "-u2", "2_22": "u1"}, "phi": {"12": "u1*u2"}}"#;
    let o = DomainOverrides {
        samples: Some(50),
        ..Default::default()
    };
    let a = cmd_extend(&ManifoldSpec::from_json(text)?, &o)?.to_json();
    let b = cmd_extend(&ManifoldSpec::from_json(text)?, &o)?.to_json();
    outcome(a == b, format!("{} bytes, identical: {}", a.len(), a == b))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, Criterion); 11] = [
        ("Ricci formula fidelity", c1_ricci_fidelity),
        ("closed-form route equivalence", c2_route_equivalence),
        ("affine Szabó verdicts", c3_szabo_verdicts),
        ("cyclic-parallel equivalence", c4_cyclic_parallel),
        ("skew-Ricci forward implication", c5_skew_ricci),
        ("recurrence covector and curl", c6_recurrence),
        ("extension construction", c7_extension_construction),
        ("Levi-Civita correctness", c8_levi_civita),
        ("extension equivalence", c9_extension_equivalence),
        ("block structure and product identity", c10_block_structure),
        ("report determinism", c11_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(err) => (false, format!("error: {err}")),
        };
        println!(
            "criterion {:>2} {}: {name}: {detail}",
            i + 1,
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
