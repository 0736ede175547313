//! Torsion-free affine connections on an n-chart: curvature, Ricci, ∇R,
//! the affine Szabó operator and the sampled surface classifications.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{EvalError, Expr};
use crate::smallnum::{
    draw_points, fd_partial, is_nilpotent, FdOrder, Matrix, SampleDomain, Sampler, SINGULAR_MARGIN,
};
use crate::tensor::{szabo_matrix, ConnectionJet, TensorValues};
use crate::verdict::{ResidualMax, Verdict};

/// Tangent vector X = Σ αᵢ∂ᵢ in coordinate components.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Direction(pub Vec<f64>);

impl Direction {
    pub fn new(components: impl Into<Vec<f64>>) -> Self {
        Direction(components.into())
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|a| *a == 0.0)
    }
}

/// Christoffel symbols Γᵏᵢⱼ as expressions, symmetric in (i, j), together
/// with their symbolic first and second partial derivatives.
#[derive(Clone, Debug)]
pub struct AffineConnection {
    dim: usize,
    // [k][i][j]
    symbols: Vec<Expr>,
    // [e][k][i][j]
    first: Vec<Expr>,
    // [e][f][k][i][j]
    second: Vec<Expr>,
}

impl AffineConnection {
    /// Builds a connection from the full `[k][i][j]` array (zero-based).
    /// Fails if any pair Γᵏᵢⱼ, Γᵏⱼᵢ differs structurally.
    pub fn new(dim: usize, symbols: Vec<Expr>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput(
                "connection dimension must be positive".into(),
            ));
        }
        if symbols.len() != dim.pow(3) {
            return Err(Error::Dimension {
                expected: dim.pow(3),
                found: symbols.len(),
            });
        }
        for k in 0..dim {
            for i in 0..dim {
                for j in i + 1..dim {
                    if symbols[(k * dim + i) * dim + j] != symbols[(k * dim + j) * dim + i] {
                        return Err(Error::InvalidInput(format!(
                            "connection has torsion: Γ^{}_{}{} ≠ Γ^{}_{}{}",
                            k + 1,
                            i + 1,
                            j + 1,
                            k + 1,
                            j + 1,
                            i + 1
                        )));
                    }
                }
            }
        }
        for (idx, e) in symbols.iter().enumerate() {
            if e.arity() > dim {
                return Err(Error::InvalidInput(format!(
                    "Christoffel entry #{idx} uses coordinate {} on a {dim}-chart",
                    e.arity()
                )));
            }
        }
        let n = dim;
        let mut first = Vec::with_capacity(n.pow(4));
        for e in 0..n {
            for s in &symbols {
                first.push(s.diff(e));
            }
        }
        let mut second = vec![Expr::zero(); n.pow(5)];
        let block = n.pow(3);
        for e in 0..n {
            for f in e..n {
                for s in 0..block {
                    let d = first[e * block + s].diff(f);
                    second[(e * n + f) * block + s] = d.clone();
                    second[(f * n + e) * block + s] = d;
                }
            }
        }
        Ok(AffineConnection {
            dim,
            symbols,
            first,
            second,
        })
    }

    /// Builds from sparse zero-based `(k, i, j)` entries; the symmetric
    /// partner is filled in. Conflicting duplicates are rejected.
    pub fn from_entries(
        dim: usize,
        entries: impl IntoIterator<Item = ((usize, usize, usize), Expr)>,
    ) -> Result<Self> {
        let mut symbols: Vec<Option<Expr>> = vec![None; dim.pow(3)];
        for ((k, i, j), e) in entries {
            if k >= dim || i >= dim || j >= dim {
                return Err(Error::InvalidInput(format!(
                    "Christoffel index ({}, {}, {}) out of range for dimension {dim}",
                    k + 1,
                    i + 1,
                    j + 1
                )));
            }
            for slot in [(k * dim + i) * dim + j, (k * dim + j) * dim + i] {
                match &symbols[slot] {
                    Some(prev) if *prev != e => {
                        return Err(Error::InvalidInput(format!(
                            "conflicting entries for Γ^{}_{}{}",
                            k + 1,
                            i.min(j) + 1,
                            i.max(j) + 1
                        )))
                    }
                    _ => symbols[slot] = Some(e.clone()),
                }
            }
        }
        AffineConnection::new(
            dim,
            symbols
                .into_iter()
                .map(|s| s.unwrap_or_else(Expr::zero))
                .collect(),
        )
    }

    pub fn flat(dim: usize) -> Self {
        AffineConnection::new(dim, vec![Expr::zero(); dim.pow(3)]).expect("flat connection")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Γᵏᵢⱼ, zero-based.
    pub fn symbol(&self, k: usize, i: usize, j: usize) -> &Expr {
        &self.symbols[(k * self.dim + i) * self.dim + j]
    }

    /// ∂ₑΓᵏᵢⱼ as an expression.
    pub fn symbol_derivative(&self, e: usize, k: usize, i: usize, j: usize) -> &Expr {
        &self.first[e * self.dim.pow(3) + (k * self.dim + i) * self.dim + j]
    }

    pub fn symbols(&self) -> &[Expr] {
        &self.symbols
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: p.len(),
            });
        }
        Ok(())
    }

    /// Γ, ∂Γ and ∂∂Γ evaluated at `p`.
    pub fn jet(&self, p: &[f64]) -> Result<ConnectionJet> {
        self.check_point(p)?;
        let eval_all =
            |es: &[Expr]| -> Result<Vec<f64>, EvalError> { es.iter().map(|e| e.eval(p)).collect() };
        Ok(ConnectionJet {
            dim: self.dim,
            gamma: eval_all(&self.symbols)?,
            d_gamma: eval_all(&self.first)?,
            dd_gamma: eval_all(&self.second)?,
        })
    }

    /// True when the jet is finite at `p` and at `p ± margin·eᵢ`.
    pub fn is_regular_near(&self, p: &[f64], margin: f64) -> bool {
        if self.jet(p).is_err() {
            return false;
        }
        (0..p.len()).all(|i| {
            [-margin, margin].iter().all(|h| {
                let mut q = p.to_vec();
                q[i] += h;
                self.jet(&q).is_ok()
            })
        })
    }

    /// Rˡᵢⱼₖ = dxˡ(R(∂ᵢ,∂ⱼ)∂ₖ), index order (l, i, j, k).
    pub fn curvature_at(&self, p: &[f64]) -> Result<TensorValues> {
        Ok(self.jet(p)?.curvature())
    }

    /// ρⱼₖ, index order (j, k).
    pub fn ricci_at(&self, p: &[f64]) -> Result<TensorValues> {
        Ok(self.jet(p)?.ricci())
    }

    /// (∇ₐR)ˡᵢⱼₖ, index order (a, l, i, j, k).
    pub fn nabla_curvature_at(&self, p: &[f64]) -> Result<TensorValues> {
        Ok(self.jet(p)?.nabla_curvature())
    }

    /// (∇ₐρ)ⱼₖ, index order (a, j, k).
    pub fn nabla_ricci_at(&self, p: &[f64]) -> Result<TensorValues> {
        Ok(self.jet(p)?.nabla_ricci())
    }

    /// Matrix of Y ↦ (∇_X R)(Y,X)X in the coordinate frame; column m is the
    /// image of ∂ₘ.
    pub fn szabo_operator(&self, p: &[f64], x: &Direction) -> Result<Matrix> {
        self.check_direction(x)?;
        if x.is_zero() {
            return Err(Error::InvalidInput(
                "Szabó operator needs a nonzero direction".into(),
            ));
        }
        Ok(szabo_matrix(&self.nabla_curvature_at(p)?, x.components()))
    }

    fn check_direction(&self, x: &Direction) -> Result<()> {
        if x.0.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: x.0.len(),
            });
        }
        Ok(())
    }

    /// Surface Szabó operator from the closed-form cubic coefficients
    /// A, B, C, D in (α₁, α₂), with S(X)∂₁ = A∂₁ + B∂₂ and
    /// S(X)∂₂ = C∂₁ + D∂₂. Returned in the same coordinate frame as
    /// [`szabo_operator`](Self::szabo_operator), i.e. `[[A, C], [B, D]]`.
    pub fn szabo_surface_closed_form(&self, p: &[f64], alpha: &Direction) -> Result<Matrix> {
        if self.dim != 2 {
            return Err(Error::InvalidInput(
                "closed-form Szabó operator is for surfaces".into(),
            ));
        }
        self.check_direction(alpha)?;
        let jet = self.jet(p)?;
        let c = SurfaceSzaboCoefficients::from_jet(&jet, alpha.components());
        Ok(Matrix::from_rows(&[[c.a, c.c], [c.b, c.d]]))
    }

    fn regular(&self) -> impl Fn(&[f64]) -> bool + '_ {
        move |p| self.is_regular_near(p, SINGULAR_MARGIN)
    }

    fn check_domain(&self, d: &SampleDomain) -> Result<()> {
        if d.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: d.dim(),
            });
        }
        Ok(())
    }

    /// Seeded (point, unit direction) pairs; points avoid singular
    /// coordinate values.
    pub fn sample_pairs(&self, d: &SampleDomain) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        self.check_domain(d)?;
        let mut sampler = Sampler::new(d.seed);
        let points = draw_points(d, &mut sampler, self.regular())?;
        Ok(points
            .into_iter()
            .map(|p| {
                let dir = sampler.unit_direction(self.dim);
                (p, dir)
            })
            .collect())
    }

    fn sample_points(&self, d: &SampleDomain) -> Result<Vec<Vec<f64>>> {
        self.check_domain(d)?;
        draw_points(d, &mut Sampler::new(d.seed), self.regular())
    }

    /// Affine Szabó test: scaled char-poly coefficients of S(X) over
    /// sampled (p, X) with ‖X‖ = 1 must all be ≤ `d.tol`.
    pub fn is_affine_szabo(&self, d: &SampleDomain) -> Result<Verdict> {
        let mut acc = ResidualMax::default();
        for (p, dir) in self.sample_pairs(d)? {
            let s = szabo_matrix(&self.nabla_curvature_at(&p)?, &dir);
            acc.observe(is_nilpotent(&s, d.tol).residual, &p, Some(&dir));
        }
        Ok(acc.finish(d))
    }

    /// Closed-form surface operator against the general ∇R route over
    /// sampled (p, X), scaled by max(1, max|S|).
    pub fn closed_form_agreement(&self, d: &SampleDomain) -> Result<Verdict> {
        let mut acc = ResidualMax::default();
        for (p, dir) in self.sample_pairs(d)? {
            let x = Direction::new(dir.clone());
            let general = self.szabo_operator(&p, &x)?;
            let closed = self.szabo_surface_closed_form(&p, &x)?;
            acc.observe(
                general.sub(&closed).max_abs() / general.max_abs().max(1.0),
                &p,
                Some(&dir),
            );
        }
        Ok(acc.finish(d))
    }

    /// Cyclic sum (∇ᵢρ)ⱼₖ + (∇ⱼρ)ₖᵢ + (∇ₖρ)ᵢⱼ over all index triples,
    /// scaled by max(1, max|∇ρ|).
    pub fn cyclic_parallel_residual_at(&self, p: &[f64]) -> Result<f64> {
        let nr = self.nabla_ricci_at(p)?;
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let s = nr.get(&[i, j, k]) + nr.get(&[j, k, i]) + nr.get(&[k, i, j]);
                    worst = worst.max(s.abs());
                }
            }
        }
        Ok(worst / nr.max_abs().max(1.0))
    }

    pub fn is_cyclic_parallel(&self, d: &SampleDomain) -> Result<Verdict> {
        let mut acc = ResidualMax::default();
        for p in self.sample_points(d)? {
            acc.observe(self.cyclic_parallel_residual_at(&p)?, &p, None);
        }
        Ok(acc.finish(d))
    }

    /// Classifies the sampled Ricci tensor of a surface as skew, symmetric,
    /// both (zero) or neither.
    pub fn ricci_symmetry_classify(&self, d: &SampleDomain) -> Result<RicciClassification> {
        if self.dim != 2 {
            return Err(Error::InvalidInput(
                "Ricci classification is for surfaces".into(),
            ));
        }
        let mut skew = ResidualMax::default();
        let mut sym = ResidualMax::default();
        let mut min_norm = f64::INFINITY;
        let mut min_norm_point = None;
        let points = self.sample_points(d)?;
        for p in &points {
            let rho = self.ricci_at(p)?;
            let (r11, r12, r21, r22) = (
                rho.get(&[0, 0]),
                rho.get(&[0, 1]),
                rho.get(&[1, 0]),
                rho.get(&[1, 1]),
            );
            let size = rho.max_abs();
            let scale = size.max(1.0);
            skew.observe(
                r11.abs().max(r22.abs()).max((r12 + r21).abs()) / scale,
                p,
                None,
            );
            sym.observe((r12 - r21).abs() / scale, p, None);
            if size < min_norm {
                min_norm = size;
                min_norm_point = Some(p.clone());
            }
        }
        let skew = skew.finish(d);
        let symmetric = sym.finish(d);
        let symmetry = match (skew.outcome, symmetric.outcome) {
            (true, true) => RicciSymmetry::Zero,
            (true, false) => RicciSymmetry::Skew,
            (false, true) => RicciSymmetry::Symmetric,
            (false, false) => RicciSymmetry::Mixed,
        };
        Ok(RicciClassification {
            symmetry,
            nonzero_everywhere: min_norm >= d.tol,
            skew,
            symmetric,
            min_ricci_norm: min_norm,
            min_ricci_point: min_norm_point.unwrap_or_default(),
        })
    }

    /// Solves (∇ᵢρ)ⱼₖ = αᵢ ρⱼₖ at one point in the least-squares sense.
    pub fn recurrence_at(&self, p: &[f64], tol: f64) -> Result<PointRecurrence> {
        let jet = self.jet(p)?;
        let rho = jet.ricci();
        let nr = jet.nabla_ricci();
        let n = self.dim;
        let rho_size = rho.max_abs();
        if rho_size <= tol {
            return Ok(PointRecurrence::Degenerate);
        }
        let nr_scale = nr.max_abs().max(1.0);
        if nr.max_abs() <= tol * rho_size.max(1.0) {
            return Ok(PointRecurrence::ZeroNablaRho);
        }
        let norm2: f64 = rho.as_slice().iter().map(|x| x * x).sum();
        let mut alpha = vec![0.0; n];
        for (i, a) in alpha.iter_mut().enumerate() {
            let mut dot = 0.0;
            for j in 0..n {
                for k in 0..n {
                    dot += nr.get(&[i, j, k]) * rho.get(&[j, k]);
                }
            }
            *a = dot / norm2;
        }
        let mut residual: f64 = 0.0;
        for (i, a) in alpha.iter().enumerate() {
            for j in 0..n {
                for k in 0..n {
                    residual = residual.max((nr.get(&[i, j, k]) - a * rho.get(&[j, k])).abs());
                }
            }
        }
        Ok(PointRecurrence::Covector {
            alpha,
            residual: residual / nr_scale,
        })
    }

    /// Sampled recurrence analysis of the Ricci tensor.
    pub fn recurrence_covector(&self, d: &SampleDomain) -> Result<RecurrenceReport> {
        let mut covectors = Vec::new();
        let mut skipped = Vec::new();
        let mut zero_nabla = 0;
        let mut acc = ResidualMax::default();
        for p in self.sample_points(d)? {
            match self.recurrence_at(&p, d.tol)? {
                PointRecurrence::Degenerate => skipped.push(p),
                PointRecurrence::ZeroNablaRho => {
                    zero_nabla += 1;
                    acc.observe(0.0, &p, None);
                    covectors.push(CovectorSample {
                        alpha: vec![0.0; self.dim],
                        residual: 0.0,
                        point: p,
                    });
                }
                PointRecurrence::Covector { alpha, residual } => {
                    acc.observe(residual, &p, None);
                    covectors.push(CovectorSample {
                        point: p,
                        alpha,
                        residual,
                    });
                }
            }
        }
        let kind = if covectors.is_empty() {
            RecurrenceKind::Degenerate
        } else if acc.residual() > d.tol {
            RecurrenceKind::NotRecurrent
        } else if zero_nabla == covectors.len() {
            RecurrenceKind::ZeroNablaRho
        } else {
            RecurrenceKind::Recurrent
        };
        Ok(RecurrenceReport {
            kind,
            residual: acc.residual(),
            covectors,
            skipped,
            tolerance: d.tol,
            seed: d.seed,
        })
    }

    /// Finite-difference curl ∂₁α₂ − ∂₂α₁ of the recurrence covector at
    /// the sampled points where ‖α‖ ≥ tol.
    pub fn covector_closedness(&self, d: &SampleDomain) -> Result<ClosednessReport> {
        if self.dim != 2 {
            return Err(Error::InvalidInput(
                "covector closedness is for surfaces".into(),
            ));
        }
        let report = self.recurrence_covector(d)?;
        if report.kind != RecurrenceKind::Recurrent {
            return Err(Error::InvalidInput(format!(
                "recurrence covector unavailable: {:?}",
                report.kind
            )));
        }
        let tol = d.tol;
        let alpha_at = |q: &[f64]| -> std::result::Result<Vec<f64>, EvalError> {
            match self.recurrence_at(q, tol) {
                Ok(PointRecurrence::Covector { alpha, .. }) => Ok(alpha),
                Ok(PointRecurrence::ZeroNablaRho) => Ok(vec![0.0; 2]),
                Ok(PointRecurrence::Degenerate) => Err(EvalError::Domain {
                    subtree: "<degenerate Ricci tensor>".into(),
                    point: q.to_vec(),
                }),
                Err(Error::Eval(e)) => Err(e),
                Err(e) => Err(EvalError::Domain {
                    subtree: e.to_string(),
                    point: q.to_vec(),
                }),
            }
        };
        let mut curls = Vec::new();
        for s in &report.covectors {
            let norm = s.alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm < tol {
                continue;
            }
            let curl = curl_2d(alpha_at, &s.point)?;
            curls.push(CurlSample {
                point: s.point.clone(),
                curl,
            });
        }
        Ok(ClosednessReport::from_samples(curls, tol))
    }
}

/// ∂₁α₂ − ∂₂α₁ of a covector field by central differences.
pub fn curl_2d<F>(alpha: F, p: &[f64]) -> Result<f64>
where
    F: Fn(&[f64]) -> std::result::Result<Vec<f64>, EvalError>,
{
    let d1_a2 = fd_partial(|q| Ok(alpha(q)?[1]), p, 0, FdOrder::First)?;
    let d2_a1 = fd_partial(|q| Ok(alpha(q)?[0]), p, 1, FdOrder::First)?;
    Ok(d1_a2 - d2_a1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RicciSymmetry {
    Skew,
    Symmetric,
    Mixed,
    /// both skew and symmetric within tolerance, i.e. ρ ≈ 0
    Zero,
}

impl RicciSymmetry {
    pub fn as_str(self) -> &'static str {
        match self {
            RicciSymmetry::Skew => "skew",
            RicciSymmetry::Symmetric => "symmetric",
            RicciSymmetry::Mixed => "mixed",
            RicciSymmetry::Zero => "zero",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RicciClassification {
    pub symmetry: RicciSymmetry,
    pub nonzero_everywhere: bool,
    /// max of |ρ₁₁|, |ρ₂₂|, |ρ₁₂ + ρ₂₁| (scaled)
    pub skew: Verdict,
    /// max of |ρ₁₂ − ρ₂₁| (scaled)
    pub symmetric: Verdict,
    pub min_ricci_norm: f64,
    pub min_ricci_point: Vec<f64>,
}

impl RicciClassification {
    pub fn is_skew_nonzero(&self) -> bool {
        self.symmetry == RicciSymmetry::Skew && self.nonzero_everywhere
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PointRecurrence {
    /// ρ ≈ 0: α undetermined
    Degenerate,
    /// ∇ρ ≈ 0: α = 0 by convention
    ZeroNablaRho,
    Covector {
        alpha: Vec<f64>,
        residual: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecurrenceKind {
    Recurrent,
    NotRecurrent,
    ZeroNablaRho,
    Degenerate,
}

#[derive(Clone, Debug, Serialize)]
pub struct CovectorSample {
    pub point: Vec<f64>,
    pub alpha: Vec<f64>,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecurrenceReport {
    pub kind: RecurrenceKind,
    pub residual: f64,
    pub covectors: Vec<CovectorSample>,
    /// points where ρ ≈ 0
    pub skipped: Vec<Vec<f64>>,
    pub tolerance: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CurlSample {
    pub point: Vec<f64>,
    pub curl: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosednessReport {
    pub samples: Vec<CurlSample>,
    pub max_abs_curl: f64,
    pub min_abs_curl: f64,
    /// |curl| ≥ 10·tol at every evaluated sample
    pub not_gradient: bool,
}

impl ClosednessReport {
    pub fn from_samples(samples: Vec<CurlSample>, tol: f64) -> Self {
        let max_abs_curl = samples.iter().fold(0.0, |m: f64, s| m.max(s.curl.abs()));
        let min_abs_curl = samples
            .iter()
            .fold(f64::INFINITY, |m: f64, s| m.min(s.curl.abs()));
        ClosednessReport {
            not_gradient: !samples.is_empty() && min_abs_curl >= 10.0 * tol,
            max_abs_curl,
            min_abs_curl,
            samples,
        }
    }
}

/// Closed-form Szabó coefficients of a surface connection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceSzaboCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl SurfaceSzaboCoefficients {
    pub fn from_jet(jet: &ConnectionJet, alpha: &[f64]) -> Self {
        let rho = jet.ricci();
        let drho = jet.ricci_derivative();
        let (a1, a2) = (alpha[0], alpha[1]);
        let g111 = jet.g(0, 0, 0);
        let g112 = jet.g(0, 0, 1);
        let g122 = jet.g(0, 1, 1);
        let g211 = jet.g(1, 0, 0);
        let g212 = jet.g(1, 0, 1);
        let g222 = jet.g(1, 1, 1);
        let r11 = rho.get(&[0, 0]);
        let r12 = rho.get(&[0, 1]);
        let r21 = rho.get(&[1, 0]);
        let r22 = rho.get(&[1, 1]);
        let d1 = |j: usize, k: usize| drho.get(&[0, j, k]);
        let d2 = |j: usize, k: usize| drho.get(&[1, j, k]);
        let (d1r11, d1r12, d1r21, d1r22) = (d1(0, 0), d1(0, 1), d1(1, 0), d1(1, 1));
        let (d2r11, d2r12, d2r21, d2r22) = (d2(0, 0), d2(0, 1), d2(1, 0), d2(1, 1));
        let rs = r12 + r21;

        let a = a1 * a1 * a2 * (d1r21 - (g111 + g212) * r21 - g112 * r11 - g211 * r22)
            + a1 * a2
                * a2
                * (d2r21 + d1r22 - (g112 + g222) * r21 - rs * g112 - g122 * r11 - 3.0 * g212 * r22)
            + a2 * a2 * a2 * (d2r22 - 2.0 * g222 * r22 - rs * g122);
        let b = a1 * a1 * a2 * (-d1r11 + 2.0 * g111 * r11 + rs * g211)
            + a1 * a2
                * a2
                * (-d2r11 - d1r12
                    + 3.0 * g112 * r11
                    + g211 * r22
                    + rs * g212
                    + (g111 + g212) * r12)
            + a2 * a2 * a2 * (-d2r12 + g122 * r11 + g212 * r22 + (g112 + g222) * r12);
        // The α₁³ bracket carries +Γ²₁₁ρ₂₂; S(X)X = 0 forces it.
        let c = a1 * a1 * a1 * (-d1r21 + (g111 + g212) * r21 + g112 * r11 + g211 * r22)
            + a1 * a1
                * a2
                * (-d2r21 - d1r22
                    + (g112 + g222) * r21
                    + g122 * r11
                    + 3.0 * g212 * r22
                    + rs * g112)
            + a1 * a2 * a2 * (-d2r22 + 2.0 * g222 * r22 + rs * g122);
        let d = a1 * a1 * a1 * (d1r11 - 2.0 * g111 * r11 - rs * g211)
            + a1 * a1
                * a2
                * (d2r11 + d1r12 - 3.0 * g112 * r11 - g211 * r22 - (g111 + g212) * r12 - rs * g212)
            + a1 * a2 * a2 * (d2r12 - g122 * r11 - g212 * r22 - (g112 + g222) * r12);
        SurfaceSzaboCoefficients { a, b, c, d }
    }
}

/// The four surface Ricci components written out in Christoffel symbols,
/// `[[ρ₁₁, ρ₁₂], [ρ₂₁, ρ₂₂]]`.
pub fn surface_ricci_formula(jet: &ConnectionJet) -> [[f64; 2]; 2] {
    let g = |k: usize, i: usize, j: usize| jet.g(k, i, j);
    let d = |e: usize, k: usize, i: usize, j: usize| jet.dg(e, k, i, j);
    let (g111, g112, g122) = (g(0, 0, 0), g(0, 0, 1), g(0, 1, 1));
    let (g211, g212, g222) = (g(1, 0, 0), g(1, 0, 1), g(1, 1, 1));
    let r21 = d(0, 0, 0, 1) - d(1, 0, 0, 0) + g112 * g212 - g211 * g122;
    let r11 =
        -(d(0, 1, 0, 1) - d(1, 1, 0, 0) + g211 * g112 + g212 * g212 - g111 * g212 - g211 * g222);
    let r22 = d(0, 0, 1, 1) - d(1, 0, 0, 1) + g111 * g122 + g112 * g222 - g112 * g112 - g212 * g122;
    let r12 = -(d(0, 1, 1, 1) - d(1, 1, 0, 1) + g211 * g122 - g112 * g212);
    [[r11, r12], [r21, r22]]
}

/// Checks on a seeded random quadratic connection that the trace
/// convention reproduces the written-out surface Ricci formulas and
/// `R(∂₁,∂₂)∂₁ = ρ₂₁∂₁ − ρ₁₁∂₂`, `R(∂₁,∂₂)∂₂ = ρ₂₂∂₁ − ρ₁₂∂₂`.
/// Returns the largest discrepancy.
pub fn convention_self_test(seed: u64) -> Result<f64> {
    let mut s = Sampler::new(seed);
    let mut coef = || (s.uniform(-2.0, 2.0) * 8.0).round() / 8.0;
    let mut entries = Vec::new();
    for k in 0..2 {
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            let (c0, c1, c2, c3, c4) = (coef(), coef(), coef(), coef(), coef());
            let u = Expr::var(0);
            let v = Expr::var(1);
            let e = Expr::constant(c0)
                + Expr::constant(c1) * u.clone()
                + Expr::constant(c2) * v.clone()
                + Expr::constant(c3) * u.clone() * v.clone()
                + Expr::constant(c4) * u.powi(2);
            entries.push(((k, i, j), e));
        }
    }
    let conn = AffineConnection::from_entries(2, entries)?;
    let mut worst: f64 = 0.0;
    let mut sampler = Sampler::new(seed ^ 0x5eed);
    for _ in 0..8 {
        let p = sampler.point(&[(-1.0, 1.0), (-1.0, 1.0)]);
        let jet = conn.jet(&p)?;
        let r = jet.curvature();
        let rho = jet.ricci();
        let formula = surface_ricci_formula(&jet);
        for (j, row) in formula.iter().enumerate() {
            for (k, f) in row.iter().enumerate() {
                worst = worst.max((rho.get(&[j, k]) - f).abs());
            }
        }
        worst = worst
            .max((r.get(&[0, 0, 1, 0]) - rho.get(&[1, 0])).abs())
            .max((r.get(&[1, 0, 1, 0]) + rho.get(&[0, 0])).abs())
            .max((r.get(&[0, 0, 1, 1]) - rho.get(&[1, 1])).abs())
            .max((r.get(&[1, 0, 1, 1]) + rho.get(&[0, 1])).abs());
    }
    Ok(worst)
}

/// Surface connection whose only nonzero symbols are Γ¹₁₁ = −∂₁φ and
/// Γ²₂₂ = ∂₂φ.
pub fn wong_connection(phi: &Expr) -> Result<AffineConnection> {
    if phi.arity() > 2 {
        return Err(Error::InvalidInput(
            "potential must depend on (u1, u2) only".into(),
        ));
    }
    let g111 = (-phi.diff(0)).simplify();
    let g222 = phi.diff(1).simplify();
    AffineConnection::from_entries(2, [((0, 0, 0), g111), ((1, 1, 1), g222)])
}

/// Surface family ∇_{∂₁}∂₁ = f₁(u₁)∂₂, ∇_{∂₁}∂₂ = f₂(u₁)∂₂.
#[derive(Clone, Debug)]
pub struct ExampleFamilySpec {
    pub f1: Expr,
    pub f2: Expr,
}

impl ExampleFamilySpec {
    pub fn new(f1: Expr, f2: Expr) -> Result<Self> {
        if f1.arity() > 1 || f2.arity() > 1 {
            return Err(Error::InvalidInput(
                "f1 and f2 must depend on u1 only".into(),
            ));
        }
        Ok(ExampleFamilySpec { f1, f2 })
    }

    /// b = ∂₁f₂ + f₂².
    pub fn b(&self) -> Expr {
        (self.f2.diff(0) + self.f2.powi(2)).simplify()
    }

    pub fn connection(&self) -> Result<AffineConnection> {
        AffineConnection::from_entries(
            2,
            [((1, 0, 0), self.f1.clone()), ((1, 0, 1), self.f2.clone())],
        )
    }

    /// Samples |∂₁b| and |∂₂b|; the family constraint holds when both
    /// vanish, i.e. b is constant.
    pub fn constraint_verdict(&self, d: &SampleDomain) -> Result<Verdict> {
        let b = self.b();
        let db = [b.diff(0), b.diff(1)];
        let mut acc = ResidualMax::default();
        let points = draw_points(d, &mut Sampler::new(d.seed), |p| {
            db.iter().all(|e| e.eval(p).is_ok())
        })?;
        for p in points {
            let r = db
                .iter()
                .map(|e| e.eval(&p).map(f64::abs))
                .collect::<std::result::Result<Vec<_>, _>>()?
                .into_iter()
                .fold(0.0, f64::max);
            acc.observe(r, &p, None);
        }
        Ok(acc.finish(d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn uv() -> Vec<String> {
        vec!["u1".into(), "u2".into()]
    }

    fn e(s: &str) -> Expr {
        parse(s, &uv()).unwrap()
    }

    fn wong(phi: &str) -> AffineConnection {
        wong_connection(&e(phi)).unwrap()
    }

    fn family() -> AffineConnection {
        ExampleFamilySpec::new(e("sin(u1)"), e("1"))
            .unwrap()
            .connection()
            .unwrap()
    }

    fn only_g111_u2() -> AffineConnection {
        AffineConnection::from_entries(2, [((0, 0, 0), e("u2"))]).unwrap()
    }

    fn domain() -> SampleDomain {
        SampleDomain::cube(2, -1.0, 1.0).unwrap()
    }

    #[test]
    fn torsion_is_rejected() {
        let mut symbols = vec![Expr::zero(); 8];
        symbols[1] = e("u1"); // Γ¹₁₂
        assert!(AffineConnection::new(2, symbols).is_err());
        let conflict =
            AffineConnection::from_entries(2, [((0, 0, 1), e("u1")), ((0, 1, 0), e("u2"))]);
        assert!(conflict.is_err());
        let agree = AffineConnection::from_entries(2, [((0, 0, 1), e("u1")), ((0, 1, 0), e("u1"))]);
        assert!(agree.is_ok());
    }

    #[test]
    fn wrong_point_dimension() {
        assert!(matches!(
            family().ricci_at(&[0.0, 0.0, 0.0]),
            Err(Error::Dimension {
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn flat_connection_is_flat() {
        let flat = AffineConnection::flat(2);
        assert_eq!(flat.curvature_at(&[0.3, 0.1]).unwrap().max_abs(), 0.0);
        assert_eq!(flat.ricci_at(&[0.3, 0.1]).unwrap().max_abs(), 0.0);
        assert_eq!(flat.nabla_curvature_at(&[0.3, 0.1]).unwrap().max_abs(), 0.0);
        let s = flat
            .szabo_operator(&[0.3, 0.1], &Direction::new([1.0, 0.0]))
            .unwrap();
        assert_eq!(s.max_abs(), 0.0);
        let c = flat
            .szabo_surface_closed_form(&[0.3, 0.1], &Direction::new([0.6, 0.8]))
            .unwrap();
        assert_eq!(c.max_abs(), 0.0);
    }

    #[test]
    fn wong_potential_u1u2() {
        let c = wong("u1*u2");
        assert_eq!(*c.symbol(0, 0, 0), e("-u2"));
        assert_eq!(*c.symbol(1, 1, 1), e("u1"));
        for p in [[0.0, 0.0], [0.4, -0.9], [-3.0, 2.0]] {
            let r = c.curvature_at(&p).unwrap();
            let rho = c.ricci_at(&p).unwrap();
            assert_eq!(
                rho.to_matrix(),
                Matrix::from_rows(&[[0.0, -1.0], [1.0, 0.0]])
            );
            // R(∂₁,∂₂)∂₁ = ρ₂₁∂₁
            assert_eq!(r.get(&[0, 0, 1, 0]), 1.0);
            assert_eq!(r.get(&[1, 0, 1, 0]), 0.0);
        }
    }

    #[test]
    fn wong_zero_is_flat() {
        let c = wong("0");
        assert!(c.symbols().iter().all(Expr::is_zero));
    }

    #[test]
    fn wong_u1_squared_u2() {
        let c = wong("u1^2*u2");
        for p in [[0.5, 0.2], [1.25, -0.7]] {
            let rho = c.ricci_at(&p).unwrap();
            assert!((rho.get(&[1, 0]) - 2.0 * p[0]).abs() < 1e-14);
            assert!((rho.get(&[0, 1]) + 2.0 * p[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn family_ricci_is_diag_minus_b() {
        let c = family();
        for p in [[0.0, 0.0], [0.7, -0.2]] {
            let rho = c.ricci_at(&p).unwrap().to_matrix();
            assert!(rho.sub(&Matrix::diagonal(&[-1.0, 0.0])).max_abs() < 1e-15);
        }
    }

    /// Curvature from the coordinate formula with ∂Γ taken by central
    /// differences of the evaluated symbols.
    fn fd_curvature(c: &AffineConnection, p: &[f64]) -> Vec<f64> {
        let n = c.dim();
        let g = |k, i, j, q: &[f64]| c.symbol(k, i, j).eval(q);
        let mut out = vec![0.0; n.pow(4)];
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let di = fd_partial(|q| g(l, j, k, q), p, i, FdOrder::First).unwrap();
                        let dj = fd_partial(|q| g(l, i, k, q), p, j, FdOrder::First).unwrap();
                        let mut v = di - dj;
                        for m in 0..n {
                            v += g(m, j, k, p).unwrap() * g(l, i, m, p).unwrap()
                                - g(m, i, k, p).unwrap() * g(l, j, m, p).unwrap();
                        }
                        out[((l * n + i) * n + j) * n + k] = v;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn curvature_matches_fd_oracle() {
        let c = AffineConnection::from_entries(2, [((1, 0, 0), e("sin(u1)")), ((1, 0, 1), e("1"))])
            .unwrap();
        let p = [0.3, -0.7];
        let r = c.curvature_at(&p).unwrap();
        let oracle = fd_curvature(&c, &p);
        for (a, b) in r.as_slice().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn nabla_ricci_hand_value() {
        let c = only_g111_u2();
        let p = [0.0, 1.0];
        let nr = c.nabla_ricci_at(&p).unwrap();
        assert!((nr.get(&[0, 1, 0]) - 1.0).abs() < 1e-15);
        // fd oracle: (∇₁ρ)₂₁ = ∂₁ρ₂₁ − Γᵐ₁₂ρₘ₁ − Γᵐ₁₁ρ₂ₘ
        let rho21 = |q: &[f64]| Ok(c.ricci_at(q).unwrap().get(&[1, 0]));
        let d1 = fd_partial(rho21, &p, 0, FdOrder::First).unwrap();
        let gamma = |k, i, j| c.symbol(k, i, j).eval(&p).unwrap();
        let rho = c.ricci_at(&p).unwrap();
        let mut v = d1;
        for m in 0..2 {
            v -= gamma(m, 0, 1) * rho.get(&[m, 0]) + gamma(m, 0, 0) * rho.get(&[1, m]);
        }
        assert!((v - nr.get(&[0, 1, 0])).abs() < 1e-8);
    }

    #[test]
    fn family_has_parallel_curvature() {
        let c = family();
        for p in [[0.1, 0.2], [-0.8, 0.9]] {
            assert!(c.nabla_curvature_at(&p).unwrap().max_abs() < 1e-8);
            for dir in [[1.0, 0.0], [0.6, -0.8]] {
                let s = c.szabo_operator(&p, &Direction::new(dir)).unwrap();
                assert!(s.max_abs() < 1e-10);
            }
        }
    }

    #[test]
    fn closed_form_matches_general_route() {
        let c = only_g111_u2();
        let p = [0.0, 1.0];
        let dir = Direction::new([1.0, 0.0]);
        let general = c.szabo_operator(&p, &dir).unwrap();
        let closed = c.szabo_surface_closed_form(&p, &dir).unwrap();
        assert!(general.max_abs() > 0.5);
        assert!(general.sub(&closed).max_abs() < 1e-9);

        let w = wong("u1*u2");
        let dir = Direction::new([1.0, 1.0]);
        let general = w.szabo_operator(&[0.0, 0.0], &dir).unwrap();
        let closed = w.szabo_surface_closed_form(&[0.0, 0.0], &dir).unwrap();
        assert!(general.sub(&closed).max_abs() < 1e-10);
    }

    #[test]
    fn closed_form_with_zero_direction() {
        let c = only_g111_u2();
        let m = c
            .szabo_surface_closed_form(&[0.2, 0.5], &Direction::new([0.0, 0.0]))
            .unwrap();
        assert_eq!(m.max_abs(), 0.0);
        assert!(c
            .szabo_operator(&[0.2, 0.5], &Direction::new([0.0, 0.0]))
            .is_err());
    }

    #[test]
    fn szabo_verdicts() {
        let d = domain();
        let flat = AffineConnection::flat(2).is_affine_szabo(&d).unwrap();
        assert!(flat.outcome);
        assert_eq!(flat.residual, 0.0);
        assert!(wong("u1*u2").is_affine_szabo(&d).unwrap().outcome);
        assert!(family().is_affine_szabo(&d).unwrap().outcome);
        let neg = only_g111_u2().is_affine_szabo(&d).unwrap();
        assert!(!neg.outcome);
        assert!(neg.residual > 0.01);
    }

    #[test]
    fn cyclic_parallel_verdicts() {
        let d = domain();
        assert!(wong("u1*u2").is_cyclic_parallel(&d).unwrap().outcome);
        assert!(family().is_cyclic_parallel(&d).unwrap().outcome);
        assert!(!only_g111_u2().is_cyclic_parallel(&d).unwrap().outcome);
        // hand value: the (1,2,1) cyclic sum equals u₂
        let r = only_g111_u2()
            .cyclic_parallel_residual_at(&[0.3, 0.5])
            .unwrap();
        assert!((r - 0.5).abs() < 1e-12, "{r}");
    }

    #[test]
    fn ricci_classification() {
        let d = domain();
        let w = wong("u1*u2").ricci_symmetry_classify(&d).unwrap();
        assert_eq!(w.symmetry, RicciSymmetry::Skew);
        assert!(w.nonzero_everywhere);
        let f = family().ricci_symmetry_classify(&d).unwrap();
        assert_eq!(f.symmetry, RicciSymmetry::Symmetric);
        assert!(f.nonzero_everywhere);
        let z = AffineConnection::flat(2)
            .ricci_symmetry_classify(&d)
            .unwrap();
        assert_eq!(z.symmetry, RicciSymmetry::Zero);
        assert!(!z.nonzero_everywhere);
        let m = only_g111_u2().ricci_symmetry_classify(&d).unwrap();
        assert_eq!(m.symmetry, RicciSymmetry::Mixed);
    }

    #[test]
    fn recurrence_of_wong_u1u2() {
        let d = domain().with_count(40);
        let rep = wong("u1*u2").recurrence_covector(&d).unwrap();
        assert_eq!(rep.kind, RecurrenceKind::Recurrent);
        for s in &rep.covectors {
            assert!((s.alpha[0] - s.point[1]).abs() < 1e-8);
            assert!((s.alpha[1] + s.point[0]).abs() < 1e-8);
        }
        let curl = wong("u1*u2").covector_closedness(&d).unwrap();
        assert!(curl.not_gradient);
        for s in &curl.samples {
            assert!((s.curl + 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn recurrence_curl_of_wong_u1_squared_u2() {
        let d = SampleDomain::new(vec![(0.5, 1.5), (-1.0, 1.0)], 20, 3, 1e-8).unwrap();
        let curl = wong("u1^2*u2").covector_closedness(&d).unwrap();
        assert!(curl.not_gradient);
        for s in &curl.samples {
            assert!((s.curl + 4.0 * s.point[0]).abs() < 1e-5, "{s:?}");
        }
    }

    #[test]
    fn recurrence_degenerate_cases() {
        let d = domain().with_count(20);
        assert_eq!(
            family().recurrence_covector(&d).unwrap().kind,
            RecurrenceKind::ZeroNablaRho
        );
        let flat = AffineConnection::flat(2).recurrence_covector(&d).unwrap();
        assert_eq!(flat.kind, RecurrenceKind::Degenerate);
        assert_eq!(flat.skipped.len(), 20);
        // ∇ρ = −u₂ du₁ ⊗ ρ here, so this one is recurrent with a non-closed α
        let r = only_g111_u2().recurrence_covector(&d).unwrap();
        assert_eq!(r.kind, RecurrenceKind::Recurrent);
        for s in &r.covectors {
            assert!((s.alpha[0] + s.point[1]).abs() < 1e-10 && s.alpha[1].abs() < 1e-10);
        }
        let mixed =
            AffineConnection::from_entries(2, [((0, 0, 0), e("u2")), ((1, 1, 1), e("u1^3"))])
                .unwrap();
        assert_eq!(
            mixed.recurrence_covector(&d).unwrap().kind,
            RecurrenceKind::NotRecurrent
        );
    }

    #[test]
    fn gradient_covector_has_zero_curl() {
        // α = dψ with ψ = u₁²u₂ + sin(u₂)
        let grad = |q: &[f64]| Ok(vec![2.0 * q[0] * q[1], q[0] * q[0] + q[1].cos()]);
        for p in [[0.3, 0.4], [-1.2, 2.0]] {
            assert!(curl_2d(grad, &p).unwrap().abs() < 1e-9);
        }
        let samples = vec![CurlSample {
            point: vec![0.0, 0.0],
            curl: 1e-12,
        }];
        assert!(!ClosednessReport::from_samples(samples, 1e-8).not_gradient);
    }

    #[test]
    fn family_constraint() {
        let d = domain().with_count(30);
        let good = ExampleFamilySpec::new(e("sin(u1)"), e("1")).unwrap();
        assert!(good.constraint_verdict(&d).unwrap().outcome);
        // f₂ = 1/(u₁ + 3) gives b = 0
        let hyperbolic = ExampleFamilySpec::new(e("u1"), e("1/(u1 + 3)")).unwrap();
        assert!(hyperbolic.constraint_verdict(&d).unwrap().outcome);
        let bad = ExampleFamilySpec::new(e("0"), e("u1")).unwrap();
        assert!(!bad.constraint_verdict(&d).unwrap().outcome);
        assert!(ExampleFamilySpec::new(e("u2"), e("1")).is_err());
    }

    #[test]
    fn sign_conventions_self_test() {
        for seed in [1, 2, 3] {
            assert!(convention_self_test(seed).unwrap() < 1e-12);
        }
    }

    #[test]
    fn singular_points_are_avoided() {
        let c = AffineConnection::from_entries(2, [((0, 0, 0), e("log(u1)"))]).unwrap();
        let d = domain().with_count(30);
        let v = c.is_affine_szabo(&d).unwrap();
        assert_eq!(v.samples, 30);
    }
}
