//! Levi-Civita geometry of extension metrics: Christoffel symbols,
//! curvature, the metric Szabó operator, unit lifts and the sampled
//! nilpotency and block-structure checks.

use serde::Serialize;

use crate::affine::Direction;
use crate::error::{Error, Result};
use crate::extension::{
    displayed_christoffels, ChristoffelFamily, DisplayReading, ExtensionMetric,
};
use crate::smallnum::{
    char_poly, draw_points, is_nilpotent, Matrix, SampleDomain, Sampler, SINGULAR_MARGIN,
};
use crate::tensor::{szabo_matrix, ConnectionJet, TensorValues};
use crate::verdict::{ResidualMax, Verdict};

/// Metric components and partial derivatives up to third order at a
/// point, plus the inverse and its first two derivatives.
///
/// Layouts follow [`ExtensionMetric::derivative_tower`]:
/// `dg[e][a][b]`, `ddg[e][f][a][b]`, `dddg[e][f][h][a][b]`.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub dim: usize,
    pub g: Matrix,
    pub ginv: Matrix,
    pub dg: Vec<Matrix>,
    pub ddg: Vec<Matrix>,
    pub dddg: Vec<Matrix>,
}

fn split(flat: &[f64], n: usize) -> Vec<Matrix> {
    flat.chunks(n * n)
        .map(|c| Matrix::from_fn(n, |a, b| c[a * n + b]))
        .collect()
}

impl MetricJet {
    /// `ginv` must be the inverse of `g`; its derivatives follow from
    /// ∂(g⁻¹) = −g⁻¹ (∂g) g⁻¹.
    pub fn new(g: Matrix, ginv: Matrix, dg: &[f64], ddg: &[f64], dddg: &[f64]) -> Self {
        let n = g.dim();
        MetricJet {
            dim: n,
            g,
            ginv,
            dg: split(dg, n),
            ddg: split(ddg, n),
            dddg: split(dddg, n),
        }
    }

    pub fn of_extension(m: &ExtensionMetric, p: &[f64]) -> Result<Self> {
        let g = m.metric_at(p)?;
        let ginv = m.inverse_metric_at(p)?;
        Ok(MetricJet::new(
            g,
            ginv,
            &m.eval_tower(1, p)?,
            &m.eval_tower(2, p)?,
            &m.eval_tower(3, p)?,
        ))
    }

    /// Γ, ∂Γ and ∂∂Γ of the Levi-Civita connection via
    /// Γᶜₐᵦ = ½ gᶜᵈ Tdab with Tdab = ∂ₐg_db + ∂ᵦg_da − ∂_d gab.
    pub fn levi_civita(&self) -> ConnectionJet {
        let n = self.dim;
        let dginv: Vec<Matrix> = self
            .dg
            .iter()
            .map(|d| self.ginv.mul(d).mul(&self.ginv).scale(-1.0))
            .collect();
        let mut ddginv = Vec::with_capacity(n * n);
        for (e, de) in dginv.iter().enumerate() {
            for f in 0..n {
                let t1 = de.mul(&self.dg[f]).mul(&self.ginv);
                let t2 = self.ginv.mul(&self.ddg[e * n + f]).mul(&self.ginv);
                let t3 = self.ginv.mul(&self.dg[f]).mul(de);
                ddginv.push(t1.add(&t2).add(&t3).scale(-1.0));
            }
        }
        let dg = |e: usize, a: usize, b: usize| self.dg[e][(a, b)];
        let ddg = |e: usize, f: usize, a: usize, b: usize| self.ddg[e * n + f][(a, b)];
        let dddg = |e: usize, f: usize, h: usize, a: usize, b: usize| {
            self.dddg[(e * n + f) * n + h][(a, b)]
        };
        let t = |d: usize, a: usize, b: usize| dg(a, d, b) + dg(b, d, a) - dg(d, a, b);
        let dt = |e: usize, d: usize, a: usize, b: usize| {
            ddg(e, a, d, b) + ddg(e, b, d, a) - ddg(e, d, a, b)
        };
        let ddt = |e: usize, f: usize, d: usize, a: usize, b: usize| {
            dddg(e, f, a, d, b) + dddg(e, f, b, d, a) - dddg(e, f, d, a, b)
        };

        let mut jet = ConnectionJet::zeros(n);
        for c in 0..n {
            for a in 0..n {
                for b in a..n {
                    let mut v = 0.0;
                    for d in 0..n {
                        v += self.ginv[(c, d)] * t(d, a, b);
                    }
                    set_sym(
                        &mut jet.gamma,
                        ((c * n + a) * n + b, (c * n + b) * n + a),
                        0.5 * v,
                    );
                    for e in 0..n {
                        let mut v = 0.0;
                        for d in 0..n {
                            v += dginv[e][(c, d)] * t(d, a, b) + self.ginv[(c, d)] * dt(e, d, a, b);
                        }
                        let base = e * n.pow(3);
                        set_sym(
                            &mut jet.d_gamma,
                            (base + (c * n + a) * n + b, base + (c * n + b) * n + a),
                            0.5 * v,
                        );
                        for f in 0..n {
                            let mut v = 0.0;
                            for d in 0..n {
                                v += ddginv[e * n + f][(c, d)] * t(d, a, b)
                                    + dginv[e][(c, d)] * dt(f, d, a, b)
                                    + dginv[f][(c, d)] * dt(e, d, a, b)
                                    + self.ginv[(c, d)] * ddt(e, f, d, a, b);
                            }
                            let base = (e * n + f) * n.pow(3);
                            set_sym(
                                &mut jet.dd_gamma,
                                (base + (c * n + a) * n + b, base + (c * n + b) * n + a),
                                0.5 * v,
                            );
                        }
                    }
                }
            }
        }
        jet
    }

    /// Largest |∂ₐg_bc − Γᵈₐᵦ g_dc − Γᵈₐc g_bd| scaled by max(1, max|∂g|).
    pub fn compatibility_residual(&self, gamma: &ConnectionJet) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for a in 0..n {
            scale = scale.max(self.dg[a].max_abs());
            for b in 0..n {
                for c in 0..n {
                    let mut v = self.dg[a][(b, c)];
                    for d in 0..n {
                        v -= gamma.g(d, a, b) * self.g[(d, c)] + gamma.g(d, a, c) * self.g[(b, d)];
                    }
                    worst = worst.max(v.abs());
                }
            }
        }
        worst / scale
    }
}

fn set_sym(data: &mut [f64], (i, j): (usize, usize), v: f64) {
    data[i] = v;
    data[j] = v;
}

/// Γ̃ᶜₐᵦ with index order (c, a, b).
pub fn levi_civita_at(m: &ExtensionMetric, p: &[f64]) -> Result<TensorValues> {
    Ok(MetricJet::of_extension(m, p)?.levi_civita().christoffel())
}

pub fn metric_connection_jet(m: &ExtensionMetric, p: &[f64]) -> Result<ConnectionJet> {
    Ok(MetricJet::of_extension(m, p)?.levi_civita())
}

pub fn metric_compatibility_at(m: &ExtensionMetric, p: &[f64]) -> Result<f64> {
    let jet = MetricJet::of_extension(m, p)?;
    Ok(jet.compatibility_residual(&jet.levi_civita()))
}

/// R̃ˡᵢⱼₖ with index order (l, i, j, k).
pub fn metric_curvature_at(m: &ExtensionMetric, p: &[f64]) -> Result<TensorValues> {
    Ok(metric_connection_jet(m, p)?.curvature())
}

/// Residuals of the curvature identities at one point.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CurvatureIdentities {
    /// base block of R̃ against the base curvature
    pub base_block: f64,
    /// R̃ʰ'ₖⱼᵢ' = −Rⁱₖⱼₕ, read with Rʰₖⱼᵢ ↔ dxʰ(R(∂ₖ,∂ⱼ)∂ᵢ)
    pub mixed_fiber_last: f64,
    /// R̃ʰ'ₖ'ⱼᵢ = Rᵏₕᵢⱼ, same reading
    pub mixed_fiber_first: f64,
    pub antisymmetry: f64,
    pub first_bianchi: f64,
    /// R̃(X,Y,Z,W) − R̃(Z,W,X,Y)
    pub pair_symmetry: f64,
}

pub fn curvature_identities_at(m: &ExtensionMetric, p: &[f64]) -> Result<CurvatureIdentities> {
    let r = metric_curvature_at(m, p)?;
    let base = m.base().curvature_at(&p[..m.base_dim()])?;
    let g = m.metric_at(p)?;
    let n = m.base_dim();
    let dim = m.dim();
    let scale = r.max_abs().max(1.0);
    let mut out = CurvatureIdentities::default();
    let bump = |slot: &mut f64, v: f64| *slot = slot.max(v.abs() / scale);
    for h in 0..n {
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    bump(
                        &mut out.base_block,
                        r.get(&[h, k, j, i]) - base.get(&[h, k, j, i]),
                    );
                    bump(
                        &mut out.mixed_fiber_last,
                        r.get(&[n + h, k, j, n + i]) + base.get(&[i, k, j, h]),
                    );
                    bump(
                        &mut out.mixed_fiber_first,
                        r.get(&[n + h, n + k, j, i]) - base.get(&[k, h, i, j]),
                    );
                }
            }
        }
    }
    let mut low = vec![0.0; dim.pow(4)];
    let at = |a: usize, b: usize, c: usize, d: usize| ((a * dim + b) * dim + c) * dim + d;
    for l in 0..dim {
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    bump(
                        &mut out.antisymmetry,
                        r.get(&[l, i, j, k]) + r.get(&[l, j, i, k]),
                    );
                    bump(
                        &mut out.first_bianchi,
                        r.get(&[l, i, j, k]) + r.get(&[l, j, k, i]) + r.get(&[l, k, i, j]),
                    );
                    low[at(i, j, k, l)] = (0..dim).map(|s| g[(l, s)] * r.get(&[s, i, j, k])).sum();
                }
            }
        }
    }
    for a in 0..dim {
        for b in 0..dim {
            for c in 0..dim {
                for d in 0..dim {
                    bump(
                        &mut out.pair_symmetry,
                        low[at(a, b, c, d)] - low[at(c, d, a, b)],
                    );
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CausalType {
    Spacelike,
    Timelike,
    Null,
    Other,
}

/// X̃ = Σαᵢ∂ᵢ + Σξᵢ∂ᵢ' with its squared norm at the point where it was
/// built.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiftedVector {
    pub alpha: Vec<f64>,
    pub xi: Vec<f64>,
    pub norm_squared: f64,
    pub causal: CausalType,
}

const CAUSAL_TOL: f64 = 1e-12;

impl LiftedVector {
    pub fn new(m: &ExtensionMetric, p: &[f64], alpha: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        let n = m.base_dim();
        if alpha.len() != n || xi.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: if alpha.len() != n {
                    alpha.len()
                } else {
                    xi.len()
                },
            });
        }
        let g = m.metric_at(p)?;
        let v: Vec<f64> = alpha.iter().chain(&xi).copied().collect();
        let norm_squared: f64 = v.iter().zip(g.mul_vec(&v)).map(|(a, b)| a * b).sum();
        let causal = if (norm_squared - 1.0).abs() <= CAUSAL_TOL {
            CausalType::Spacelike
        } else if (norm_squared + 1.0).abs() <= CAUSAL_TOL {
            CausalType::Timelike
        } else if norm_squared.abs() <= CAUSAL_TOL {
            CausalType::Null
        } else {
            CausalType::Other
        };
        Ok(LiftedVector {
            alpha,
            xi,
            norm_squared,
            causal,
        })
    }

    pub fn components(&self) -> Vec<f64> {
        self.alpha.iter().chain(&self.xi).copied().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.components().iter().all(|c| *c == 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitTarget {
    Spacelike,
    Timelike,
}

impl UnitTarget {
    pub fn value(self) -> f64 {
        match self {
            UnitTarget::Spacelike => 1.0,
            UnitTarget::Timelike => -1.0,
        }
    }
}

/// Lift of a base direction x with g(X̃,X̃) = ±1, using the minimal-norm
/// fiber part ξ = (target − B(x,x)) x / (2|x|²).
pub fn unit_lift(
    m: &ExtensionMetric,
    p: &[f64],
    x: &Direction,
    target: UnitTarget,
) -> Result<LiftedVector> {
    let n = m.base_dim();
    if x.components().len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: x.components().len(),
        });
    }
    let alpha = x.components().to_vec();
    let norm2: f64 = alpha.iter().map(|a| a * a).sum();
    if norm2 == 0.0 {
        return Err(Error::InvalidInput(
            "fiber-only vectors are null; a unit lift needs a nonzero base direction".into(),
        ));
    }
    let b = m.b_block_at(p)?;
    let bxx: f64 = alpha
        .iter()
        .zip(b.mul_vec(&alpha))
        .map(|(a, b)| a * b)
        .sum();
    let t = (target.value() - bxx) / (2.0 * norm2);
    let xi = alpha.iter().map(|a| t * a).collect();
    LiftedVector::new(m, p, alpha, xi)
}

/// Coordinate matrix of Y ↦ (∇̃_X̃ R̃)(Y,X̃)X̃; column m is the image of ∂ₘ.
pub fn metric_szabo_operator(m: &ExtensionMetric, p: &[f64], x: &LiftedVector) -> Result<Matrix> {
    if x.is_zero() {
        return Err(Error::InvalidInput(
            "Szabó operator needs a nonzero direction".into(),
        ));
    }
    let nabla = metric_connection_jet(m, p)?.nabla_curvature();
    Ok(szabo_matrix(&nabla, &x.components()))
}

/// Block decomposition of the metric Szabó matrix against the base
/// operator S = S^∇(π_*X̃).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockResiduals {
    pub on_zero_section: bool,
    /// max |upper-left − S|
    pub upper_left: f64,
    /// max |upper-right|
    pub upper_right: f64,
    /// max |lower-right − Sᵀ|
    pub lower_right: f64,
    /// scaled coefficient gap between P[S̃] and P[S]·P[Sᵀ]
    pub product_identity: f64,
}

impl BlockResiduals {
    pub fn max(&self) -> f64 {
        self.upper_left
            .max(self.upper_right)
            .max(self.lower_right)
            .max(self.product_identity)
    }
}

pub fn block_structure_check(
    m: &ExtensionMetric,
    p: &[f64],
    x: &LiftedVector,
) -> Result<BlockResiduals> {
    let n = m.base_dim();
    m.check_point(p)?;
    if x.alpha.iter().all(|a| *a == 0.0) {
        return Err(Error::InvalidInput(
            "block structure needs a nonzero base part".into(),
        ));
    }
    let big = metric_szabo_operator(m, p, x)?;
    let small = m
        .base()
        .szabo_operator(&p[..n], &Direction::new(x.alpha.clone()))?;
    let upper_right = big.block(0, n, n);
    let s_big = char_poly(&big);
    let s_small = char_poly(&small);
    let product = s_small.product(&char_poly(&small.transpose()));
    let scale = big.frobenius_norm().max(1.0);
    let product_identity = s_big
        .coefficients()
        .iter()
        .zip(product.coefficients())
        .enumerate()
        .map(|(k, (a, b))| (a - b).abs() / scale.powi(k as i32))
        .fold(0.0, f64::max);
    Ok(BlockResiduals {
        on_zero_section: p[n..].iter().all(|u| *u == 0.0),
        upper_left: big.block(0, 0, n).sub(&small).max_abs(),
        upper_right: upper_right.max_abs(),
        lower_right: big.block(n, n, n).sub(&small.transpose()).max_abs(),
        product_identity,
    })
}

/// Unit lifts drawn per sampled point.
pub const LIFTS_PER_TYPE: usize = 8;

fn regular(m: &ExtensionMetric) -> impl Fn(&[f64]) -> bool + '_ {
    move |p| {
        let n = m.base_dim();
        m.metric_at(p).is_ok()
            && m.base().is_regular_near(&p[..n], SINGULAR_MARGIN)
            && metric_connection_jet(m, p).is_ok()
    }
}

fn check_domain(m: &ExtensionMetric, d: &SampleDomain) -> Result<()> {
    if d.dim() != m.dim() {
        return Err(Error::Dimension {
            expected: m.dim(),
            found: d.dim(),
        });
    }
    Ok(())
}

/// Seeded points of the 2n-chart followed by, per point,
/// [`LIFTS_PER_TYPE`] spacelike and as many timelike unit lifts of random
/// base directions.
pub fn sample_lifts(
    m: &ExtensionMetric,
    d: &SampleDomain,
) -> Result<Vec<(Vec<f64>, Vec<LiftedVector>)>> {
    check_domain(m, d)?;
    let mut sampler = Sampler::new(d.seed);
    let points = draw_points(d, &mut sampler, regular(m))?;
    let n = m.base_dim();
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let mut lifts = Vec::with_capacity(2 * LIFTS_PER_TYPE);
        for target in [UnitTarget::Spacelike, UnitTarget::Timelike] {
            for _ in 0..LIFTS_PER_TYPE {
                let dir = Direction::new(sampler.unit_direction(n));
                lifts.push(unit_lift(m, &p, &dir, target)?);
            }
        }
        out.push((p, lifts));
    }
    Ok(out)
}

/// Nilpotency of S̃(X̃) over sampled points and unit lifts.
pub fn is_metric_szabo_nilpotent(m: &ExtensionMetric, d: &SampleDomain) -> Result<Verdict> {
    Ok(metric_szabo_survey(m, d)?.nilpotent)
}

/// Everything measured while sweeping unit lifts.
#[derive(Clone, Debug, Serialize)]
pub struct MetricSzaboSurvey {
    pub nilpotent: Verdict,
    /// max |S̃(X̃)X̃| scaled by max(1, ‖S̃‖)·max(1, |X̃|)
    pub self_annihilation: f64,
    /// max |tr S̃| over all samples
    pub max_trace: f64,
    /// worst ∇̃g residual over the sampled points
    pub compatibility: f64,
}

pub fn metric_szabo_survey(m: &ExtensionMetric, d: &SampleDomain) -> Result<MetricSzaboSurvey> {
    let mut acc = ResidualMax::default();
    let mut self_annihilation: f64 = 0.0;
    let mut max_trace: f64 = 0.0;
    let mut compatibility: f64 = 0.0;
    for (p, lifts) in sample_lifts(m, d)? {
        let mj = MetricJet::of_extension(m, &p)?;
        let jet = mj.levi_civita();
        compatibility = compatibility.max(mj.compatibility_residual(&jet));
        let nabla = jet.nabla_curvature();
        for x in lifts {
            let v = x.components();
            let s = szabo_matrix(&nabla, &v);
            let sx = s.mul_vec(&v).iter().fold(0.0, |a: f64, b| a.max(b.abs()));
            let vnorm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            self_annihilation =
                self_annihilation.max(sx / (s.frobenius_norm().max(1.0) * vnorm.max(1.0)));
            max_trace = max_trace.max(s.trace().abs());
            acc.observe(is_nilpotent(&s, d.tol).residual, &p, Some(&v));
        }
    }
    Ok(MetricSzaboSurvey {
        nilpotent: acc.finish(d),
        self_annihilation,
        max_trace,
        compatibility,
    })
}

/// Sampled metric compatibility ∇̃g = 0.
pub fn compatibility_verdict(m: &ExtensionMetric, d: &SampleDomain) -> Result<Verdict> {
    check_domain(m, d)?;
    let mut acc = ResidualMax::default();
    for p in draw_points(d, &mut Sampler::new(d.seed), regular(m))? {
        acc.observe(metric_compatibility_at(m, &p)?, &p, None);
    }
    Ok(acc.finish(d))
}

/// Worst absolute gap per index family between closed-form and
/// metric-derived Christoffel symbols at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyResidual {
    pub family: ChristoffelFamily,
    pub residual: f64,
}

pub fn christoffel_cross_check(
    m: &ExtensionMetric,
    p: &[f64],
    reading: DisplayReading,
) -> Result<Vec<FamilyResidual>> {
    let closed = displayed_christoffels(m.base(), m.phi(), reading)?;
    let truth = levi_civita_at(m, p)?;
    let dim = m.dim();
    let n = m.base_dim();
    let mut out: Vec<FamilyResidual> = ChristoffelFamily::ALL
        .iter()
        .map(|f| FamilyResidual {
            family: *f,
            residual: 0.0,
        })
        .collect();
    for c in 0..dim {
        for a in 0..dim {
            for b in 0..dim {
                let v = closed[(c * dim + a) * dim + b].eval(p)?;
                let gap = (v - truth.get(&[c, a, b])).abs();
                let fam = ChristoffelFamily::of(n, c, a, b);
                let slot = out
                    .iter_mut()
                    .find(|r| r.family == fam)
                    .expect("family listed");
                slot.residual = slot.residual.max(gap);
            }
        }
    }
    Ok(out)
}

/// Block residuals at sampled zero-section points (fiber coordinates 0)
/// with ξ = 0, and at sampled off-section points with unit lifts.
#[derive(Clone, Debug, Serialize)]
pub struct BlockSurvey {
    pub zero_section: Verdict,
    pub off_section_max: f64,
}

pub fn block_structure_survey(m: &ExtensionMetric, d: &SampleDomain) -> Result<BlockSurvey> {
    check_domain(m, d)?;
    let n = m.base_dim();
    let mut sampler = Sampler::new(d.seed);
    let mut on = ResidualMax::default();
    let zero_points = draw_points(d, &mut sampler, |p| {
        let mut q = p.to_vec();
        q[n..].iter_mut().for_each(|u| *u = 0.0);
        regular(m)(&q)
    })?;
    for mut p in zero_points {
        p[n..].iter_mut().for_each(|u| *u = 0.0);
        let alpha = sampler.unit_direction(n);
        let x = LiftedVector::new(m, &p, alpha, vec![0.0; n])?;
        let r = block_structure_check(m, &p, &x)?;
        acc_observe(&mut on, r.max(), &p, &x);
    }
    let mut off: f64 = 0.0;
    for (p, lifts) in sample_lifts(m, &d.clone().with_count(d.count.min(20)))? {
        for x in lifts.iter().take(2) {
            off = off.max(block_structure_check(m, &p, x)?.max());
        }
    }
    Ok(BlockSurvey {
        zero_section: on.finish(d),
        off_section_max: off,
    })
}

fn acc_observe(acc: &mut ResidualMax, r: f64, p: &[f64], x: &LiftedVector) {
    acc.observe(r, p, Some(&x.components()));
}
