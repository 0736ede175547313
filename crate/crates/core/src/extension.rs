//! Deformed Riemannian extension of an affine connection to the 2n-chart
//! (u₁..uₙ, u₁'..uₙ') of the cotangent bundle.
//!
//! ```text
//! g = [[B, I], [I, 0]],   Bᵢⱼ = φᵢⱼ(u) − 2 Σₖ u_k' Γᵏᵢⱼ(u)
//! g⁻¹ = [[0, I], [I, −B]]
//! ```

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::affine::AffineConnection;
use crate::error::{Error, Result};
use crate::expr::{EvalError, Expr};
use crate::smallnum::Matrix;

/// Symmetric (0,2) tensor φ on the base; only i ≤ j is stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricBilinearSpec {
    dim: usize,
    upper: Vec<Expr>,
}

impl SymmetricBilinearSpec {
    pub fn zero(dim: usize) -> Self {
        SymmetricBilinearSpec {
            dim,
            upper: vec![Expr::zero(); dim * (dim + 1) / 2],
        }
    }

    /// From zero-based `(i, j)` entries with i ≤ j; missing entries are 0.
    pub fn from_entries(
        dim: usize,
        entries: impl IntoIterator<Item = ((usize, usize), Expr)>,
    ) -> Result<Self> {
        let mut spec = SymmetricBilinearSpec::zero(dim);
        let mut seen = vec![false; spec.upper.len()];
        for ((i, j), e) in entries {
            if i > j || j >= dim {
                return Err(Error::InvalidInput(format!(
                    "φ entry ({}, {}) must satisfy i ≤ j ≤ {dim}",
                    i + 1,
                    j + 1
                )));
            }
            if e.arity() > dim {
                return Err(Error::InvalidInput(format!(
                    "φ_{}{} may depend on base coordinates only",
                    i + 1,
                    j + 1
                )));
            }
            let slot = spec.slot(i, j);
            if seen[slot] {
                return Err(Error::InvalidInput(format!(
                    "duplicate φ entry ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
            seen[slot] = true;
            spec.upper[slot] = e;
        }
        Ok(spec)
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = (i.min(j), i.max(j));
        i * self.dim - i * (i + 1) / 2 + j
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.upper[self.slot(i, j)]
    }

    pub fn is_zero(&self) -> bool {
        self.upper.iter().all(Expr::is_zero)
    }
}

/// Metric g_(∇,φ) with symbolic entries and their partial derivatives up
/// to third order.
#[derive(Clone, Debug)]
pub struct ExtensionMetric {
    base: AffineConnection,
    phi: SymmetricBilinearSpec,
    // order 0: [a][b]; order 1: [e][a][b]; order 2: [e][f][a][b]; order 3: [e][f][h][a][b]
    towers: [Vec<Expr>; 4],
}

/// Builds g_(∇,φ); φ = 0 gives the classical Riemannian extension.
pub fn deformed_extension(
    c: &AffineConnection,
    phi: &SymmetricBilinearSpec,
) -> Result<ExtensionMetric> {
    let n = c.dim();
    if phi.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            found: phi.dim(),
        });
    }
    let m = 2 * n;
    let mut entries = vec![Expr::zero(); m * m];
    for i in 0..n {
        for j in i..n {
            let mut b = phi.get(i, j).clone();
            for k in 0..n {
                let term = Expr::constant(2.0) * Expr::var(n + k) * c.symbol(k, i, j).clone();
                b = b - term;
            }
            let b = b.simplify();
            entries[i * m + j] = b.clone();
            entries[j * m + i] = b;
        }
        entries[i * m + n + i] = Expr::one();
        entries[(n + i) * m + i] = Expr::one();
    }
    let mut towers: [Vec<Expr>; 4] = [entries, Vec::new(), Vec::new(), Vec::new()];
    for order in 1..4 {
        let prev = &towers[order - 1];
        let mut next = Vec::with_capacity(prev.len() * m);
        for e in 0..m {
            for expr in prev {
                next.push(expr.diff(e));
            }
        }
        towers[order] = next;
    }
    Ok(ExtensionMetric {
        base: c.clone(),
        phi: phi.clone(),
        towers,
    })
}

pub fn riemannian_extension(c: &AffineConnection) -> ExtensionMetric {
    deformed_extension(c, &SymmetricBilinearSpec::zero(c.dim())).expect("matching dimensions")
}

impl ExtensionMetric {
    pub fn base(&self) -> &AffineConnection {
        &self.base
    }

    pub fn phi(&self) -> &SymmetricBilinearSpec {
        &self.phi
    }

    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }

    /// 2n.
    pub fn dim(&self) -> usize {
        2 * self.base.dim()
    }

    pub fn entry(&self, a: usize, b: usize) -> &Expr {
        &self.towers[0][a * self.dim() + b]
    }

    /// Expressions for all partial derivatives of the given order, laid
    /// out as `[e₁]…[e_order][a][b]`.
    pub fn derivative_tower(&self, order: usize) -> &[Expr] {
        &self.towers[order]
    }

    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: p.len(),
            });
        }
        Ok(())
    }

    /// Evaluates one derivative tower at `p`.
    pub fn eval_tower(&self, order: usize, p: &[f64]) -> Result<Vec<f64>> {
        self.check_point(p)?;
        Ok(self.towers[order]
            .iter()
            .map(|e| e.eval(p))
            .collect::<Result<Vec<_>, EvalError>>()?)
    }

    pub fn b_block_at(&self, p: &[f64]) -> Result<Matrix> {
        let n = self.base_dim();
        Ok(self.metric_at(p)?.block(0, 0, n))
    }

    pub fn metric_at(&self, p: &[f64]) -> Result<Matrix> {
        let g = self.eval_tower(0, p)?;
        let m = self.dim();
        Ok(Matrix::from_fn(m, |a, b| g[a * m + b]))
    }

    /// Exact inverse `[[0, I], [I, −B]]`.
    pub fn inverse_metric_at(&self, p: &[f64]) -> Result<Matrix> {
        let b = self.b_block_at(p)?;
        Ok(block_inverse(&b))
    }

    /// (positive, negative) eigenvalue counts of g at `p`.
    pub fn signature_at(&self, p: &[f64]) -> Result<(usize, usize)> {
        let g = self.metric_at(p)?;
        Ok(signature(&g))
    }
}

/// `[[0, I], [I, −B]]` for an n×n block B.
pub fn block_inverse(b: &Matrix) -> Matrix {
    let n = b.dim();
    Matrix::from_fn(2 * n, |r, c| match (r < n, c < n) {
        (true, true) => 0.0,
        (true, false) | (false, true) => f64::from(u8::from(r % n == c % n)),
        (false, false) => -b[(r - n, c - n)],
    })
}

/// (positive, negative) eigenvalue counts of a symmetric matrix.
pub fn signature(g: &Matrix) -> (usize, usize) {
    let n = g.dim();
    let m = DMatrix::from_fn(n, n, |r, c| g[(r, c)]);
    let eig = SymmetricEigen::new(m).eigenvalues;
    let scale = g.max_abs().max(1.0) * 1e-12;
    let pos = eig.iter().filter(|v| **v > scale).count();
    let neg = eig.iter().filter(|v| **v < -scale).count();
    (pos, neg)
}

/// Index family of an extension Christoffel symbol Γ̃ᶜₐᵦ; primes mark
/// fiber indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChristoffelFamily {
    /// Γ̃ᵏᵢⱼ
    Base,
    /// Γ̃ᵏ'ᵢ'ⱼ
    FiberBase,
    /// Γ̃ᵏ'ᵢⱼ'
    BaseFiber,
    /// Γ̃ᵏ'ᵢⱼ
    FiberUpper,
    /// every other placement (identically zero)
    Other,
}

impl ChristoffelFamily {
    pub fn of(n: usize, c: usize, a: usize, b: usize) -> Self {
        match (c >= n, a >= n, b >= n) {
            (false, false, false) => ChristoffelFamily::Base,
            (true, true, false) => ChristoffelFamily::FiberBase,
            (true, false, true) => ChristoffelFamily::BaseFiber,
            (true, false, false) => ChristoffelFamily::FiberUpper,
            _ => ChristoffelFamily::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ChristoffelFamily::Base => "base",
            ChristoffelFamily::FiberBase => "fiber-base",
            ChristoffelFamily::BaseFiber => "base-fiber",
            ChristoffelFamily::FiberUpper => "fiber-upper",
            ChristoffelFamily::Other => "other",
        }
    }

    pub const ALL: [ChristoffelFamily; 5] = [
        ChristoffelFamily::Base,
        ChristoffelFamily::FiberBase,
        ChristoffelFamily::BaseFiber,
        ChristoffelFamily::FiberUpper,
        ChristoffelFamily::Other,
    ];
}

/// How to read the closed-form extension Christoffel displays.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisplayReading {
    /// Γ̃ᵏ'ᵢⱼ' = −Γʲᵢⱼ and no fiber factor on the curvature-like part of Γ̃ᵏ'ᵢⱼ.
    Literal,
    /// Γ̃ᵏ'ᵢⱼ' = −Γʲᵢₖ and the curvature-like part of Γ̃ᵏ'ᵢⱼ weighted by u_r'.
    Indexed,
}

/// Closed-form extension Christoffel symbols for a surface connection,
/// `[c][a][b]` over the 4-chart. Used only as a cross-check against the
/// symbols derived from the metric.
pub fn displayed_christoffels(
    c: &AffineConnection,
    phi: &SymmetricBilinearSpec,
    reading: DisplayReading,
) -> Result<Vec<Expr>> {
    let n = c.dim();
    if n != 2 || phi.dim() != 2 {
        return Err(Error::InvalidInput(
            "closed-form extension symbols are for surfaces".into(),
        ));
    }
    let m = 2 * n;
    let mut out = vec![Expr::zero(); m * m * m];
    let at = |cc: usize, a: usize, b: usize| (cc * m + a) * m + b;
    let g = |k: usize, i: usize, j: usize| c.symbol(k, i, j).clone();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out[at(k, i, j)] = g(k, i, j);
                out[at(n + k, n + i, j)] = (-g(i, j, k)).simplify();
                out[at(n + k, i, n + j)] = match reading {
                    DisplayReading::Literal => (-g(j, i, j)).simplify(),
                    DisplayReading::Indexed => (-g(j, i, k)).simplify(),
                };
                let mut upper = Expr::zero();
                for r in 0..n {
                    let mut t = g(r, i, j).diff(k) - g(r, j, k).diff(i) - g(r, i, k).diff(j);
                    for l in 0..n {
                        t = t + Expr::constant(2.0) * g(r, k, l) * g(l, i, j);
                    }
                    if reading == DisplayReading::Indexed {
                        t = Expr::var(n + r) * t;
                    }
                    upper = upper + t;
                }
                let half = Expr::constant(0.5)
                    * (phi.get(j, k).diff(i) + phi.get(i, k).diff(j) - phi.get(i, j).diff(k));
                upper = upper + half;
                for l in 0..n {
                    upper = upper - phi.get(k, l).clone() * g(l, i, j);
                }
                out[at(n + k, i, j)] = upper.simplify();
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{wong_connection, ExampleFamilySpec};
    use crate::expr::parse;
    use crate::smallnum::{sample_points, SampleDomain, Sampler};

    fn coords() -> Vec<String> {
        ["u1", "u2", "u3", "u4"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn e(s: &str) -> Expr {
        parse(s, &coords()).unwrap()
    }

    fn poly_phi() -> SymmetricBilinearSpec {
        SymmetricBilinearSpec::from_entries(
            2,
            [
                ((0, 0), e("u1^2")),
                ((0, 1), e("u1*u2")),
                ((1, 1), e("u2^2")),
            ],
        )
        .unwrap()
    }

    fn family() -> AffineConnection {
        ExampleFamilySpec::new(e("sin(u1)"), e("1"))
            .unwrap()
            .connection()
            .unwrap()
    }

    #[test]
    fn phi_storage_is_symmetric() {
        let phi = poly_phi();
        assert_eq!(phi.get(1, 0), phi.get(0, 1));
        assert!(SymmetricBilinearSpec::from_entries(2, [((1, 0), e("u1"))]).is_err());
        assert!(SymmetricBilinearSpec::from_entries(2, [((0, 0), e("u3"))]).is_err());
        assert!(
            SymmetricBilinearSpec::from_entries(2, [((0, 0), e("1")), ((0, 0), e("2"))]).is_err()
        );
    }

    #[test]
    fn flat_extension_is_antidiagonal() {
        let g = riemannian_extension(&AffineConnection::flat(2));
        let expected = Matrix::from_rows(&[
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
        ]);
        assert_eq!(g.metric_at(&[0.3, -0.2, 0.7, 0.1]).unwrap(), expected);
        assert_eq!(
            g.inverse_metric_at(&[0.3, -0.2, 0.7, 0.1]).unwrap(),
            expected
        );
    }

    #[test]
    fn family_entries() {
        let g = deformed_extension(&family(), &poly_phi()).unwrap();
        let p = [1.0, 2.0, 0.5, -0.3];
        let m = g.metric_at(&p).unwrap();
        assert!((m[(0, 0)] - (1.0 - 2.0 * -0.3 * 1f64.sin())).abs() < 1e-15);
        assert!((m[(0, 1)] - (2.0 - 2.0 * -0.3)).abs() < 1e-15);
        assert_eq!(m[(1, 1)], 4.0);
        assert_eq!(g.entry(2, 3), &Expr::zero());
    }

    #[test]
    fn family_inverse_with_zero_phi() {
        let g = riemannian_extension(&family());
        let inv = g.inverse_metric_at(&[1.0, 2.0, 0.5, -0.3]).unwrap();
        assert!((inv[(2, 2)] - 2.0 * -0.3 * 1f64.sin()).abs() < 1e-15);
        assert!((inv[(2, 3)] - 2.0 * -0.3).abs() < 1e-15);
        assert_eq!(inv[(3, 3)], 0.0);
    }

    #[test]
    fn inverse_times_metric_is_identity() {
        let g = deformed_extension(&wong_connection(&e("u1*u2")).unwrap(), &poly_phi()).unwrap();
        let d = SampleDomain::cube(4, -2.0, 2.0).unwrap().with_count(25);
        for p in sample_points(&d).unwrap() {
            let prod = g
                .metric_at(&p)
                .unwrap()
                .mul(&g.inverse_metric_at(&p).unwrap());
            assert!(prod.sub(&Matrix::identity(4)).max_abs() < 1e-13);
            assert_eq!(g.signature_at(&p).unwrap(), (2, 2));
        }
    }

    #[test]
    fn random_b_block_inverse() {
        let mut s = Sampler::new(9);
        for _ in 0..20 {
            let (a, b, c) = (
                s.uniform(-5.0, 5.0),
                s.uniform(-5.0, 5.0),
                s.uniform(-5.0, 5.0),
            );
            let bm = Matrix::from_rows(&[[a, b], [b, c]]);
            let g = Matrix::from_fn(4, |r, col| match (r < 2, col < 2) {
                (true, true) => bm[(r, col)],
                (false, false) => 0.0,
                _ => f64::from(u8::from(r % 2 == col % 2)),
            });
            assert!(
                g.mul(&block_inverse(&bm))
                    .sub(&Matrix::identity(4))
                    .max_abs()
                    < 1e-13
            );
        }
    }

    #[test]
    fn fiber_linearity_and_nullity() {
        let g = deformed_extension(&wong_connection(&e("u1^2*u2")).unwrap(), &poly_phi()).unwrap();
        let p = [0.4, -0.6, 1.3, 2.1];
        for a in 0..4 {
            for b in 0..4 {
                for r in 2..4 {
                    for s in 2..4 {
                        let dd = g.entry(a, b).diff(r).diff(s);
                        assert_eq!(dd.eval(&p).unwrap(), 0.0);
                    }
                }
                if a >= 2 && b >= 2 {
                    assert!(g.entry(a, b).is_zero());
                }
            }
        }
    }

    #[test]
    fn phi_shift_changes_only_b_block() {
        let c = wong_connection(&e("u1*u2")).unwrap();
        let g0 = riemannian_extension(&c);
        let g1 = deformed_extension(&c, &poly_phi()).unwrap();
        let p = [0.4, -0.6, 1.3, 2.1];
        let diff = g1.metric_at(&p).unwrap().sub(&g0.metric_at(&p).unwrap());
        for a in 0..4 {
            for b in 0..4 {
                if a >= 2 || b >= 2 {
                    assert_eq!(diff[(a, b)], 0.0);
                }
            }
        }
        assert!((diff[(0, 1)] - 0.4 * -0.6).abs() < 1e-15);
    }

    #[test]
    fn derivative_tower_layout() {
        let g = riemannian_extension(&family());
        // ∂₄ g₁₁ = −2 sin(u₁)
        let d1 = g.eval_tower(1, &[0.5, 0.0, 0.0, 0.0]).unwrap();
        assert!((d1[3 * 16] + 2.0 * 0.5f64.sin()).abs() < 1e-15);
        // ∂₁∂₄ g₁₁ = −2 cos(u₁)
        let d2 = g.eval_tower(2, &[0.5, 0.0, 0.0, 0.0]).unwrap();
        // [e][f] = [3][0] and [0][3]
        assert!((d2[12 * 16] + 2.0 * 0.5f64.cos()).abs() < 1e-15);
        assert!((d2[3 * 16] + 2.0 * 0.5f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn closed_form_symbols() {
        let flat = displayed_christoffels(
            &AffineConnection::flat(2),
            &SymmetricBilinearSpec::zero(2),
            DisplayReading::Literal,
        )
        .unwrap();
        assert!(flat.iter().all(Expr::is_zero));
        let c = wong_connection(&e("u1*u2")).unwrap();
        let gamma =
            displayed_christoffels(&c, &SymmetricBilinearSpec::zero(2), DisplayReading::Literal)
                .unwrap();
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(&gamma[(k * 4 + i) * 4 + j], c.symbol(k, i, j));
                }
            }
        }
    }

    #[test]
    fn families_partition_indices() {
        assert_eq!(ChristoffelFamily::of(2, 0, 1, 1), ChristoffelFamily::Base);
        assert_eq!(
            ChristoffelFamily::of(2, 3, 2, 1),
            ChristoffelFamily::FiberBase
        );
        assert_eq!(
            ChristoffelFamily::of(2, 3, 1, 2),
            ChristoffelFamily::BaseFiber
        );
        assert_eq!(
            ChristoffelFamily::of(2, 2, 0, 1),
            ChristoffelFamily::FiberUpper
        );
        assert_eq!(ChristoffelFamily::of(2, 0, 2, 1), ChristoffelFamily::Other);
    }
}
