//! Dense small-matrix numerics, characteristic polynomials, the central
//! finite-difference oracle and seeded sampling.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::EvalError;

/// Square row-major matrix for the small operators in this crate (n ≤ 4 in
/// practice).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "matrix dimension must be positive");
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Panics unless every row has `rows.len()` entries.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let n = rows.len();
        let mut m = Matrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            assert_eq!(row.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Matrix::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        Matrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        Matrix::from_fn(n, |i, j| (0..n).map(|k| self[(i, k)] * other[(k, j)]).sum())
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.n, v.len());
        (0..self.n)
            .map(|i| (0..self.n).map(|k| self[(i, k)] * v[k]).sum())
            .collect()
    }

    /// Square sub-block of size `size` starting at (`row`, `col`).
    pub fn block(&self, row: usize, col: usize, size: usize) -> Matrix {
        Matrix::from_fn(size, |i, j| self[(row + i, col + j)])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.data.chunks(self.n).enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let cells: Vec<String> = row.iter().map(|x| format!("{x:>12.6e}")).collect();
            write!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Monic characteristic polynomial `λⁿ + c₁λⁿ⁻¹ + … + cₙ`, stored as
/// `(c₁, …, cₙ)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CharPoly(pub Vec<f64>);

impl CharPoly {
    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.0
    }

    /// Coefficients including the leading 1.
    pub fn monic(&self) -> Vec<f64> {
        std::iter::once(1.0).chain(self.0.iter().copied()).collect()
    }

    /// Product of two monic polynomials.
    pub fn product(&self, other: &CharPoly) -> CharPoly {
        let a = self.monic();
        let b = other.monic();
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        CharPoly(out[1..].to_vec())
    }

    /// p(m) by Horner's scheme.
    pub fn eval_matrix(&self, m: &Matrix) -> Matrix {
        let n = m.dim();
        let mut acc = Matrix::identity(n);
        for c in &self.0 {
            acc = acc.mul(m).add(&Matrix::identity(n).scale(*c));
        }
        acc
    }
}

/// Faddeev–LeVerrier recursion: `M₁ = I`, `cₖ = −tr(A Mₖ)/k`,
/// `Mₖ₊₁ = A Mₖ + cₖ I`.
pub fn char_poly(m: &Matrix) -> CharPoly {
    let n = m.dim();
    let identity = Matrix::identity(n);
    let mut coeffs = Vec::with_capacity(n);
    let mut mk = identity.clone();
    for k in 1..=n {
        let am = m.mul(&mk);
        let c = -am.trace() / k as f64;
        coeffs.push(c);
        mk = am.add(&identity.scale(c));
    }
    CharPoly(coeffs)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NilpotencyCheck {
    pub nilpotent: bool,
    /// max over k of |cₖ| / max(1, ‖m‖_F)ᵏ
    pub residual: f64,
}

/// Scale-aware nilpotency test on the characteristic-polynomial
/// coefficients.
pub fn is_nilpotent(m: &Matrix, tol: f64) -> NilpotencyCheck {
    assert!(tol > 0.0, "tolerance must be positive");
    let residual = scaled_coefficient_residual(&char_poly(m), m.frobenius_norm());
    NilpotencyCheck {
        nilpotent: residual <= tol,
        residual,
    }
}

/// max over k of |cₖ| / max(1, scale)ᵏ.
pub fn scaled_coefficient_residual(p: &CharPoly, scale: f64) -> f64 {
    let s = scale.max(1.0);
    p.0.iter()
        .enumerate()
        .map(|(k, c)| c.abs() / s.powi(k as i32 + 1))
        .fold(0.0, f64::max)
}

/// Derivative order accepted by [`fd_partial`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdOrder {
    First,
    Second,
}

/// Central finite difference of `f` along coordinate `i`, Richardson
/// extrapolated over steps `h` and `h/2` (truncation error O(h⁴)).
///
/// Steps are scaled with `max(1, |pᵢ|)`; first derivatives use `h = 1e-3`,
/// second derivatives `h = 1e-2`.
pub fn fd_partial<F>(
    f: F,
    p: &[f64],
    i: usize,
    order: FdOrder,
) -> std::result::Result<f64, EvalError>
where
    F: Fn(&[f64]) -> std::result::Result<f64, EvalError>,
{
    let scale = p[i].abs().max(1.0);
    let eval = |offset: f64| -> std::result::Result<f64, EvalError> {
        let mut q = p.to_vec();
        q[i] += offset;
        let v = f(&q)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::Domain {
                subtree: "<finite-difference probe>".into(),
                point: q,
            })
        }
    };
    let estimate = |h: f64| -> std::result::Result<f64, EvalError> {
        match order {
            FdOrder::First => Ok((eval(h)? - eval(-h)?) / (2.0 * h)),
            FdOrder::Second => Ok((eval(h)? - 2.0 * eval(0.0)? + eval(-h)?) / (h * h)),
        }
    };
    let h = match order {
        FdOrder::First => 1e-3,
        FdOrder::Second => 1e-2,
    } * scale;
    let coarse = estimate(h)?;
    let fine = estimate(h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Coordinate box, sample count, seed and relative tolerance of a sampled
/// identity test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleDomain {
    pub bounds: Vec<(f64, f64)>,
    pub count: usize,
    pub seed: u64,
    pub tol: f64,
}

pub const DEFAULT_SEED: u64 = 0xC0FFEE;
pub const DEFAULT_SAMPLES: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-8;

/// Distance from a singular coordinate value below which samples are
/// rejected.
pub const SINGULAR_MARGIN: f64 = 1e-6;

impl SampleDomain {
    pub fn new(bounds: Vec<(f64, f64)>, count: usize, seed: u64, tol: f64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidInput(
                "sample count must be at least 1".into(),
            ));
        }
        if bounds.is_empty() {
            return Err(Error::InvalidInput("sample box has no axes".into()));
        }
        for (lo, hi) in &bounds {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidInput(format!(
                    "empty or infinite interval [{lo}, {hi}]"
                )));
            }
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        Ok(SampleDomain {
            bounds,
            count,
            seed,
            tol,
        })
    }

    /// `[lo, hi]ⁿ` with the default count, seed and tolerance.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        SampleDomain::new(
            vec![(lo, hi); n],
            DEFAULT_SAMPLES,
            DEFAULT_SEED,
            DEFAULT_TOL,
        )
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn sampler(&self) -> Sampler {
        Sampler::new(self.seed)
    }
}

/// Deterministic ChaCha8 stream seeded from a 64-bit seed.
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn point(&mut self, bounds: &[(f64, f64)]) -> Vec<f64> {
        bounds
            .iter()
            .map(|&(lo, hi)| {
                if lo == hi {
                    lo
                } else {
                    self.rng.gen_range(lo..=hi)
                }
            })
            .collect()
    }

    /// Uniform direction on the Euclidean unit sphere in `n` dimensions.
    pub fn unit_direction(&mut self, n: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n).map(|_| self.rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..=hi)
    }
}

/// `d.count` seeded points uniform in the box.
pub fn sample_points(d: &SampleDomain) -> Result<Vec<Vec<f64>>> {
    sample_points_where(d, |_| true)
}

/// Rejection sampling: draws uniform points and keeps those accepted by
/// `accept` (typically a finiteness probe around the point) until
/// `d.count` points are collected.
pub fn sample_points_where(
    d: &SampleDomain,
    accept: impl Fn(&[f64]) -> bool,
) -> Result<Vec<Vec<f64>>> {
    draw_points(d, &mut d.sampler(), accept)
}

pub(crate) fn draw_points(
    d: &SampleDomain,
    sampler: &mut Sampler,
    accept: impl Fn(&[f64]) -> bool,
) -> Result<Vec<Vec<f64>>> {
    if d.count == 0 {
        return Err(Error::InvalidInput(
            "sample count must be at least 1".into(),
        ));
    }
    let budget = d.count.saturating_mul(100).max(1000);
    let mut points = Vec::with_capacity(d.count);
    for _ in 0..budget {
        let p = sampler.point(&d.bounds);
        if accept(&p) {
            points.push(p);
            if points.len() == d.count {
                return Ok(points);
            }
        }
    }
    Err(Error::Sampling(format!(
        "only {} of {} requested points were regular after {budget} draws",
        points.len(),
        d.count
    )))
}
