//! Component arrays at a point and the curvature pipeline shared by the
//! affine and metric modules.
//!
//! Conventions used throughout the crate:
//!
//! ```text
//! R(X,Y)Z      = ∇_X ∇_Y Z − ∇_Y ∇_X Z − ∇_[X,Y] Z
//! Rˡᵢⱼₖ        = dxˡ(R(∂ᵢ,∂ⱼ)∂ₖ)
//!              = ∂ᵢΓˡⱼₖ − ∂ⱼΓˡᵢₖ + ΓᵐⱼₖΓˡᵢₘ − ΓᵐᵢₖΓˡⱼₘ
//! ρⱼₖ          = Σᵢ Rⁱᵢⱼₖ            (trace over the first slot)
//! S(X)Y        = (∇_X R)(Y,X)X
//! ```
//!
//! On a surface these give `R(∂₁,∂₂)∂₁ = ρ₂₁∂₁ − ρ₁₁∂₂` and
//! `R(∂₁,∂₂)∂₂ = ρ₂₂∂₁ − ρ₁₂∂₂`.

use serde::Serialize;

use crate::smallnum::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Variance {
    /// upper index
    Contra,
    /// lower index
    Co,
}

/// Multi-index array of components at a point.
///
/// Components are stored row-major in the order of `variance`; the index
/// order of each producer is documented where it is built.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TensorValues {
    variance: Vec<Variance>,
    dim: usize,
    data: Vec<f64>,
}

impl TensorValues {
    pub fn zeros(variance: Vec<Variance>, dim: usize) -> Self {
        let len = dim.pow(variance.len() as u32);
        TensorValues {
            variance,
            dim,
            data: vec![0.0; len],
        }
    }

    /// Panics when `data.len() != dim^rank`.
    pub fn from_data(variance: Vec<Variance>, dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            dim.pow(variance.len() as u32),
            "component count"
        );
        TensorValues {
            variance,
            dim,
            data,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| {
            debug_assert!(i < self.dim);
            acc * self.dim + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// All multi-indices in storage order.
    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let rank = self.rank();
        let dim = self.dim;
        (0..self.data.len()).map(move |mut flat| {
            let mut idx = vec![0; rank];
            for slot in (0..rank).rev() {
                idx[slot] = flat % dim;
                flat /= dim;
            }
            idx
        })
    }

    fn pair_residual(&self, a: usize, b: usize, sign: f64) -> f64 {
        self.indices()
            .map(|idx| {
                let mut swapped = idx.clone();
                swapped.swap(a, b);
                (self.get(&idx) + sign * self.get(&swapped)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// max |T(…a…b…) + T(…b…a…)| over all components.
    pub fn antisymmetry_residual(&self, a: usize, b: usize) -> f64 {
        self.pair_residual(a, b, 1.0)
    }

    /// max |T(…a…b…) − T(…b…a…)| over all components.
    pub fn symmetry_residual(&self, a: usize, b: usize) -> f64 {
        self.pair_residual(a, b, -1.0)
    }

    /// 2×2 (or n×n) view of a rank-2 tensor.
    pub fn to_matrix(&self) -> Matrix {
        assert_eq!(self.rank(), 2);
        Matrix::from_fn(self.dim, |i, j| self.get(&[i, j]))
    }
}

/// Christoffel symbols with their first and second partial derivatives at
/// one point: everything needed for R and ∇R.
///
/// Layouts: `gamma[c][a][b] = Γᶜₐᵦ`, `d_gamma[e][c][a][b] = ∂ₑΓᶜₐᵦ`,
/// `dd_gamma[e][f][c][a][b] = ∂ₑ∂_fΓᶜₐᵦ`.
#[derive(Clone, Debug)]
pub struct ConnectionJet {
    pub dim: usize,
    pub gamma: Vec<f64>,
    pub d_gamma: Vec<f64>,
    pub dd_gamma: Vec<f64>,
}

impl ConnectionJet {
    pub fn zeros(dim: usize) -> Self {
        ConnectionJet {
            dim,
            gamma: vec![0.0; dim.pow(3)],
            d_gamma: vec![0.0; dim.pow(4)],
            dd_gamma: vec![0.0; dim.pow(5)],
        }
    }

    #[inline]
    pub fn g(&self, c: usize, a: usize, b: usize) -> f64 {
        let n = self.dim;
        self.gamma[(c * n + a) * n + b]
    }

    #[inline]
    pub fn dg(&self, e: usize, c: usize, a: usize, b: usize) -> f64 {
        let n = self.dim;
        self.d_gamma[((e * n + c) * n + a) * n + b]
    }

    #[inline]
    pub fn ddg(&self, e: usize, f: usize, c: usize, a: usize, b: usize) -> f64 {
        let n = self.dim;
        self.dd_gamma[(((e * n + f) * n + c) * n + a) * n + b]
    }

    /// Γ as a (1,2) tensor with index order (c, a, b).
    pub fn christoffel(&self) -> TensorValues {
        TensorValues::from_data(
            vec![Variance::Contra, Variance::Co, Variance::Co],
            self.dim,
            self.gamma.clone(),
        )
    }

    /// Rˡᵢⱼₖ with index order (l, i, j, k). Only i < j is computed; the
    /// other half is filled by negation so antisymmetry is exact.
    pub fn curvature(&self) -> TensorValues {
        let n = self.dim;
        let mut r = TensorValues::zeros(
            vec![Variance::Contra, Variance::Co, Variance::Co, Variance::Co],
            n,
        );
        for l in 0..n {
            for i in 0..n {
                for j in i + 1..n {
                    for k in 0..n {
                        let mut v = self.dg(i, l, j, k) - self.dg(j, l, i, k);
                        for m in 0..n {
                            v += self.g(m, j, k) * self.g(l, i, m)
                                - self.g(m, i, k) * self.g(l, j, m);
                        }
                        r.set(&[l, i, j, k], v);
                        r.set(&[l, j, i, k], -v);
                    }
                }
            }
        }
        r
    }

    /// ∂ₐRˡᵢⱼₖ with index order (a, l, i, j, k).
    pub fn curvature_derivative(&self) -> TensorValues {
        let n = self.dim;
        let mut dr = TensorValues::zeros(
            vec![
                Variance::Co,
                Variance::Contra,
                Variance::Co,
                Variance::Co,
                Variance::Co,
            ],
            n,
        );
        for a in 0..n {
            for l in 0..n {
                for i in 0..n {
                    for j in i + 1..n {
                        for k in 0..n {
                            let mut v = self.ddg(a, i, l, j, k) - self.ddg(a, j, l, i, k);
                            for m in 0..n {
                                v += self.dg(a, m, j, k) * self.g(l, i, m)
                                    + self.g(m, j, k) * self.dg(a, l, i, m)
                                    - self.dg(a, m, i, k) * self.g(l, j, m)
                                    - self.g(m, i, k) * self.dg(a, l, j, m);
                            }
                            dr.set(&[a, l, i, j, k], v);
                            dr.set(&[a, l, j, i, k], -v);
                        }
                    }
                }
            }
        }
        dr
    }

    /// (∇ₐR)ˡᵢⱼₖ with index order (a, l, i, j, k).
    pub fn nabla_curvature(&self) -> TensorValues {
        let n = self.dim;
        let r = self.curvature();
        let mut out = self.curvature_derivative();
        for a in 0..n {
            for l in 0..n {
                for i in 0..n {
                    for j in i + 1..n {
                        for k in 0..n {
                            let mut v = out.get(&[a, l, i, j, k]);
                            for m in 0..n {
                                v += self.g(l, a, m) * r.get(&[m, i, j, k])
                                    - self.g(m, a, i) * r.get(&[l, m, j, k])
                                    - self.g(m, a, j) * r.get(&[l, i, m, k])
                                    - self.g(m, a, k) * r.get(&[l, i, j, m]);
                            }
                            out.set(&[a, l, i, j, k], v);
                            out.set(&[a, l, j, i, k], -v);
                        }
                    }
                }
            }
        }
        out
    }

    /// ρⱼₖ = Σᵢ Rⁱᵢⱼₖ, index order (j, k).
    pub fn ricci(&self) -> TensorValues {
        ricci_from_curvature(&self.curvature())
    }

    /// ∂ₐρⱼₖ, index order (a, j, k).
    pub fn ricci_derivative(&self) -> TensorValues {
        contract_first_pair(&self.curvature_derivative())
    }

    /// (∇ₐρ)ⱼₖ, index order (a, j, k). Contraction commutes with ∇.
    pub fn nabla_ricci(&self) -> TensorValues {
        contract_first_pair(&self.nabla_curvature())
    }
}

pub fn ricci_from_curvature(r: &TensorValues) -> TensorValues {
    let n = r.dim();
    let mut rho = TensorValues::zeros(vec![Variance::Co, Variance::Co], n);
    for j in 0..n {
        for k in 0..n {
            rho.set(&[j, k], (0..n).map(|i| r.get(&[i, i, j, k])).sum());
        }
    }
    rho
}

/// Traces slots (1, 2) of an (a, l, i, j, k) array: Σᵢ T[a][i][i][j][k].
fn contract_first_pair(t: &TensorValues) -> TensorValues {
    let n = t.dim();
    let mut out = TensorValues::zeros(vec![Variance::Co, Variance::Co, Variance::Co], n);
    for a in 0..n {
        for j in 0..n {
            for k in 0..n {
                out.set(&[a, j, k], (0..n).map(|i| t.get(&[a, i, i, j, k])).sum());
            }
        }
    }
    out
}

/// Coordinate matrix of Y ↦ (∇_X R)(Y,X)X from ∇R in (a, l, i, j, k)
/// layout: entry (l, m) is the ∂ₗ component of the image of ∂ₘ.
pub fn szabo_matrix(nabla_r: &TensorValues, x: &[f64]) -> Matrix {
    let n = nabla_r.dim();
    assert_eq!(x.len(), n, "direction dimension");
    let mut m = Matrix::zeros(n);
    for a in 0..n {
        if x[a] == 0.0 {
            continue;
        }
        for j in 0..n {
            for k in 0..n {
                let w = x[a] * x[j] * x[k];
                if w == 0.0 {
                    continue;
                }
                for l in 0..n {
                    for col in 0..n {
                        m[(l, col)] += w * nabla_r.get(&[a, l, col, j, k]);
                    }
                }
            }
        }
    }
    m
}
