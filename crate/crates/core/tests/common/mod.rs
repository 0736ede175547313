#![allow(dead_code)]

use szabo_forge::affine::{wong_connection, ExampleFamilySpec};
use szabo_forge::expr::parse;
use szabo_forge::extension::SymmetricBilinearSpec;
use szabo_forge::smallnum::{fd_partial, FdOrder};
use szabo_forge::{AffineConnection, Expr, SampleDomain};

pub fn coords(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("u{i}")).collect()
}

pub fn e(s: &str) -> Expr {
    parse(s, &coords(4)).unwrap()
}

pub struct GalleryEntry {
    pub name: &'static str,
    pub connection: AffineConnection,
    pub domain: SampleDomain,
    pub szabo: bool,
}

/// The five test connections with the Szabó verdict each should get.
pub fn gallery() -> Vec<GalleryEntry> {
    let square = SampleDomain::cube(2, -1.0, 1.0).unwrap();
    let shifted = SampleDomain::new(vec![(0.5, 1.5), (-1.0, 1.0)], 200, 0xC0FFEE, 1e-8).unwrap();
    vec![
        GalleryEntry {
            name: "flat",
            connection: AffineConnection::flat(2),
            domain: square.clone(),
            szabo: true,
        },
        GalleryEntry {
            name: "wong u1*u2",
            connection: wong_connection(&e("u1*u2")).unwrap(),
            domain: square.clone(),
            szabo: true,
        },
        GalleryEntry {
            name: "wong u1^2*u2",
            connection: wong_connection(&e("u1^2*u2")).unwrap(),
            domain: shifted,
            szabo: true,
        },
        GalleryEntry {
            name: "family sin(u1), 1",
            connection: family(),
            domain: square.clone(),
            szabo: true,
        },
        GalleryEntry {
            name: "gamma111 = u2",
            connection: AffineConnection::from_entries(2, [((0, 0, 0), e("u2"))]).unwrap(),
            domain: square,
            szabo: false,
        },
    ]
}

pub fn family() -> AffineConnection {
    ExampleFamilySpec::new(e("sin(u1)"), e("1"))
        .unwrap()
        .connection()
        .unwrap()
}

pub fn poly_phi() -> SymmetricBilinearSpec {
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

/// Ricci tensor by tracing a curvature built from finite differences of
/// the evaluated Christoffel symbols, `[j][k]`.
pub fn fd_ricci(c: &AffineConnection, p: &[f64]) -> Vec<Vec<f64>> {
    let n = c.dim();
    let g = |k: usize, i: usize, j: usize, q: &[f64]| c.symbol(k, i, j).eval(q);
    let gp = |k, i, j| g(k, i, j, p).unwrap();
    let mut rho = vec![vec![0.0; n]; n];
    for (j, row) in rho.iter_mut().enumerate() {
        for (k, out) in row.iter_mut().enumerate() {
            for i in 0..n {
                // Rⁱᵢⱼₖ
                let mut v = fd_partial(|q| g(i, j, k, q), p, i, FdOrder::First).unwrap()
                    - fd_partial(|q| g(i, i, k, q), p, j, FdOrder::First).unwrap();
                for m in 0..n {
                    v += gp(m, j, k) * gp(i, i, m) - gp(m, i, k) * gp(i, j, m);
                }
                *out += v;
            }
        }
    }
    rho
}
