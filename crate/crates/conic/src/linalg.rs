//! Small dense helpers shared by the solver and its callers.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{CMatrix, CVector};

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Column `k` of `vectors` pairs with `values[k]`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    pub fn max_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `U Σ^{1/2}` restricted to the nonnegative part of the spectrum.
    pub fn sqrt_factor(&self) -> CMatrix {
        let mut f = self.vectors.clone();
        for (k, &v) in self.values.iter().enumerate() {
            f.column_mut(k).scale_mut(v.max(0.0).sqrt());
        }
        f
    }
}

/// Hermitian eigendecomposition. The input is symmetrized first so tiny
/// round-off asymmetry from upstream products is harmless.
pub fn hermitian_eigen(a: &CMatrix) -> HermitianEigen {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "hermitian_eigen needs a square matrix");
    if n == 0 {
        return HermitianEigen {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        };
    }
    let sym = hermitian_part(a);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    HermitianEigen { values, vectors }
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Number of eigenvalues above `rel_tol * λ_max`. A matrix whose largest
/// eigenvalue is not positive has rank zero.
pub fn rank_of(x: &CMatrix, rel_tol: f64) -> usize {
    let eig = hermitian_eigen(x);
    let top = eig.max_value();
    if top <= 0.0 {
        return 0;
    }
    eig.values.iter().filter(|&&v| v > rel_tol * top).count()
}

/// Real symmetric embedding `[[Re A, -Im A], [Im A, Re A]]` of a complex
/// Hermitian matrix. `tr(embed(A) embed(X)) = 2 tr(A X)`.
pub fn embed_real(a: &CMatrix) -> DMatrix<f64> {
    let n = a.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = a[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Inverse of [`embed_real`]: reads `Re` from the top-left block and `Im`
/// from the bottom-left block.
pub fn unembed_real(a: &DMatrix<f64>) -> CMatrix {
    assert!(a.nrows().is_multiple_of(2) && a.nrows() == a.ncols());
    let n = a.nrows() / 2;
    CMatrix::from_fn(n, n, |r, c| Complex64::new(a[(r, c)], a[(r + n, c)]))
}

/// `v v^H`.
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Real part of `tr(A B)` without forming the product.
pub fn re_trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            let x = a[(i, k)] * b[(k, i)];
            acc += x.re;
        }
    }
    acc
}

/// `u^H A u`, real part.
pub fn quad_form(a: &CMatrix, u: &CVector) -> f64 {
    let au = a * u;
    u.dotc(&au).re
}

pub fn real_vector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eigen_sorted_descending() {
        let a =
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)]);
        let e = hermitian_eigen(&a);
        assert!((e.values[0] - 2.0).abs() < 1e-12);
        assert!(e.values[1].abs() < 1e-12);
        let v = e.vector(0);
        let av = &a * &v;
        assert!((av - v.scale(2.0)).norm() < 1e-12);
    }

    #[test]
    fn rank_examples() {
        let v = CVector::from_vec(vec![c(1.0, 0.5), c(-0.3, 2.0), c(0.1, 0.0)]);
        assert_eq!(rank_of(&outer(&v), 1e-6), 1);
        assert_eq!(rank_of(&CMatrix::identity(3, 3), 1e-6), 3);
        let noisy = outer(&v) + CMatrix::identity(3, 3).scale(1e-12);
        assert_eq!(rank_of(&noisy, 1e-6), 1);
        assert_eq!(rank_of(&CMatrix::zeros(3, 3), 1e-6), 0);
    }

    #[test]
    fn embedding_round_trip_and_trace_factor() {
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[c(2.0, 0.0), c(0.5, -1.5), c(0.5, 1.5), c(-1.0, 0.0)],
        );
        let x =
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.2, 0.3), c(0.2, -0.3), c(3.0, 0.0)]);
        assert_eq!(unembed_real(&embed_real(&a)), a);
        let lhs = embed_real(&a)
            .component_mul(&embed_real(&x).transpose())
            .sum();
        assert!((lhs - 2.0 * re_trace_product(&a, &x)).abs() < 1e-12);
    }
}
