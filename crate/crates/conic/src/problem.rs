use num_complex::Complex64;

use crate::error::ConicError;
use crate::linalg::{hermitian_eigen, hermitian_part};
use crate::{CMatrix, CVector};

/// Hermitian coefficient matrix of a block functional, stored as a signed
/// sum of rank-one terms `sum_r weight_r u_r u_r^H`. Hermitian by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianTerm {
    dim: usize,
    factors: Vec<(f64, CVector)>,
}

impl HermitianTerm {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            factors: Vec::new(),
        }
    }

    /// `v v^H`.
    pub fn rank_one(v: CVector) -> Self {
        Self::scaled_rank_one(1.0, v)
    }

    /// `weight · v v^H`.
    pub fn scaled_rank_one(weight: f64, v: CVector) -> Self {
        Self {
            dim: v.len(),
            factors: vec![(weight, v)],
        }
    }

    /// Identity coefficient, i.e. the trace functional.
    pub fn identity(dim: usize) -> Self {
        let factors = (0..dim).map(|k| (1.0, unit(dim, k))).collect();
        Self { dim, factors }
    }

    /// `e_k e_k^T`, selecting the diagonal entry `X_kk`.
    pub fn diagonal_entry(dim: usize, k: usize) -> Self {
        Self::rank_one(unit(dim, k))
    }

    /// Factor a dense Hermitian matrix through its eigendecomposition.
    /// Rejects inputs whose asymmetry exceeds `1e-12` relative to their norm.
    pub fn from_dense(a: &CMatrix) -> Result<Self, ConicError> {
        if a.nrows() != a.ncols() {
            return Err(ConicError::Malformed(
                "coefficient matrix not square".into(),
            ));
        }
        let scale = a.norm().max(1.0);
        let asym = (a - a.adjoint()).norm() / scale;
        if asym > 1e-12 {
            return Err(ConicError::NotHermitian(asym));
        }
        let eig = hermitian_eigen(&hermitian_part(a));
        let top = eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let factors = eig
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > 1e-15 * top)
            .map(|(k, &v)| (v, eig.vector(k)))
            .collect();
        Ok(Self {
            dim: a.nrows(),
            factors,
        })
    }

    pub fn push(&mut self, weight: f64, v: CVector) {
        assert_eq!(v.len(), self.dim, "factor length mismatch");
        self.factors.push((weight, v));
    }

    pub fn extend(&mut self, other: &HermitianTerm, scale: f64) {
        assert_eq!(other.dim, self.dim, "term dimension mismatch");
        for (w, u) in &other.factors {
            self.factors.push((scale * w, u.clone()));
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factors(&self) -> &[(f64, CVector)] {
        &self.factors
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (w, u) in &self.factors {
            out += (u * u.adjoint()).scale(*w);
        }
        out
    }

    /// `Re tr(A X)`.
    pub fn eval(&self, x: &CMatrix) -> f64 {
        self.factors
            .iter()
            .map(|(w, u)| w * u.dotc(&(x * u)).re)
            .sum()
    }

    /// Frobenius norm, computed from the Gram matrix of the factors.
    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for (wa, a) in &self.factors {
            for (wb, b) in &self.factors {
                acc += wa * wb * a.dotc(b).norm_sqr();
            }
        }
        acc.max(0.0).sqrt()
    }
}

fn unit(dim: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[k] = Complex64::new(1.0, 0.0);
    v
}

/// Linear functional over PSD blocks and scalar variables:
/// `sum_b Re tr(A_b X_b) + sum_k a_k x_k`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearFunctional {
    pub blocks: Vec<(usize, HermitianTerm)>,
    pub scalars: Vec<(usize, f64)>,
}

impl LinearFunctional {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn block(mut self, block: usize, term: HermitianTerm) -> Self {
        self.blocks.push((block, term));
        self
    }

    pub fn scalar(mut self, index: usize, coeff: f64) -> Self {
        self.scalars.push((index, coeff));
        self
    }

    pub fn eval(&self, blocks: &[CMatrix], scalars: &[f64]) -> f64 {
        let b: f64 = self.blocks.iter().map(|(i, t)| t.eval(&blocks[*i])).sum();
        let s: f64 = self.scalars.iter().map(|(i, a)| a * scalars[*i]).sum();
        b + s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub func: LinearFunctional,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarKind {
    NonNeg,
    Free,
}

/// `maximize objective` over Hermitian PSD blocks and scalar variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProblem {
    pub psd_blocks: Vec<usize>,
    pub scalars: Vec<ScalarKind>,
    pub objective: LinearFunctional,
    pub constraints: Vec<Constraint>,
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an `n x n` Hermitian PSD block and returns its index.
    pub fn add_block(&mut self, n: usize) -> usize {
        self.psd_blocks.push(n);
        self.psd_blocks.len() - 1
    }

    pub fn add_scalar(&mut self, kind: ScalarKind) -> usize {
        self.scalars.push(kind);
        self.scalars.len() - 1
    }

    pub fn maximize(&mut self, objective: LinearFunctional) {
        self.objective = objective;
    }

    pub fn constrain(&mut self, func: LinearFunctional, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            func,
            relation,
            rhs,
        });
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        let check = |f: &LinearFunctional, what: &str| -> Result<(), ConicError> {
            for (b, term) in &f.blocks {
                let n = *self.psd_blocks.get(*b).ok_or_else(|| {
                    ConicError::Malformed(format!("{what}: block {b} does not exist"))
                })?;
                if term.dim() != n {
                    return Err(ConicError::Malformed(format!(
                        "{what}: block {b} has dimension {n}, term has {}",
                        term.dim()
                    )));
                }
                let finite = term.factors().iter().all(|(w, u)| {
                    w.is_finite() && u.iter().all(|z| z.re.is_finite() && z.im.is_finite())
                });
                if !finite {
                    return Err(ConicError::Malformed(format!(
                        "{what}: non-finite coefficient"
                    )));
                }
            }
            for (k, a) in &f.scalars {
                if *k >= self.scalars.len() {
                    return Err(ConicError::Malformed(format!(
                        "{what}: scalar {k} does not exist"
                    )));
                }
                if !a.is_finite() {
                    return Err(ConicError::Malformed(format!(
                        "{what}: non-finite coefficient"
                    )));
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (i, c) in self.constraints.iter().enumerate() {
            check(&c.func, &format!("constraint {i}"))?;
            if !c.rhs.is_finite() {
                return Err(ConicError::Malformed(format!(
                    "constraint {i}: non-finite rhs"
                )));
            }
        }
        if self.psd_blocks.contains(&0) {
            return Err(ConicError::Malformed("empty PSD block".into()));
        }
        Ok(())
    }
}
