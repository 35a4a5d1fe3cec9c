//! Infeasible-start primal-dual interior-point method for the standard form
//! produced by [`crate::standard`].
//!
//! Search direction: HKM (`ΔX = (R_c - X ΔZ) Z^{-1}`, symmetrized), with a
//! Mehrotra predictor-corrector step. The data is equilibrated with a few
//! Ruiz passes before the first iteration, and the objective and right-hand
//! side are normalized, so that problems whose coefficients span many orders
//! of magnitude (received powers around 1e-5 W against noise around 1e-11 W)
//! still converge to full relative accuracy.

use nalgebra::{DMatrix, DVector};

use crate::error::ConicError;
use crate::problem::{ConicProblem, HermitianTerm};
use crate::standard::StandardForm;
use crate::CMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Inaccurate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative duality gap and feasibility tolerance.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iters: 120,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    /// Value of every PSD block, in problem order.
    pub blocks: Vec<CMatrix>,
    /// Value of every scalar variable, in problem order.
    pub scalars: Vec<f64>,
    /// Objective of the (maximization) problem at the returned point.
    pub objective: f64,
    pub status: SolveStatus,
    /// `|primal objective - dual objective|` in problem units.
    pub duality_gap: f64,
    /// Largest row residual `|A_i(X) - b_i|`, relative to `|b_i|` plus the
    /// magnitudes of the row's terms.
    pub primal_residual: f64,
    pub iterations: usize,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

struct BlockData {
    n: usize,
    rows: Vec<usize>,
    weights: Vec<f64>,
    /// Factor vectors as columns, `n x F`.
    u: CMatrix,
    c: CMatrix,
}

/// Equilibrated standard-form data.
struct Data {
    m: usize,
    blocks: Vec<BlockData>,
    /// `m x n_lp`.
    a_lp: DMatrix<f64>,
    c_lp: DVector<f64>,
    b: DVector<f64>,
    block_scale: Vec<f64>,
    lp_scale: Vec<f64>,
    obj_scale: f64,
    rhs_scale: f64,
}

struct Iterate {
    x: Vec<CMatrix>,
    z: Vec<CMatrix>,
    x_lp: DVector<f64>,
    z_lp: DVector<f64>,
    y: DVector<f64>,
}

struct Direction {
    dx: Vec<CMatrix>,
    dz: Vec<CMatrix>,
    dx_lp: DVector<f64>,
    dz_lp: DVector<f64>,
    dy: DVector<f64>,
}

/// Per-iteration quantities shared by the predictor and corrector solves.
struct Cache {
    z_inv: Vec<CMatrix>,
    rd: Vec<CMatrix>,
    rd_lp: DVector<f64>,
    /// `X R_d Z^{-1}` per block.
    xrz: Vec<CMatrix>,
    schur: SchurFactor,
}

enum SchurFactor {
    Chol(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl SchurFactor {
    fn new(mut m: DMatrix<f64>) -> Option<Self> {
        if m.nrows() == 0 {
            return m.cholesky().map(SchurFactor::Chol);
        }
        if let Some(c) = m.clone().cholesky() {
            return Some(SchurFactor::Chol(c));
        }
        let diag_max = m
            .diagonal()
            .iter()
            .fold(0.0_f64, |a, v| a.max(v.abs()))
            .max(1e-300);
        for k in 0..m.nrows() {
            m[(k, k)] += 1e-13 * diag_max;
        }
        if let Some(c) = m.clone().cholesky() {
            return Some(SchurFactor::Chol(c));
        }
        let lu = m.lu();
        if lu.is_invertible() {
            Some(SchurFactor::Lu(lu))
        } else {
            None
        }
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        match self {
            SchurFactor::Chol(c) => Some(c.solve(rhs)),
            SchurFactor::Lu(l) => l.solve(rhs),
        }
    }
}

fn scale_c(m: &CMatrix, s: f64) -> CMatrix {
    m.map(|z| z * s)
}

fn herm(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).map(|z| z * 0.5)
}

fn re_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    // Re tr(A^H B) = Re tr(A B) for Hermitian A.
    a.iter().zip(b.iter()).map(|(p, q)| (p.conj() * q).re).sum()
}

impl Data {
    fn build(sf: &StandardForm) -> Self {
        let m = sf.rows.len();
        let nb = sf.blocks.len();
        let n_lp = sf.n_lp;

        // Merge terms that hit the same block within a row.
        let mut merged: Vec<Vec<Option<HermitianTerm>>> = vec![vec![None; nb]; m];
        for (i, row) in sf.rows.iter().enumerate() {
            for (b, term) in &row.blocks {
                merged[i][*b]
                    .get_or_insert_with(|| HermitianTerm::zero(term.dim()))
                    .extend(term, 1.0);
            }
        }
        let norms: Vec<Vec<f64>> = merged
            .iter()
            .map(|r| {
                r.iter()
                    .map(|t| t.as_ref().map_or(0.0, |t| t.frobenius_norm()))
                    .collect()
            })
            .collect();
        let mut a_lp = DMatrix::<f64>::zeros(m, n_lp);
        for (i, row) in sf.rows.iter().enumerate() {
            for &(k, a) in &row.lp {
                a_lp[(i, k)] += a;
            }
        }

        // Ruiz equilibration on the magnitude pattern.
        let mut r = vec![1.0; m];
        let mut sb = vec![1.0; nb];
        let mut sl = vec![1.0; n_lp];
        for _ in 0..20 {
            for i in 0..m {
                let mut mx = 0.0_f64;
                for b in 0..nb {
                    mx = mx.max(r[i] * sb[b] * norms[i][b]);
                }
                for k in 0..n_lp {
                    mx = mx.max(r[i] * sl[k] * a_lp[(i, k)].abs());
                }
                if mx > 0.0 {
                    r[i] /= mx.sqrt();
                }
            }
            for b in 0..nb {
                let mx = (0..m).fold(0.0_f64, |a, i| a.max(r[i] * sb[b] * norms[i][b]));
                if mx > 0.0 {
                    sb[b] /= mx.sqrt();
                }
            }
            for k in 0..n_lp {
                let mx = (0..m).fold(0.0_f64, |a, i| a.max(r[i] * sl[k] * a_lp[(i, k)].abs()));
                if mx > 0.0 {
                    sl[k] /= mx.sqrt();
                }
            }
        }

        for i in 0..m {
            for k in 0..n_lp {
                a_lp[(i, k)] *= r[i] * sl[k];
            }
        }
        let mut c_lp = DVector::from_iterator(n_lp, (0..n_lp).map(|k| sf.c_lp[k] * sl[k]));
        let mut c_dense: Vec<CMatrix> = (0..nb)
            .map(|b| scale_c(&sf.c_blocks[b].to_dense(), sb[b]))
            .collect();
        let c_max = c_dense
            .iter()
            .map(|c| c.norm())
            .chain(c_lp.iter().map(|v| v.abs()))
            .fold(0.0_f64, f64::max);
        let obj_scale = if c_max > 0.0 { c_max } else { 1.0 };
        c_lp /= obj_scale;
        for c in &mut c_dense {
            *c = scale_c(c, 1.0 / obj_scale);
        }

        let mut b = DVector::from_iterator(m, (0..m).map(|i| sf.rows[i].rhs * r[i]));
        let b_max = b.amax();
        let rhs_scale = if b_max > 0.0 { b_max } else { 1.0 };
        b /= rhs_scale;

        let mut blocks = Vec::with_capacity(nb);
        for (bi, &n) in sf.blocks.iter().enumerate() {
            let mut rows = Vec::new();
            let mut weights = Vec::new();
            let mut cols = Vec::new();
            for i in 0..m {
                if let Some(t) = &merged[i][bi] {
                    for (w, u) in t.factors() {
                        rows.push(i);
                        weights.push(w * r[i] * sb[bi]);
                        cols.push(u.clone());
                    }
                }
            }
            let u = if cols.is_empty() {
                CMatrix::zeros(n, 0)
            } else {
                CMatrix::from_columns(&cols)
            };
            blocks.push(BlockData {
                n,
                rows,
                weights,
                u,
                c: c_dense[bi].clone(),
            });
        }

        Data {
            m,
            blocks,
            a_lp,
            c_lp,
            b,
            block_scale: sb,
            lp_scale: sl,
            obj_scale,
            rhs_scale,
        }
    }

    fn degree(&self) -> f64 {
        (self.blocks.iter().map(|b| b.n).sum::<usize>() + self.c_lp.len()) as f64
    }

    /// `A(Y)_i = sum_b Re tr(A_ib Y_b) + a_i^T y_lp`.
    fn apply(&self, ys: &[CMatrix], y_lp: &DVector<f64>) -> DVector<f64> {
        let mut out = &self.a_lp * y_lp;
        for (bd, yb) in self.blocks.iter().zip(ys) {
            if bd.rows.is_empty() {
                continue;
            }
            let yu = yb * &bd.u;
            for f in 0..bd.rows.len() {
                let val = bd.u.column(f).dotc(&yu.column(f)).re;
                out[bd.rows[f]] += bd.weights[f] * val;
            }
        }
        out
    }

    /// Row-wise sum of absolute term values `|w u^H Y u| + |a_ik y_k|`, the
    /// natural magnitude against which each row's residual is measured.
    fn activity(&self, ys: &[CMatrix], y_lp: &DVector<f64>) -> DVector<f64> {
        let mut out = self.a_lp.abs() * y_lp.abs();
        for (bd, yb) in self.blocks.iter().zip(ys) {
            if bd.rows.is_empty() {
                continue;
            }
            let yu = yb * &bd.u;
            for f in 0..bd.rows.len() {
                let val = bd.u.column(f).dotc(&yu.column(f)).re;
                out[bd.rows[f]] += (bd.weights[f] * val).abs();
            }
        }
        out
    }

    /// `A^T(y)` per block, plus the LP part.
    fn adjoint(&self, y: &DVector<f64>) -> (Vec<CMatrix>, DVector<f64>) {
        let mats = self
            .blocks
            .iter()
            .map(|bd| {
                if bd.rows.is_empty() {
                    return CMatrix::zeros(bd.n, bd.n);
                }
                let mut scaled = bd.u.clone();
                for f in 0..bd.rows.len() {
                    let s = bd.weights[f] * y[bd.rows[f]];
                    scaled.column_mut(f).scale_mut(s);
                }
                &scaled * bd.u.adjoint()
            })
            .collect();
        (mats, self.a_lp.transpose() * y)
    }

    fn schur(&self, it: &Iterate, z_inv: &[CMatrix]) -> DMatrix<f64> {
        let mut mm = DMatrix::<f64>::zeros(self.m, self.m);
        for (b, bd) in self.blocks.iter().enumerate() {
            let f = bd.rows.len();
            if f == 0 {
                continue;
            }
            let uh = bd.u.adjoint();
            let p = &uh * (&it.x[b] * &bd.u);
            let q = &uh * (&z_inv[b] * &bd.u);
            for r in 0..f {
                for s in 0..f {
                    let v = bd.weights[r] * bd.weights[s] * (p[(r, s)] * q[(s, r)]).re;
                    mm[(bd.rows[r], bd.rows[s])] += v;
                }
            }
        }
        if !self.c_lp.is_empty() {
            let d = it.x_lp.component_div(&it.z_lp);
            let mut ad = self.a_lp.clone();
            for k in 0..d.len() {
                ad.column_mut(k).scale_mut(d[k]);
            }
            mm += &ad * self.a_lp.transpose();
        }
        // Symmetrize away round-off.
        let t = mm.transpose();
        (mm + t) * 0.5
    }
}

fn max_step_psd(x: &CMatrix, dx: &CMatrix) -> f64 {
    let Some(ch) = x.clone().cholesky() else {
        return 0.0;
    };
    let l = ch.l();
    let Some(y) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(w) = l.solve_lower_triangular(&y.adjoint()) else {
        return 0.0;
    };
    let ev = herm(&w).symmetric_eigenvalues();
    let lmin = ev.iter().copied().fold(f64::INFINITY, f64::min);
    if !lmin.is_finite() {
        0.0
    } else if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn max_step_lp(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    x.iter()
        .zip(dx.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

/// Solve a conic problem. Infeasibility, unboundedness and loss of accuracy
/// are reported through [`SolveStatus`]; only structurally malformed input
/// is an error.
/// Below this scaled objective magnitude the gap test turns absolute.
const GAP_FLOOR: f64 = 1e-6;
/// Same for the per-row primal residual test.
const ROW_FLOOR: f64 = 1e-9;

pub fn solve(problem: &ConicProblem, opts: &SolverOptions) -> Result<ConicSolution, ConicError> {
    problem.validate()?;
    let sf = StandardForm::from_problem(problem);
    let data = Data::build(&sf);
    let mut it = initial_point(&data);
    let tol = opts.tol;
    let nu = data.degree().max(1.0);

    let mut status = SolveStatus::Inaccurate;
    let mut iterations = 0;
    let mut stalls = 0;
    let mut best: Option<(f64, Iterate)> = None;

    for iter in 0..opts.max_iters {
        iterations = iter;
        let ax = data.apply(&it.x, &it.x_lp);
        let rp = &data.b - &ax;
        let (aty, aty_lp) = data.adjoint(&it.y);
        let rd: Vec<CMatrix> = (0..data.blocks.len())
            .map(|b| herm(&(&data.blocks[b].c - &aty[b] - &it.z[b])))
            .collect();
        let rd_lp = &data.c_lp - &aty_lp - &it.z_lp;

        let pobj = primal_obj(&data, &it);
        let dobj = data.b.dot(&it.y);
        let gap = complementarity(&it);
        let c_norm = 1.0
            + data
                .blocks
                .iter()
                .map(|b| b.c.norm_squared())
                .sum::<f64>()
                .sqrt()
            + data.c_lp.norm();
        let act = data.activity(&it.x, &it.x_lp);
        let pinf = (0..data.m)
            .map(|i| rp[i].abs() / (data.b[i].abs() + act[i]).max(ROW_FLOOR))
            .fold(0.0_f64, f64::max);
        let dinf = (rd.iter().map(|m| m.norm_squared()).sum::<f64>() + rd_lp.norm_squared()).sqrt()
            / c_norm;
        let rel_gap = gap.max((pobj - dobj).abs()) / (pobj.abs() + dobj.abs()).max(GAP_FLOOR);

        let merit = pinf.max(dinf).max(rel_gap);
        if best.as_ref().is_none_or(|(m, _)| merit < *m) {
            best = Some((merit, it.clone_state()));
        }
        if pinf <= tol && dinf <= tol && rel_gap <= tol {
            status = SolveStatus::Optimal;
            break;
        }

        // Certificates of infeasibility: a dual ray (y, Z) with A^T y + Z ≈ 0
        // and b^T y > 0, or a primal ray X with A(X) ≈ 0 and <C, X> < 0.
        if dobj > 0.0 {
            let ray: f64 = (aty
                .iter()
                .zip(&it.z)
                .map(|(a, z)| (a + z).norm_squared())
                .sum::<f64>()
                + (&aty_lp + &it.z_lp).norm_squared())
            .sqrt();
            if ray / dobj < 1e-8 {
                status = SolveStatus::Infeasible;
                break;
            }
        }
        if pobj < 0.0 && ax.norm() / -pobj < 1e-8 {
            status = SolveStatus::Unbounded;
            break;
        }

        let mu = gap / nu;
        let Some(cache) = prepare(&data, &it, rd, rd_lp) else {
            break;
        };

        // Predictor.
        let zero_t: Vec<CMatrix> = data
            .blocks
            .iter()
            .map(|b| CMatrix::zeros(b.n, b.n))
            .collect();
        let zero_t_lp = DVector::zeros(data.c_lp.len());
        let Some(pred) = direction(&data, &it, &cache, &zero_t, &zero_t_lp) else {
            break;
        };
        let (ap, ad) = step_lengths(&it, &pred);
        let ap1 = ap.min(1.0);
        let ad1 = ad.min(1.0);
        let mut mu_aff = 0.0;
        for b in 0..it.x.len() {
            let xn = &it.x[b] + scale_c(&pred.dx[b], ap1);
            let zn = &it.z[b] + scale_c(&pred.dz[b], ad1);
            mu_aff += re_inner(&xn, &zn);
        }
        mu_aff += (&it.x_lp + &pred.dx_lp * ap1).dot(&(&it.z_lp + &pred.dz_lp * ad1));
        mu_aff /= nu;
        let sigma = if mu > 0.0 {
            (mu_aff / mu).max(0.0).powi(3).min(1.0)
        } else {
            0.0
        };

        // Corrector.
        let target: Vec<CMatrix> = (0..it.x.len())
            .map(|b| {
                let n = it.x[b].nrows();
                let rc =
                    CMatrix::identity(n, n).map(|z| z * (sigma * mu)) - &pred.dx[b] * &pred.dz[b];
                rc * &cache.z_inv[b]
            })
            .collect();
        let target_lp = DVector::from_iterator(
            it.x_lp.len(),
            (0..it.x_lp.len()).map(|k| (sigma * mu - pred.dx_lp[k] * pred.dz_lp[k]) / it.z_lp[k]),
        );
        let Some(dir) = direction(&data, &it, &cache, &target, &target_lp) else {
            break;
        };
        let (ap, ad) = step_lengths(&it, &dir);
        let gamma = 0.9 + 0.09 * ap.min(ad).min(1.0);
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls > 3 {
                break;
            }
        } else {
            stalls = 0;
        }
        for b in 0..it.x.len() {
            it.x[b] = herm(&(&it.x[b] + scale_c(&dir.dx[b], ap)));
            it.z[b] = herm(&(&it.z[b] + scale_c(&dir.dz[b], ad)));
        }
        it.x_lp += &dir.dx_lp * ap;
        it.z_lp += &dir.dz_lp * ad;
        it.y += &dir.dy * ad;
        iterations = iter + 1;
    }

    if status == SolveStatus::Inaccurate {
        if let Some((_, b)) = best {
            it = b;
        }
    }
    Ok(finish(problem, &sf, &data, &it, status, iterations))
}

impl Iterate {
    fn clone_state(&self) -> Iterate {
        Iterate {
            x: self.x.clone(),
            z: self.z.clone(),
            x_lp: self.x_lp.clone(),
            z_lp: self.z_lp.clone(),
            y: self.y.clone(),
        }
    }
}

fn primal_obj(data: &Data, it: &Iterate) -> f64 {
    data.blocks
        .iter()
        .zip(&it.x)
        .map(|(b, x)| re_inner(&b.c, x))
        .sum::<f64>()
        + data.c_lp.dot(&it.x_lp)
}

fn complementarity(it: &Iterate) -> f64 {
    it.x.iter()
        .zip(&it.z)
        .map(|(x, z)| re_inner(x, z))
        .sum::<f64>()
        + it.x_lp.dot(&it.z_lp)
}

fn initial_point(data: &Data) -> Iterate {
    let m = data.m;
    let mut x = Vec::new();
    let mut z = Vec::new();
    for bd in &data.blocks {
        let n = bd.n as f64;
        let mut row_norm = vec![0.0_f64; m];
        for f in 0..bd.rows.len() {
            let u = bd.u.column(f);
            row_norm[bd.rows[f]] += bd.weights[f].abs() * u.norm_squared();
        }
        let mut xi = 10.0_f64.max(n.sqrt());
        let mut eta = 10.0_f64.max(n.sqrt()).max(bd.c.norm());
        for (&r, &b) in row_norm.iter().zip(data.b.iter()) {
            if r > 0.0 {
                xi = xi.max(n * (1.0 + b.abs()) / (1.0 + r));
                eta = eta.max(r);
            }
        }
        x.push(CMatrix::identity(bd.n, bd.n).map(|v| v * xi));
        z.push(CMatrix::identity(bd.n, bd.n).map(|v| v * eta));
    }
    let n_lp = data.c_lp.len();
    let nl = n_lp as f64;
    let mut xi = 10.0_f64.max(nl.sqrt());
    let mut eta = 10.0_f64.max(nl.sqrt()).max(data.c_lp.norm());
    for i in 0..m {
        let rn = data.a_lp.row(i).norm();
        if rn > 0.0 {
            xi = xi.max(nl * (1.0 + data.b[i].abs()) / (1.0 + rn));
            eta = eta.max(rn);
        }
    }
    Iterate {
        x,
        z,
        x_lp: DVector::from_element(n_lp, xi),
        z_lp: DVector::from_element(n_lp, eta),
        y: DVector::zeros(m),
    }
}

fn prepare(data: &Data, it: &Iterate, rd: Vec<CMatrix>, rd_lp: DVector<f64>) -> Option<Cache> {
    let mut z_inv = Vec::with_capacity(it.z.len());
    for z in &it.z {
        let ch = z.clone().cholesky()?;
        z_inv.push(herm(&ch.inverse()));
    }
    if it.z_lp.iter().any(|v| *v <= 0.0) || it.x_lp.iter().any(|v| *v <= 0.0) {
        return None;
    }
    let xrz = (0..it.x.len())
        .map(|b| &it.x[b] * &rd[b] * &z_inv[b])
        .collect();
    let schur = SchurFactor::new(data.schur(it, &z_inv))?;
    Some(Cache {
        z_inv,
        rd,
        rd_lp,
        xrz,
        schur,
    })
}

/// Solves the Newton system for a given complementarity target
/// `T = R_c Z^{-1}` (blocks) and `rc / z` (LP).
fn direction(
    data: &Data,
    it: &Iterate,
    cache: &Cache,
    target: &[CMatrix],
    target_lp: &DVector<f64>,
) -> Option<Direction> {
    let xrz_lp = it.x_lp.component_mul(&cache.rd_lp).component_div(&it.z_lp);
    let rhs = &data.b + data.apply(&cache.xrz, &xrz_lp) - data.apply(target, target_lp);
    let dy = cache.schur.solve(&rhs)?;
    if dy.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let (aty, aty_lp) = data.adjoint(&dy);
    let mut dx = Vec::with_capacity(it.x.len());
    let mut dz = Vec::with_capacity(it.x.len());
    for b in 0..it.x.len() {
        let dzb = &cache.rd[b] - &aty[b];
        let dxb = &target[b] - &it.x[b] - &it.x[b] * &dzb * &cache.z_inv[b];
        dx.push(herm(&dxb));
        dz.push(dzb);
    }
    let dz_lp = &cache.rd_lp - &aty_lp;
    let dx_lp = DVector::from_iterator(
        it.x_lp.len(),
        (0..it.x_lp.len()).map(|k| target_lp[k] - it.x_lp[k] - it.x_lp[k] * dz_lp[k] / it.z_lp[k]),
    );
    Some(Direction {
        dx,
        dz,
        dx_lp,
        dz_lp,
        dy,
    })
}

fn step_lengths(it: &Iterate, d: &Direction) -> (f64, f64) {
    let mut ap = max_step_lp(&it.x_lp, &d.dx_lp);
    let mut ad = max_step_lp(&it.z_lp, &d.dz_lp);
    for b in 0..it.x.len() {
        ap = ap.min(max_step_psd(&it.x[b], &d.dx[b]));
        ad = ad.min(max_step_psd(&it.z[b], &d.dz[b]));
    }
    (ap, ad)
}

fn finish(
    problem: &ConicProblem,
    sf: &StandardForm,
    data: &Data,
    it: &Iterate,
    status: SolveStatus,
    iterations: usize,
) -> ConicSolution {
    let beta = data.rhs_scale;
    let blocks: Vec<CMatrix> =
        it.x.iter()
            .enumerate()
            .map(|(b, x)| herm(&x.map(|v| v * (beta * data.block_scale[b]))))
            .collect();
    let x_lp: Vec<f64> = (0..it.x_lp.len())
        .map(|k| it.x_lp[k] * beta * data.lp_scale[k])
        .collect();
    let scalars = sf.scalar_values(&x_lp);
    let objective = problem.objective.eval(&blocks, &scalars);

    // Worst row residual relative to that row's own magnitude; invariant
    // under the row scaling.
    let ax = data.apply(&it.x, &it.x_lp);
    let act = data.activity(&it.x, &it.x_lp);
    let primal_residual = (0..data.m)
        .map(|i| (ax[i] - data.b[i]).abs() / (data.b[i].abs() + act[i]).max(ROW_FLOOR))
        .fold(0.0_f64, f64::max);
    let pobj = primal_obj(data, it);
    let dobj = data.b.dot(&it.y);
    let duality_gap = (pobj - dobj).abs() * data.obj_scale * beta;

    ConicSolution {
        blocks,
        scalars,
        objective,
        status,
        duality_gap,
        primal_residual,
        iterations,
    }
}
