//! Phase-shift design for fixed transmit beamformers.
//!
//! Every received amplitude is affine in the reflection coefficients, so with
//! the lifted vector `phi = [e^{-j theta}; l]` each squared magnitude is a
//! Hermitian form `tr(A Phi) + const` in `Phi = phi phi^H`. Dropping the rank
//! constraint on `Phi` leaves an SDP with a unit diagonal; phases are read
//! back from its principal eigenvector or from Gaussian randomization.

use swipt_conic::{
    hermitian_eigen, rank_of, solve, ConicProblem, HermitianTerm, LinearFunctional, Relation,
    ScalarKind, SolveStatus, SolverOptions,
};

use crate::channel::ChannelSet;
use crate::error::CoreError;
use crate::metrics::{sinr_feasible, wrap_phase, ActiveSolution, Effective, PhaseSolution};
use crate::par::par_map;
use crate::rng::{cscg_vector, Children, SimRng};
use crate::scenario::SystemConfig;
use crate::{CMatrix, CVector, Complex64};

/// Stacked coefficient vectors `[diag(r^H) T x; d^H x]` of every amplitude
/// the phase design touches. The last entry is the direct-path scalar.
#[derive(Debug, Clone)]
pub struct LiftedData {
    pub elements: usize,
    /// ID receiver `k`, beam `i`.
    pub c: Vec<Vec<CVector>>,
    /// EH receiver `j`, beam `i`.
    pub e: Vec<Vec<CVector>>,
    /// EH receiver `j`, energy factor `k`.
    pub o: Vec<Vec<CVector>>,
    /// Energy covariance factors, `S_E = sum_k v_k v_k^H`.
    pub v: Vec<CVector>,
    /// Numerical rank of the energy covariance.
    pub energy_rank: usize,
}

fn stacked(reflect: &CVector, direct: &CVector, t: &CMatrix, x: &CVector) -> CVector {
    let n = reflect.len();
    let tx = t * x;
    let mut out = CVector::zeros(n + 1);
    for k in 0..n {
        out[k] = reflect[k].conj() * tx[k];
    }
    out[n] = direct.dotc(x);
    out
}

/// The lifted matrix of one stacked vector `a = [c; d]`:
/// `[[c c^H, c d^*], [d c^H, 0]]`, i.e. `a a^H` with the corner removed.
pub fn lifted_term(a: &CVector) -> HermitianTerm {
    let n1 = a.len();
    let mut t = HermitianTerm::rank_one(a.clone());
    let mut corner = CVector::zeros(n1);
    corner[n1 - 1] = Complex64::new(1.0, 0.0);
    t.push(-a[n1 - 1].norm_sqr(), corner);
    t
}

/// Direct-path scalar of a stacked vector.
pub fn direct_part(a: &CVector) -> Complex64 {
    a[a.len() - 1]
}

pub fn build_lifted(ch: &ChannelSet, active: &ActiveSolution, cfg: &SystemConfig) -> LiftedData {
    let eig = hermitian_eigen(&active.s_e);
    let top = eig.max_value();
    let v: Vec<CVector> = if top > 0.0 {
        eig.values
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 1e-12 * top)
            .map(|(k, &l)| eig.vector(k).scale(l.sqrt()))
            .collect()
    } else {
        Vec::new()
    };
    let per_beam = |r: &CVector, d: &CVector, xs: &[CVector]| -> Vec<CVector> {
        xs.iter().map(|x| stacked(r, d, &ch.t, x)).collect()
    };
    LiftedData {
        elements: ch.elements(),
        c: (0..ch.n_id())
            .map(|k| per_beam(&ch.h_r[k], &ch.h_d[k], &active.w))
            .collect(),
        e: (0..ch.n_eh())
            .map(|j| per_beam(&ch.g_r[j], &ch.g_d[j], &active.w))
            .collect(),
        o: (0..ch.n_eh())
            .map(|j| per_beam(&ch.g_r[j], &ch.g_d[j], &v))
            .collect(),
        v,
        energy_rank: rank_of(&active.s_e, cfg.algo.rank_eig_tol),
    }
}

/// Relaxed phase problem over `Phi` (size `N + 1`) and `t`.
pub fn build_phase_relaxation(ld: &LiftedData, cfg: &SystemConfig) -> ConicProblem {
    let n1 = ld.elements + 1;
    let mut p = ConicProblem::new();
    let phi = p.add_block(n1);
    let t = p.add_scalar(ScalarKind::NonNeg);
    p.maximize(LinearFunctional::new().scalar(t, 1.0));

    for (e_j, o_j) in ld.e.iter().zip(&ld.o) {
        let mut term = HermitianTerm::zero(n1);
        let mut constant = 0.0;
        for a in e_j.iter().chain(o_j) {
            term.extend(&lifted_term(a), 1.0);
            constant += direct_part(a).norm_sqr();
        }
        let f = LinearFunctional::new().block(phi, term).scalar(t, -1.0);
        p.constrain(f, Relation::Ge, -constant);
    }
    for (i, c_i) in ld.c.iter().enumerate() {
        let gamma = cfg.sinr_min[i];
        let mut term = lifted_term(&c_i[i]);
        let mut interference = 0.0;
        for (k, a) in c_i.iter().enumerate() {
            if k != i {
                term.extend(&lifted_term(a), -gamma);
                interference += direct_part(a).norm_sqr();
            }
        }
        let rhs = gamma * (interference + cfg.noise[i]) - direct_part(&c_i[i]).norm_sqr();
        p.constrain(LinearFunctional::new().block(phi, term), Relation::Ge, rhs);
    }
    for n in 0..n1 {
        let f = LinearFunctional::new().block(phi, HermitianTerm::diagonal_entry(n1, n));
        p.constrain(f, Relation::Eq, 1.0);
    }
    p
}

/// Relaxed optimum of the phase problem.
#[derive(Debug, Clone)]
pub struct LiftedSolution {
    pub phi: CMatrix,
    pub t_star: f64,
    pub rank: usize,
}

pub fn solve_phase_relaxation(
    ld: &LiftedData,
    cfg: &SystemConfig,
) -> Result<LiftedSolution, CoreError> {
    let sol = solve(
        &build_phase_relaxation(ld, cfg),
        &SolverOptions::with_tol(cfg.algo.solver_tol),
    )?;
    match sol.status {
        SolveStatus::Optimal | SolveStatus::Inaccurate => {}
        SolveStatus::Infeasible => return Err(CoreError::PassiveRecoveryFailed),
        SolveStatus::Unbounded => return Err(CoreError::Numerical("phase SDR unbounded".into())),
    }
    let phi = sol.blocks[0].clone();
    let rank = rank_of(&phi, cfg.algo.rank_eig_tol);
    Ok(LiftedSolution {
        phi,
        t_star: sol.scalars[0],
        rank,
    })
}

/// Unit-modulus projection, entry by entry. Zero entries map to one.
pub fn project_unit(v: &CVector) -> CVector {
    v.map(|z| {
        let r = z.norm();
        if r > 0.0 && r.is_finite() {
            z / r
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

/// Phases of a lifted vector `phi ~ [e^{-j theta}; l]`:
/// `theta_n = -arg(phi_n / phi_{N+1})` wrapped into `[0, 2pi)`.
pub fn phases_from_lifted(phi: &CVector) -> PhaseSolution {
    let n = phi.len() - 1;
    let l = phi[n];
    let theta = (0..n).map(|k| wrap_phase(-(phi[k] / l).arg())).collect();
    let aux = if l.norm() > 0.0 {
        l / l.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    PhaseSolution { theta, aux }
}

/// Lifted vector of a phase setting, with `l = 1`.
pub fn lifted_from_phases(theta: &[f64]) -> CVector {
    let n = theta.len();
    CVector::from_fn(n + 1, |k, _| {
        if k < n {
            Complex64::from_polar(1.0, -theta[k])
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

#[derive(Debug, Clone)]
pub struct PhaseRecovery {
    pub phase: PhaseSolution,
    /// True minimum received power with the recovered phases.
    pub objective: f64,
    /// Index of the winning candidate; 0 is the principal eigenvector.
    pub trial: usize,
}

pub fn recover_phases(
    lifted: &LiftedSolution,
    active: &ActiveSolution,
    ch: &ChannelSet,
    cfg: &SystemConfig,
    rng: &mut SimRng,
) -> Result<PhaseRecovery, CoreError> {
    let eig = hermitian_eigen(&lifted.phi);
    let root = eig.sqrt_factor();
    let principal = eig.vector(0);
    let n1 = lifted.phi.nrows();
    let tol = cfg.algo.feas_tol;
    let children = Children::new(rng);

    let evaluate = |k: usize| -> Option<(PhaseSolution, f64)> {
        let raw = if k == 0 {
            principal.clone()
        } else {
            &root * cscg_vector(&mut children.get(k), n1, 1.0)
        };
        let phase = phases_from_lifted(&project_unit(&raw));
        let eff = Effective::new(ch, &phase.theta);
        sinr_feasible(&eff, active, cfg, tol).then(|| {
            let obj = eff.min_received_power(active);
            (phase, obj)
        })
    };

    let n_random = if lifted.rank == 1 {
        0
    } else {
        cfg.algo.n_randomizations
    };
    let mut trials = par_map(cfg.algo.exec, 1 + n_random, evaluate);
    if lifted.rank == 1 && trials[0].is_none() {
        trials.extend(par_map(cfg.algo.exec, cfg.algo.n_randomizations, |k| {
            evaluate(k + 1)
        }));
    }

    let mut best: Option<(usize, PhaseSolution, f64)> = None;
    for (k, t) in trials.into_iter().enumerate() {
        if let Some((phase, obj)) = t {
            if best.as_ref().is_none_or(|b| obj > b.2) {
                best = Some((k, phase, obj));
            }
        }
    }
    let (trial, phase, objective) = best.ok_or(CoreError::PassiveRecoveryFailed)?;
    Ok(PhaseRecovery {
        phase,
        objective,
        trial,
    })
}

#[derive(Debug, Clone)]
pub struct PassiveOutcome {
    pub recovery: PhaseRecovery,
    pub t_star: f64,
    pub rank: usize,
}

pub fn solve_passive(
    ch: &ChannelSet,
    active: &ActiveSolution,
    cfg: &SystemConfig,
    rng: &mut SimRng,
) -> Result<PassiveOutcome, CoreError> {
    let ld = build_lifted(ch, active, cfg);
    let lifted = solve_phase_relaxation(&ld, cfg)?;
    let recovery = recover_phases(&lifted, active, ch, cfg, rng)?;
    Ok(PassiveOutcome {
        recovery,
        t_star: lifted.t_star,
        rank: lifted.rank,
    })
}
