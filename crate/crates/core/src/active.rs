//! Transmit design for fixed reflection phases.
//!
//! The beamformers are lifted to PSD matrices and the rank constraints
//! dropped, giving an SDP. Rank-one beamformers are read off the solution
//! directly; otherwise candidate directions are drawn by Gaussian
//! randomization and their powers re-optimized by a small LP with the energy
//! covariance held at its SDP value.

use serde::{Deserialize, Serialize};
use swipt_conic::{
    hermitian_eigen, rank_of, solve, ConicProblem, HermitianTerm, LinearFunctional, Relation,
    ScalarKind, SolveStatus, SolverOptions,
};

use crate::channel::ChannelSet;
use crate::error::CoreError;
use crate::metrics::{feasibility, ActiveSolution, Effective};
use crate::par::par_map;
use crate::rng::{cscg_vector, Children, SimRng};
use crate::scenario::SystemConfig;
use crate::{CMatrix, CVector};

/// Whether the transmitter may radiate a dedicated energy signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transmit {
    WithEnergy,
    InfoOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RankReport {
    pub w: Vec<usize>,
    pub s_e: usize,
}

#[derive(Debug, Clone)]
pub struct ActiveSdrSolution {
    pub w_star: Vec<CMatrix>,
    pub s_e_star: CMatrix,
    pub t_star: f64,
    pub ranks: RankReport,
}

/// Where the variables of the relaxed problem live.
#[derive(Debug, Clone)]
struct Layout {
    w: Vec<usize>,
    s_e: Option<usize>,
    t: usize,
}

fn build(eff: &Effective, cfg: &SystemConfig, mode: Transmit) -> (ConicProblem, Layout) {
    let m = cfg.antennas;
    let mut p = ConicProblem::new();
    let w: Vec<usize> = (0..eff.h.len()).map(|_| p.add_block(m)).collect();
    let s_e = (mode == Transmit::WithEnergy).then(|| p.add_block(m));
    let t = p.add_scalar(ScalarKind::NonNeg);
    p.maximize(LinearFunctional::new().scalar(t, 1.0));

    for g in &eff.g {
        let gg = HermitianTerm::rank_one(g.clone());
        let mut f = LinearFunctional::new();
        for &b in w.iter().chain(s_e.iter()) {
            f = f.block(b, gg.clone());
        }
        p.constrain(f.scalar(t, -1.0), Relation::Ge, 0.0);
    }
    for (i, h) in eff.h.iter().enumerate() {
        let mut f = LinearFunctional::new().block(
            w[i],
            HermitianTerm::scaled_rank_one(1.0 / cfg.sinr_min[i], h.clone()),
        );
        for (k, &b) in w.iter().enumerate() {
            if k != i {
                f = f.block(b, HermitianTerm::scaled_rank_one(-1.0, h.clone()));
            }
        }
        p.constrain(f, Relation::Ge, cfg.noise[i]);
    }
    let mut budget = LinearFunctional::new();
    for &b in w.iter().chain(s_e.iter()) {
        budget = budget.block(b, HermitianTerm::identity(m));
    }
    p.constrain(budget, Relation::Le, cfg.p_max);
    (p, Layout { w, s_e, t })
}

/// The relaxed transmit problem: maximize `t` subject to every EH receiver
/// collecting at least `t`, every lifted SINR constraint and the power budget.
pub fn build_transmit_relaxation(
    ch: &ChannelSet,
    theta: &[f64],
    cfg: &SystemConfig,
) -> ConicProblem {
    build(&Effective::new(ch, theta), cfg, Transmit::WithEnergy).0
}

fn opts(cfg: &SystemConfig) -> SolverOptions {
    SolverOptions::with_tol(cfg.algo.solver_tol)
}

pub fn solve_sdr(
    eff: &Effective,
    cfg: &SystemConfig,
    mode: Transmit,
) -> Result<ActiveSdrSolution, CoreError> {
    let m = cfg.antennas;
    if eff.h.is_empty() && mode == Transmit::InfoOnly {
        return Ok(ActiveSdrSolution {
            w_star: vec![],
            s_e_star: CMatrix::zeros(m, m),
            t_star: 0.0,
            ranks: RankReport::default(),
        });
    }
    let (p, layout) = build(eff, cfg, mode);
    let sol = solve(&p, &opts(cfg))?;
    match sol.status {
        SolveStatus::Optimal | SolveStatus::Inaccurate => {}
        SolveStatus::Infeasible => return Err(CoreError::ActiveInfeasible),
        SolveStatus::Unbounded => {
            return Err(CoreError::Numerical("transmit SDR unbounded".into()))
        }
    }
    let w_star: Vec<CMatrix> = layout.w.iter().map(|&b| sol.blocks[b].clone()).collect();
    let s_e_star = layout
        .s_e
        .map_or_else(|| CMatrix::zeros(m, m), |b| sol.blocks[b].clone());
    let mut sdr = ActiveSdrSolution {
        w_star,
        s_e_star,
        t_star: sol.scalars[layout.t],
        ranks: RankReport::default(),
    };
    sdr.ranks = rank_report(&sdr, cfg.algo.rank_eig_tol);
    Ok(sdr)
}

pub fn rank_report(sdr: &ActiveSdrSolution, rank_eig_tol: f64) -> RankReport {
    RankReport {
        w: sdr
            .w_star
            .iter()
            .map(|w| rank_of(w, rank_eig_tol))
            .collect(),
        s_e: rank_of(&sdr.s_e_star, rank_eig_tol),
    }
}

/// Powers of fixed unit-norm beam directions.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub p: Vec<f64>,
    pub t: f64,
}

/// The power LP is small enough to solve well past the SDR tolerance.
const LP_TOL: f64 = 1e-10;

struct LpData {
    /// `|g_j^H u_i|^2`, indexed `[j][i]`.
    eh_gain: Vec<Vec<f64>>,
    /// `g_j^H S_E g_j`.
    eh_floor: Vec<f64>,
    /// `|h_i^H u_k|^2`, indexed `[i][k]`.
    id_gain: Vec<Vec<f64>>,
    budget: f64,
}

impl LpData {
    fn new(eff: &Effective, dirs: &[CVector], s_e: &CMatrix, p_max: f64) -> Self {
        let gains = |c: &CVector| {
            dirs.iter()
                .map(|u| c.dotc(u).norm_sqr())
                .collect::<Vec<f64>>()
        };
        Self {
            eh_gain: eff.g.iter().map(gains).collect(),
            eh_floor: eff.g.iter().map(|g| g.dotc(&(s_e * g)).re).collect(),
            id_gain: eff.h.iter().map(gains).collect(),
            budget: (p_max - s_e.trace().re).max(0.0),
        }
    }

    /// `t_floor = None` maximizes `t`; `Some(t)` minimizes total power while
    /// keeping every EH receiver above `t`.
    fn problem(&self, cfg: &SystemConfig, t_floor: Option<f64>) -> ConicProblem {
        let k = self.id_gain.len();
        let mut lp = ConicProblem::new();
        let p: Vec<usize> = (0..k).map(|_| lp.add_scalar(ScalarKind::NonNeg)).collect();
        let t = lp.add_scalar(ScalarKind::NonNeg);
        match t_floor {
            None => lp.maximize(LinearFunctional::new().scalar(t, 1.0)),
            Some(floor) => {
                let mut obj = LinearFunctional::new();
                for &pi in &p {
                    obj = obj.scalar(pi, -1.0);
                }
                lp.maximize(obj);
                lp.constrain(LinearFunctional::new().scalar(t, 1.0), Relation::Ge, floor);
            }
        }
        for (gain, floor) in self.eh_gain.iter().zip(&self.eh_floor) {
            let mut f = LinearFunctional::new().scalar(t, -1.0);
            for (i, &a) in gain.iter().enumerate() {
                f = f.scalar(p[i], a);
            }
            lp.constrain(f, Relation::Ge, -floor);
        }
        for (i, gain) in self.id_gain.iter().enumerate() {
            let gamma = cfg.sinr_min[i];
            let mut f = LinearFunctional::new();
            for (k, &a) in gain.iter().enumerate() {
                f = f.scalar(p[k], if k == i { a } else { -gamma * a });
            }
            lp.constrain(f, Relation::Ge, gamma * cfg.noise[i]);
        }
        let mut total = LinearFunctional::new();
        for &pi in &p {
            total = total.scalar(pi, 1.0);
        }
        lp.constrain(total, Relation::Le, self.budget);
        lp
    }

    fn solve(&self, cfg: &SystemConfig, t_floor: Option<f64>) -> Option<PowerAllocation> {
        let tol = SolverOptions::with_tol(cfg.algo.solver_tol.min(LP_TOL));
        let sol = solve(&self.problem(cfg, t_floor), &tol).ok()?;
        if sol.status != SolveStatus::Optimal {
            return None;
        }
        let k = self.id_gain.len();
        let mut p: Vec<f64> = sol.scalars[..k].iter().map(|x| x.max(0.0)).collect();
        self.lift_to_targets(cfg, &mut p);
        let t = self
            .eh_gain
            .iter()
            .zip(&self.eh_floor)
            .map(|(g, f)| f + g.iter().zip(&p).map(|(a, pi)| a * pi).sum::<f64>());
        let t = if self.eh_gain.is_empty() {
            sol.scalars[k]
        } else {
            t.fold(f64::INFINITY, f64::min)
        };
        Some(PowerAllocation { p, t })
    }

    /// Raises powers until every SINR target holds to rounding. Powers only
    /// grow.
    fn lift_to_targets(&self, cfg: &SystemConfig, p: &mut [f64]) {
        for _ in 0..100 {
            let mut moved = false;
            for (i, gain) in self.id_gain.iter().enumerate() {
                if gain[i] <= 0.0 {
                    continue;
                }
                let interference: f64 = gain
                    .iter()
                    .zip(p.iter())
                    .enumerate()
                    .filter(|(k, _)| *k != i)
                    .map(|(_, (a, pk))| a * pk)
                    .sum();
                let need = cfg.sinr_min[i] * (interference + cfg.noise[i]) / gain[i];
                if need > p[i] * (1.0 + 1e-15) {
                    p[i] = need;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
    }
}

/// Best powers for fixed unit-norm directions with the energy covariance held
/// fixed. Among allocations reaching the optimal `t` the one with the least
/// total information power is returned.
pub fn power_lp(
    ch: &ChannelSet,
    theta: &[f64],
    dirs: &[CVector],
    s_e: &CMatrix,
    cfg: &SystemConfig,
) -> Result<PowerAllocation, CoreError> {
    power_lp_eff(&Effective::new(ch, theta), dirs, s_e, cfg)
}

fn power_lp_eff(
    eff: &Effective,
    dirs: &[CVector],
    s_e: &CMatrix,
    cfg: &SystemConfig,
) -> Result<PowerAllocation, CoreError> {
    let data = LpData::new(eff, dirs, s_e, cfg.p_max);
    let best = data.solve(cfg, None).ok_or(CoreError::PowerLpInfeasible)?;
    Ok(refine(&data, cfg, best))
}

fn refine(data: &LpData, cfg: &SystemConfig, best: PowerAllocation) -> PowerAllocation {
    if best.p.is_empty() {
        return best;
    }
    let floor = best.t * (1.0 - 10.0 * cfg.algo.solver_tol);
    match data.solve(cfg, Some(floor)) {
        Some(min_power) if min_power.p.iter().sum::<f64>() <= best.p.iter().sum::<f64>() => {
            min_power
        }
        _ => best,
    }
}

fn unit(v: CVector) -> Option<CVector> {
    let n = v.norm();
    (n > 0.0 && n.is_finite()).then(|| v.unscale(n))
}

/// Full transmit step for fixed phases.
pub fn solve_active(
    ch: &ChannelSet,
    theta: &[f64],
    cfg: &SystemConfig,
    rng: &mut SimRng,
) -> Result<(ActiveSolution, ActiveSdrSolution), CoreError> {
    solve_active_mode(ch, theta, cfg, Transmit::WithEnergy, rng)
}

pub fn solve_active_mode(
    ch: &ChannelSet,
    theta: &[f64],
    cfg: &SystemConfig,
    mode: Transmit,
    rng: &mut SimRng,
) -> Result<(ActiveSolution, ActiveSdrSolution), CoreError> {
    let eff = Effective::new(ch, theta);
    let sdr = solve_sdr(&eff, cfg, mode)?;
    let active = recover(&eff, theta, cfg, &sdr, rng)?;
    Ok((active, sdr))
}

fn recover(
    eff: &Effective,
    theta: &[f64],
    cfg: &SystemConfig,
    sdr: &ActiveSdrSolution,
    rng: &mut SimRng,
) -> Result<ActiveSolution, CoreError> {
    let tol = cfg.algo.feas_tol;
    let finish = |w: Vec<CVector>| {
        let mut a = ActiveSolution {
            w,
            s_e: sdr.s_e_star.clone(),
            t: 0.0,
        };
        a.t = eff.min_received_power(&a);
        a
    };
    if sdr.w_star.is_empty() {
        return Ok(finish(vec![]));
    }

    let eigs: Vec<_> = sdr.w_star.iter().map(hermitian_eigen).collect();
    let principal: Option<Vec<CVector>> = eigs.iter().map(|e| unit(e.vector(0))).collect();
    let roots: Vec<CMatrix> = eigs.iter().map(|e| e.sqrt_factor()).collect();
    let rank_one = sdr.ranks.w.iter().all(|&r| r == 1);
    let n_random = if rank_one {
        0
    } else {
        cfg.algo.n_randomizations
    };

    // Candidate 0 is the principal-eigenvector set, then the random draws.
    let children = Children::new(rng);
    let m = cfg.antennas;
    let draw = |k: usize| -> Option<Vec<CVector>> {
        if k == 0 {
            return principal.clone();
        }
        let mut r = children.get(k);
        roots
            .iter()
            .map(|u| unit(u * cscg_vector(&mut r, m, 1.0)))
            .collect()
    };
    let evaluate = |k: usize| -> Option<(Vec<CVector>, PowerAllocation)> {
        let dirs = draw(k)?;
        let alloc = LpData::new(eff, &dirs, &sdr.s_e_star, cfg.p_max).solve(cfg, None)?;
        Some((dirs, alloc))
    };

    let mut trials = par_map(cfg.algo.exec, 1 + n_random, evaluate);
    if rank_one && trials[0].is_none() {
        let more = par_map(cfg.algo.exec, cfg.algo.n_randomizations, |k| {
            evaluate(k + 1)
        });
        trials.extend(more);
    }

    let mut order: Vec<usize> = (0..trials.len()).filter(|&k| trials[k].is_some()).collect();
    // Stable sort keeps the lowest index first among equal objectives.
    order.sort_by(|&a, &b| {
        let ta = trials[a].as_ref().map_or(f64::NEG_INFINITY, |x| x.1.t);
        let tb = trials[b].as_ref().map_or(f64::NEG_INFINITY, |x| x.1.t);
        tb.total_cmp(&ta)
    });
    for k in order {
        let (dirs, alloc) = trials[k].take().expect("filtered above");
        let data = LpData::new(eff, &dirs, &sdr.s_e_star, cfg.p_max);
        let alloc = refine(&data, cfg, alloc);
        let w = dirs
            .iter()
            .zip(&alloc.p)
            .map(|(u, &p)| u.scale(p.sqrt()))
            .collect();
        let a = finish(w);
        if feasibility(eff, theta, &a, cfg, tol).feasible {
            return Ok(a);
        }
    }
    Err(CoreError::RandomizationFailed)
}

/// Least total transmit power meeting every SINR target with information
/// beams only, from the relaxed problem. `None` if the targets cannot be met
/// at any power.
pub fn min_power_sdr(
    ch: &ChannelSet,
    theta: &[f64],
    cfg: &SystemConfig,
) -> Result<Option<f64>, CoreError> {
    let eff = Effective::new(ch, theta);
    let m = cfg.antennas;
    let mut p = ConicProblem::new();
    let w: Vec<usize> = (0..eff.h.len()).map(|_| p.add_block(m)).collect();
    let mut obj = LinearFunctional::new();
    for &b in &w {
        obj = obj.block(b, identity_scaled(m, -1.0));
    }
    p.maximize(obj);
    for (i, h) in eff.h.iter().enumerate() {
        let mut f = LinearFunctional::new().block(
            w[i],
            HermitianTerm::scaled_rank_one(1.0 / cfg.sinr_min[i], h.clone()),
        );
        for (k, &b) in w.iter().enumerate() {
            if k != i {
                f = f.block(b, HermitianTerm::scaled_rank_one(-1.0, h.clone()));
            }
        }
        p.constrain(f, Relation::Ge, cfg.noise[i]);
    }
    if w.is_empty() {
        return Ok(Some(0.0));
    }
    let sol = solve(&p, &opts(cfg))?;
    Ok(match sol.status {
        SolveStatus::Infeasible => None,
        _ => Some(-sol.objective),
    })
}

fn identity_scaled(m: usize, s: f64) -> HermitianTerm {
    let mut t = HermitianTerm::zero(m);
    t.extend(&HermitianTerm::identity(m), s);
    t
}
