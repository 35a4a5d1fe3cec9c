//! Alternating optimization between transmit beamforming and reflection
//! phases, plus the three reference schemes.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use swipt_conic::rank_of;

use crate::active::{solve_active_mode, Transmit};
use crate::channel::ChannelSet;
use crate::error::CoreError;
use crate::metrics::{feasibility, ActiveSolution, Effective, PhaseSolution};
use crate::passive::solve_passive;
use crate::rng::{uniform_phases, Children, SimRng};
use crate::scenario::SystemConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Information and energy beams with reflection phases.
    Proposed,
    /// Information beams only, with reflection phases.
    InfoOnlyWithIrs,
    /// Information and energy beams, no reflecting surface.
    NoIrsWithEnergy,
    /// Information beams only, no reflecting surface.
    InfoOnlyNoIrs,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Proposed,
        Scheme::InfoOnlyWithIrs,
        Scheme::NoIrsWithEnergy,
        Scheme::InfoOnlyNoIrs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::InfoOnlyWithIrs => "info_only_irs",
            Scheme::NoIrsWithEnergy => "no_irs_energy",
            Scheme::InfoOnlyNoIrs => "info_only_no_irs",
        }
    }

    pub fn uses_irs(self) -> bool {
        matches!(self, Scheme::Proposed | Scheme::InfoOnlyWithIrs)
    }

    pub fn transmit(self) -> Transmit {
        match self {
            Scheme::Proposed | Scheme::NoIrsWithEnergy => Transmit::WithEnergy,
            Scheme::InfoOnlyWithIrs | Scheme::InfoOnlyNoIrs => Transmit::InfoOnly,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| CoreError::InvalidConfig(format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    /// No feasible starting point: the SINR targets cannot be met.
    Infeasible,
    /// A solver or recovery step failed before any feasible point was found.
    Failed(String),
}

/// Rank diagnostics of the relaxed solutions computed in one iteration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationRanks {
    pub w: Vec<usize>,
    pub s_e: Option<usize>,
    pub phi: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub scheme: Scheme,
    pub seed: u64,
    /// Objective after the start and after every outer iteration, watts.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub status: RunStatus,
    pub active: Option<ActiveSolution>,
    pub phase: PhaseSolution,
    pub ranks: Vec<IterationRanks>,
    pub passive_failures: usize,
    pub active_failures: usize,
    pub iteration_times: Vec<Duration>,
    pub elapsed: Duration,
}

impl RunRecord {
    fn empty(scheme: Scheme, elements: usize, status: RunStatus) -> Self {
        Self {
            scheme,
            seed: 0,
            trace: Vec::new(),
            iterations: 0,
            converged: false,
            status,
            active: None,
            phase: PhaseSolution::zeros(elements),
            ranks: Vec::new(),
            passive_failures: 0,
            active_failures: 0,
            iteration_times: Vec::new(),
            elapsed: Duration::ZERO,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status == RunStatus::Ok
    }

    /// Final minimum received power, watts.
    pub fn objective(&self) -> Option<f64> {
        if self.is_feasible() {
            self.trace.last().copied()
        } else {
            None
        }
    }

    /// Rank of the final energy covariance.
    pub fn energy_rank(&self, tol: f64) -> usize {
        self.active.as_ref().map_or(0, |a| rank_of(&a.s_e, tol))
    }

    pub fn design(&self) -> Option<Design> {
        let active = self.active.clone()?;
        Some(Design {
            active,
            theta: Some(self.phase.theta.clone()),
        })
    }
}

/// A known design offered as a starting point.
#[derive(Debug, Clone)]
pub struct Design {
    pub active: ActiveSolution,
    /// Phases that go with `active`. Without them, a phase step from
    /// `active` supplies them.
    pub theta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default)]
pub struct WarmStart {
    /// Initial phases; drawn from the run's generator when absent.
    pub theta: Option<Vec<f64>>,
    pub designs: Vec<Design>,
}

fn initial_theta(cfg: &SystemConfig, rng: &mut SimRng) -> Vec<f64> {
    if cfg.algo.zero_init {
        vec![0.0; cfg.elements]
    } else {
        uniform_phases(rng, cfg.elements)
    }
}

fn compatible(scheme: Scheme, a: &ActiveSolution) -> bool {
    scheme.transmit() == Transmit::WithEnergy || a.s_e.iter().all(|z| z.norm() == 0.0)
}

/// Objective of a design if it meets every constraint at `theta`.
fn admissible(
    ch: &ChannelSet,
    theta: &[f64],
    a: &ActiveSolution,
    cfg: &SystemConfig,
) -> Option<f64> {
    let eff = Effective::new(ch, theta);
    feasibility(&eff, theta, a, cfg, cfg.algo.feas_tol)
        .feasible
        .then(|| eff.min_received_power(a))
}

struct Start {
    active: ActiveSolution,
    theta: Vec<f64>,
    objective: f64,
}

pub fn optimize(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    scheme: Scheme,
    rng: &mut SimRng,
) -> RunRecord {
    optimize_from(ch, cfg, scheme, &WarmStart::default(), rng)
}

pub fn optimize_from(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    scheme: Scheme,
    warm: &WarmStart,
    rng: &mut SimRng,
) -> RunRecord {
    let clock = Instant::now();
    let mut rec = if scheme.uses_irs() {
        alternate(ch, cfg, scheme, warm, rng)
    } else {
        single_shot(ch, cfg, scheme, warm, rng)
    };
    rec.elapsed = clock.elapsed();
    rec
}

fn failure_status(err: &CoreError) -> RunStatus {
    match err {
        CoreError::ActiveInfeasible => RunStatus::Infeasible,
        e => RunStatus::Failed(e.to_string()),
    }
}

fn best_start(candidates: Vec<Start>) -> Option<Start> {
    // First candidate wins ties.
    candidates
        .into_iter()
        .fold(None, |best: Option<Start>, s| match best {
            Some(b) if b.objective >= s.objective => Some(b),
            _ => Some(s),
        })
}

fn single_shot(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    scheme: Scheme,
    warm: &WarmStart,
    rng: &mut SimRng,
) -> RunRecord {
    let bare = ch.without_reflection();
    let theta = vec![0.0; ch.elements()];
    let mut candidates = Vec::new();
    let mut ranks = IterationRanks::default();
    let mut last_err = None;
    match solve_active_mode(&bare, &theta, cfg, scheme.transmit(), rng) {
        Ok((a, sdr)) => {
            ranks.w = sdr.ranks.w.clone();
            ranks.s_e = Some(sdr.ranks.s_e);
            candidates.push(Start {
                objective: a.t,
                active: a,
                theta: theta.clone(),
            });
        }
        Err(e) => last_err = Some(e),
    }
    for d in warm
        .designs
        .iter()
        .filter(|d| compatible(scheme, &d.active))
    {
        if let Some(objective) = admissible(&bare, &theta, &d.active, cfg) {
            candidates.push(Start {
                active: d.active.clone(),
                theta: theta.clone(),
                objective,
            });
        }
    }
    let Some(start) = best_start(candidates) else {
        let err = last_err.unwrap_or(CoreError::ActiveInfeasible);
        return RunRecord::empty(scheme, ch.elements(), failure_status(&err));
    };
    RunRecord {
        trace: vec![start.objective],
        converged: true,
        status: RunStatus::Ok,
        active: Some(start.active),
        ranks: vec![ranks],
        ..RunRecord::empty(scheme, ch.elements(), RunStatus::Ok)
    }
}

fn alternate(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    scheme: Scheme,
    warm: &WarmStart,
    rng: &mut SimRng,
) -> RunRecord {
    let mode = scheme.transmit();
    let theta0 = warm
        .theta
        .clone()
        .unwrap_or_else(|| initial_theta(cfg, rng));
    let mut candidates = Vec::new();
    let mut first = IterationRanks::default();
    let mut last_err = None;

    let mut solve_at =
        |theta: &[f64], rng: &mut SimRng, first: &mut IterationRanks| match solve_active_mode(
            ch, theta, cfg, mode, rng,
        ) {
            Ok((a, sdr)) => {
                if first.s_e.is_none() {
                    first.w = sdr.ranks.w.clone();
                    first.s_e = Some(sdr.ranks.s_e);
                }
                Some(Start {
                    objective: a.t,
                    active: a,
                    theta: theta.to_vec(),
                })
            }
            Err(e) => {
                last_err = Some(e);
                None
            }
        };
    candidates.extend(solve_at(&theta0, rng, &mut first));
    for d in warm
        .designs
        .iter()
        .filter(|d| compatible(scheme, &d.active))
    {
        match &d.theta {
            Some(theta) => {
                if let Some(objective) = admissible(ch, theta, &d.active, cfg) {
                    candidates.push(Start {
                        active: d.active.clone(),
                        theta: theta.clone(),
                        objective,
                    });
                }
                if theta != &theta0 {
                    candidates.extend(solve_at(theta, rng, &mut first));
                }
            }
            None => {
                if let Ok(out) = solve_passive(ch, &d.active, cfg, rng) {
                    let theta = out.recovery.phase.theta;
                    if let Some(objective) = admissible(ch, &theta, &d.active, cfg) {
                        candidates.push(Start {
                            active: d.active.clone(),
                            theta,
                            objective,
                        });
                    }
                }
            }
        }
    }
    let Some(start) = best_start(candidates) else {
        let err = last_err.unwrap_or(CoreError::ActiveInfeasible);
        return RunRecord::empty(scheme, ch.elements(), failure_status(&err));
    };

    let Start {
        mut active,
        theta,
        objective,
    } = start;
    let mut phase = PhaseSolution::new(theta);
    let mut current = objective;
    let mut rec = RunRecord::empty(scheme, ch.elements(), RunStatus::Ok);
    rec.trace.push(current);
    rec.ranks.push(first);

    for _ in 0..cfg.algo.max_outer_iters {
        let tick = Instant::now();
        let before = current;
        let mut ranks = IterationRanks::default();

        match solve_passive(ch, &active, cfg, rng) {
            Ok(out) => {
                ranks.phi = Some(out.rank);
                if out.recovery.objective >= current {
                    current = out.recovery.objective;
                    phase = out.recovery.phase;
                }
            }
            Err(_) => rec.passive_failures += 1,
        }
        match solve_active_mode(ch, &phase.theta, cfg, mode, rng) {
            Ok((a, sdr)) => {
                ranks.w = sdr.ranks.w.clone();
                ranks.s_e = Some(sdr.ranks.s_e);
                if a.t >= current {
                    current = a.t;
                    active = a;
                }
            }
            Err(_) => rec.active_failures += 1,
        }

        rec.trace.push(current);
        rec.ranks.push(ranks);
        rec.iteration_times.push(tick.elapsed());
        rec.iterations += 1;
        if current - before <= cfg.algo.rel_tol * before.abs() {
            rec.converged = true;
            break;
        }
    }
    rec.active = Some(active);
    rec.phase = phase;
    rec
}

/// Matched records of all four schemes on one channel set.
pub type Comparison = BTreeMap<Scheme, RunRecord>;

pub fn compare_schemes(ch: &ChannelSet, cfg: &SystemConfig, rng: &mut SimRng) -> Comparison {
    compare_schemes_from(ch, cfg, rng, None)
}

/// Runs every scheme, seeding each richer scheme with the designs of the
/// schemes it contains, and optionally with a previous comparison whose
/// designs remain feasible here.
pub fn compare_schemes_from(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    rng: &mut SimRng,
    prior: Option<&Comparison>,
) -> Comparison {
    let children = Children::new(rng);
    let theta0 = initial_theta(cfg, &mut children.get(0));
    let mut out = Comparison::new();

    let run = |scheme: Scheme, feeds: &[Scheme], theta_from: &[Scheme], out: &mut Comparison| {
        let mut warm = WarmStart {
            theta: Some(theta0.clone()),
            designs: Vec::new(),
        };
        if let Some(d) = prior
            .and_then(|p| p.get(&scheme))
            .and_then(RunRecord::design)
        {
            warm.designs.push(d);
        }
        for s in feeds {
            if let Some(mut d) = out.get(s).and_then(RunRecord::design) {
                if !theta_from.contains(s) {
                    d.theta = None;
                }
                warm.designs.push(d);
            }
        }
        let idx = Scheme::ALL
            .iter()
            .position(|&x| x == scheme)
            .expect("listed")
            + 1;
        let rec = optimize_from(ch, cfg, scheme, &warm, &mut children.get(idx));
        out.insert(scheme, rec);
    };

    run(Scheme::InfoOnlyNoIrs, &[], &[], &mut out);
    run(
        Scheme::NoIrsWithEnergy,
        &[Scheme::InfoOnlyNoIrs],
        &[Scheme::InfoOnlyNoIrs],
        &mut out,
    );
    run(
        Scheme::InfoOnlyWithIrs,
        &[Scheme::InfoOnlyNoIrs],
        &[],
        &mut out,
    );
    run(
        Scheme::Proposed,
        &[Scheme::InfoOnlyWithIrs, Scheme::NoIrsWithEnergy],
        &[Scheme::InfoOnlyWithIrs],
        &mut out,
    );
    out
}
