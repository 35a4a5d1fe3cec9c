//! Quick invariant suite on small random instances.

use std::f64::consts::TAU;

use swipt_conic::Complex64;

use crate::active::{min_power_sdr, solve_active, solve_sdr, Transmit};
use crate::channel::{generate, ChannelSet};
use crate::metrics::{check_feasible, received_power, sinr, ActiveSolution, Effective};
use crate::optimizer::{compare_schemes, optimize, Scheme};
use crate::passive::{
    build_lifted, direct_part, lifted_from_phases, lifted_term, recover_phases,
    solve_phase_relaxation,
};
use crate::rng::{cscg_matrix, cscg_vector, stream, uniform_phases};
use crate::scenario::{default_config, Placement, SystemConfig};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        passed,
        detail,
    }
}

fn small(m: usize, n: usize, k_i: usize, k_e: usize) -> SystemConfig {
    let mut cfg = default_config();
    cfg.antennas = m;
    cfg.elements = n;
    cfg.placement = Placement::arcs(8.0, 50.0, k_i, 3.0, k_e);
    cfg.sinr_min = vec![cfg.sinr_min[0]; k_i];
    cfg.noise = vec![cfg.noise[0]; k_i];
    cfg
}

fn channels(cfg: &SystemConfig, seed: u64, trial: u64) -> ChannelSet {
    generate(cfg, &mut stream(seed, trial, 0)).expect("valid small config")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn lifted_equality(seed: u64) -> CheckOutcome {
    let cfg = small(3, 5, 2, 2);
    let mut worst = 0.0_f64;
    for t in 0..50 {
        let ch = channels(&cfg, seed, t);
        let mut r = stream(seed, t, 7);
        let v = cscg_matrix(&mut r, 3, 2, 1.0);
        let a = ActiveSolution {
            w: vec![cscg_vector(&mut r, 3, 1.0), cscg_vector(&mut r, 3, 1.0)],
            s_e: &v * v.adjoint(),
            t: 0.0,
        };
        let theta = uniform_phases(&mut r, 5);
        let phi = lifted_from_phases(&theta);
        let big = &phi * phi.adjoint();
        let ld = build_lifted(&ch, &a, &cfg);
        let form = |x| lifted_term(x).eval(&big) + direct_part(x).norm_sqr();
        for j in 0..2 {
            let lifted: f64 = ld.e[j].iter().chain(&ld.o[j]).map(form).sum();
            worst = worst.max(rel(lifted, received_power(&ch, &theta, &a, j).unwrap()));
        }
        for i in 0..2 {
            let k = 1 - i;
            let ratio = form(&ld.c[i][i]) / (form(&ld.c[i][k]) + cfg.noise[i]);
            worst = worst.max(rel(ratio, sinr(&ch, &theta, &a, cfg.noise[i], i).unwrap()));
        }
    }
    outcome(
        "lifted forms equal direct evaluation",
        worst <= 1e-10,
        format!("max relative error {worst:.2e}"),
    )
}

fn relaxation_bounds(seed: u64) -> CheckOutcome {
    let cfg = small(4, 6, 2, 2);
    let mut violations = 0;
    let mut solved = 0;
    for t in 0..10 {
        let ch = channels(&cfg, seed, t);
        let theta = uniform_phases(&mut stream(seed, t, 1), cfg.elements);
        let Ok((a, sdr)) = solve_active(&ch, &theta, &cfg, &mut stream(seed, t, 2)) else {
            continue;
        };
        solved += 1;
        let report = check_feasible(&ch, &theta, &a, &cfg, cfg.algo.feas_tol);
        if !report.feasible || a.t > sdr.t_star * (1.0 + 1e-6) {
            violations += 1;
        }
        let ld = build_lifted(&ch, &a, &cfg);
        if let Ok(l) = solve_phase_relaxation(&ld, &cfg) {
            if let Ok(p) = recover_phases(&l, &a, &ch, &cfg, &mut stream(seed, t, 3)) {
                if p.objective > l.t_star * (1.0 + 1e-6) {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        "recovered designs are feasible and below the relaxation",
        violations == 0 && solved > 0,
        format!("{solved} instances, {violations} violations"),
    )
}

fn single_user_power(seed: u64) -> CheckOutcome {
    let cfg = small(3, 2, 1, 1);
    let ch = channels(&cfg, seed, 0);
    let theta = [0.0; 2];
    let h = &Effective::new(&ch, &theta).h[0];
    let exact = cfg.sinr_min[0] * cfg.noise[0] / h.norm_squared();
    let got = min_power_sdr(&ch, &theta, &cfg)
        .ok()
        .flatten()
        .unwrap_or(f64::NAN);
    let err = rel(got, exact);
    outcome(
        "single-user minimum power",
        err <= 1e-6,
        format!("relative error {err:.2e}"),
    )
}

fn energy_only_alignment(seed: u64) -> CheckOutcome {
    let mut cfg = small(3, 2, 0, 1);
    cfg.algo.rel_tol = 1e-9;
    let ch = channels(&cfg, seed, 0);
    let rec = optimize(&ch, &cfg, Scheme::Proposed, &mut stream(seed, 0, 16));
    let mut best = 0.0_f64;
    for p in 0..128 {
        for q in 0..128 {
            let theta = [TAU * p as f64 / 128.0, TAU * q as f64 / 128.0];
            best = best.max(cfg.p_max * Effective::new(&ch, &theta).g[0].norm_squared());
        }
    }
    let got = rec.objective().unwrap_or(0.0);
    outcome(
        "energy-only optimum matches phase grid",
        got >= best * (1.0 - 1e-3),
        format!("optimizer {got:.6e} W, grid {best:.6e} W"),
    )
}

fn energy_mrt(seed: u64) -> CheckOutcome {
    let cfg = small(4, 3, 0, 1);
    let ch = channels(&cfg, seed, 0);
    let theta = uniform_phases(&mut stream(seed, 0, 1), 3);
    let eff = Effective::new(&ch, &theta);
    let exact = cfg.p_max * eff.g[0].norm_squared();
    let got = solve_sdr(&eff, &cfg, Transmit::WithEnergy)
        .map(|s| s.t_star)
        .unwrap_or(f64::NAN);
    let err = rel(got, exact);
    outcome(
        "single energy receiver gets full-power MRT",
        err <= 1e-6,
        format!("relative error {err:.2e}"),
    )
}

fn traces_and_dominance(seed: u64) -> CheckOutcome {
    let mut cfg = default_config();
    cfg.elements = 8;
    let mut bad = Vec::new();
    for t in 0..3 {
        let ch = channels(&cfg, seed, t);
        let cmp = compare_schemes(&ch, &cfg, &mut stream(seed, t, 16));
        let p = &cmp[&Scheme::Proposed];
        if !p.trace.windows(2).all(|w| w[1] >= w[0]) {
            bad.push(format!("trial {t}: trace decreases"));
        }
        let Some(best) = p.objective() else {
            bad.push(format!("trial {t}: proposed infeasible"));
            continue;
        };
        for (s, r) in &cmp {
            if let Some(o) = r.objective() {
                if best < o * (1.0 - 1e-4) {
                    bad.push(format!("trial {t}: {s} beats proposed"));
                }
            }
        }
    }
    outcome(
        "monotone traces and scheme dominance",
        bad.is_empty(),
        if bad.is_empty() {
            "3 trials".into()
        } else {
            bad.join("; ")
        },
    )
}

fn phase_invariance(seed: u64) -> CheckOutcome {
    let cfg = small(3, 4, 1, 1);
    let ch = channels(&cfg, seed, 0);
    let a = ActiveSolution {
        w: vec![cscg_vector(&mut stream(seed, 0, 5), 3, 1.0)],
        s_e: crate::CMatrix::zeros(3, 3),
        t: 0.0,
    };
    let theta = uniform_phases(&mut stream(seed, 0, 6), 4);
    let phi = lifted_from_phases(&theta);
    let rotated = &phi * Complex64::from_polar(1.0, 1.234);
    let ld = build_lifted(&ch, &a, &cfg);
    let term = lifted_term(&ld.e[0][0]);
    let x = term.eval(&(&phi * phi.adjoint()));
    let y = term.eval(&(&rotated * rotated.adjoint()));
    let err = rel(y, x);
    outcome(
        "lifted objective ignores a common phase",
        err <= 1e-12,
        format!("relative change {err:.2e}"),
    )
}

pub fn run_checks(seed: u64) -> Vec<CheckOutcome> {
    vec![
        lifted_equality(seed),
        phase_invariance(seed),
        energy_mrt(seed),
        single_user_power(seed),
        relaxation_bounds(seed),
        energy_only_alignment(seed),
        traces_and_dominance(seed),
    ]
}
