//! Physical-layer evaluation of a candidate design: combined channels, SINR,
//! received RF power and constraint slacks. Every objective value reported
//! anywhere in the crate is computed here.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use swipt_conic::hermitian_eigen;

use crate::channel::ChannelSet;
use crate::error::CoreError;
use crate::scenario::SystemConfig;
use crate::{CMatrix, CVector, Complex64};

/// Information beamformers and energy covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveSolution {
    pub w: Vec<CVector>,
    pub s_e: CMatrix,
    /// Epigraph value reported with the solution, watts.
    pub t: f64,
}

impl ActiveSolution {
    pub fn zero(antennas: usize, n_id: usize) -> Self {
        Self {
            w: vec![CVector::zeros(antennas); n_id],
            s_e: CMatrix::zeros(antennas, antennas),
            t: 0.0,
        }
    }

    pub fn total_power(&self) -> f64 {
        self.w.iter().map(|w| w.norm_squared()).sum::<f64>() + self.s_e.trace().re
    }
}

/// Reflection phases in `[0, 2pi)`, plus the auxiliary unit-modulus scalar of
/// the lifted phase vector it was recovered from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSolution {
    pub theta: Vec<f64>,
    pub aux: Complex64,
}

impl PhaseSolution {
    pub fn new(theta: Vec<f64>) -> Self {
        Self {
            theta: theta.into_iter().map(wrap_phase).collect(),
            aux: Complex64::new(1.0, 0.0),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![0.0; n])
    }
}

pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// `T^H Θ^H r + d` with `Θ = diag(e^{j theta})`.
pub fn combine(t: &CMatrix, theta: &[f64], reflect: &CVector, direct: &CVector) -> CVector {
    let rotated = CVector::from_fn(reflect.len(), |n, _| {
        reflect[n] * Complex64::from_polar(1.0, -theta[n])
    });
    t.ad_mul(&rotated) + direct
}

fn check_index(what: &'static str, index: usize, count: usize) -> Result<(), CoreError> {
    if index < count {
        Ok(())
    } else {
        Err(CoreError::Index { what, index, count })
    }
}

pub fn effective_id_channel(
    ch: &ChannelSet,
    theta: &[f64],
    i: usize,
) -> Result<CVector, CoreError> {
    check_index("ID receiver", i, ch.n_id())?;
    Ok(combine(&ch.t, theta, &ch.h_r[i], &ch.h_d[i]))
}

pub fn effective_eh_channel(
    ch: &ChannelSet,
    theta: &[f64],
    j: usize,
) -> Result<CVector, CoreError> {
    check_index("EH receiver", j, ch.n_eh())?;
    Ok(combine(&ch.t, theta, &ch.g_r[j], &ch.g_d[j]))
}

/// All combined channels for one phase setting.
#[derive(Debug, Clone)]
pub struct Effective {
    pub h: Vec<CVector>,
    pub g: Vec<CVector>,
}

impl Effective {
    pub fn new(ch: &ChannelSet, theta: &[f64]) -> Self {
        let h = (0..ch.n_id())
            .map(|i| combine(&ch.t, theta, &ch.h_r[i], &ch.h_d[i]))
            .collect();
        let g = (0..ch.n_eh())
            .map(|j| combine(&ch.t, theta, &ch.g_r[j], &ch.g_d[j]))
            .collect();
        Self { h, g }
    }

    pub fn sinr(&self, a: &ActiveSolution, noise: f64, i: usize) -> f64 {
        sinr_of(&self.h[i], &a.w, noise, i)
    }

    pub fn received_power(&self, a: &ActiveSolution, j: usize) -> f64 {
        let g = &self.g[j];
        let energy = g.dotc(&(&a.s_e * g)).re;
        energy + a.w.iter().map(|w| g.dotc(w).norm_sqr()).sum::<f64>()
    }

    pub fn min_received_power(&self, a: &ActiveSolution) -> f64 {
        (0..self.g.len())
            .map(|j| self.received_power(a, j))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn sinr(
    ch: &ChannelSet,
    theta: &[f64],
    a: &ActiveSolution,
    noise: f64,
    i: usize,
) -> Result<f64, CoreError> {
    let h = effective_id_channel(ch, theta, i)?;
    check_index("beamformer", i, a.w.len())?;
    Ok(sinr_of(&h, &a.w, noise, i))
}

fn sinr_of(h: &CVector, w: &[CVector], noise: f64, i: usize) -> f64 {
    let signal = h.dotc(&w[i]).norm_sqr();
    let interference: f64 = w
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != i)
        .map(|(_, wk)| h.dotc(wk).norm_sqr())
        .sum();
    signal / (interference + noise)
}

pub fn received_power(
    ch: &ChannelSet,
    theta: &[f64],
    a: &ActiveSolution,
    j: usize,
) -> Result<f64, CoreError> {
    let g = effective_eh_channel(ch, theta, j)?;
    Ok(Effective {
        h: vec![],
        g: vec![g],
    }
    .received_power(a, 0))
}

pub fn min_received_power(ch: &ChannelSet, theta: &[f64], a: &ActiveSolution) -> f64 {
    Effective::new(ch, theta).min_received_power(a)
}

/// Raw constraint slacks of a design. SINR slacks are `gamma_i - Gamma_i`,
/// the power slack is `P - total`, and `psd_min_eig` is the smallest
/// eigenvalue of the energy covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub sinr_slack: Vec<f64>,
    pub power_slack: f64,
    pub psd_min_eig: f64,
    pub hermitian_err: f64,
    pub phases_in_range: bool,
    pub feasible: bool,
}

/// Feasibility with relative tolerance `tol`: each SINR slack is compared to
/// `tol * Gamma_i`, the power slack to `tol * P`, and the PSD and Hermitian
/// checks to `tol` times the covariance scale.
pub fn check_feasible(
    ch: &ChannelSet,
    theta: &[f64],
    a: &ActiveSolution,
    cfg: &SystemConfig,
    tol: f64,
) -> FeasibilityReport {
    feasibility(&Effective::new(ch, theta), theta, a, cfg, tol)
}

pub fn feasibility(
    eff: &Effective,
    theta: &[f64],
    a: &ActiveSolution,
    cfg: &SystemConfig,
    tol: f64,
) -> FeasibilityReport {
    let sinr_slack: Vec<f64> = (0..eff.h.len())
        .map(|i| eff.sinr(a, cfg.noise[i], i) - cfg.sinr_min[i])
        .collect();
    let sinr_ok = sinr_slack
        .iter()
        .zip(&cfg.sinr_min)
        .all(|(s, g)| *s >= -tol * g);
    let power_slack = cfg.p_max - a.total_power();
    let scale = a.s_e.norm().max(f64::MIN_POSITIVE);
    let hermitian_err = (&a.s_e - a.s_e.adjoint()).norm() / scale;
    let psd_min_eig = if a.s_e.nrows() == 0 {
        0.0
    } else {
        hermitian_eigen(&a.s_e)
            .values
            .last()
            .copied()
            .unwrap_or(0.0)
    };
    let trace = a.s_e.trace().re.abs();
    let phases_in_range = theta.iter().all(|&x| (0.0..TAU).contains(&x));
    let feasible = sinr_ok
        && power_slack >= -tol * cfg.p_max
        && hermitian_err <= 1e-9
        && psd_min_eig >= -tol.max(1e-9) * trace
        && phases_in_range;
    FeasibilityReport {
        sinr_slack,
        power_slack,
        psd_min_eig,
        hermitian_err,
        phases_in_range,
        feasible,
    }
}

/// SINR constraints only, as used when the beamformers are held fixed.
pub fn sinr_feasible(eff: &Effective, a: &ActiveSolution, cfg: &SystemConfig, tol: f64) -> bool {
    (0..eff.h.len()).all(|i| eff.sinr(a, cfg.noise[i], i) >= cfg.sinr_min[i] * (1.0 - tol))
}
