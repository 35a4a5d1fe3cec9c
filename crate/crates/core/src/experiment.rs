//! Seeded Monte-Carlo sweeps over the SINR target or the power budget, and
//! convergence traces, written as flat CSV.
//!
//! Each trial draws one channel set from `(seed, trial)` and reuses it at
//! every grid point. Grid points are solved in the order in which the
//! feasible set grows (SINR descending, power ascending), each warm-started
//! from the previous point, and rows are emitted in ascending grid order.

use std::fmt;
use std::io;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{generate, ChannelSet};
use crate::error::CoreError;
use crate::optimizer::{compare_schemes_from, optimize, Comparison, RunRecord, RunStatus, Scheme};
use crate::par::par_map;
use crate::rng::{lane, stream};
use crate::scenario::{watts_to_dbm, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Convergence,
    Gamma,
    Power,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Convergence => "convergence",
            SweepKind::Gamma => "gamma",
            SweepKind::Power => "power",
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepKind {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "convergence" => Ok(SweepKind::Convergence),
            "gamma" => Ok(SweepKind::Gamma),
            "power" => Ok(SweepKind::Power),
            _ => Err(CoreError::InvalidConfig(format!(
                "unknown sweep kind `{s}`"
            ))),
        }
    }
}

pub const DEFAULT_TRIALS: usize = 50;

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub kind: SweepKind,
    /// SINR targets in dB for `Gamma`, budgets in watts for `Power`; unused
    /// for `Convergence`.
    pub grid: Vec<f64>,
    pub n_trials: usize,
    pub schemes: Vec<Scheme>,
    pub config: SystemConfig,
    pub seed: u64,
    /// Record wall time per run; otherwise `runtime_ms` is zero and output
    /// is reproducible byte for byte.
    pub timing: bool,
}

impl SweepSpec {
    pub fn new(kind: SweepKind, grid: Vec<f64>, config: SystemConfig) -> Self {
        let schemes = match kind {
            SweepKind::Convergence => vec![Scheme::Proposed],
            _ => Scheme::ALL.to_vec(),
        };
        let seed = config.algo.seed;
        Self {
            kind,
            grid,
            n_trials: DEFAULT_TRIALS,
            schemes,
            config,
            seed,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let bad = |m: &str| Err(CoreError::InvalidConfig(m.into()));
        self.config.validate()?;
        if self.n_trials == 0 {
            return bad("n_trials must be at least 1");
        }
        if self.schemes.is_empty() {
            return bad("at least one scheme is required");
        }
        if self.kind == SweepKind::Convergence {
            return Ok(());
        }
        if self.grid.is_empty() {
            return bad("grid must not be empty");
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return bad("grid values must be finite");
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("grid must be strictly increasing");
        }
        if self.kind == SweepKind::Power && self.grid[0] <= 0.0 {
            return bad("power grid values must be positive");
        }
        Ok(())
    }

    fn config_at(&self, value: f64) -> SystemConfig {
        match self.kind {
            SweepKind::Gamma => self.config.clone().with_sinr_db(value),
            SweepKind::Power => self.config.clone().with_power(value),
            SweepKind::Convergence => self.config.clone(),
        }
    }
}

/// One output line. Column order is part of the file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub sweep_kind: SweepKind,
    /// Grid value, or the iteration index for convergence traces.
    pub sweep_value: f64,
    pub trial: usize,
    pub scheme: Scheme,
    /// Empty when infeasible.
    pub objective_watts: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    #[serde(rename = "rank_SE")]
    pub rank_se: usize,
    pub feasible: bool,
    pub runtime_ms: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sweep_kind: SweepKind,
    pub sweep_value: f64,
    pub scheme: Scheme,
    pub n_feasible: usize,
    pub n_infeasible: usize,
    /// Empty when no trial was feasible.
    pub mean_watts: Option<f64>,
    pub stderr_watts: Option<f64>,
    pub mean_dbm: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<CsvRow>,
    pub summary: Vec<SummaryRow>,
    /// Runs that ended in a numerical failure rather than infeasibility.
    pub errors: usize,
}

fn row(spec: &SweepSpec, value: f64, trial: usize, rec: &RunRecord) -> CsvRow {
    CsvRow {
        sweep_kind: spec.kind,
        sweep_value: value,
        trial,
        scheme: rec.scheme,
        objective_watts: rec.objective(),
        iterations: rec.iterations,
        converged: rec.converged,
        rank_se: rec.energy_rank(spec.config.algo.rank_eig_tol),
        feasible: rec.is_feasible(),
        runtime_ms: if spec.timing {
            rec.elapsed.as_secs_f64() * 1e3
        } else {
            0.0
        },
        seed: spec.seed,
    }
}

fn is_error(rec: &RunRecord) -> bool {
    matches!(rec.status, RunStatus::Failed(_))
}

pub fn trial_channels(
    cfg: &SystemConfig,
    seed: u64,
    trial: usize,
) -> Result<ChannelSet, CoreError> {
    generate(cfg, &mut stream(seed, trial as u64, lane::CHANNEL))
}

/// Every grid point of one trial, indexed like the grid.
fn sweep_trial(spec: &SweepSpec, trial: usize) -> Result<Vec<Comparison>, CoreError> {
    let ch = trial_channels(&spec.config, spec.seed, trial)?;
    let n = spec.grid.len();
    let order: Vec<usize> = match spec.kind {
        SweepKind::Gamma => (0..n).rev().collect(),
        _ => (0..n).collect(),
    };
    let mut out: Vec<Option<Comparison>> = vec![None; n];
    let mut prior: Option<Comparison> = None;
    for idx in order {
        let cfg = spec.config_at(spec.grid[idx]);
        let mut rng = stream(spec.seed, trial as u64, lane::SCHEME_BASE + idx as u64);
        let cmp = compare_schemes_from(&ch, &cfg, &mut rng, prior.as_ref());
        out[idx] = Some(cmp.clone());
        prior = Some(cmp);
    }
    Ok(out
        .into_iter()
        .map(|c| c.expect("every index visited"))
        .collect())
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput, CoreError> {
    spec.validate()?;
    if spec.kind == SweepKind::Convergence {
        return run_convergence(spec);
    }
    let per_trial = par_map(spec.config.algo.exec, spec.n_trials, |t| {
        sweep_trial(spec, t)
    });
    let per_trial = per_trial.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    let mut errors = 0;
    for (idx, &value) in spec.grid.iter().enumerate() {
        for (trial, points) in per_trial.iter().enumerate() {
            for scheme in &spec.schemes {
                let rec = &points[idx][scheme];
                errors += usize::from(is_error(rec));
                rows.push(row(spec, value, trial, rec));
            }
        }
    }
    let summary = summarize(&rows);
    Ok(SweepOutput {
        rows,
        summary,
        errors,
    })
}

fn run_convergence(spec: &SweepSpec) -> Result<SweepOutput, CoreError> {
    let runs = par_map(
        spec.config.algo.exec,
        spec.n_trials,
        |t| -> Result<Vec<RunRecord>, CoreError> {
            let ch = trial_channels(&spec.config, spec.seed, t)?;
            Ok(spec
                .schemes
                .iter()
                .map(|&s| {
                    let lane = lane::SCHEME_BASE
                        + Scheme::ALL.iter().position(|&x| x == s).unwrap_or(0) as u64;
                    optimize(&ch, &spec.config, s, &mut stream(spec.seed, t as u64, lane))
                })
                .collect())
        },
    );
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    let mut errors = 0;
    for (trial, recs) in runs.iter().enumerate() {
        for rec in recs {
            let (r, e) = trace_rows(spec, trial, rec);
            rows.extend(r);
            errors += e;
        }
    }
    let summary = summarize(&rows);
    Ok(SweepOutput {
        rows,
        summary,
        errors,
    })
}

/// One row per trace entry; an infeasible run yields a single error row.
fn trace_rows(spec: &SweepSpec, trial: usize, rec: &RunRecord) -> (Vec<CsvRow>, usize) {
    if !rec.is_feasible() {
        return (vec![row(spec, 0.0, trial, rec)], 1);
    }
    let rows = rec
        .trace
        .iter()
        .enumerate()
        .map(|(k, &obj)| CsvRow {
            sweep_value: k as f64,
            objective_watts: Some(obj),
            ..row(spec, k as f64, trial, rec)
        })
        .collect();
    (rows, 0)
}

/// Single Proposed run on trial 0 of `seed`.
pub fn convergence_trace(cfg: &SystemConfig, seed: u64) -> Result<Vec<CsvRow>, CoreError> {
    let spec = SweepSpec {
        n_trials: 1,
        seed,
        ..SweepSpec::new(SweepKind::Convergence, vec![], cfg.clone())
    };
    Ok(run_sweep(&spec)?.rows)
}

/// Mean and standard error per `(value, scheme)` over feasible rows, in
/// first-appearance order.
pub fn summarize(rows: &[CsvRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(SweepKind, f64, Scheme)> = Vec::new();
    for r in rows {
        let k = (r.sweep_kind, r.sweep_value, r.scheme);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(kind, value, scheme)| {
            let group = rows
                .iter()
                .filter(|r| r.sweep_kind == kind && r.sweep_value == value && r.scheme == scheme);
            let mut vals = Vec::new();
            let mut n_infeasible = 0;
            for r in group {
                match r.objective_watts.filter(|_| r.feasible) {
                    Some(v) => vals.push(v),
                    None => n_infeasible += 1,
                }
            }
            let (mean, stderr) = mean_stderr(&vals);
            SummaryRow {
                sweep_kind: kind,
                sweep_value: value,
                scheme,
                n_feasible: vals.len(),
                n_infeasible,
                mean_watts: mean,
                stderr_watts: stderr,
                mean_dbm: mean.map(watts_to_dbm),
            }
        })
        .collect()
}

fn mean_stderr(v: &[f64]) -> (Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() == 1 {
        return (Some(mean), Some(0.0));
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some((var / n).sqrt()))
}

pub fn write_csv<T: Serialize, W: io::Write>(items: &[T], out: W) -> Result<(), CoreError> {
    let mut w = csv::Writer::from_writer(out);
    for it in items {
        w.serialize(it)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: io::Read>(input: R) -> Result<Vec<CsvRow>, CoreError> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize()
        .map(|x| x.map_err(CoreError::from))
        .collect()
}

pub const ROW_HEADER: &str =
    "sweep_kind,sweep_value,trial,scheme,objective_watts,iterations,converged,rank_SE,feasible,runtime_ms,seed";

/// Path of the summary file that accompanies `out`.
pub fn summary_path(out: &Path) -> std::path::PathBuf {
    let mut name = out
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    let stem = Path::new(&name).file_stem().map(|s| s.to_os_string());
    if let (Some(stem), Some("csv")) = (stem, out.extension().and_then(|e| e.to_str())) {
        name = stem;
    }
    name.push(".summary.csv");
    out.with_file_name(name)
}

/// Writes rows to `out` and the summary next to it.
pub fn write_output(result: &SweepOutput, out: &Path) -> Result<(), CoreError> {
    write_csv(&result.rows, std::fs::File::create(out)?)?;
    write_csv(&result.summary, std::fs::File::create(summary_path(out))?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{default_config, Placement};

    fn small() -> SystemConfig {
        let mut cfg = default_config();
        cfg.elements = 4;
        cfg.placement = Placement::arcs(8.0, 50.0, 2, 3.0, 2);
        cfg
    }

    fn spec(kind: SweepKind, grid: Vec<f64>, trials: usize) -> SweepSpec {
        SweepSpec {
            n_trials: trials,
            seed: 11,
            ..SweepSpec::new(kind, grid, small())
        }
    }

    fn bytes(rows: &[CsvRow]) -> Vec<u8> {
        let mut v = Vec::new();
        write_csv(rows, &mut v).unwrap();
        v
    }

    #[test]
    fn header_order_is_fixed() {
        let text = String::from_utf8(bytes(&convergence_trace(&small(), 3).unwrap())).unwrap();
        assert_eq!(text.lines().next().unwrap(), ROW_HEADER);
    }

    #[test]
    fn validation() {
        assert!(spec(SweepKind::Gamma, vec![], 1).validate().is_err());
        assert!(spec(SweepKind::Gamma, vec![5.0, 5.0], 1)
            .validate()
            .is_err());
        assert!(spec(SweepKind::Gamma, vec![15.0, 5.0], 1)
            .validate()
            .is_err());
        assert!(spec(SweepKind::Power, vec![0.0, 1.0], 1)
            .validate()
            .is_err());
        assert!(spec(SweepKind::Power, vec![1.0, 2.0], 0)
            .validate()
            .is_err());
        assert!(spec(SweepKind::Convergence, vec![], 1).validate().is_ok());
        assert!(spec(SweepKind::Gamma, vec![f64::NAN], 1)
            .validate()
            .is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in [SweepKind::Convergence, SweepKind::Gamma, SweepKind::Power] {
            assert_eq!(k.name().parse::<SweepKind>().unwrap(), k);
        }
        assert!("fig5".parse::<SweepKind>().is_err());
    }

    #[test]
    fn repeated_runs_are_byte_identical() {
        let s = spec(SweepKind::Gamma, vec![5.0, 15.0], 1);
        let a = run_sweep(&s).unwrap();
        let b = run_sweep(&s).unwrap();
        assert_eq!(bytes(&a.rows), bytes(&b.rows));
    }

    #[test]
    fn gamma_sweep_is_monotone_per_trial() {
        let out = run_sweep(&spec(SweepKind::Gamma, vec![5.0, 15.0, 25.0], 2)).unwrap();
        assert_eq!(out.rows.len(), 3 * 2 * 4);
        for trial in 0..2 {
            for s in Scheme::ALL {
                let v: Vec<f64> = out
                    .rows
                    .iter()
                    .filter(|r| r.trial == trial && r.scheme == s)
                    .map(|r| r.objective_watts.unwrap_or(0.0))
                    .collect();
                assert!(v.windows(2).all(|w| w[1] <= w[0]), "{s} {v:?}");
            }
        }
    }

    #[test]
    fn power_sweep_increases_proposed_mean() {
        let mut s = spec(SweepKind::Power, vec![2.0, 8.0], 2);
        s.schemes = vec![Scheme::Proposed];
        let out = run_sweep(&s).unwrap();
        assert_eq!(out.summary.len(), 2);
        let m: Vec<f64> = out.summary.iter().map(|r| r.mean_watts.unwrap()).collect();
        assert!(m[1] > m[0]);
    }

    #[test]
    fn summary_matches_rows() {
        let out = run_sweep(&spec(SweepKind::Power, vec![4.0, 8.0], 3)).unwrap();
        let back = read_rows(bytes(&out.rows).as_slice()).unwrap();
        assert_eq!(back, out.rows);
        let again = summarize(&back);
        for (a, b) in again.iter().zip(&out.summary) {
            assert_eq!(a.n_feasible, b.n_feasible);
            let (x, y) = (a.mean_watts.unwrap(), b.mean_watts.unwrap());
            assert!((x - y).abs() <= 1e-12 * y);
        }
        for r in &out.summary {
            let vals: Vec<f64> = out
                .rows
                .iter()
                .filter(|x| x.sweep_value == r.sweep_value && x.scheme == r.scheme)
                .filter_map(|x| x.objective_watts)
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            assert!((mean - r.mean_watts.unwrap()).abs() <= 1e-12 * mean);
        }
    }

    #[test]
    fn infeasible_trials_are_counted_not_averaged() {
        let out = run_sweep(&spec(SweepKind::Gamma, vec![10.0, 90.0], 2)).unwrap();
        assert_eq!(out.errors, 0);
        for r in out.summary.iter().filter(|r| r.sweep_value == 90.0) {
            assert_eq!(r.n_feasible, 0);
            assert_eq!(r.n_infeasible, 2);
            assert!(r.mean_watts.is_none());
        }
        assert!(out
            .rows
            .iter()
            .filter(|r| r.sweep_value == 90.0)
            .all(|r| !r.feasible && r.objective_watts.is_none()));
    }

    #[test]
    fn convergence_rows_follow_trace() {
        let rows = convergence_trace(&small(), 5).unwrap();
        assert!(rows.len() >= 2);
        assert!(rows.len() <= small().algo.max_outer_iters + 1);
        let obj: Vec<f64> = rows.iter().map(|r| r.objective_watts.unwrap()).collect();
        assert!(obj.windows(2).all(|w| w[1] >= w[0]));
        assert!(obj.last().unwrap() > &obj[0]);
        for (k, r) in rows.iter().enumerate() {
            assert_eq!(r.sweep_value, k as f64);
            assert_eq!(r.iterations, rows.len() - 1);
            assert_eq!(r.runtime_ms, 0.0);
        }
    }

    #[test]
    fn infeasible_convergence_gives_error_row() {
        let cfg = small().with_sinr_db(90.0);
        let spec = SweepSpec {
            n_trials: 1,
            ..SweepSpec::new(SweepKind::Convergence, vec![], cfg)
        };
        let out = run_sweep(&spec).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert!(!out.rows[0].feasible);
        assert_eq!(out.errors, 1);
    }

    #[test]
    fn summary_file_name() {
        assert_eq!(
            summary_path(Path::new("/x/out.csv")),
            Path::new("/x/out.summary.csv")
        );
        assert_eq!(summary_path(Path::new("res")), Path::new("res.summary.csv"));
    }

    #[test]
    fn standard_error() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, Some(2.5));
        assert!((s.unwrap() - (5.0_f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_stderr(&[]), (None, None));
    }
}
