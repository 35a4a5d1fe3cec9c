//! System configuration, unit conversions and placement geometry.
//!
//! Everything inside [`SystemConfig`] is in linear units (watts, linear SINR,
//! linear gains). Decibels only appear in the on-disk [`ConfigFile`].

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::par::ExecMode;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w / 1e-3)
}

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub ap: Point,
    pub irs: Point,
    pub id: Vec<Point>,
    pub eh: Vec<Point>,
}

impl Placement {
    /// AP at the origin, IRS on the x axis, receivers on two arcs around the
    /// AP at evenly spaced bearings in [-30°, 30°].
    pub fn arcs(
        irs_distance: f64,
        id_radius: f64,
        n_id: usize,
        eh_radius: f64,
        n_eh: usize,
    ) -> Self {
        Self {
            ap: [0.0, 0.0],
            irs: [irs_distance, 0.0],
            id: arc(id_radius, n_id, 30.0),
            eh: arc(eh_radius, n_eh, 30.0),
        }
    }
}

/// `n` points at `radius` from the origin with bearings evenly spaced in
/// `[-half_width, half_width]` degrees. A single point sits on the x axis.
pub fn arc(radius: f64, n: usize, half_width_deg: f64) -> Vec<Point> {
    (0..n)
        .map(|k| {
            let deg = if n == 1 {
                0.0
            } else {
                -half_width_deg + 2.0 * half_width_deg * k as f64 / (n - 1) as f64
            };
            let a = deg.to_radians();
            [radius * a.cos(), radius * a.sin()]
        })
        .collect()
}

/// Link distances derived from a [`Placement`], in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkDistances {
    pub ap_irs: f64,
    pub ap_id: Vec<f64>,
    pub ap_eh: Vec<f64>,
    pub irs_id: Vec<f64>,
    pub irs_eh: Vec<f64>,
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn link_distances(cfg: &SystemConfig) -> Result<LinkDistances, CoreError> {
    let g = &cfg.placement;
    let positive = |d: f64| {
        if d > 0.0 && d.is_finite() {
            Ok(d)
        } else {
            Err(CoreError::DegenerateGeometry)
        }
    };
    let to = |from: Point, pts: &[Point]| -> Result<Vec<f64>, CoreError> {
        pts.iter().map(|&p| positive(dist(from, p))).collect()
    };
    Ok(LinkDistances {
        ap_irs: positive(dist(g.ap, g.irs))?,
        ap_id: to(g.ap, &g.id)?,
        ap_eh: to(g.ap, &g.eh)?,
        irs_id: to(g.irs, &g.id)?,
        irs_eh: to(g.irs, &g.eh)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgoKnobs {
    pub max_outer_iters: usize,
    pub rel_tol: f64,
    pub n_randomizations: usize,
    pub rank_eig_tol: f64,
    pub solver_tol: f64,
    /// Relative tolerance of the feasibility checks.
    pub feas_tol: f64,
    pub seed: u64,
    /// Start the alternation from all-zero phases instead of random ones.
    pub zero_init: bool,
    pub exec: ExecMode,
}

impl Default for AlgoKnobs {
    fn default() -> Self {
        Self {
            max_outer_iters: 50,
            rel_tol: 1e-3,
            n_randomizations: 100,
            rank_eig_tol: 1e-6,
            solver_tol: 1e-7,
            feas_tol: 1e-6,
            seed: 0,
            zero_init: false,
            exec: ExecMode::default(),
        }
    }
}

impl AlgoKnobs {
    pub fn validate(&self) -> Result<(), CoreError> {
        let tols = [
            self.rel_tol,
            self.rank_eig_tol,
            self.solver_tol,
            self.feas_tol,
        ];
        if tols.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(CoreError::InvalidConfig(
                "tolerances must be positive".into(),
            ));
        }
        if self.n_randomizations == 0 {
            return Err(CoreError::InvalidConfig(
                "n_randomizations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// AP antennas.
    pub antennas: usize,
    /// IRS reflecting elements.
    pub elements: usize,
    /// Transmit power budget, watts.
    pub p_max: f64,
    /// Per-ID-receiver SINR thresholds, linear.
    pub sinr_min: Vec<f64>,
    /// Per-ID-receiver noise powers, watts.
    pub noise: Vec<f64>,
    /// Rician factor of the AP-IRS link, linear.
    pub rician_k: f64,
    /// Path-loss gain at the reference distance, linear.
    pub kappa: f64,
    pub d0: f64,
    pub alpha_ap_irs: f64,
    pub alpha_ap_rx: f64,
    pub alpha_irs_rx: f64,
    pub placement: Placement,
    pub algo: AlgoKnobs,
}

pub const DEFAULT_NOISE_DBM: f64 = -80.0;

pub fn default_config() -> SystemConfig {
    let (n_id, n_eh) = (2, 2);
    SystemConfig {
        antennas: 4,
        elements: 40,
        p_max: 8.0,
        sinr_min: vec![db_to_linear(15.0); n_id],
        noise: vec![dbm_to_watts(DEFAULT_NOISE_DBM); n_id],
        rician_k: db_to_linear(10.0),
        kappa: db_to_linear(-30.0),
        d0: 1.0,
        alpha_ap_irs: 2.0,
        alpha_ap_rx: 3.5,
        alpha_irs_rx: 2.5,
        placement: Placement::arcs(8.0, 50.0, n_id, 3.0, n_eh),
        algo: AlgoKnobs::default(),
    }
}

impl SystemConfig {
    pub fn n_id(&self) -> usize {
        self.placement.id.len()
    }

    pub fn n_eh(&self) -> usize {
        self.placement.eh.len()
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let bad = |m: &str| Err(CoreError::InvalidConfig(m.into()));
        if self.antennas < 2 {
            return bad("antennas must be at least 2");
        }
        if self.n_eh() == 0 {
            return bad("at least one EH receiver is required");
        }
        if self.sinr_min.len() != self.n_id() || self.noise.len() != self.n_id() {
            return bad("sinr and noise lists must have one entry per ID receiver");
        }
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !pos(self.p_max) || !pos(self.kappa) || !pos(self.d0) {
            return bad("p_max, kappa and d0 must be positive");
        }
        if !self.sinr_min.iter().chain(&self.noise).all(|&x| pos(x)) {
            return bad("sinr thresholds and noise powers must be positive");
        }
        if !(self.rician_k >= 0.0 && self.rician_k.is_finite()) {
            return bad("rician factor must be nonnegative");
        }
        let alphas = [self.alpha_ap_irs, self.alpha_ap_rx, self.alpha_irs_rx];
        if !alphas.iter().all(|a| a.is_finite()) {
            return bad("path-loss exponents must be finite");
        }
        self.algo.validate()?;
        link_distances(self).map(|_| ())
    }

    /// Same config with every SINR threshold set to `db`.
    pub fn with_sinr_db(mut self, db: f64) -> Self {
        self.sinr_min = vec![db_to_linear(db); self.n_id()];
        self
    }

    pub fn with_power(mut self, watts: f64) -> Self {
        self.p_max = watts;
        self
    }
}

// ---------------------------------------------------------------------------
// On-disk format

/// TOML config file. Every physical field carries its unit in the key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub antennas: usize,
    pub irs_elements: usize,
    pub p_watts: f64,
    pub gamma_db: Vec<f64>,
    pub noise_dbm: Vec<f64>,
    pub rician_k_db: f64,
    pub kappa_db: f64,
    pub d0_m: f64,
    pub alpha_ap_irs: f64,
    pub alpha_ap_rx: f64,
    pub alpha_irs_rx: f64,
    pub geometry: GeometryFile,
    #[serde(default)]
    pub algo: AlgoKnobs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    pub ap_m: Point,
    pub irs_m: Point,
    pub id_m: Vec<Point>,
    pub eh_m: Vec<Point>,
}

impl From<&SystemConfig> for ConfigFile {
    fn from(c: &SystemConfig) -> Self {
        Self {
            antennas: c.antennas,
            irs_elements: c.elements,
            p_watts: c.p_max,
            gamma_db: c.sinr_min.iter().map(|&g| linear_to_db(g)).collect(),
            noise_dbm: c.noise.iter().map(|&s| watts_to_dbm(s)).collect(),
            rician_k_db: linear_to_db(c.rician_k),
            kappa_db: linear_to_db(c.kappa),
            d0_m: c.d0,
            alpha_ap_irs: c.alpha_ap_irs,
            alpha_ap_rx: c.alpha_ap_rx,
            alpha_irs_rx: c.alpha_irs_rx,
            geometry: GeometryFile {
                ap_m: c.placement.ap,
                irs_m: c.placement.irs,
                id_m: c.placement.id.clone(),
                eh_m: c.placement.eh.clone(),
            },
            algo: c.algo.clone(),
        }
    }
}

impl ConfigFile {
    pub fn into_config(self) -> Result<SystemConfig, CoreError> {
        let cfg = SystemConfig {
            antennas: self.antennas,
            elements: self.irs_elements,
            p_max: self.p_watts,
            sinr_min: self.gamma_db.iter().map(|&g| db_to_linear(g)).collect(),
            noise: self.noise_dbm.iter().map(|&s| dbm_to_watts(s)).collect(),
            rician_k: db_to_linear(self.rician_k_db),
            kappa: db_to_linear(self.kappa_db),
            d0: self.d0_m,
            alpha_ap_irs: self.alpha_ap_irs,
            alpha_ap_rx: self.alpha_ap_rx,
            alpha_irs_rx: self.alpha_irs_rx,
            placement: Placement {
                ap: self.geometry.ap_m,
                irs: self.geometry.irs_m,
                id: self.geometry.id_m,
                eh: self.geometry.eh_m,
            },
            algo: self.algo,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn config_to_toml(cfg: &SystemConfig) -> Result<String, CoreError> {
    toml::to_string_pretty(&ConfigFile::from(cfg)).map_err(|e| CoreError::Config(e.to_string()))
}

pub fn config_from_toml(text: &str) -> Result<SystemConfig, CoreError> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| CoreError::Config(e.to_string()))?;
    file.into_config()
}

pub fn load_config(path: &std::path::Path) -> Result<SystemConfig, CoreError> {
    let text = std::fs::read_to_string(path)?;
    config_from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn defaults_match_reference_setup() {
        let c = default_config();
        assert_eq!(c.elements, 40);
        assert_eq!(c.p_max, 8.0);
        for &g in &c.sinr_min {
            assert!((g - 31.622776601683793).abs() < 1e-9);
        }
        assert!(rel(c.rician_k, 10.0) < 1e-12);
        assert!(rel(c.kappa, 1e-3) < 1e-12);
        assert_eq!(c.d0, 1.0);
        assert_eq!(
            (c.alpha_ap_irs, c.alpha_ap_rx, c.alpha_irs_rx),
            (2.0, 3.5, 2.5)
        );
        let d = link_distances(&c).unwrap();
        assert!((d.ap_irs - 8.0).abs() < 1e-12);
        assert!(d.ap_eh.iter().all(|&x| (x - 3.0).abs() < 1e-12));
        assert!(d.ap_id.iter().all(|&x| (x - 50.0).abs() < 1e-12));
        c.validate().unwrap();
    }

    #[test]
    fn distances_on_axis() {
        let mut c = default_config();
        c.placement = Placement {
            ap: [0.0, 0.0],
            irs: [8.0, 0.0],
            id: vec![],
            eh: vec![[3.0, 0.0]],
        };
        c.sinr_min.clear();
        c.noise.clear();
        let d = link_distances(&c).unwrap();
        assert_eq!(d.ap_irs, 8.0);
        assert_eq!(d.ap_eh, vec![3.0]);
        assert_eq!(d.irs_eh, vec![5.0]);
    }

    #[test]
    fn coincident_points_rejected() {
        let mut c = default_config();
        c.placement.eh[0] = c.placement.irs;
        assert!(matches!(
            link_distances(&c),
            Err(CoreError::DegenerateGeometry)
        ));
    }

    #[test]
    fn validate_rejects_bad_values() {
        let mut c = default_config();
        c.p_max = 0.0;
        assert!(c.validate().is_err());
        let mut c = default_config();
        c.noise.pop();
        assert!(c.validate().is_err());
        let mut c = default_config();
        c.algo.n_randomizations = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let c = default_config();
        let text = config_to_toml(&c).unwrap();
        assert!(text.contains("p_watts") && text.contains("gamma_db"));
        let back = config_from_toml(&text).unwrap();
        assert_eq!(back.antennas, c.antennas);
        assert_eq!(back.placement, c.placement);
        assert_eq!(back.algo, c.algo);
        assert_eq!(back.p_max, c.p_max);
        for (a, b) in back.sinr_min.iter().zip(&c.sinr_min) {
            assert!(rel(*a, *b) < 1e-12);
        }
        for (a, b) in back.noise.iter().zip(&c.noise) {
            assert!(rel(*a, *b) < 1e-12);
        }
        assert!(rel(back.kappa, c.kappa) < 1e-12);
        assert!(rel(back.rician_k, c.rician_k) < 1e-12);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut text = config_to_toml(&default_config()).unwrap();
        text.insert_str(0, "bogus = 1\n");
        assert!(config_from_toml(&text).is_err());
    }

    proptest! {
        #[test]
        fn db_round_trip(db in -200.0f64..200.0) {
            let back = linear_to_db(db_to_linear(db));
            prop_assert!((back - db).abs() <= 1e-12 * db.abs().max(1.0));
            let lin = db_to_linear(db);
            prop_assert!(rel(db_to_linear(linear_to_db(lin)), lin) < 1e-12);
        }

        #[test]
        fn arc_points_keep_radius(r in 0.1f64..100.0, n in 1usize..8) {
            for p in arc(r, n, 30.0) {
                prop_assert!((p[0].hypot(p[1]) - r).abs() < 1e-9 * r);
                prop_assert!(p[0] > 0.0);
            }
        }
    }
}
