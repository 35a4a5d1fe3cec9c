//! Channel realizations: a Rician AP-IRS matrix and Rayleigh links from the
//! AP and the IRS to every receiver, each scaled by distance path loss.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::rng::{cscg_matrix, cscg_vector};
use crate::scenario::{link_distances, SystemConfig};
use crate::{CMatrix, CVector, Complex64};

/// `kappa * (d / d0)^(-alpha)`.
pub fn path_loss(d: f64, alpha: f64, kappa: f64, d0: f64) -> Result<f64, CoreError> {
    if d.is_nan() || d <= 0.0 {
        return Err(CoreError::NonPositiveDistance(d));
    }
    Ok(kappa * (d / d0).powf(-alpha))
}

/// I.i.d. CSCG entries with variance `gain`.
pub fn draw_rayleigh<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, gain: f64) -> CMatrix {
    cscg_matrix(rng, rows, cols, gain)
}

/// Half-wavelength ULA response, entry `m` equal to `exp(j pi m sin(angle))`.
pub fn steering(angle: f64, len: usize) -> CVector {
    CVector::from_fn(len, |m, _| {
        Complex64::from_polar(1.0, PI * m as f64 * angle.sin())
    })
}

/// `sqrt(gain) (sqrt(K/(K+1)) LOS + sqrt(1/(K+1)) NLOS)` with a rank-one
/// steering LOS term. `k = inf` gives pure LOS.
pub fn draw_rician<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    gain: f64,
    k: f64,
    aod: f64,
    aoa: f64,
) -> CMatrix {
    let los = steering(aoa, rows) * steering(aod, cols).adjoint();
    let (w_los, w_nlos) = if k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
    };
    let nlos = cscg_matrix(rng, rows, cols, 1.0);
    (los.scale(w_los) + nlos.scale(w_nlos)).scale(gain.sqrt())
}

/// One channel realization. Received baseband at a receiver with direct link
/// `h_d` and reflect link `h_r` is `(h_r^H Θ T + h_d^H) x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// AP to IRS, `N x M`.
    pub t: CMatrix,
    pub h_d: Vec<CVector>,
    pub g_d: Vec<CVector>,
    pub h_r: Vec<CVector>,
    pub g_r: Vec<CVector>,
}

impl ChannelSet {
    pub fn antennas(&self) -> usize {
        self.t.ncols()
    }

    pub fn elements(&self) -> usize {
        self.t.nrows()
    }

    pub fn n_id(&self) -> usize {
        self.h_d.len()
    }

    pub fn n_eh(&self) -> usize {
        self.g_d.len()
    }

    /// Copy with every IRS-to-receiver link zeroed.
    pub fn without_reflection(&self) -> Self {
        let zero = |v: &Vec<CVector>| v.iter().map(|x| CVector::zeros(x.len())).collect();
        Self {
            h_r: zero(&self.h_r),
            g_r: zero(&self.g_r),
            ..self.clone()
        }
    }

    pub fn is_finite(&self) -> bool {
        let ok = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        self.t.iter().all(ok)
            && [&self.h_d, &self.g_d, &self.h_r, &self.g_r]
                .iter()
                .all(|vs| vs.iter().all(|v| v.iter().all(ok)))
    }

    pub fn to_json(&self) -> Result<String, CoreError> {
        Ok(serde_json::to_string_pretty(&ChannelDump::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self, CoreError> {
        let dump: ChannelDump = serde_json::from_str(text)?;
        dump.try_into()
    }
}

/// Draws a realization for `cfg`. The AP-IRS angles are redrawn uniformly
/// in `[0, 2pi)` for every realization.
pub fn generate<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<ChannelSet, CoreError> {
    let d = link_distances(cfg)?;
    let pl = |dist: f64, alpha: f64| path_loss(dist, alpha, cfg.kappa, cfg.d0);
    let (m, n) = (cfg.antennas, cfg.elements);
    let aod = rng.random_range(0.0..TAU);
    let aoa = rng.random_range(0.0..TAU);
    let t = draw_rician(
        rng,
        n,
        m,
        pl(d.ap_irs, cfg.alpha_ap_irs)?,
        cfg.rician_k,
        aod,
        aoa,
    );
    let mut links = |dists: &[f64], len: usize, alpha: f64| -> Result<Vec<CVector>, CoreError> {
        dists
            .iter()
            .map(|&x| Ok(cscg_vector(rng, len, pl(x, alpha)?)))
            .collect()
    };
    let h_d = links(&d.ap_id, m, cfg.alpha_ap_rx)?;
    let g_d = links(&d.ap_eh, m, cfg.alpha_ap_rx)?;
    let h_r = links(&d.irs_id, n, cfg.alpha_irs_rx)?;
    let g_r = links(&d.irs_eh, n, cfg.alpha_irs_rx)?;
    Ok(ChannelSet {
        t,
        h_d,
        g_d,
        h_r,
        g_r,
    })
}

// ---------------------------------------------------------------------------
// JSON dump: every complex array is stored row-major as separate `re` and
// `im` lists.

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ArrayDump {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChannelDump {
    t: ArrayDump,
    h_d: Vec<ArrayDump>,
    g_d: Vec<ArrayDump>,
    h_r: Vec<ArrayDump>,
    g_r: Vec<ArrayDump>,
}

impl ArrayDump {
    fn from_matrix(a: &CMatrix) -> Self {
        let (rows, cols) = a.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                re.push(a[(r, c)].re);
                im.push(a[(r, c)].im);
            }
        }
        Self { rows, cols, re, im }
    }

    fn from_vector(v: &CVector) -> Self {
        Self::from_matrix(&CMatrix::from_column_slice(v.len(), 1, v.as_slice()))
    }

    fn to_matrix(&self) -> Result<CMatrix, CoreError> {
        let n = self.rows * self.cols;
        if self.re.len() != n || self.im.len() != n {
            return Err(CoreError::Config(
                "channel dump: array length mismatch".into(),
            ));
        }
        let data: Vec<Complex64> = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect();
        Ok(CMatrix::from_row_slice(self.rows, self.cols, &data))
    }

    fn to_vector(&self) -> Result<CVector, CoreError> {
        if self.cols != 1 {
            return Err(CoreError::Config(
                "channel dump: expected a column vector".into(),
            ));
        }
        Ok(self.to_matrix()?.column(0).into_owned())
    }
}

impl From<&ChannelSet> for ChannelDump {
    fn from(c: &ChannelSet) -> Self {
        let vs = |v: &Vec<CVector>| v.iter().map(ArrayDump::from_vector).collect();
        Self {
            t: ArrayDump::from_matrix(&c.t),
            h_d: vs(&c.h_d),
            g_d: vs(&c.g_d),
            h_r: vs(&c.h_r),
            g_r: vs(&c.g_r),
        }
    }
}

impl TryFrom<ChannelDump> for ChannelSet {
    type Error = CoreError;

    fn try_from(d: ChannelDump) -> Result<Self, CoreError> {
        let vs = |v: &Vec<ArrayDump>| {
            v.iter()
                .map(ArrayDump::to_vector)
                .collect::<Result<Vec<_>, _>>()
        };
        let ch = ChannelSet {
            t: d.t.to_matrix()?,
            h_d: vs(&d.h_d)?,
            g_d: vs(&d.g_d)?,
            h_r: vs(&d.h_r)?,
            g_r: vs(&d.g_r)?,
        };
        let (n, m) = ch.t.shape();
        let ok = ch.h_d.len() == ch.h_r.len()
            && ch.g_d.len() == ch.g_r.len()
            && ch.h_d.iter().chain(&ch.g_d).all(|v| v.len() == m)
            && ch.h_r.iter().chain(&ch.g_r).all(|v| v.len() == n);
        if !ok {
            return Err(CoreError::Config(
                "channel dump: inconsistent dimensions".into(),
            ));
        }
        Ok(ch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::scenario::default_config;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn path_loss_values() {
        assert!(close(path_loss(1.0, 3.5, 1e-3, 1.0).unwrap(), 1e-3, 1e-15));
        assert!(close(
            path_loss(8.0, 2.0, 1e-3, 1.0).unwrap(),
            1.5625e-5,
            1e-14
        ));
        assert!(close(
            path_loss(3.0, 3.5, 1e-3, 1.0).unwrap(),
            2.1383e-5,
            1e-4
        ));
        assert!(path_loss(0.0, 2.0, 1e-3, 1.0).is_err());
        assert!(path_loss(-1.0, 2.0, 1e-3, 1.0).is_err());
    }

    #[test]
    fn rayleigh_zero_gain_is_zero() {
        let a = draw_rayleigh(&mut stream(0, 0, 0), 3, 4, 0.0);
        assert!(a.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn rayleigh_moments() {
        let mut r = stream(11, 0, 0);
        let n = 100_000;
        let (mut p, mut re2, mut im2) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let z = draw_rayleigh(&mut r, 1, 1, 1.0)[(0, 0)];
            p += z.norm_sqr();
            re2 += z.re * z.re;
            im2 += z.im * z.im;
        }
        let n = n as f64;
        assert!((0.98..=1.02).contains(&(p / n)));
        assert!(close(re2 / n, 0.5, 0.02));
        assert!(close(im2 / n, 0.5, 0.02));
    }

    #[test]
    fn rician_pure_los_has_constant_modulus() {
        let a = draw_rician(&mut stream(1, 0, 0), 5, 3, 2.0, f64::INFINITY, 0.3, 1.1);
        for z in a.iter() {
            assert!((z.norm() - 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn rician_zero_k_is_rayleigh() {
        // Same stream, same NLOS draws: K = 0 must reproduce the Rayleigh matrix.
        let a = draw_rician(&mut stream(2, 0, 0), 4, 4, 0.7, 0.0, 0.3, 1.1);
        let b = draw_rayleigh(&mut stream(2, 0, 0), 4, 4, 0.7);
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn rician_power_and_mean() {
        let (k, gain) = (10.0, 1.0);
        let (aod, aoa) = (0.4, -0.9);
        let mut r = stream(5, 0, 0);
        let n = 100_000;
        let mut p = 0.0;
        let mut mean = CMatrix::zeros(2, 2);
        for _ in 0..n {
            let a = draw_rician(&mut r, 2, 2, gain, k, aod, aoa);
            p += a[(0, 1)].norm_sqr();
            mean += a;
        }
        let p = p / n as f64;
        assert!((0.98..=1.02).contains(&p), "power {p}");
        let mean = mean.unscale(n as f64);
        let los =
            (steering(aoa, 2) * steering(aod, 2).adjoint()).scale((gain * k / (k + 1.0)).sqrt());
        assert!((mean - &los).norm() / los.norm() < 0.03);
    }

    #[test]
    fn generate_is_deterministic() {
        let cfg = default_config();
        let a = generate(&cfg, &mut stream(9, 3, 0)).unwrap();
        let b = generate(&cfg, &mut stream(9, 3, 0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.t.shape(), (40, 4));
        assert_eq!(a.n_id(), 2);
        assert!(a.is_finite());
    }

    #[test]
    fn generate_without_id_receivers() {
        let mut cfg = default_config();
        cfg.placement.id.clear();
        cfg.sinr_min.clear();
        cfg.noise.clear();
        let ch = generate(&cfg, &mut stream(0, 0, 0)).unwrap();
        assert!(ch.h_d.is_empty() && ch.h_r.is_empty());
        assert_eq!(ch.n_eh(), 2);
    }

    #[test]
    fn direct_eh_link_calibration() {
        let cfg = default_config();
        let expect = cfg.antennas as f64 * path_loss(3.0, 3.5, 1e-3, 1.0).unwrap();
        let mut r = stream(21, 0, 0);
        let n = 10_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += generate(&cfg, &mut r).unwrap().g_d[0].norm_squared();
        }
        assert!(
            close(acc / n as f64, expect, 0.03),
            "{} vs {expect}",
            acc / n as f64
        );
    }

    #[test]
    fn json_round_trip_is_exact() {
        let ch = generate(&default_config(), &mut stream(4, 0, 0)).unwrap();
        let back = ChannelSet::from_json(&ch.to_json().unwrap()).unwrap();
        assert_eq!(back, ch);
    }

    #[test]
    fn without_reflection_keeps_direct_links() {
        let ch = generate(&default_config(), &mut stream(4, 0, 0)).unwrap();
        let z = ch.without_reflection();
        assert_eq!(z.h_d, ch.h_d);
        assert!(z.g_r.iter().all(|v| v.norm() == 0.0));
    }
}
