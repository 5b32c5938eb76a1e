//! mmWave channel generation.
//!
//! Array responses use half-wavelength spacing and the phase convention
//! `e^{+jπ n sin φ}`. The BS is a ULA whose axis is perpendicular to the
//! BS-user line (broadside points along +x); each IRS is a URA lying in a
//! plane parallel to the BS-user line, with its horizontal axis along x.
//!
//! Path gains follow the 28 GHz measurement model: the path loss
//! `κ = e + 10 f log10(d) + ξ` (dB) with lognormal shadowing `ξ ~ N(0, σ_ξ²)`,
//! and the complex gain `α ~ CN(0, 10^{-κ/10})`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::{ScenarioGeometry, SystemConfig};
use crate::error::{check_dim, invalid, Result};

pub type CVector = DVector<Complex64>;

/// Unit-norm response of an `n`-element ULA towards azimuth `phi`.
pub fn ula_response(n: usize, phi: f64) -> CVector {
    assert!(n >= 1, "ULA needs at least one element");
    let scale = 1.0 / (n as f64).sqrt();
    let s = phi.sin();
    DVector::from_iterator(
        n,
        (0..n).map(|i| Complex64::from_polar(scale, PI * i as f64 * s)),
    )
}

/// Unit-norm response of an `m_y × m_z` URA.
///
/// The horizontal factor depends on `sin(az)·cos(el)` and the vertical factor
/// on `sin(el)`; element `(i, l)` sits at index `i·m_z + l`, i.e. the result is
/// `kron(steer_y, steer_z)`.
pub fn ura_response(m_y: usize, m_z: usize, azimuth: f64, elevation: f64) -> CVector {
    assert!(m_y >= 1 && m_z >= 1, "URA needs at least one element");
    let scale = 1.0 / ((m_y * m_z) as f64).sqrt();
    let u = azimuth.sin() * elevation.cos();
    let v = elevation.sin();
    DVector::from_iterator(
        m_y * m_z,
        (0..m_y).flat_map(|i| {
            (0..m_z).map(move |l| Complex64::from_polar(scale, PI * (i as f64 * u + l as f64 * v)))
        }),
    )
}

/// Parameters of the log-distance path loss model with lognormal shadowing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossParams {
    /// Intercept (dB).
    pub e_intercept: f64,
    /// Path loss exponent.
    pub f_exponent: f64,
    /// Shadowing standard deviation (dB).
    pub sigma_xi_db: f64,
}

impl PathLossParams {
    /// 28 GHz line-of-sight measurements.
    pub const LOS: PathLossParams = PathLossParams {
        e_intercept: 61.4,
        f_exponent: 2.0,
        sigma_xi_db: 5.8,
    };

    /// 28 GHz non-line-of-sight measurements.
    pub const NLOS: PathLossParams = PathLossParams {
        e_intercept: 72.0,
        f_exponent: 2.92,
        sigma_xi_db: 8.7,
    };

    /// Path loss `κ` in dB at `dist_m` for a given shadowing realization.
    pub fn path_loss_db(&self, dist_m: f64, xi_db: f64) -> f64 {
        self.e_intercept + 10.0 * self.f_exponent * dist_m.log10() + xi_db
    }

    /// Variance `10^{-κ/10}` of the complex path gain.
    pub fn gain_variance(&self, dist_m: f64, xi_db: f64) -> f64 {
        10f64.powf(-0.1 * self.path_loss_db(dist_m, xi_db))
    }

    /// `E[10^{-ξ/10}]` for `ξ ~ N(0, σ_ξ²)`: the lognormal mean correction.
    pub fn shadowing_mean_factor(&self) -> f64 {
        let s = self.sigma_xi_db * std::f64::consts::LN_10 / 10.0;
        (0.5 * s * s).exp()
    }

    pub fn sample_shadowing<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.sigma_xi_db * z
    }
}

/// Circularly-symmetric complex Gaussian sample with variance `var`.
pub fn complex_normal<R: Rng + ?Sized>(var: f64, rng: &mut R) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Draws a complex path gain at `dist_m`, including a fresh shadowing draw.
pub fn sample_path_gain<R: Rng + ?Sized>(
    params: &PathLossParams,
    dist_m: f64,
    rng: &mut R,
) -> Result<Complex64> {
    let xi = params.sample_shadowing(rng);
    sample_path_gain_with_shadowing(params, dist_m, xi, rng)
}

/// Draws a complex path gain at `dist_m` with the shadowing term fixed to `xi_db`.
pub fn sample_path_gain_with_shadowing<R: Rng + ?Sized>(
    params: &PathLossParams,
    dist_m: f64,
    xi_db: f64,
    rng: &mut R,
) -> Result<Complex64> {
    if !(dist_m > 0.0 && dist_m.is_finite()) {
        return Err(invalid("dist_m", "distance must be > 0"));
    }
    Ok(complex_normal(params.gain_variance(dist_m, xi_db), rng))
}

/// Where the shadowing term of a path gain comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shadowing {
    /// Draw `ξ` from the stream, before the gain itself.
    Draw,
    /// Use a fixed value (dB).
    Fixed(f64),
}

fn draw_gain<R: Rng + ?Sized>(
    params: &PathLossParams,
    dist_m: f64,
    shadowing: Shadowing,
    rng: &mut R,
) -> Result<Complex64> {
    match shadowing {
        Shadowing::Draw => sample_path_gain(params, dist_m, rng),
        Shadowing::Fixed(xi) => sample_path_gain_with_shadowing(params, dist_m, xi, rng),
    }
}

/// One propagation path of the IRS-user geometric model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub gain: Complex64,
    pub azimuth: f64,
    pub elevation: f64,
}

/// `sqrt(M/L) · λ_r λ_t · Σ_l α_l a(φ_a,l, φ_e,l)` over the given paths.
pub fn irs_user_from_paths(cfg: &SystemConfig, paths: &[PathComponent]) -> Result<CVector> {
    if paths.is_empty() {
        return Err(invalid("paths", "at least one path is required"));
    }
    let m = cfg.m();
    let scale = (m as f64 / paths.len() as f64).sqrt() * cfg.element_gain();
    let mut h = CVector::zeros(m);
    for p in paths {
        h.axpy(p.gain * scale, &ura_response(cfg.m_y, cfg.m_z, p.azimuth, p.elevation), Complex64::new(1.0, 0.0));
    }
    Ok(h)
}

fn draw_irs_user_paths<R: Rng + ?Sized>(
    count: usize,
    dist_m: f64,
    shadowing: &dyn Fn(usize) -> Shadowing,
    rng: &mut R,
) -> Result<Vec<PathComponent>> {
    if count == 0 {
        return Err(invalid("paths", "at least one path is required"));
    }
    (0..count)
        .map(|l| {
            let gain = draw_gain(&PathLossParams::NLOS, dist_m, shadowing(l), rng)?;
            let azimuth = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
            let elevation = rng.random_range(-FRAC_PI_4..=FRAC_PI_4);
            Ok(PathComponent {
                gain,
                azimuth,
                elevation,
            })
        })
        .collect()
}

/// IRS-user channel from the `paths`-path geometric model with NLOS gains.
pub fn gen_irs_user_channel<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    paths: usize,
    dist_m: f64,
    rng: &mut R,
) -> Result<CVector> {
    let comps = draw_irs_user_paths(paths, dist_m, &|_| Shadowing::Draw, rng)?;
    irs_user_from_paths(cfg, &comps)
}

/// BS-user channel `sqrt(N/L) Σ_l α_l a_t(φ_l)`; element gains are 0 dBi.
pub fn direct_from_paths(n_bs: usize, paths: &[(Complex64, f64)]) -> Result<CVector> {
    if paths.is_empty() {
        return Err(invalid("paths", "at least one path is required"));
    }
    let scale = (n_bs as f64 / paths.len() as f64).sqrt();
    let mut h = CVector::zeros(n_bs);
    for &(gain, phi) in paths {
        h.axpy(gain * scale, &ula_response(n_bs, phi), Complex64::new(1.0, 0.0));
    }
    Ok(h)
}

fn draw_direct<R: Rng + ?Sized>(
    n_bs: usize,
    count: usize,
    dist_m: f64,
    shadowing: &dyn Fn(usize) -> Shadowing,
    rng: &mut R,
) -> Result<CVector> {
    if count == 0 {
        return Err(invalid("paths", "at least one path is required"));
    }
    let paths = (0..count)
        .map(|l| {
            let gain = draw_gain(&PathLossParams::NLOS, dist_m, shadowing(l), rng)?;
            Ok((gain, rng.random_range(-FRAC_PI_2..=FRAC_PI_2)))
        })
        .collect::<Result<Vec<_>>>()?;
    direct_from_paths(n_bs, &paths)
}

/// BS-user channel for the no-IRS baseline.
pub fn gen_direct_channel<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    paths: usize,
    dist_m: f64,
    rng: &mut R,
) -> Result<CVector> {
    draw_direct(cfg.n_bs, paths, dist_m, &|_| Shadowing::Draw, rng)
}

/// IRS-user channel with i.i.d. `CN(0, varrho²)` entries.
pub fn gen_rayleigh_irs_user<R: Rng + ?Sized>(m: usize, varrho: f64, rng: &mut R) -> Result<CVector> {
    if !(varrho > 0.0 && varrho.is_finite()) {
        return Err(invalid("varrho", "standard deviation must be > 0"));
    }
    let var = varrho * varrho;
    Ok(DVector::from_iterator(m, (0..m).map(|_| complex_normal(var, rng))))
}

/// Rank-one BS-IRS channel `G = λ a bᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneChannel {
    /// Scalar gain, including `sqrt(NM)`, the path gain and element gains.
    pub lambda: Complex64,
    /// IRS-side response (length M, unit norm).
    pub a: CVector,
    /// BS-side response (length N, unit norm).
    pub b: CVector,
}

impl RankOneChannel {
    /// Dense `M × N` channel matrix.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        (&self.a * self.b.transpose()) * self.lambda
    }
}

/// Departure and arrival angles of a BS-IRS line-of-sight ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsIrsAngles {
    /// Departure angle at the BS ULA, measured from broadside.
    pub departure: f64,
    pub arrival_azimuth: f64,
    pub arrival_elevation: f64,
}

impl BsIrsAngles {
    /// Angles of the straight ray from the BS to the IRS at `(x_irs, d_v)`.
    pub fn from_geometry(geom: &ScenarioGeometry, x_irs: f64) -> Self {
        let dist = geom.bs_irs_distance(x_irs);
        BsIrsAngles {
            departure: (geom.d_v / dist).asin(),
            // The ray arrives travelling along +x, i.e. from the −x side.
            arrival_azimuth: (-x_irs / dist).asin(),
            arrival_elevation: 0.0,
        }
    }
}

/// Rank-one channel for a known LOS gain `alpha`.
pub fn rank_one_from_gain(cfg: &SystemConfig, angles: &BsIrsAngles, alpha: Complex64) -> RankOneChannel {
    let nm = (cfg.n_bs * cfg.m()) as f64;
    RankOneChannel {
        lambda: alpha * nm.sqrt() * cfg.element_gain(),
        a: ura_response(cfg.m_y, cfg.m_z, angles.arrival_azimuth, angles.arrival_elevation),
        b: ula_response(cfg.n_bs, angles.departure).conjugate(),
    }
}

/// BS-IRS channel `sqrt(NM) α λ_r λ_t a_r(ϑ_a, ϑ_e) a_tᴴ(φ)` with a LOS gain.
pub fn gen_bs_irs_channel<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    angles: &BsIrsAngles,
    dist_m: f64,
    rng: &mut R,
) -> Result<RankOneChannel> {
    let alpha = sample_path_gain(&PathLossParams::LOS, dist_m, rng)?;
    Ok(rank_one_from_gain(cfg, angles, alpha))
}

/// All channels of one Monte Carlo draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub bs_irs: Vec<RankOneChannel>,
    pub irs_user: Vec<CVector>,
    /// BS-user channel, only populated for the no-IRS baseline.
    pub direct: Option<CVector>,
}

impl ChannelRealization {
    pub fn k(&self) -> usize {
        self.bs_irs.len()
    }

    /// BS antenna count, taken from the first link.
    pub fn n_bs(&self) -> usize {
        self.bs_irs.first().map(|c| c.b.len()).unwrap_or(0)
    }

    /// Checks list lengths and vector dimensions against `cfg`.
    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        check_dim("bs_irs links", cfg.k_irs, self.bs_irs.len())?;
        check_dim("irs_user links", cfg.k_irs, self.irs_user.len())?;
        self.validate_shapes()?;
        if let Some(first) = self.bs_irs.first() {
            check_dim("BS response", cfg.n_bs, first.b.len())?;
            check_dim("IRS response", cfg.m(), first.a.len())?;
        }
        Ok(())
    }

    /// Checks internal consistency without reference to a config.
    pub fn validate_shapes(&self) -> Result<()> {
        check_dim("irs_user links", self.bs_irs.len(), self.irs_user.len())?;
        let n = self.n_bs();
        for (ch, h) in self.bs_irs.iter().zip(&self.irs_user) {
            check_dim("BS response", n, ch.b.len())?;
            check_dim("IRS-user channel", ch.a.len(), h.len())?;
        }
        if let Some(d) = &self.direct {
            check_dim("direct channel", n, d.len())?;
        }
        Ok(())
    }

    /// Realization restricted to the IRSs listed in `keep`.
    pub fn subset(&self, keep: &[usize]) -> ChannelRealization {
        ChannelRealization {
            bs_irs: keep.iter().map(|&k| self.bs_irs[k].clone()).collect(),
            irs_user: keep.iter().map(|&k| self.irs_user[k].clone()).collect(),
            direct: self.direct.clone(),
        }
    }
}

/// Knobs of the channel generator that the measured models leave open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelOptions {
    /// Path count of the IRS-user and BS-user geometric channels.
    pub paths: usize,
    /// Keep shadowing fixed per link across realizations instead of redrawing.
    pub freeze_shadowing: bool,
}

impl Default for ChannelOptions {
    fn default() -> Self {
        ChannelOptions {
            paths: 4,
            freeze_shadowing: false,
        }
    }
}

#[derive(Debug, Clone)]
struct FrozenShadowing {
    bs_irs: Vec<f64>,
    irs_user: Vec<Vec<f64>>,
    direct: Vec<f64>,
}

/// Generates channel realizations for a fixed configuration and geometry.
///
/// Random draws happen in a fixed order that does not depend on the array
/// sizes or the user position, so two generators that differ only in `M` or
/// `d_u` see the same gains and angles for the same stream.
#[derive(Debug, Clone)]
pub struct ChannelGenerator {
    cfg: SystemConfig,
    geom: ScenarioGeometry,
    opts: ChannelOptions,
    frozen: Option<FrozenShadowing>,
}

impl ChannelGenerator {
    /// `shadowing_seed` is only used when `opts.freeze_shadowing` is set.
    pub fn new(
        cfg: SystemConfig,
        geom: ScenarioGeometry,
        opts: ChannelOptions,
        shadowing_seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        geom.validate()?;
        if opts.paths == 0 {
            return Err(invalid("paths", "at least one path is required"));
        }
        let frozen = opts.freeze_shadowing.then(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(shadowing_seed);
            let los = PathLossParams::LOS;
            let nlos = PathLossParams::NLOS;
            FrozenShadowing {
                bs_irs: (0..cfg.k_irs).map(|_| los.sample_shadowing(&mut rng)).collect(),
                irs_user: (0..cfg.k_irs)
                    .map(|_| (0..opts.paths).map(|_| nlos.sample_shadowing(&mut rng)).collect())
                    .collect(),
                direct: (0..opts.paths).map(|_| nlos.sample_shadowing(&mut rng)).collect(),
            }
        });
        Ok(ChannelGenerator {
            cfg,
            geom,
            opts,
            frozen,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn geometry(&self) -> &ScenarioGeometry {
        &self.geom
    }

    fn bs_irs_link<R: Rng + ?Sized>(&self, k: usize, x: f64, rng: &mut R) -> Result<RankOneChannel> {
        let angles = BsIrsAngles::from_geometry(&self.geom, x);
        let dist = self.geom.bs_irs_distance(x);
        let alpha = match &self.frozen {
            Some(f) => sample_path_gain_with_shadowing(&PathLossParams::LOS, dist, f.bs_irs[k], rng)?,
            None => sample_path_gain(&PathLossParams::LOS, dist, rng)?,
        };
        Ok(rank_one_from_gain(&self.cfg, &angles, alpha))
    }

    fn shadowing_for<'a>(&'a self, table: Option<&'a [f64]>) -> impl Fn(usize) -> Shadowing + 'a {
        move |l| table.map_or(Shadowing::Draw, |t| Shadowing::Fixed(t[l]))
    }

    /// Geometric-model realization for all IRSs (no direct link).
    pub fn realization<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelRealization> {
        let xs = self.geom.irs_abscissae(self.cfg.k_irs);
        let mut bs_irs = Vec::with_capacity(xs.len());
        let mut irs_user = Vec::with_capacity(xs.len());
        for (k, &x) in xs.iter().enumerate() {
            bs_irs.push(self.bs_irs_link(k, x, rng)?);
            let table = self.frozen.as_ref().map(|f| f.irs_user[k].as_slice());
            let paths = draw_irs_user_paths(
                self.opts.paths,
                self.geom.irs_user_distance(x),
                &self.shadowing_for(table),
                rng,
            )?;
            irs_user.push(irs_user_from_paths(&self.cfg, &paths)?);
        }
        Ok(ChannelRealization {
            bs_irs,
            irs_user,
            direct: None,
        })
    }

    /// Realization with geometric BS-IRS links and Rayleigh IRS-user links.
    pub fn rayleigh_realization<R: Rng + ?Sized>(
        &self,
        varrho: f64,
        rng: &mut R,
    ) -> Result<ChannelRealization> {
        let xs = self.geom.irs_abscissae(self.cfg.k_irs);
        let mut bs_irs = Vec::with_capacity(xs.len());
        let mut irs_user = Vec::with_capacity(xs.len());
        for (k, &x) in xs.iter().enumerate() {
            bs_irs.push(self.bs_irs_link(k, x, rng)?);
            irs_user.push(gen_rayleigh_irs_user(self.cfg.m(), varrho, rng)?);
        }
        Ok(ChannelRealization {
            bs_irs,
            irs_user,
            direct: None,
        })
    }

    /// BS-user channel for the no-IRS baseline.
    pub fn direct<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CVector> {
        let table = self.frozen.as_ref().map(|f| f.direct.as_slice());
        draw_direct(
            self.cfg.n_bs,
            self.opts.paths,
            self.geom.bs_user_distance(),
            &self.shadowing_for(table),
            rng,
        )
    }
}
