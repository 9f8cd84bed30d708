//! User drops, propagation, and conversion to noise-normalized CNRs.
//!
//! Physical units (dB, dBm/Hz, meters, watts) stay inside this module. A
//! [`Scenario`] carries only dimensionless carrier-to-noise ratios, so a
//! transmit power of 1 in solver units is 1 W of radiated power.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::matrix::Matrix;
use crate::pair::GainTriple;

/// Log-distance path loss with log-normal shadowing.
///
/// `loss(d) = intercept_db + slope_db * log10(d_km)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub intercept_db: f64,
    pub slope_db: f64,
    pub shadow_sigma_db: f64,
}

impl PathLossModel {
    /// User to small-cell base station.
    pub const USER_TO_BS: PathLossModel =
        PathLossModel { intercept_db: 145.4, slope_db: 37.5, shadow_sigma_db: 10.0 };

    /// User to user, used for co-channel interference.
    pub const USER_TO_USER: PathLossModel =
        PathLossModel { intercept_db: 175.78, slope_db: 40.0, shadow_sigma_db: 10.0 };

    pub fn new(intercept_db: f64, slope_db: f64, shadow_sigma_db: f64) -> Result<Self> {
        let model = Self { intercept_db, slope_db, shadow_sigma_db };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("intercept_db", self.intercept_db)?;
        ensure_finite("slope_db", self.slope_db)?;
        ensure_finite("shadow_sigma_db", self.shadow_sigma_db)?;
        if self.slope_db <= 0.0 {
            return Err(Error::Domain(format!("slope_db must be > 0, got {}", self.slope_db)));
        }
        if self.shadow_sigma_db < 0.0 {
            return Err(Error::Domain(format!(
                "shadow_sigma_db must be >= 0, got {}",
                self.shadow_sigma_db
            )));
        }
        Ok(())
    }

    /// Same model without shadowing.
    pub fn without_shadowing(self) -> Self {
        Self { shadow_sigma_db: 0.0, ..self }
    }
}

/// The two propagation models a drop needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkModels {
    pub user_to_bs: PathLossModel,
    pub user_to_user: PathLossModel,
}

impl Default for LinkModels {
    fn default() -> Self {
        Self { user_to_bs: PathLossModel::USER_TO_BS, user_to_user: PathLossModel::USER_TO_USER }
    }
}

pub fn path_loss_db(distance_km: f64, model: &PathLossModel) -> Result<f64> {
    if !(distance_km > 0.0) || !distance_km.is_finite() {
        return Err(Error::Domain(format!("distance must be positive, got {distance_km} km")));
    }
    Ok(model.intercept_db + model.slope_db * distance_km.log10())
}

/// Thermal noise power in watts for a density in dBm/Hz over `bandwidth_hz`.
pub fn noise_power_w(density_dbm_per_hz: f64, bandwidth_hz: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) {
        return Err(Error::Domain(format!("bandwidth must be positive, got {bandwidth_hz} Hz")));
    }
    let dbm = density_dbm_per_hz + 10.0 * bandwidth_hz.log10();
    Ok(10f64.powf((dbm - 30.0) / 10.0))
}

pub fn normalized_cnr(loss_db: f64, shadow_db: f64, noise_w: f64) -> Result<f64> {
    if !(noise_w > 0.0) {
        return Err(Error::Domain(format!("noise power must be positive, got {noise_w} W")));
    }
    Ok(10f64.powf(-(loss_db + shadow_db) / 10.0) / noise_w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// One random placement of uplink and downlink users in a disk centered on
/// the base station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDrop {
    pub uplink_positions: Vec<Point>,
    pub downlink_positions: Vec<Point>,
    pub cell_radius: f64,
    pub seed: u64,
}

/// RNG stream used for positions; shadowing draws use stream 1 of the same seed.
const POSITION_STREAM: u64 = 0;
const SHADOW_STREAM: u64 = 1;

fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sample_disk<R: Rng>(rng: &mut R, radius: f64) -> Point {
    // Area-uniform: r = R sqrt(u).
    let r = radius * rng.random::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    Point { x: r * theta.cos(), y: r * theta.sin() }
}

pub fn generate_drop(m: usize, n: usize, radius_m: f64, seed: u64) -> Result<UserDrop> {
    if m == 0 || n == 0 {
        return Err(Error::Domain(format!("user counts must be >= 1, got m={m}, n={n}")));
    }
    if !(radius_m > 0.0) || !radius_m.is_finite() {
        return Err(Error::Domain(format!("cell radius must be positive, got {radius_m} m")));
    }
    let mut rng = seeded(seed, POSITION_STREAM);
    let uplink_positions = (0..m).map(|_| sample_disk(&mut rng, radius_m)).collect();
    let downlink_positions = (0..n).map(|_| sample_disk(&mut rng, radius_m)).collect();
    Ok(UserDrop { uplink_positions, downlink_positions, cell_radius: radius_m, seed })
}

/// Everything besides geometry needed to turn a drop into a [`Scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub chi: f64,
    pub bandwidth_hz: f64,
    pub noise_dbm_per_hz: f64,
    pub omega: f64,
    pub p_fix_w: f64,
    /// `None` selects `1 / (2 max(M, N))`.
    pub gamma_min_up: Option<f64>,
    pub gamma_min_down: Option<f64>,
    /// Distances are clamped to at least this many meters before path loss.
    pub min_distance_m: f64,
    pub exclude_invalid_pairs: bool,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            chi: 0.0,
            bandwidth_hz: 10e6,
            noise_dbm_per_hz: -174.0,
            omega: 1.0,
            p_fix_w: 0.1,
            gamma_min_up: None,
            gamma_min_down: None,
            min_distance_m: 1.0,
            exclude_invalid_pairs: false,
        }
    }
}

/// A multi-user problem instance in noise-normalized units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub h_up: Vec<f64>,
    pub h_down: Vec<f64>,
    /// `h_cci[(i, j)]`: uplink user `i` into downlink user `j`.
    pub h_cci: Matrix,
    pub chi: f64,
    pub bandwidth_hz: f64,
    pub omega: f64,
    pub p_fix_w: f64,
    pub gamma_min_up: f64,
    pub gamma_min_down: f64,
    /// Pairs failing the FD necessary condition get zero time instead of
    /// being rejected.
    pub exclude_invalid_pairs: bool,
}

/// Default fairness floor, `1 / (2 max(M, N))`.
pub fn default_gamma_min(m: usize, n: usize) -> f64 {
    1.0 / (2.0 * m.max(n).max(1) as f64)
}

impl Scenario {
    /// Scenario with default system parameters (W = 10 MHz, omega = 1,
    /// P_fix = 0.1 W) and default fairness floors.
    pub fn from_gains(h_up: Vec<f64>, h_down: Vec<f64>, h_cci: Matrix, chi: f64) -> Result<Self> {
        let floor = default_gamma_min(h_up.len(), h_down.len());
        let s = Self {
            h_up,
            h_down,
            h_cci,
            chi,
            bandwidth_hz: 10e6,
            omega: 1.0,
            p_fix_w: 0.1,
            gamma_min_up: floor,
            gamma_min_down: floor,
            exclude_invalid_pairs: false,
        };
        s.validate()?;
        Ok(s)
    }

    /// One pair with the given gains.
    pub fn single_pair(gains: GainTriple) -> Result<Self> {
        Self::from_gains(
            vec![gains.h_up],
            vec![gains.h_down],
            Matrix::filled(1, 1, gains.h_cci),
            gains.chi,
        )
    }

    pub fn with_floors(mut self, gamma_min_up: f64, gamma_min_down: f64) -> Result<Self> {
        self.gamma_min_up = gamma_min_up;
        self.gamma_min_down = gamma_min_down;
        self.validate()?;
        Ok(self)
    }

    pub fn with_power_model(mut self, bandwidth_hz: f64, omega: f64, p_fix_w: f64) -> Result<Self> {
        self.bandwidth_hz = bandwidth_hz;
        self.omega = omega;
        self.p_fix_w = p_fix_w;
        self.validate()?;
        Ok(self)
    }

    /// The first `m` uplink and `n` downlink users, with default fairness
    /// floors for that size unless `floors` is given.
    pub fn leading_users(&self, m: usize, n: usize, floors: Option<(f64, f64)>) -> Result<Self> {
        if m == 0 || n == 0 || m > self.uplink_users() || n > self.downlink_users() {
            return Err(Error::Domain(format!(
                "cannot take {m}x{n} users from a {}x{} scenario",
                self.uplink_users(),
                self.downlink_users()
            )));
        }
        let rows: Vec<Vec<f64>> = (0..m).map(|i| (0..n).map(|j| self.h_cci[(i, j)]).collect()).collect();
        let (up, down) = floors.unwrap_or_else(|| (default_gamma_min(m, n), default_gamma_min(m, n)));
        let s = Self {
            h_up: self.h_up[..m].to_vec(),
            h_down: self.h_down[..n].to_vec(),
            h_cci: Matrix::from_rows(&rows),
            gamma_min_up: up,
            gamma_min_down: down,
            ..self.clone()
        };
        s.validate()?;
        Ok(s)
    }

    pub fn excluding_invalid_pairs(mut self, exclude: bool) -> Self {
        self.exclude_invalid_pairs = exclude;
        self
    }

    pub fn uplink_users(&self) -> usize {
        self.h_up.len()
    }

    pub fn downlink_users(&self) -> usize {
        self.h_down.len()
    }

    pub fn pair_gains(&self, i: usize, j: usize) -> GainTriple {
        GainTriple {
            h_up: self.h_up[i],
            h_down: self.h_down[j],
            h_cci: self.h_cci[(i, j)],
            chi: self.chi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.h_up.len(), self.h_down.len());
        if m + n == 0 {
            return Err(Error::Configuration("scenario has no users".into()));
        }
        if self.h_cci.rows() != m || self.h_cci.cols() != n {
            return Err(Error::Configuration(format!(
                "h_cci is {}x{}, expected {m}x{n}",
                self.h_cci.rows(),
                self.h_cci.cols()
            )));
        }
        for (name, values) in [("h_up", &self.h_up), ("h_down", &self.h_down)] {
            if let Some(v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
                return Err(Error::Configuration(format!("{name} entries must be positive, got {v}")));
            }
        }
        if let Some((_, v)) = self.h_cci.iter().find(|(_, v)| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Configuration(format!("h_cci entries must be >= 0, got {v}")));
        }
        if !(self.chi >= 0.0) || !self.chi.is_finite() {
            return Err(Error::Configuration(format!("chi must be >= 0, got {}", self.chi)));
        }
        if !(self.omega > 0.0) || !(self.p_fix_w >= 0.0) || !(self.bandwidth_hz > 0.0) {
            return Err(Error::Configuration(format!(
                "need omega > 0, p_fix >= 0, bandwidth > 0; got {}, {}, {}",
                self.omega, self.p_fix_w, self.bandwidth_hz
            )));
        }
        for (name, floor, count) in [
            ("gamma_min_up", self.gamma_min_up, m),
            ("gamma_min_down", self.gamma_min_down, n),
        ] {
            if !(floor >= 0.0) || !floor.is_finite() {
                return Err(Error::Configuration(format!("{name} must be >= 0, got {floor}")));
            }
            if count as f64 * floor > 1.0 + 1e-12 {
                return Err(Error::Configuration(format!(
                    "{count} users x {name} = {} exceeds the frame",
                    count as f64 * floor
                )));
            }
        }
        Ok(())
    }
}

/// Fill CNRs for a drop: path loss, one seeded shadowing draw per link, and
/// noise normalization. Co-channel distances are user-to-user.
pub fn build_scenario(drop: &UserDrop, models: &LinkModels, params: &ScenarioParams) -> Result<Scenario> {
    models.user_to_bs.validate()?;
    models.user_to_user.validate()?;
    if !(params.min_distance_m > 0.0) {
        return Err(Error::Configuration("min_distance_m must be positive".into()));
    }
    let (m, n) = (drop.uplink_positions.len(), drop.downlink_positions.len());
    let noise_w = noise_power_w(params.noise_dbm_per_hz, params.bandwidth_hz)?;
    let mut rng = seeded(drop.seed, SHADOW_STREAM);
    let mut link_cnr = |distance_m: f64, model: &PathLossModel| -> Result<f64> {
        let loss = path_loss_db(distance_m.max(params.min_distance_m) / 1000.0, model)?;
        let shadow = if model.shadow_sigma_db > 0.0 {
            Normal::new(0.0, model.shadow_sigma_db)
                .map_err(|e| Error::Domain(e.to_string()))?
                .sample(&mut rng)
        } else {
            0.0
        };
        normalized_cnr(loss, shadow, noise_w)
    };
    let origin = Point { x: 0.0, y: 0.0 };
    let h_up = drop
        .uplink_positions
        .iter()
        .map(|p| link_cnr(p.distance(&origin), &models.user_to_bs))
        .collect::<Result<Vec<_>>>()?;
    let h_down = drop
        .downlink_positions
        .iter()
        .map(|p| link_cnr(p.distance(&origin), &models.user_to_bs))
        .collect::<Result<Vec<_>>>()?;
    let mut h_cci = Matrix::zeros(m, n);
    for (i, up) in drop.uplink_positions.iter().enumerate() {
        for (j, down) in drop.downlink_positions.iter().enumerate() {
            h_cci[(i, j)] = link_cnr(up.distance(down), &models.user_to_user)?;
        }
    }
    let scenario = Scenario {
        h_up,
        h_down,
        h_cci,
        chi: params.chi,
        bandwidth_hz: params.bandwidth_hz,
        omega: params.omega,
        p_fix_w: params.p_fix_w,
        gamma_min_up: params.gamma_min_up.unwrap_or_else(|| default_gamma_min(m, n)),
        gamma_min_down: params.gamma_min_down.unwrap_or_else(|| default_gamma_min(m, n)),
        exclude_invalid_pairs: params.exclude_invalid_pairs,
    };
    scenario.validate()?;
    Ok(scenario)
}
