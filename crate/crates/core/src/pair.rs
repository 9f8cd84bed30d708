//! Closed-form minimum transmit power for one full-duplex user pair.
//!
//! All rates are per unit bandwidth (bit/s/Hz) and all powers are in
//! noise-normalized units. With `A = 2^R`, `k = 1 + chi`,
//! `alpha = h_up - k h_cci` and `beta = k (h_down - h_cci)`, the minimum
//! total power for a sum rate `R` is
//!
//! * `(A - 1) / h_down` while `A <= beta / alpha` (downlink only),
//! * `(A - 1) k / h_up` while `A <= alpha / beta` (uplink only),
//! * otherwise the interior value
//!   `[2 sqrt(A alpha beta) + (A + 1) k h_cci - h_up - k h_down] / (h_up h_down)`.
//!
//! The interior value is evaluated in the equivalent form
//! `P_boundary - (sqrt(A x) - sqrt(y))^2 / (h_up h_down)`, which avoids the
//! cancellation of the expanded sum near the case boundary.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{bisect, exp2_m1};

/// Noise-normalized gains of one uplink/downlink pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainTriple {
    pub h_up: f64,
    pub h_down: f64,
    pub h_cci: f64,
    pub chi: f64,
}

impl GainTriple {
    pub fn new(h_up: f64, h_down: f64, h_cci: f64, chi: f64) -> Result<Self> {
        let g = Self { h_up, h_down, h_cci, chi };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.h_up > 0.0
            && self.h_down > 0.0
            && self.h_cci >= 0.0
            && self.chi >= 0.0
            && [self.h_up, self.h_down, self.h_cci, self.chi].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid gains {self:?}")))
        }
    }

    fn k(&self) -> f64 {
        1.0 + self.chi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerSplit {
    pub p_up: f64,
    pub p_down: f64,
}

impl PowerSplit {
    pub fn total(&self) -> f64 {
        self.p_up + self.p_down
    }
}

/// Which branch of the minimum-power solution is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    /// Uplink silent; all power on the downlink.
    DownlinkOnly,
    /// Downlink silent; all power on the uplink.
    UplinkOnly,
    /// Both directions active.
    Interior,
}

pub const TOL_RATE: f64 = 1e-9;
pub const TOL_SPLIT: f64 = 1e-9;

/// Uplink plus downlink rate of a pair, bit/s/Hz.
pub fn fd_sum_rate(split: &PowerSplit, gains: &GainTriple) -> f64 {
    let up = (split.p_up * gains.h_up / gains.k()).ln_1p() / LN_2;
    let down = (split.p_down * gains.h_down / (1.0 + split.p_up * gains.h_cci)).ln_1p() / LN_2;
    up + down
}

/// Necessary condition for FD to beat HD at equal rate:
/// `h_cci (1 + chi) < min(h_up, h_down)`.
pub fn fd_necessary_condition(gains: &GainTriple) -> bool {
    gains.h_cci * gains.k() < gains.h_up.min(gains.h_down)
}

/// Pair constants shared by the closed forms.
#[derive(Debug, Clone, Copy)]
struct PairConstants {
    k: f64,
    alpha: f64,
    beta: f64,
    /// Downlink-only threshold on `A`; the uplink-only threshold is `1 / t`.
    t: f64,
}

fn constants(gains: &GainTriple) -> Result<PairConstants> {
    gains.validate()?;
    if !fd_necessary_condition(gains) {
        return Err(Error::PreconditionViolated(format!(
            "h_cci (1 + chi) = {:e} is not below min(h_up, h_down) = {:e}",
            gains.h_cci * gains.k(),
            gains.h_up.min(gains.h_down)
        )));
    }
    let k = gains.k();
    let alpha = gains.h_up - k * gains.h_cci;
    let beta = k * (gains.h_down - gains.h_cci);
    Ok(PairConstants { k, alpha, beta, t: beta / alpha })
}

fn check_rate(rate: f64) -> Result<()> {
    if rate >= 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("rate must be finite and >= 0, got {rate}")))
    }
}

fn case_for(a: f64, c: &PairConstants) -> CaseLabel {
    if a <= c.t {
        CaseLabel::DownlinkOnly
    } else if a * c.t <= 1.0 {
        CaseLabel::UplinkOnly
    } else {
        CaseLabel::Interior
    }
}

pub fn select_case(rate: f64, gains: &GainTriple) -> Result<CaseLabel> {
    check_rate(rate)?;
    let c = constants(gains)?;
    Ok(case_for(rate.exp2(), &c))
}

fn interior_power(rate: f64, gains: &GainTriple, c: &PairConstants) -> f64 {
    let a = rate.exp2();
    let am1 = exp2_m1(rate);
    let denom = gains.h_up * gains.h_down;
    if c.t >= 1.0 {
        let gap = (a * c.alpha).sqrt() - c.beta.sqrt();
        (am1 * gains.h_up - gap * gap) / denom
    } else {
        let gap = (a * c.beta).sqrt() - c.alpha.sqrt();
        (am1 * c.k * gains.h_down - gap * gap) / denom
    }
}

fn power_in_case(rate: f64, gains: &GainTriple, c: &PairConstants, case: CaseLabel) -> f64 {
    match case {
        CaseLabel::DownlinkOnly => exp2_m1(rate) / gains.h_down,
        CaseLabel::UplinkOnly => exp2_m1(rate) * c.k / gains.h_up,
        CaseLabel::Interior => interior_power(rate, gains, c),
    }
}

/// Minimum `p_up + p_down` achieving sum rate `rate`, with the active case.
pub fn min_power(rate: f64, gains: &GainTriple) -> Result<(f64, CaseLabel)> {
    check_rate(rate)?;
    let c = constants(gains)?;
    let case = case_for(rate.exp2(), &c);
    Ok((power_in_case(rate, gains, &c, case).max(0.0), case))
}

/// The interior-case expression evaluated at `rate` regardless of which
/// case is active. Used for continuity checks at the case boundary.
pub fn interior_branch_power(rate: f64, gains: &GainTriple) -> Result<f64> {
    check_rate(rate)?;
    let c = constants(gains)?;
    Ok(interior_power(rate, gains, &c))
}

/// The active boundary case (downlink-only or uplink-only) evaluated at `rate`.
pub fn boundary_branch_power(rate: f64, gains: &GainTriple) -> Result<f64> {
    check_rate(rate)?;
    let c = constants(gains)?;
    let case = if c.t >= 1.0 { CaseLabel::DownlinkOnly } else { CaseLabel::UplinkOnly };
    Ok(power_in_case(rate, gains, &c, case))
}

fn derivative_in_case(rate: f64, gains: &GainTriple, c: &PairConstants, case: CaseLabel) -> f64 {
    let a = rate.exp2();
    match case {
        CaseLabel::DownlinkOnly => a * LN_2 / gains.h_down,
        CaseLabel::UplinkOnly => a * LN_2 * c.k / gains.h_up,
        CaseLabel::Interior => {
            LN_2 * ((a * c.alpha * c.beta).sqrt() + a * c.k * gains.h_cci)
                / (gains.h_up * gains.h_down)
        }
    }
}

/// `d min_power / d rate` (marginal power per bit/s/Hz).
pub fn min_power_derivative(rate: f64, gains: &GainTriple) -> Result<f64> {
    check_rate(rate)?;
    let c = constants(gains)?;
    let case = case_for(rate.exp2(), &c);
    Ok(derivative_in_case(rate, gains, &c, case))
}

/// Derivatives of the boundary and interior branches at `rate`, in that order.
pub fn branch_derivatives(rate: f64, gains: &GainTriple) -> Result<(f64, f64)> {
    check_rate(rate)?;
    let c = constants(gains)?;
    let boundary = if c.t >= 1.0 { CaseLabel::DownlinkOnly } else { CaseLabel::UplinkOnly };
    Ok((
        derivative_in_case(rate, gains, &c, boundary),
        derivative_in_case(rate, gains, &c, CaseLabel::Interior),
    ))
}

/// Inverse of [`min_power_derivative`]: the rate at which the marginal power
/// equals `marginal`, or 0 when `marginal` is below the marginal at rate 0.
pub fn rate_at_marginal(marginal: f64, gains: &GainTriple) -> Result<f64> {
    let c = constants(gains)?;
    if !(marginal >= 0.0) {
        return Ok(0.0);
    }
    let (boundary_gain, at_zero) = if c.t >= 1.0 {
        (gains.h_down, LN_2 / gains.h_down)
    } else {
        (gains.h_up / c.k, LN_2 * c.k / gains.h_up)
    };
    if marginal <= at_zero {
        return Ok(0.0);
    }
    let a_switch = c.t.max(1.0 / c.t);
    let a = if marginal <= a_switch * at_zero {
        marginal * boundary_gain / LN_2
    } else {
        let q = marginal * gains.h_up * gains.h_down / LN_2;
        let k_prod = c.alpha * c.beta;
        let y = 2.0 * q / (k_prod.sqrt() + (k_prod + 4.0 * c.k * gains.h_cci * q).sqrt());
        y * y
    };
    Ok(a.log2().max(0.0))
}

/// Transmit powers attaining [`min_power`].
///
/// In the interior case the split is the point on the rate-constraint conic
/// where `d p_down / d p_up = -1`, located by bisection on `p_up`.
pub fn recover_split(rate: f64, gains: &GainTriple) -> Result<PowerSplit> {
    let (total, case) = min_power(rate, gains)?;
    let split = match case {
        CaseLabel::DownlinkOnly => PowerSplit { p_up: 0.0, p_down: total },
        CaseLabel::UplinkOnly => PowerSplit { p_up: total, p_down: 0.0 },
        CaseLabel::Interior => interior_split(rate, gains)?,
    };
    let rate_residual = (fd_sum_rate(&split, gains) - rate).abs();
    let power_residual = (split.total() - total).abs();
    if rate_residual > TOL_RATE || power_residual > TOL_SPLIT * total.max(f64::MIN_POSITIVE) {
        return Err(Error::Solver(format!(
            "split {split:?} misses postconditions: rate residual {rate_residual:e}, \
             power residual {power_residual:e}"
        )));
    }
    Ok(split)
}

fn interior_split(rate: f64, gains: &GainTriple) -> Result<PowerSplit> {
    let (u, d, c) = (gains.h_up, gains.h_down, gains.h_cci);
    let k = gains.k();
    let a = rate.exp2();
    let am1 = exp2_m1(rate);
    // Conic: F(p_u, p_d) = p_u^2 u c + p_u p_d u d + p_u((1 - A) k c + u) + k d p_d + (1 - A) k.
    let p_down_on_conic = |p_up: f64| (1.0 + p_up * c) * (am1 * k - p_up * u) / (d * (p_up * u + k));
    // Tangent slope -1 where dF/dp_u = dF/dp_d.
    let slope_gap = |p_up: f64| {
        let p_down = p_down_on_conic(p_up);
        let f_up = 2.0 * p_up * u * c + p_down * u * d + (1.0 - a) * k * c + u;
        let f_down = p_up * u * d + k * d;
        f_up - f_down
    };
    let p_up_max = am1 * k / u;
    let p_up = bisect(slope_gap, 0.0, p_up_max)?;
    Ok(PowerSplit { p_up, p_down: p_down_on_conic(p_up).max(0.0) })
}

/// Log2 of the larger case threshold: the rate where the boundary case
/// hands over to the interior case.
pub fn case_boundary_rate(gains: &GainTriple) -> Result<f64> {
    let c = constants(gains)?;
    Ok(c.t.max(1.0 / c.t).log2())
}

/// Half-duplex minimum power: serve the stronger single link.
pub fn hd_min_power(rate: f64, h_up: f64, h_down: f64) -> f64 {
    exp2_m1(rate) / h_up.max(h_down)
}

/// Exact FD minimum power for any gains, including pairs that fail the
/// necessary condition.
///
/// Along the rate constraint the total power as a function of `p_up` is
/// convex when `h_up > k h_cci` and concave otherwise, so the minimum is
/// either the stationary point (clamped to the feasible segment) or the
/// better endpoint.
pub fn fd_min_power_any_gains(rate: f64, gains: &GainTriple) -> Result<f64> {
    check_rate(rate)?;
    gains.validate()?;
    let (u, d, c) = (gains.h_up, gains.h_down, gains.h_cci);
    let k = gains.k();
    let a = rate.exp2();
    let am1 = exp2_m1(rate);
    let p_up_max = am1 * k / u;
    let total = |p_up: f64| p_up + (1.0 + p_up * c) * (am1 * k - p_up * u) / (d * (p_up * u + k));
    let downlink_only = am1 / d;
    let uplink_only = p_up_max;
    let alpha = u - k * c;
    if alpha <= 0.0 || d <= c {
        return Ok(downlink_only.min(uplink_only));
    }
    let x = (a * k * alpha / (d - c)).sqrt();
    let p_up = ((x - k) / u).clamp(0.0, p_up_max);
    Ok(total(p_up).min(downlink_only).min(uplink_only).max(0.0))
}

/// EE of FD and HD at equal rate (bit/s/Hz per normalized watt).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EeComparison {
    pub ee_fd: f64,
    pub ee_hd: f64,
}

pub fn compare_ee(rate: f64, gains: &GainTriple, omega: f64, p_fix: f64) -> Result<EeComparison> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::Domain(format!("rate must be positive, got {rate}")));
    }
    if !(omega > 0.0) || !(p_fix >= 0.0) {
        return Err(Error::Domain(format!("need omega > 0 and p_fix >= 0, got {omega}, {p_fix}")));
    }
    let p_fd = if fd_necessary_condition(gains) {
        min_power(rate, gains)?.0
    } else {
        fd_min_power_any_gains(rate, gains)?
    };
    let p_hd = hd_min_power(rate, gains.h_up, gains.h_down);
    Ok(EeComparison { ee_fd: rate / (omega * p_fd + p_fix), ee_hd: rate / (omega * p_hd + p_fix) })
}
