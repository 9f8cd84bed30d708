use std::f64::consts::LN_2;

use crate::error::Result;
use crate::numeric::exp2_m1;
use crate::pair::{self, GainTriple};

/// Minimum-power curve of one schedulable link as a function of its
/// per-time rate.
#[derive(Debug, Clone, Copy)]
pub(crate) enum LinkCost {
    /// Full-duplex pair; must satisfy the necessary condition.
    Pair(GainTriple),
    /// Half-duplex single link with CNR `gain`.
    Single(f64),
}

impl LinkCost {
    pub(crate) fn power(&self, rate: f64) -> Result<f64> {
        match self {
            LinkCost::Pair(g) => Ok(pair::min_power(rate, g)?.0),
            LinkCost::Single(h) => Ok(exp2_m1(rate) / h),
        }
    }

    pub(crate) fn rate_at_marginal(&self, marginal: f64) -> Result<f64> {
        match self {
            LinkCost::Pair(g) => pair::rate_at_marginal(marginal, g),
            LinkCost::Single(h) => {
                let a = marginal * h / LN_2;
                Ok(if a > 1.0 { a.log2() } else { 0.0 })
            }
        }
    }

    /// `max_rate (mu rate - power(rate))` and its maximizer.
    pub(crate) fn profit(&self, mu: f64) -> Result<(f64, f64)> {
        let rate = self.rate_at_marginal(mu)?;
        if rate == 0.0 {
            return Ok((0.0, 0.0));
        }
        Ok(((mu * rate - self.power(rate)?).max(0.0), rate))
    }
}

/// A schedulable unit: an FD pair `(i, j)`, an HD uplink `i`, or an HD
/// downlink `j`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Link {
    pub up: Option<usize>,
    pub down: Option<usize>,
    pub cost: LinkCost,
}
